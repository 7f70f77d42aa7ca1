"""
URL configuration for the salvkit project.

Only the admin is routed; it is where pipeline run logs are browsed.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
