"""
WSGI config for the salvkit project.

It exposes the WSGI callable as a module-level variable named ``application``,
which serves the admin for browsing pipeline run logs.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

application = get_wsgi_application()
