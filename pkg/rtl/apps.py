from django.apps import AppConfig


class RtlConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'rtl'
    verbose_name = 'RTL frontend and simulator'
