from django.apps import AppConfig


class HetnetConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hetnet'
    verbose_name = 'HetNet association simulator'
