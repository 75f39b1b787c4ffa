from django.apps import AppConfig


class KineticConfig(AppConfig):
    name = 'kinetic'
    verbose_name = 'Linearized Boltzmann laboratory'
