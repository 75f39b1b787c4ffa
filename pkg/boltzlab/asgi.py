"""ASGI entry point of the boltzlab run browser."""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'boltzlab.settings')

application = get_asgi_application()
