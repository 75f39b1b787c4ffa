"""WSGI entry point of the boltzlab run browser."""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'boltzlab.settings')

application = get_wsgi_application()
