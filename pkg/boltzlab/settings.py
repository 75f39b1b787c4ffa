"""
Django settings for the boltzlab project.

Values come from the environment, optionally through a `.env` file in
the project root. The BOLTZLAB_* entries configure the experiment runs.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load .env file
load_dotenv()


BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'boltzlab-development-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = (os.getenv('DEBUG') == '1')

ALLOWED_HOSTS = [
    'localhost',
    '127.0.0.1',
]


# Application definition

INSTALLED_APPS = [
    'kinetic.apps.KineticConfig',

    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'boltzlab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'boltzlab.wsgi.application'


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files

STATIC_ROOT = os.path.join(BASE_DIR, 'staticfiles')
STATIC_URL = '/static/'
STATICFILES_DIRS = []


# Experiment settings

BOLTZLAB_OUTPUT_DIR = Path(os.getenv('BOLTZLAB_OUTPUT_DIR', BASE_DIR / 'runs'))
BOLTZLAB_WORKERS = int(os.getenv('BOLTZLAB_WORKERS', '1'))

# Lowest configuration layer; per-experiment overrides live in kinetic.config.
BOLTZLAB_DEFAULTS = {
    'grid_n': 32,
    'half_width': 8.0,
    'coarse_n': 16,
    'coarse_half_width': 6.0,
    'gamma': 0.0,
    's': 0.5,
    'eps_list': '2^-3..2^-6',
    'n_theta': 64,
    'n_phi': 16,
    'l_max': 16,
    'n_shells': 48,
    'order': 3,
    'battery': 'sqrt_mu,v1_sqrt_mu,energy_mode,gauss_1,gauss_3,ring_1,ring_2,random',
    'seed': 0,
    'total_time': 8.0,
    'dt': 1e-4,
    'eta': 0.05,
    'ring_j': 1,
}


# Logging settings

LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}
