from pathlib import Path
import os
import environ

from django.core.management.utils import get_random_secret_key

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, True)
)
environ.Env.read_env(os.path.join(BASE_DIR, ".env"))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env("SECRET_KEY", default=get_random_secret_key())
DEBUG = env.bool("DEBUG", default=True)
ALLOWED_HOSTS = ["localhost", "127.0.0.1", "0.0.0.0"]


# ============================================================================
# SALVKIT TOOLKIT DEFAULTS
# ============================================================================
# Every value can be overridden from the environment or the local .env file.
# PipelineConfig layers a JSON config file and CLI flags on top of these.

SALVKIT_N_STIMULI = env.int("SALVKIT_N_STIMULI", default=100)
SALVKIT_SEED = env.int("SALVKIT_SEED", default=0)
SALVKIT_WORKERS = env.int("SALVKIT_WORKERS", default=os.cpu_count() or 1)
SALVKIT_BETA = env.float("SALVKIT_BETA", default=0.1)

# Combinational settling bound (sweeps per cycle)
SALVKIT_MAX_SWEEPS = env.int("SALVKIT_MAX_SWEEPS", default=64)

# Exhaustive stimulus is refused above this many data input bits
SALVKIT_EXHAUSTIVE_MAX_BITS = env.int("SALVKIT_EXHAUSTIVE_MAX_BITS", default=20)

SALVKIT_LOG_LEVEL = env("SALVKIT_LOG_LEVEL", default="INFO")

# ============================================================================
# END SALVKIT CONFIGURATION
# ============================================================================


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'rtl.apps.RtlConfig',
    'verification.apps.VerificationConfig',
    'preferences.apps.PreferencesConfig',
    'pipeline.apps.PipelineAppConfig',
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

ROOT_URLCONF = 'config.urls'

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

WSGI_APPLICATION = 'config.wsgi.application'


# Database
# Run logs (PipelineRun / PipelineEvent). SQLite unless DATABASE_URL is set.
DATABASES = {
    "default": env.db_url("DATABASE_URL", default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}")
}


# Logging
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "salvkit": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "salvkit",
        },
    },
    "loggers": {
        "rtl": {"handlers": ["console"], "level": SALVKIT_LOG_LEVEL, "propagate": False},
        "verification": {"handlers": ["console"], "level": SALVKIT_LOG_LEVEL, "propagate": False},
        "preferences": {"handlers": ["console"], "level": SALVKIT_LOG_LEVEL, "propagate": False},
        "pipeline": {"handlers": ["console"], "level": SALVKIT_LOG_LEVEL, "propagate": False},
    },
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)
# https://docs.djangoproject.com/en/5.2/howto/static-files/

STATIC_URL = 'static/'

# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
