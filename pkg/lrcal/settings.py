from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = 'django-insecure-3v$0k8m!q2h7c#x1r9p@w5e6t4y&z(u)n+b-d=a_lrcal'

DEBUG = False

ALLOWED_HOSTS = []


INSTALLED_APPS = [
    'calibration.apps.CalibrationConfig',
]


DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


LANGUAGE_CODE = 'ru'

TIME_ZONE = 'Europe/Moscow'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Значения по умолчанию для команд калибровки.
CALIBRATION = {
    'MIN_SUSPECT_UTTS': 10,
    'SYMMETRY_TOLERANCE': 1e-9,
    'VARIANCE_FLOOR': 1e-8,
    'SIGNIFICANT_DIGITS': 17,
    'N_CASES': 200,
    'SAME_ORIGIN_FRACTION': 0.5,
    'JOBS': 1,
}


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'calibration': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}
