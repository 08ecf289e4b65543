"""
Django settings for the CFDG toolkit.
The project has no database and no web surface; it is driven through the
management commands of the `core` app.
"""
from pathlib import Path

from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config("SECRET_KEY", default="django-insecure-cfdg-toolkit-local-only")

DEBUG = config("DEBUG", default=False, cast=bool)

INSTALLED_APPS = [
    "core",
]

DATABASES = {}

# Toolkit defaults; management commands read these, services take explicit arguments
CFDG = {
    "DEFAULT_SEMANTICS": config("CFDG_DEFAULT_SEMANTICS", default="masking"),
    "DEFAULT_LOOP_MODE": config("CFDG_DEFAULT_LOOP_MODE", default="traversal"),
    "DEFAULT_DIALECT": config("CFDG_DEFAULT_DIALECT", default=""),
    "MAX_ENUMERATION_SYMBOLS": config("CFDG_MAX_ENUMERATION_SYMBOLS", default=16, cast=int),
    "MAX_ORACLE_SYMBOLS": config("CFDG_MAX_ORACLE_SYMBOLS", default=10, cast=int),
}

LOG_LEVEL = config("CFDG_LOG_LEVEL", default="WARNING")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "%(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "plain",
        },
    },
    "loggers": {
        "core": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}
