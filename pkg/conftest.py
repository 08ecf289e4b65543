import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "cfdg_app.settings")
django.setup()
