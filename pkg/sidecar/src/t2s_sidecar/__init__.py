from .app import create_app
from .models import ModelRegistry, load_model_table

__version__ = "0.1.0"
