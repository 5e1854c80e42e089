"""Model service for masked-LM scores, humor probabilities, and embeddings."""

from .app import create_app
from .backend import LocaleBackend, ServiceError
from .config import LocaleModels, ServiceConfig

__version__ = "0.1.0"
