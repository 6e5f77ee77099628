# app/infrastructure/repositories/enskog/__init__.py

from .ensemble_binary_repository import EnsembleBinaryRepository

__all__ = [
    "EnsembleBinaryRepository"
]
