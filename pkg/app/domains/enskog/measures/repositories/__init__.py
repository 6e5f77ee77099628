from .ensemble_repository import IEnsembleRepository

__all__ = ["IEnsembleRepository"]
