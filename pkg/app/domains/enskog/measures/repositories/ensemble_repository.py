# app/domains/enskog/measures/repositories/ensemble_repository.py

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

from app.domains.enskog.measures.entities.measures import Ensemble

PathLike = Union[str, Path]


class IEnsembleRepository(ABC):
    """
    Abstract Base Class for ensemble storage.
    Defines the contract for persisting frozen laws and state snapshots.
    """

    @abstractmethod
    def save(self, ensemble: Ensemble, path: PathLike) -> Path:
        """Writes an ensemble and returns the path written."""
        pass

    @abstractmethod
    def load(self, path: PathLike) -> Ensemble:
        """Reads an ensemble back, bit-for-bit."""
        pass

    @abstractmethod
    def exists(self, path: PathLike) -> bool:
        pass
