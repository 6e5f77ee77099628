# app/interfaces/cli/v1/dependencies.py

from app.application.use_cases.enskog.diagnostics_use_cases import DiagnosticsUseCases
from app.application.use_cases.enskog.simulation_use_cases import SimulationUseCases
from app.infrastructure.repositories.enskog.ensemble_binary_repository import EnsembleBinaryRepository


def get_simulation_use_cases() -> SimulationUseCases:
    """EnsembleBinaryRepository -> SimulationUseCases"""
    return SimulationUseCases(EnsembleBinaryRepository())


def get_diagnostics_use_cases() -> DiagnosticsUseCases:
    return DiagnosticsUseCases(EnsembleBinaryRepository())
