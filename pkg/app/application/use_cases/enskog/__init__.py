from .diagnostics_use_cases import DiagnosticsUseCases
from .simulation_use_cases import SimulationUseCases, build_kernels, build_sim_config, load_config

__all__ = ["SimulationUseCases", "DiagnosticsUseCases", "build_kernels", "build_sim_config", "load_config"]
