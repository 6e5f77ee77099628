# tests/factories.py

import math

from app.domains.enskog.kernels.entities.kernels import KernelSet
from app.domains.enskog.kernels.services import kernel_service
from app.domains.enskog.simulator.entities.simulation import (
    InitialLaw,
    PartnerUpdate,
    SimConfig,
    SimulationMode,
)


def make_kernels(mass=1.0, sigma=None, radius=math.inf, theta_min=0.0) -> KernelSet:
    """Uniform Q of the given mass; sigma None means constant_one, a number means constant."""
    q = kernel_service.build_angular_measure("uniform", theta_min=theta_min, mass=mass)
    if sigma is None:
        s = kernel_service.build_speed_factor("constant_one")
    else:
        s = kernel_service.build_speed_factor("constant", params=(sigma,))
    return KernelSet(q=q, sigma=s, beta=kernel_service.build_mollifier(radius))


def make_config(
    n=200,
    horizon=1.0,
    kernels=None,
    seed=7,
    mode=SimulationMode.MEAN_FIELD,
    partner_update=PartnerUpdate.ONE_SIDED,
    truncation=None,
    initial=None,
    output_times=(),
) -> SimConfig:
    return SimConfig(
        mode=mode,
        particle_count=n,
        horizon=horizon,
        kernels=kernels or make_kernels(),
        partner_update=partner_update,
        truncation_level=truncation,
        output_times=tuple(output_times),
        master_seed=seed,
        initial=initial or InitialLaw(),
    )
