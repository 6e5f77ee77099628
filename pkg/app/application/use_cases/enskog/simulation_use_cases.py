# app/application/use_cases/enskog/simulation_use_cases.py

import logging
import platform
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy
from dotenv import dotenv_values
from pydantic import ValidationError

from app.application.schemas.enskog.config_schemas import (
    EventRow,
    PicardRow,
    RunManifest,
    SimulationConfigSchema,
    parse_table,
)
from app.core.config import settings
from app.core.exceptions.exceptions import ConfigInvalid
from app.core.utils.random_streams import StreamPurpose, derive_seed, substream
from app.domains.enskog.collision.entities.collision import CollisionAngles, as_vec3
from app.domains.enskog.collision.services import collision_service
from app.domains.enskog.kernels.entities.kernels import KernelSet, ValidationReport
from app.domains.enskog.kernels.services import kernel_service
from app.domains.enskog.measures.entities.measures import Ensemble
from app.domains.enskog.measures.repositories.ensemble_repository import IEnsembleRepository
from app.domains.enskog.picard.entities.iteration import PicardDriverConfig, PicardTrajectory
from app.domains.enskog.picard.services import picard_service
from app.domains.enskog.simulator.entities.simulation import (
    InitialLaw,
    PartnerUpdate,
    PositionLaw,
    SimConfig,
    SimulationMode,
    SimulationResult,
    VelocityLaw,
)
from app.domains.enskog.simulator.services import simulator_service
from app.infrastructure.file_storage.run_files import RunFileStorage

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MANIFEST_FILE = "manifest.json"
TIMING_FILE = "timing.json"
PATHS_FILE = "paths.ensk"
EVENTS_FILE = "events.csv"
STOPPING_FILE = "stopping.csv"
PICARD_FILE = "picard.csv"

EVENT_COLUMNS = ("time", "particle", "accepted", "jump_size")
PICARD_COLUMNS = ("n", "t", "moment2", "se", "distance", "distance_se")


# --- Config -> entities ---

def _validation_errors(exc: ValidationError) -> List[Dict[str, str]]:
    return [{"field": ".".join(str(p) for p in e["loc"]) or "config", "message": e["msg"]} for e in exc.errors()]


def parse_config(values: Mapping[str, Any]) -> SimulationConfigSchema:
    try:
        return SimulationConfigSchema.model_validate(dict(values))
    except ValidationError as e:
        raise ConfigInvalid("Configuration is invalid", errors=_validation_errors(e))


def load_config(path: Optional[PathLike]) -> SimulationConfigSchema:
    """Reads a flat key=value file; no file means every default."""
    if path is None:
        return parse_config({})
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"Config file not found: {path}", errors=[{"field": "config", "message": "not found"}])
    return parse_config(dotenv_values(path))


def build_kernels(schema: SimulationConfigSchema) -> KernelSet:
    edges, density = parse_table(schema.q_table) if schema.q_table else (None, None)
    q = kernel_service.build_angular_measure(
        schema.q_family,
        theta_min=schema.q_theta_min,
        mass=schema.q_mass,
        coefficient=schema.q_coefficient,
        exponent=schema.q_exponent,
        table_edges=edges,
        table_density=density,
    )
    sigma = kernel_service.build_speed_factor(
        schema.sigma_family,
        params=schema.sigma_params or (),
        lipschitz_bound=schema.sigma_lipschitz,
    )
    beta = kernel_service.build_mollifier(schema.beta_radius, schema.beta_shape)
    return KernelSet(q=q, sigma=sigma, beta=beta)


def build_initial_law(schema: SimulationConfigSchema) -> InitialLaw:
    return InitialLaw(
        velocity=VelocityLaw(schema.init_velocity),
        position=PositionLaw(schema.init_position),
        position_scale=schema.init_position_scale,
        velocity_offset=schema.init_velocity_offset,
    )


def build_sim_config(
    schema: SimulationConfigSchema,
    mode: Optional[SimulationMode] = None,
    particle_count: Optional[int] = None,
) -> SimConfig:
    return SimConfig(
        mode=mode or SimulationMode(schema.mode),
        particle_count=particle_count or schema.n_particles,
        horizon=schema.horizon,
        kernels=build_kernels(schema),
        partner_update=PartnerUpdate(schema.partner_update),
        truncation_level=schema.truncation_j,
        output_times=schema.resolved_output_times(),
        master_seed=schema.seed,
        initial=build_initial_law(schema),
        event_budget=schema.event_budget,
    )


def snapshot_name(k: int) -> str:
    return f"snapshot_t{k:03d}.ensk"


def law_name(n: int) -> str:
    return f"law_{n:03d}.ensk"


def versions() -> Dict[str, str]:
    return {
        "enskog": settings.VERSION,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _config_echo(schema: SimulationConfigSchema) -> Dict[str, Any]:
    echo = schema.to_flat()
    echo.pop("out_dir", None)
    return echo


class SimulationUseCases:
    """
    Application-level use cases for the simulator.
    Orchestrates schemas, domain services and the ensemble repository, and owns the
    layout of a run directory.
    """
    def __init__(self, repository: IEnsembleRepository):
        self._repository = repository

    # --- Collision ---
    def collide(self, u: Sequence[float], v: Sequence[float], theta: float, phi: float) -> Dict[str, Any]:
        u_arr, v_arr = as_vec3(u, "u"), as_vec3(v, "v")
        outcome = collision_service.collide(u_arr, v_arr, CollisionAngles(theta=theta, phi=phi))
        return {
            "u_star": outcome.u_star.tolist(),
            "v_star": outcome.v_star.tolist(),
            "alpha": outcome.alpha.tolist(),
            "n": outcome.n.tolist(),
            "momentum_residual": outcome.momentum_residual(u_arr, v_arr),
            "energy_residual": outcome.energy_residual(u_arr, v_arr),
        }

    # --- Validation ---
    def validate(self, schema: SimulationConfigSchema) -> ValidationReport:
        kernels = build_kernels(schema)
        return kernel_service.validate_hypotheses(kernels.q, kernels.sigma, kernels.beta)

    # --- Simulation ---
    def _write_simulation(
        self,
        storage: RunFileStorage,
        cfg: SimConfig,
        result: SimulationResult,
    ) -> List[str]:
        written = [self._repository.save(result.paths, storage.path(PATHS_FILE)).name]
        for k, t in enumerate(cfg.output_times):
            snap = simulator_service.snapshot(result.paths, t)
            written.append(self._repository.save(snap, storage.path(snapshot_name(k))).name)

        rows = (
            EventRow(time=e.time, particle=e.particle_index, accepted=e.accepted, jump_size=e.jump_size)
            for e in result.events
        )
        written.append(storage.write_models(EVENTS_FILE, list(rows), EVENT_COLUMNS).name)
        if result.stopping:
            written.append(
                storage.write_csv(
                    STOPPING_FILE,
                    ("particle", "level", "tau_j"),
                    ((s.particle_index, s.level, s.tau_j) for s in result.stopping),
                ).name
            )
        return written

    def simulate(
        self,
        schema: SimulationConfigSchema,
        out_dir: PathLike,
        frozen_law_path: Optional[PathLike] = None,
    ) -> RunManifest:
        started = time.perf_counter()
        cfg = build_sim_config(schema)
        frozen_law = self._repository.load(frozen_law_path) if frozen_law_path else None
        result = simulator_service.simulate(cfg, frozen_law)

        storage = RunFileStorage(out_dir)
        written = self._write_simulation(storage, cfg, result)
        manifest = RunManifest(
            command="simulate",
            config=_config_echo(schema),
            seeds={
                "master_seed": cfg.master_seed,
                "initial_state": derive_seed(cfg.master_seed, StreamPurpose.INITIAL_STATE),
                "lineage": list(result.paths.seed_lineage),
            },
            versions=versions(),
            event_counts={"candidates": result.candidate_count, "accepted": result.accepted_count},
            inputs={"frozen_law": str(frozen_law_path)} if frozen_law_path else {},
            output_files=written + [MANIFEST_FILE],
            timing_file=TIMING_FILE,
        )
        storage.write_json(MANIFEST_FILE, manifest)
        storage.write_json(TIMING_FILE, {"wall_seconds": time.perf_counter() - started})
        logger.info("run written to %s", storage.root)
        return manifest

    def load_manifest(self, path: PathLike) -> Tuple[RunManifest, SimulationConfigSchema]:
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_FILE
        payload = RunFileStorage(path.parent).read_json(path.name)
        try:
            manifest = RunManifest.model_validate(payload)
        except ValidationError as e:
            raise ConfigInvalid("Manifest is invalid", errors=_validation_errors(e))
        return manifest, parse_config(manifest.config)

    def replay(self, manifest_path: PathLike, out_dir: PathLike) -> RunManifest:
        """Re-runs a simulation from its manifest alone."""
        manifest, schema = self.load_manifest(manifest_path)
        frozen_law = manifest.inputs.get("frozen_law")
        logger.info("replaying %s run (seed %s)", manifest.command, manifest.seeds.get("master_seed"))
        if manifest.command == "picard":
            self.picard(schema, out_dir)
            return self.load_manifest(out_dir)[0]
        return self.simulate(schema, out_dir, frozen_law)

    def load_run(self, run_dir: PathLike) -> Tuple[RunManifest, SimulationConfigSchema, Ensemble]:
        manifest, schema = self.load_manifest(run_dir)
        paths = self._repository.load(Path(run_dir) / PATHS_FILE)
        return manifest, schema, paths

    # --- Picard ---
    def picard(self, schema: SimulationConfigSchema, out_dir: PathLike) -> PicardTrajectory:
        started = time.perf_counter()
        paths = schema.picard_paths or schema.n_particles
        cfg = build_sim_config(schema, mode=SimulationMode.FROZEN, particle_count=paths)
        law = cfg.initial
        start = picard_service.initial_law(
            simulator_service.velocity_sampler(law),
            simulator_service.position_sampler(law),
            paths,
            cfg.horizon,
            substream(cfg.master_seed, StreamPurpose.INITIAL_STATE),
            cfg.output_times,
        )
        driver = PicardDriverConfig(
            max_iters=schema.picard_max_iters,
            tol=schema.picard_tol,
            noise_floor=schema.picard_noise_floor,
            crn=schema.picard_crn,
            write_laws=schema.picard_write_laws,
            dictionary_size=schema.picard_dictionary_size,
        )
        trajectory = picard_service.run_to_tolerance(driver, cfg, start)

        storage = RunFileStorage(out_dir)
        rows = []
        for state in trajectory.states:
            distances = {d.time: d for d in state.distance_to_previous or []}
            for t, m2, se in state.moment2_trace:
                d = distances.get(t)
                rows.append(
                    PicardRow(
                        n=state.index, t=t, moment2=m2, se=se,
                        distance=d.value if d else None,
                        distance_se=d.standard_error if d else None,
                    )
                )
        written = [storage.write_models(PICARD_FILE, rows, PICARD_COLUMNS).name]
        if driver.write_laws:
            for state in trajectory.states:
                written.append(self._repository.save(state.law, storage.path(law_name(state.index))).name)

        manifest = RunManifest(
            command="picard",
            config=_config_echo(schema),
            seeds={
                "master_seed": cfg.master_seed,
                "iterates": [picard_service.iterate_seed(cfg, s.index, driver.crn) for s in trajectory.states[1:]],
            },
            versions=versions(),
            event_counts={"iterations": trajectory.iterations, "converged": int(trajectory.converged)},
            summary={"noise_floor": trajectory.noise_floor, "tol": trajectory.tol},
            output_files=written + [MANIFEST_FILE],
            timing_file=TIMING_FILE,
        )
        storage.write_json(MANIFEST_FILE, manifest)
        storage.write_json(TIMING_FILE, {"wall_seconds": time.perf_counter() - started})
        return trajectory
