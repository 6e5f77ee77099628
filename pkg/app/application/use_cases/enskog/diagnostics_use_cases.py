# app/application/use_cases/enskog/diagnostics_use_cases.py

import logging
from pathlib import Path
from typing import List, Optional, Union

from app.application.schemas.enskog.config_schemas import DiagnosticsSummaryRow
from app.application.use_cases.enskog.simulation_use_cases import (
    SimulationUseCases,
    build_kernels,
    build_sim_config,
)
from app.domains.enskog.diagnostics.entities.diagnostics import DiagnosticsReport
from app.domains.enskog.diagnostics.services import diagnostics_service
from app.domains.enskog.measures.repositories.ensemble_repository import IEnsembleRepository
from app.domains.enskog.simulator.entities.simulation import SimulationMode
from app.infrastructure.file_storage.run_files import RunFileStorage

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DIAGNOSTICS_FILE = "diagnostics.json"
SUMMARY_FILE = "diagnostics_summary.csv"
SUMMARY_COLUMNS = ("name", "time", "statistic", "standard_error", "threshold", "passed", "method", "replicates")


class DiagnosticsUseCases:
    """Runs the diagnostics suite over stored runs and writes its reports."""

    def __init__(self, repository: IEnsembleRepository):
        self._runs = SimulationUseCases(repository)
        self._repository = repository

    def diagnose(
        self,
        run_dir: PathLike,
        compare_dir: Optional[PathLike] = None,
        out_dir: Optional[PathLike] = None,
        samples: int = 100_000,
        pair_samples: int = 100_000,
    ) -> List[DiagnosticsReport]:
        manifest, schema, paths = self._runs.load_run(run_dir)
        cfg = build_sim_config(schema)
        kernels = build_kernels(schema)
        seed = cfg.master_seed
        reports: List[DiagnosticsReport] = []

        reports.append(
            diagnostics_service.tanaka_symmetry_check(
                kernels.sigma, kernels.q, samples, diagnostics_service.diagnostics_stream(seed, 0)
            )
        )

        maxwellian = schema.init_velocity == "maxwellian" and schema.init_velocity_offset == 0.0
        if maxwellian:
            reports.append(diagnostics_service.maxwellian_invariance_check(paths, cfg.output_times))
        else:
            logger.info("initial velocities are not Maxwellian; skipping the invariance check")

        partner_law = None
        frozen = manifest.inputs.get("frozen_law")
        if cfg.mode is SimulationMode.FROZEN and frozen:
            partner_law = self._repository.load(frozen)
        t = 0.5 * cfg.horizon
        dt = min(0.05 * cfg.horizon, 0.25 / max(cfg.candidate_rate, 1.0))
        for k, psi in enumerate(diagnostics_service.standard_test_functions(), start=1):
            reports.append(
                diagnostics_service.weak_form_residual(
                    paths, psi, t, dt, pair_samples, kernels,
                    diagnostics_service.diagnostics_stream(seed, k),
                    partner_update=cfg.partner_update,
                    partner_law=partner_law,
                )
            )

        if compare_dir is not None:
            _, _, other = self._runs.load_run(compare_dir)
            reports.append(diagnostics_service.marginal_uniqueness_check(paths, other, cfg.output_times))

        self.write(reports, out_dir or run_dir)
        return reports

    def write(self, reports: List[DiagnosticsReport], out_dir: PathLike) -> None:
        storage = RunFileStorage(out_dir)
        storage.write_json(DIAGNOSTICS_FILE, [r.as_dict() for r in reports])
        rows = [
            DiagnosticsSummaryRow(
                name=r.name,
                time=r.time,
                statistic=r.statistic,
                standard_error=r.standard_error,
                threshold=r.threshold,
                passed=r.passed,
                method=r.method.value,
                replicates=r.replicates,
            )
            for r in reports
        ]
        storage.write_models(SUMMARY_FILE, rows, SUMMARY_COLUMNS)
