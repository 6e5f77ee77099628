# app/application/schemas/enskog/__init__.py

from .config_schemas import (
    DiagnosticsSummaryRow,
    EventRow,
    PicardRow,
    RunManifest,
    SimulationConfigSchema,
    parse_table,
)

__all__ = [
    "SimulationConfigSchema",
    "RunManifest",
    "EventRow",
    "PicardRow",
    "DiagnosticsSummaryRow",
    "parse_table",
]
