# app/interfaces/cli/v1/commands/enskog/collision_commands.py

import json
import math
from typing import List

import typer

from app.interfaces.cli.v1.dependencies import get_simulation_use_cases
from app.interfaces.cli.v1.errors import exit_on_app_error


def parse_vector(value: str) -> List[float]:
    """'1,0,0' -> [1.0, 0.0, 0.0]"""
    parts = [p.strip() for p in value.split(",")]
    try:
        vector = [float(p) for p in parts]
    except ValueError:
        raise typer.BadParameter(f"'{value}' is not a comma-separated list of numbers")
    if len(vector) != 3 or not all(math.isfinite(c) for c in vector):
        raise typer.BadParameter(f"'{value}' must have exactly 3 finite components")
    return vector


def _nan_to_none(values):
    return [None if isinstance(x, float) and math.isnan(x) else x for x in values]


def collide(
    u: str = typer.Option(..., "--u", help="Pre-collision velocity of the tagged particle, e.g. 1,0,0"),
    v: str = typer.Option(..., "--v", help="Pre-collision velocity of the partner"),
    theta: float = typer.Option(..., "--theta", help="Colatitude in (0, pi]"),
    phi: float = typer.Option(..., "--phi", help="Longitude in [0, 2 pi)"),
):
    """Collide one pair and print u*, v*, alpha, n and the conservation residuals as JSON."""
    u_vec = parse_vector(u)
    v_vec = parse_vector(v)
    if not (0.0 < theta <= math.pi):
        raise typer.BadParameter(f"theta must lie in (0, pi], got {theta}", param_hint="--theta")
    if not (0.0 <= phi < 2.0 * math.pi):
        raise typer.BadParameter(f"phi must lie in [0, 2 pi), got {phi}", param_hint="--phi")

    with exit_on_app_error():
        outcome = get_simulation_use_cases().collide(u_vec, v_vec, theta, phi)
    outcome["n"] = _nan_to_none(outcome["n"])
    typer.echo(json.dumps(outcome))
