# app/interfaces/cli/v1/errors.py

import json
from contextlib import contextmanager
from typing import Iterator

import typer

from app.core.exceptions.exceptions import AppException
from app.core.logging import console


@contextmanager
def exit_on_app_error() -> Iterator[None]:
    """Maps AppException to its exit code, printing message and details to stderr."""
    try:
        yield
    except AppException as e:
        console.print(f"[bold red]error[/bold red] ({e.error_code}): {e.message}", highlight=False)
        if e.details:
            console.print_json(json.dumps(e.details, default=str))
        raise typer.Exit(code=int(e.exit_code))
