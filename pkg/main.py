# main.py

import typer

from app.core.config import settings
from app.core.logging import configure_logging
from app.interfaces.cli.v1.commands.enskog import collision_commands, simulation_commands

# Initialize the typer application
app = typer.Typer(
    name="enskog",
    help=f"{settings.PROJECT_NAME}: exact event-driven simulation of the Enskog process.",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
):
    configure_logging(log_level)


# Register commands for the different features
app.command(name="collide")(collision_commands.collide)
app.command(name="simulate")(simulation_commands.simulate)
app.command(name="picard")(simulation_commands.picard)
app.command(name="diagnose")(simulation_commands.diagnose)
app.command(name="validate")(simulation_commands.validate)

# To run:
#   pip install -r requirements.txt
#   python main.py validate --config run.cfg
#   python main.py simulate --config run.cfg --out-dir runs/demo
#   ENSKOG_THREADS=4 python main.py picard --config run.cfg

if __name__ == "__main__":
    app()
