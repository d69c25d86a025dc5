import logging
import sys
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from app.constants.constants import CommandName, ExitCode
from app.core.config import settings
from app.core.errors import WeightForgeError
from app.schemas.reportSchema import CommandReport
from app.services.CommandService import CommandService, load_problem
from app.utils.report_utils import pretty_json, write_json_atomic

logging.basicConfig(
    level=settings.WEIGHTFORGE_LOG_LEVEL,
    format="%(message)s",
    handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
)
logger = logging.getLogger(__name__)

app = typer.Typer(help="Certified weights, p-regularity constants and conjugate families on finite measure spaces.")
console = Console(stderr=True)


def render_summary(report: CommandReport) -> None:
    """Summary table on stderr; the counterexample gets its (n, mass) table."""
    table = Table(title=f"{report.command.value}: {report.status}")
    if report.command == CommandName.counterexample and "sizes" in report.result:
        table.add_column("n", justify="right")
        table.add_column("minimal mass", justify="right")
        for n, mass in zip(report.result["sizes"], report.result["masses"]):
            table.add_row(str(n), f"{mass:.6g}" if isinstance(mass, float) else str(mass))
        table.caption = f"slope {report.result['slope']} (expected {report.result['expected_slope']:.4f})"
    else:
        table.add_column("field")
        table.add_column("value")
        for key, value in report.result.items():
            if isinstance(value, (int, float, str, bool)) or value is None:
                table.add_row(key, str(value))
        for key, anchor in report.anchors.items():
            table.add_row(f"anchor[{key}]", anchor)
    console.print(table)


@app.command()
def run(
    input: Path = typer.Option(..., "--input", help="Problem file (JSON)"),
    output: Optional[Path] = typer.Option(None, "--output", help="Report file; stdout when omitted"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the problem seed"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Override the tolerance"),
    budget: Optional[int] = typer.Option(None, "--budget", help="Override the restart budget"),
    command: Optional[CommandName] = typer.Option(None, "--command", help="Override the problem command"),
):
    """Run one problem file and write its report."""
    try:
        problem = load_problem(input)
        overrides = {k: v for k, v in {"seed": seed, "tol": tol, "budget": budget, "command": command}.items() if v is not None}
        if overrides:
            problem = load_problem({**problem.model_dump(mode="json", exclude_unset=True), **{k: getattr(v, "value", v) for k, v in overrides.items()}})
        report = CommandService().run(problem)
    except (WeightForgeError, ValueError) as e:
        logger.error(f"❌ {e}")
        raise typer.Exit(code=int(ExitCode.input_error))

    payload = report.model_dump(mode="json")
    if output is not None:
        write_json_atomic(output, payload)
        logger.info(f"✅ report written to {output}")
    else:
        sys.stdout.write(pretty_json(payload))
    render_summary(report)
    raise typer.Exit(code=report.exit_code)


if __name__ == "__main__":
    app()
