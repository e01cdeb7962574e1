# MIT License

# Copyright (c) 2025 Abhishek Mishra (neolateral.in)

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
gradflow.py - Batch runner for the gradflow descent schemes.
Runs scenario configs, diagnoses trace files and lists the registries.

author: Abhishek Mishra
date: 18/10/2026
"""
import logging
import sys

import click
from rich.console import Console
from rich.logging import RichHandler

from gradflow_core import (
    DEFAULT_OUTPUT_DIR,
    GradflowError,
    ParseError,
    RunDisplay,
    SchemaError,
    TraceFileManager,
    ValidationError,
    diagnose,
    registry,
    run_all,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def setup_logging(level):
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def parse_h_limit(value):
    if value in ("last", "aitken", "fit"):
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter(f"expected last, aitken, fit or a number, got {value!r}")


@click.group(
    help="Run and diagnose gradient-like descent schemes from scenario configs."
)
@click.option("--out", default=DEFAULT_OUTPUT_DIR, help="Directory for run artifacts")
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default="WARNING",
    help="Logging level",
)
@click.option("-v", "--verbose", is_flag=True, help="Shorthand for --log-level INFO")
@click.pass_context
def gradflow(ctx, out, log_level, verbose):
    ctx.ensure_object(dict)
    ctx.obj["out"] = out
    setup_logging("INFO" if verbose else log_level.upper())


@gradflow.command(help="Run every scenario of a config file")
@click.argument("config", type=click.Path())
@click.option("--out", default=None, help="Directory for run artifacts (overrides the group option)")
@click.option("--jobs", default=1, type=click.IntRange(min=1), help="Worker processes")
@click.pass_context
def run(ctx, config, out, jobs):
    out = out or ctx.obj["out"]
    console = Console()
    try:
        scenarios = TraceFileManager.load_config(config)
    except ParseError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        console.print(f"[red]Config error{where}:[/] {exc}")
        sys.exit(EXIT_CONFIG)
    except ValidationError as exc:
        console.print(f"[red]Invalid scenario {exc.scenario} field {exc.field}:[/] {exc}")
        sys.exit(EXIT_CONFIG)
    except FileNotFoundError as exc:
        console.print(f"[red]{exc}[/]")
        sys.exit(EXIT_CONFIG)

    if not scenarios:
        console.print("No scenarios found")
    summary = run_all(scenarios, jobs=jobs, out_dir=out)
    if scenarios:
        RunDisplay(console).display_summary(summary)
    console.print(f"Artifacts written to {out}")
    sys.exit(EXIT_OK if summary.passed else EXIT_FAILED)


@gradflow.command(name="diagnose", help="Fit Lojasiewicz rates to a trace CSV")
@click.argument("trace", type=click.Path())
@click.option("--tail-fraction", default=0.5, type=click.FloatRange(0.0, 1.0, min_open=True))
@click.option("--h-limit", default="last", help="last, aitken, fit or a number")
def diagnose_cmd(trace, tail_fraction, h_limit):
    console = Console()
    try:
        record = diagnose(trace, tail_fraction, parse_h_limit(h_limit))
    except (SchemaError, FileNotFoundError) as exc:
        console.print(f"[red]{exc}[/]")
        sys.exit(EXIT_CONFIG)
    except GradflowError as exc:
        console.print(f"[red]{type(exc).__name__}:[/] {exc}")
        sys.exit(EXIT_FAILED)
    RunDisplay(console).display_rate_report(record)


@gradflow.command(name="list-registry", help="List energies, systems and kernels")
def list_registry():
    RunDisplay().display_registry(registry())


if __name__ == "__main__":
    gradflow()
