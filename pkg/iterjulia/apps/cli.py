"""Command line interface: ``iterjulia <task> --config FILE``."""

from __future__ import annotations

import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Dict, Optional

import click

from iterjulia import __version__
from iterjulia.apps.config import ConfigError, ExperimentConfig, load_config
from iterjulia.apps.report import build_report, write_report
from iterjulia.apps.tasks import TASKS, execute
from iterjulia.exceptions import DynamicsError


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

#: Bundled figure configurations, in the order they are reproduced
FIGURES = ("figure1.ini", "figure2.ini")


def write_error(out: Path, exc: Exception, task: str,
                config: Optional[ExperimentConfig] = None) -> Path:
    """Write ``error.json`` describing *exc* to *out*."""
    out.mkdir(parents=True, exist_ok=True)
    result = {"error": type(exc).__name__, "message": str(exc)}
    report = build_report(task, config.resolved() if config else {}, result, status="error")
    return write_report(report, out / "error.json")


def run(config: ExperimentConfig) -> int:
    """Run one experiment and write its report.

    :return: ``0`` on success, ``2`` for invalid input, ``3`` when a numeric
        method failed. A failed run leaves ``error.json`` in the output
        directory.
    """
    try:
        result = execute(config)
    except DynamicsError as exc:
        logger.error("%s failed: %s: %s", config.task, type(exc).__name__, exc)
        write_error(config.out, exc, config.task, config)
        return EXIT_NUMERIC
    except ValueError as exc:
        logger.error("%s rejected its input: %s", config.task, exc)
        write_error(config.out, exc, config.task, config)
        return EXIT_CONFIG
    report = build_report(config.task, config.resolved(), result)
    write_report(report, config.out / f"{config.name}_{config.task}.json")
    return EXIT_OK


def figure_configs(seed: Optional[int] = None, out=None,
                   threads: Optional[int] = None) -> Dict[str, ExperimentConfig]:
    """Load the bundled figure configurations."""
    configs = {}
    for name in FIGURES:
        text = resources.files("iterjulia.apps").joinpath("figures", name).read_text()
        config = load_config(text, seed=seed, threads=threads)
        if out is not None:
            config = config.with_overrides(out=Path(out) / config.out.name)
        configs[config.name] = config
    return configs


def reproduce_figures(seed: Optional[int] = None, out=None,
                      threads: Optional[int] = None) -> int:
    """Render both figures and run the rigidity experiment of the second.

    The second figure is rendered with the viewport of the first.

    :return: The first nonzero exit status, or ``0``.
    """
    configs = figure_configs(seed, out, threads)
    first, second = configs["figure1"], configs["figure2"]
    runs = [first, second.with_task("render", first.task_options), second]
    for config in runs:
        status = run(config)
        if status != EXIT_OK:
            return status
    return EXIT_OK


class ConfigFailure(click.ClickException):
    exit_code = EXIT_CONFIG


def _load(config_path, seed, out, threads, task: Optional[str] = None) -> ExperimentConfig:
    try:
        config = load_config(Path(config_path), seed=seed, out=out, threads=threads)
        if task is not None and task != config.task:
            config = config.with_task(task)
    except (ConfigError, OSError) as exc:
        target = Path(out) if out is not None else Path("out")
        write_error(target, exc, task or "run")
        raise ConfigFailure(str(exc)) from exc
    return config


def _finish(status: int):
    if status != EXIT_OK:
        sys.exit(status)


common_options = [
    click.option("--config", "config_path", required=True,
                 type=click.Path(exists=True, dir_okay=False), help="Experiment file."),
    click.option("--seed", type=int, default=None, help="Override the experiment seed."),
    click.option("--out", type=click.Path(file_okay=False), default=None,
                 help="Override the output directory."),
    click.option("--threads", type=click.IntRange(min=1), default=None,
                 help="Worker threads for per-seed runs."),
]


def with_common_options(func):
    for option in reversed(common_options):
        func = option(func)
    return func


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log numerical details.")
@click.version_option(version=__version__, prog_name="iterjulia")
def main(verbose: bool):
    """Numerical non-autonomous complex dynamics experiments."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command("run")
@with_common_options
def run_command(config_path, seed, out, threads):
    """Run the task named in the experiment file."""
    _finish(run(_load(config_path, seed, out, threads)))


@main.command("figures")
@click.option("--seed", type=int, default=None, help="Override the perturbation seed.")
@click.option("--out", type=click.Path(file_okay=False), default="figures",
              show_default=True, help="Output directory.")
@click.option("--threads", type=click.IntRange(min=1), default=None)
def figures_command(seed, out, threads):
    """Reproduce the bundled rabbit figures and rigidity report."""
    _finish(reproduce_figures(seed, out, threads))


def _task_command(task: str):
    @with_common_options
    def command(config_path, seed, out, threads):
        _finish(run(_load(config_path, seed, out, threads, task)))
    command.__doc__ = f"Run the {task} task on the experiment file."
    return command


for _task in TASKS:
    main.command(_task)(_task_command(_task))
