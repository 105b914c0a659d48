"""CLI entry point for afcmemory.

This module provides the command-line interface using Click.
Commands synthesize and analyze comb spectra, propagate pulses, simulate
comb preparation sweeps, simulate photon-counting histograms and tabulate
the optimum efficiency.
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import click
from pydantic import ValidationError

from afcmemory import __version__
from afcmemory.errors import AFCError, ConfigError, DomainError, FitError, ResolutionError
from afcmemory.models import (
    CombDescriptor,
    CombShape,
    DetectionConfig,
    MaterialConfig,
    PropagationConfig,
    PulseSpec,
    PumpSequenceConfig,
)
from afcmemory.pipeline import (
    PipelineOutput,
    load_config,
    run_analyze,
    run_counts,
    run_echo,
    run_optimize,
    run_prepare,
    run_synth,
)
from afcmemory.preparation import BleachModel
from afcmemory.utils.storage import load_document

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _setup_logging(verbose: bool) -> None:
    """Configure logging based on verbosity level.

    :param verbose: If True, set log level to DEBUG; otherwise INFO.
    """
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _run(ctx: click.Context, pipeline: Callable[[dict[str, Any]], PipelineOutput]) -> None:
    """Run a pipeline with the group's resolved config and map errors to exit codes."""
    state = ctx.obj
    try:
        config = load_config(state["config_path"])
        output = pipeline(config)
    except (ValidationError, DomainError, ConfigError) as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    except (ResolutionError, FitError, ArithmeticError) as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except AFCError as exc:
        click.echo(f"Error: {exc}", err=True)
        sys.exit(1)

    click.echo(f"\n--- {output.subcommand} ---")
    for path in output.files:
        click.echo(f"  {path}")
    for key, value in output.summary.items():
        if isinstance(value, (int, float, str, bool)):
            click.echo(f"  {key:<24} {value}")


def _parse_powers(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"not a comma-separated list of numbers: {text}") from exc


@click.group()
@click.version_option(version=__version__, package_name="afcmemory")
@click.option("--seed", type=int, default=None, help="Random seed (overrides config files).")
@click.option(
    "--out-dir",
    "out_dir",
    default=None,
    type=click.Path(file_okay=False, path_type=Path),
    help="Output directory (default: $AFCMEMORY_OUT_DIR or ./output).",
)
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker threads.")
@click.option(
    "--config",
    "-c",
    "config_path",
    default=None,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Path to config.yaml file.",
)
@click.option(
    "--verbose", "-v", is_flag=True, default=False, help="Enable verbose logging."
)
@click.pass_context
def cli(
    ctx: click.Context,
    seed: int | None,
    out_dir: Path | None,
    workers: int | None,
    config_path: Path | None,
    verbose: bool,
) -> None:
    """afcmemory: simulate atomic frequency comb quantum memories."""
    _setup_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj.update(
        {"seed": seed, "out_dir": out_dir, "workers": workers, "config_path": config_path}
    )


def _out_dir(ctx: click.Context, config: dict[str, Any]) -> Path | None:
    return ctx.obj["out_dir"] or config["run"]["out_dir"]


def _workers(ctx: click.Context, config: dict[str, Any]) -> int | None:
    return ctx.obj["workers"] or config["run"]["workers"]


@cli.command()
@click.option(
    "--shape",
    required=True,
    type=click.Choice([s.value for s in CombShape]),
    help="Peak shape.",
)
@click.option("--depth", "peak_depth", type=float, required=True, help="Peak optical depth d.")
@click.option("--finesse", type=float, default=1.0, show_default=True, help="Comb finesse F.")
@click.option("--period", type=float, required=True, help="Comb period 1/T (Hz).")
@click.option(
    "--bandwidth",
    type=float,
    default=None,
    help="Comb bandwidth (Hz). Defaults to the configured number of periods.",
)
@click.option("--background", type=float, default=0.0, show_default=True, help="Uniform depth.")
@click.option("--center", type=float, default=0.0, show_default=True, help="Band center (Hz).")
@click.pass_context
def synth(
    ctx: click.Context,
    shape: str,
    peak_depth: float,
    finesse: float,
    period: float,
    bandwidth: float | None,
    background: float,
    center: float,
) -> None:
    """Synthesize a comb spectrum CSV."""

    def pipeline(config: dict[str, Any]) -> PipelineOutput:
        band = bandwidth
        if band is None:
            band = abs(period) * int(config["spectral"]["periods"])
        desc = CombDescriptor(
            shape=CombShape(shape),
            peak_depth=peak_depth,
            finesse=finesse,
            period=period,
            bandwidth=band,
            background=background,
            center=center,
        )
        return run_synth(desc, config, _out_dir(ctx, config))

    _run(ctx, pipeline)


@cli.command()
@click.argument("spectrum", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--period", type=float, required=True, help="Comb period 1/T (Hz).")
@click.option("--order", "-P", type=click.IntRange(min=1), default=None, help="Highest harmonic.")
@click.option(
    "--window-periods",
    type=click.IntRange(min=1),
    default=None,
    help="Analyze only this many central periods.",
)
@click.pass_context
def analyze(
    ctx: click.Context,
    spectrum: Path,
    period: float,
    order: int | None,
    window_periods: int | None,
) -> None:
    """Fourier-analyze a spectrum and fit a Lorentzian comb."""

    def pipeline(config: dict[str, Any]) -> PipelineOutput:
        if period <= 0:
            raise DomainError(f"period must be > 0, got {period}")
        return run_analyze(
            spectrum, period, order, window_periods, config, _out_dir(ctx, config)
        )

    _run(ctx, pipeline)


@cli.command()
@click.argument("spectrum", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--period", type=float, required=True, help="Comb period 1/T (Hz).")
@click.option("--fwhm", type=float, default=None, help="Input pulse intensity FWHM (s).")
@click.option("--horizon", type=float, default=None, help="Time kept after the pulse (s).")
@click.option("--gate", type=float, default=None, help="Echo gate width (s).")
@click.option("--mean-photon-number", type=float, default=None, help="Input pulse μ.")
@click.option("--scale", type=float, default=1.0, show_default=True, help="k·L scale factor.")
@click.pass_context
def echo(
    ctx: click.Context,
    spectrum: Path,
    period: float,
    fwhm: float | None,
    horizon: float | None,
    gate: float | None,
    mean_photon_number: float | None,
    scale: float,
) -> None:
    """Propagate a Gaussian pulse through a spectrum and gate the echoes."""

    def pipeline(config: dict[str, Any]) -> PipelineOutput:
        if period <= 0:
            raise DomainError(f"period must be > 0, got {period}")
        section = config["propagation"]
        pulse = PulseSpec(
            fwhm=fwhm if fwhm is not None else section["pulse_fwhm"],
            mean_photon_number=(
                mean_photon_number
                if mean_photon_number is not None
                else section["mean_photon_number"]
            ),
        )
        return run_echo(
            spectrum,
            period,
            pulse=pulse,
            horizon=horizon,
            gate=gate,
            propagation=PropagationConfig(scale=scale),
            config=config,
            out_dir=_out_dir(ctx, config),
        )

    _run(ctx, pipeline)


@cli.command()
@click.option(
    "--material",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="MaterialConfig JSON (defaults when omitted).",
)
@click.option(
    "--sequence",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="PumpSequenceConfig JSON (defaults when omitted).",
)
@click.option(
    "--powers",
    default=None,
    help="Comma-separated pump powers in units of Psat; '' for none.",
)
@click.option(
    "--bleach",
    type=click.Choice([b.value for b in BleachModel]),
    default=None,
    help="Population model.",
)
@click.pass_context
def prepare(
    ctx: click.Context,
    material: Path | None,
    sequence: Path | None,
    powers: str | None,
    bleach: str | None,
) -> None:
    """Simulate comb preparation over a pump-power sweep."""
    power_list = _parse_powers(powers)

    def pipeline(config: dict[str, Any]) -> PipelineOutput:
        mat = load_document(MaterialConfig, material) if material else MaterialConfig()
        seq = load_document(PumpSequenceConfig, sequence) if sequence else PumpSequenceConfig()
        return run_prepare(
            mat,
            seq,
            powers=power_list,
            bleach=BleachModel(bleach) if bleach else None,
            workers=_workers(ctx, config),
            config=config,
            out_dir=_out_dir(ctx, config),
            inputs=[p for p in (material, sequence) if p],
        )

    _run(ctx, pipeline)


@cli.command()
@click.option(
    "--detection",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="DetectionConfig JSON (defaults when omitted).",
)
@click.option("--runs", type=click.IntRange(min=0), default=None, help="Seeds in the SNR ensemble.")
@click.option("--off-gates", type=click.IntRange(min=1), default=None, help="Background gates.")
@click.pass_context
def counts(
    ctx: click.Context,
    detection: Path | None,
    runs: int | None,
    off_gates: int | None,
) -> None:
    """Simulate an accumulated photon-count histogram and its SNR."""

    def pipeline(config: dict[str, Any]) -> PipelineOutput:
        cfg = load_document(DetectionConfig, detection) if detection else DetectionConfig()
        seed = ctx.obj["seed"]
        if seed is None and detection is None:
            seed = config["run"]["seed"]
        if seed is not None:
            cfg = cfg.model_copy(update={"rng_seed": seed})
        return run_counts(
            cfg,
            runs=runs,
            off_gates=off_gates,
            workers=_workers(ctx, config),
            config=config,
            out_dir=_out_dir(ctx, config),
            inputs=[detection] if detection else [],
        )

    _run(ctx, pipeline)


@cli.command()
@click.option("--depth", "depths", type=float, multiple=True, help="Optical depth (repeatable).")
@click.pass_context
def optimize(ctx: click.Context, depths: tuple[float, ...]) -> None:
    """Tabulate the optimum finesse and efficiency against optical depth."""

    def pipeline(config: dict[str, Any]) -> PipelineOutput:
        return run_optimize(list(depths) or None, config, _out_dir(ctx, config))

    _run(ctx, pipeline)


if __name__ == "__main__":
    cli()
