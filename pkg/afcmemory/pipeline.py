"""Pipelines behind the CLI subcommands: load inputs, run, write outputs.

Every pipeline writes its files into one output directory and finishes
with a ``manifest.json`` whose digest covers the full resolved
configuration of the run.
"""

from __future__ import annotations

import asyncio
import copy
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from pydantic import BaseModel, Field

from afcmemory import __version__
from afcmemory.detection import (
    default_gates,
    ensemble_snr_async,
    expected_counts,
    gate_indices,
    simulate_histogram,
    snr,
)
from afcmemory.efficiency import (
    efficiency_curve,
    efficiency_from_coefficients,
    efficiency_lorentzian,
    report_efficiency,
)
from afcmemory.errors import ConfigError, FitError
from afcmemory.models import (
    CombDescriptor,
    CombShape,
    DetectionConfig,
    FourierCoefficientSet,
    FrequencyGrid,
    GatePosition,
    MaterialConfig,
    PreparedComb,
    PropagationConfig,
    PulseSpec,
    PumpSequenceConfig,
    RunManifest,
)
from afcmemory.preparation import (
    BleachModel,
    SweepRow,
    burn_comb,
    check_powers,
    default_grid,
    row_from_comb,
)
from afcmemory.propagation import (
    echo_energies,
    echo_peak_time,
    propagate,
    transfer_function,
)
from afcmemory.spectral import (
    SAMPLES_PER_PEAK_WIDTH,
    causal_susceptibility,
    fit_lorentzian_comb,
    fourier_coefficients,
    reconstruct_spectrum,
    synth_comb,
)
from afcmemory.utils.storage import (
    config_digest,
    read_spectrum_csv,
    resolve_output_dir,
    write_coefficients_csv,
    write_histogram_csv,
    write_json,
    write_manifest,
    write_spectrum_csv,
    write_table_csv,
    write_trace_csv,
)

logger = logging.getLogger(__name__)

CONFIG_FILE = Path(__file__).resolve().parent.parent / "config" / "config.yaml"

SWEEP_HEADER = ("power", "peak_depth", "finesse", "eta_fourier", "eta_opt")
CURVE_HEADER = ("d", "f_opt", "eta_opt", "f_star", "eta_star")

DEFAULT_CONFIG: dict[str, Any] = {
    "spectral": {
        "periods": 20,
        "samples_per_period": 64,
        "fourier_order": 8,
        "window_periods": None,
    },
    "propagation": {
        "pulse_fwhm": 450e-9,
        "horizon_periods": 3.0,
        "gate_fraction": 0.4,
        "mean_photon_number": 1.0,
    },
    "preparation": {
        "powers": [0.1, 0.2, 0.4, 0.8, 1.6, 3.0],
        "bleach": BleachModel.EXPONENTIAL.value,
    },
    "detection": {"runs": 200, "off_gates": 8},
    "optimize": {"d_min": 0.0, "d_max": 10.0, "points": 41},
    "run": {"seed": 0, "workers": None, "out_dir": None},
}


class PipelineOutput(BaseModel):
    """Files written by one pipeline run and the headline numbers."""

    subcommand: str
    out_dir: Path
    files: list[Path] = Field(default_factory=list)
    summary: dict[str, Any] = Field(default_factory=dict)


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Path | str | None = None) -> dict[str, Any]:
    """Load pipeline defaults from config.yaml, merged over built-in defaults.

    :param config_path: Path to config file. If None, uses default location.
    :raises ConfigError: If the file is not a YAML mapping.
    """
    path = Path(config_path) if config_path else CONFIG_FILE
    if not path.exists():
        logger.warning("Config file not found at %s, using defaults", path)
        return copy.deepcopy(DEFAULT_CONFIG)
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(data) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    return _merge(DEFAULT_CONFIG, data)


def _finish(
    subcommand: str,
    out_dir: Path,
    resolved: dict[str, Any],
    inputs: list[Path],
    files: list[Path],
    seed: int | None,
    summary: dict[str, Any],
) -> PipelineOutput:
    manifest = RunManifest(
        tool_version=__version__,
        subcommand=subcommand,
        config_digest=config_digest(resolved),
        input_files=[str(p) for p in inputs],
        output_files=[p.name for p in files],
        rng_seed=seed,
    )
    files = [*files, write_manifest(manifest, out_dir)]
    logger.info("%s finished: %d files in %s", subcommand, len(files), out_dir)
    return PipelineOutput(subcommand=subcommand, out_dir=out_dir, files=files, summary=summary)


# ---------------------------------------------------------------------------
# synth / analyze
# ---------------------------------------------------------------------------


def synth_grid(desc: CombDescriptor, config: dict[str, Any]) -> FrequencyGrid:
    """Grid of whole periods covering the comb band and resolving its peaks."""
    spectral = config["spectral"]
    periods = max(int(spectral["periods"]), math.ceil(desc.bandwidth / desc.period - 1e-9))
    samples = int(spectral["samples_per_period"])
    if desc.shape in (CombShape.LORENTZIAN, CombShape.GAUSSIAN):
        samples = max(samples, math.ceil(SAMPLES_PER_PEAK_WIDTH * desc.finesse))
    return FrequencyGrid.centered(desc.period, periods, samples, center=desc.center)


def run_synth(
    desc: CombDescriptor,
    config: dict[str, Any] | None = None,
    out_dir: Path | str | None = None,
) -> PipelineOutput:
    config = config or load_config()
    out = resolve_output_dir(out_dir)
    grid = synth_grid(desc, config)
    spectrum = synth_comb(desc, grid)
    path = write_spectrum_csv(spectrum, out / "spectrum.csv")
    resolved = {"comb": desc.model_dump(mode="json", by_alias=True), "grid": grid.model_dump()}
    summary = {"samples": grid.count, "maxDepth": float(np.max(spectrum.depth))}
    return _finish("synth", out, resolved, [], [path], None, summary)


def analyze_spectrum(
    spectrum_path: Path | str,
    period: float,
    order: int,
    window_periods: int | None = None,
) -> tuple[dict[str, Any], FourierCoefficientSet]:
    """Fourier analysis, efficiency and Lorentzian fit of a spectrum file."""
    spectrum = read_spectrum_csv(spectrum_path)
    coeffs = fourier_coefficients(spectrum, period, order, periods=window_periods)
    eta_fourier = efficiency_from_coefficients(coeffs)
    rebuilt = reconstruct_spectrum(coeffs, spectrum.grid)
    report: dict[str, Any] = {
        "b": [[float(b.real), float(b.imag)] for b in coeffs.b],
        "meanDepth": coeffs.mean_depth,
        "eta_eq1": report_efficiency(eta_fourier),
        "etaFourier": report_efficiency(eta_fourier),
        "transparent": eta_fourier.transparent,
        "window": coeffs.metadata,
        "reconstructionRms": float(np.sqrt(np.mean((rebuilt - spectrum.depth) ** 2))),
        "fitted": None,
        "eta_eq2": None,
        "etaLorentzian": None,
    }
    try:
        fitted, residual = fit_lorentzian_comb(spectrum, period)
    except FitError as exc:
        logger.warning("Lorentzian fit skipped: %s", exc)
    else:
        report["fitted"] = {
            "d": fitted.peak_depth,
            "F": fitted.finesse,
            "background": fitted.background,
            "center": fitted.center,
            "residual": residual,
        }
        report["eta_eq2"] = report_efficiency(
            efficiency_lorentzian(fitted.peak_depth, fitted.finesse)
        )
        report["etaLorentzian"] = report["eta_eq2"]
    return report, coeffs


def run_analyze(
    spectrum_path: Path | str,
    period: float,
    order: int | None = None,
    window_periods: int | None = None,
    config: dict[str, Any] | None = None,
    out_dir: Path | str | None = None,
) -> PipelineOutput:
    config = config or load_config()
    out = resolve_output_dir(out_dir)
    order = order or int(config["spectral"]["fourier_order"])
    if window_periods is None:
        window_periods = config["spectral"]["window_periods"]
    report, coeffs = analyze_spectrum(spectrum_path, period, order, window_periods)
    files = [
        write_json(report, out / "analysis.json"),
        write_coefficients_csv(coeffs, out / "coefficients.csv"),
    ]
    resolved = {"period": period, "order": order, "windowPeriods": window_periods}
    return _finish("analyze", out, resolved, [Path(spectrum_path)], files, None, report)


# ---------------------------------------------------------------------------
# echo
# ---------------------------------------------------------------------------


def run_echo(
    spectrum_path: Path | str,
    period: float,
    pulse: PulseSpec | None = None,
    horizon: float | None = None,
    gate: float | None = None,
    propagation: PropagationConfig | None = None,
    config: dict[str, Any] | None = None,
    out_dir: Path | str | None = None,
) -> PipelineOutput:
    """Propagate a pulse through the spectrum and gate the echoes."""
    config = config or load_config()
    section = config["propagation"]
    out = resolve_output_dir(out_dir)
    storage_time = 1.0 / period
    pulse = pulse or PulseSpec(
        fwhm=section["pulse_fwhm"], mean_photon_number=section["mean_photon_number"]
    )
    horizon = horizon if horizon is not None else section["horizon_periods"] * storage_time
    gate = gate if gate is not None else section["gate_fraction"] * storage_time

    spectrum = read_spectrum_csv(spectrum_path)
    t = transfer_function(causal_susceptibility(spectrum), propagation)
    trace = propagate(pulse, t, horizon, period=period)
    report = echo_energies(trace, storage_time, gate)
    coeffs = fourier_coefficients(spectrum, period, 2)
    summary = {
        **report.model_dump(by_alias=True),
        "echo1PeakTime": echo_peak_time(trace, storage_time) - trace.origin,
        "etaFourier": report_efficiency(efficiency_from_coefficients(coeffs)),
    }
    files = [
        write_trace_csv(trace, out / "trace.csv"),
        write_json(summary, out / "echo.json"),
    ]
    resolved = {
        "period": period,
        "pulse": pulse.model_dump(mode="json", by_alias=True),
        "horizon": horizon,
        "gate": gate,
        "propagation": (propagation or PropagationConfig()).model_dump(by_alias=True),
    }
    return _finish("echo", out, resolved, [Path(spectrum_path)], files, None, summary)


# ---------------------------------------------------------------------------
# prepare
# ---------------------------------------------------------------------------


def sweep_point(row: SweepRow) -> dict[str, Any]:
    """JSON record of one sweep row, with the optimum finesse at its depth."""
    return {
        "power": row.power,
        "peakDepth": row.peak_depth,
        "finesse": row.finesse,
        "fOpt": row.f_opt,
        "etaFourier": row.eta_fourier,
        "etaOpt": row.eta_opt,
    }


async def prepare_sweep_async(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    powers: list[float],
    bleach: BleachModel = BleachModel.EXPONENTIAL,
    workers: int | None = None,
) -> list[tuple[SweepRow, PreparedComb]]:
    """Burn and analyze every power point concurrently, keeping sweep order."""
    powers = check_powers(powers)

    def one(power: float) -> tuple[SweepRow, PreparedComb]:
        point = seq.model_copy(update={"power": power})
        comb = burn_comb(mat, point, default_grid(point), bleach)
        return row_from_comb(mat, seq, comb), comb

    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        tasks = [loop.run_in_executor(pool, one, p) for p in powers]
        return list(await asyncio.gather(*tasks))


def run_prepare(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    powers: list[float] | None = None,
    bleach: BleachModel | None = None,
    workers: int | None = None,
    config: dict[str, Any] | None = None,
    out_dir: Path | str | None = None,
    inputs: list[Path] | None = None,
) -> PipelineOutput:
    config = config or load_config()
    section = config["preparation"]
    out = resolve_output_dir(out_dir)
    powers = list(section["powers"]) if powers is None else list(powers)
    bleach = bleach or BleachModel(section["bleach"])
    points = asyncio.run(prepare_sweep_async(mat, seq, powers, bleach, workers))

    rows = [row for row, _ in points]
    files = [
        write_table_csv(rows, SWEEP_HEADER, out / "sweep.csv"),
        write_json([sweep_point(row) for row in rows], out / "sweep.json"),
    ]
    for i, (_, comb) in enumerate(points):
        files.append(write_spectrum_csv(comb.spectrum, out / f"spectrum_{i:03d}.csv"))
    resolved = {
        "material": mat.model_dump(by_alias=True),
        "sequence": seq.model_dump(by_alias=True),
        "powers": powers,
        "bleach": bleach.value,
    }
    summary = {"points": len(points)}
    return _finish("prepare", out, resolved, inputs or [], files, None, summary)


# ---------------------------------------------------------------------------
# counts
# ---------------------------------------------------------------------------


def run_counts(
    cfg: DetectionConfig,
    runs: int | None = None,
    off_gates: int | None = None,
    workers: int | None = None,
    config: dict[str, Any] | None = None,
    out_dir: Path | str | None = None,
    inputs: list[Path] | None = None,
) -> PipelineOutput:
    """One histogram at ``cfg.rng_seed`` plus a multi-seed SNR ensemble."""
    config = config or load_config()
    section = config["detection"]
    out = resolve_output_dir(out_dir)
    runs = int(section["runs"]) if runs is None else runs
    off_gates = int(section["off_gates"]) if off_gates is None else off_gates
    gates = default_gates(cfg, off_gates)

    histogram = simulate_histogram(cfg, gates)
    signal_index, background = gate_indices(histogram)
    single = snr(histogram, signal_index, background)
    summary: dict[str, Any] = {
        "snr": single.snr,
        "signal": single.signal,
        "backgroundMean": single.background_mean,
        "backgroundFree": single.background_free,
        "expectedEcho1": expected_counts(cfg, GatePosition.ECHO1),
        "expectedOff": expected_counts(cfg, GatePosition.OFF),
        "totalGates": cfg.total_gates,
    }
    if runs > 0:
        reports = asyncio.run(ensemble_snr_async(cfg, runs, gates, workers))
        finite = [r.snr for r in reports if not r.background_free]
        summary["ensembleRuns"] = runs
        summary["ensembleMedianSnr"] = float(np.median(finite)) if finite else math.inf
        summary["ensembleBackgroundFree"] = len(reports) - len(finite)

    files = [
        write_histogram_csv(histogram, out / "histogram.csv"),
        write_json(summary, out / "snr.json"),
    ]
    resolved = {
        "detection": cfg.model_dump(by_alias=True),
        "runs": runs,
        "offGates": off_gates,
    }
    return _finish("counts", out, resolved, inputs or [], files, cfg.rng_seed, summary)


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def run_optimize(
    depths: list[float] | None = None,
    config: dict[str, Any] | None = None,
    out_dir: Path | str | None = None,
) -> PipelineOutput:
    config = config or load_config()
    out = resolve_output_dir(out_dir)
    if depths is None:
        section = config["optimize"]
        depths = np.linspace(section["d_min"], section["d_max"], int(section["points"])).tolist()
    rows = efficiency_curve(depths)
    path = write_table_csv(rows, CURVE_HEADER, out / "curve.csv")
    summary = {"points": len(rows)}
    return _finish("optimize", out, {"depths": list(depths)}, [], [path], None, summary)
