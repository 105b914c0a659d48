"""Gated single-photon counting at the few-photon level.

Each gate accumulates Poisson counts over ``total_gates`` repetitions: the
signal fraction reaching that gate times the detection chain, plus dark
counts and leaked pump light integrated over the gate width. There is no
detector dead time or afterpulsing.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from afcmemory.errors import DomainError
from afcmemory.models import CountHistogram, DetectionConfig, GatePosition, SNRReport

logger = logging.getLogger(__name__)

Gate = tuple[GatePosition, float]

DEFAULT_OFF_GATES = 8


def signal_fraction(cfg: DetectionConfig, position: GatePosition) -> float:
    """Fraction of the input photons emitted into the gate at ``position``."""
    return {
        GatePosition.TRANSMITTED: cfg.transmitted_fraction,
        GatePosition.ECHO1: cfg.afc_efficiency,
        GatePosition.ECHO2: cfg.echo2_fraction,
        GatePosition.OFF: 0.0,
    }[position]


def background_per_gate(cfg: DetectionConfig) -> float:
    """Dark plus leak counts expected in one gate."""
    return (cfg.dark_rate + cfg.leak_rate) * cfg.gate_width


def expected_counts(cfg: DetectionConfig, position: GatePosition) -> float:
    """Mean accumulated counts in one gate position.

    totalGates·[μ·f·collection·QE + (dark + leak)·gateWidth]
    """
    signal = (
        cfg.mean_photon_number
        * signal_fraction(cfg, position)
        * cfg.collection_efficiency
        * cfg.quantum_efficiency
    )
    return cfg.total_gates * (signal + background_per_gate(cfg))


def dark_rate_for_counts(target: float, cfg: DetectionConfig) -> float:
    """Dark rate (counts/s) giving ``target`` accumulated off-gate counts.

    The leak rate in ``cfg`` is kept and subtracted.

    :raises DomainError: If the schedule has no gates or the leak alone
        exceeds the target.
    """
    exposure = cfg.total_gates * cfg.gate_width
    if exposure <= 0:
        raise DomainError("accumulation schedule has no gates")
    rate = target / exposure - cfg.leak_rate
    if rate < 0:
        raise DomainError(f"leak rate alone exceeds {target} counts")
    return rate


def default_gates(cfg: DetectionConfig, off_gates: int = DEFAULT_OFF_GATES) -> list[Gate]:
    """Transmitted, echo gates at T and 2T, then off gates at 3T, 4T, ..."""
    t = cfg.storage_time
    gates: list[Gate] = [
        (GatePosition.TRANSMITTED, 0.0),
        (GatePosition.ECHO1, t),
        (GatePosition.ECHO2, 2.0 * t),
    ]
    gates.extend((GatePosition.OFF, (3 + k) * t) for k in range(off_gates))
    return gates


def _check_gates(cfg: DetectionConfig, gates: Sequence[Gate]) -> None:
    centers = sorted(center for _, center in gates)
    for a, b in zip(centers, centers[1:]):
        if b - a < cfg.gate_width * (1 - 1e-12):
            raise DomainError(
                f"gates at {a:.4g} s and {b:.4g} s overlap (width {cfg.gate_width:.4g} s)"
            )


def simulate_histogram(
    cfg: DetectionConfig,
    gates: Sequence[Gate] | None = None,
    seed: int | None = None,
) -> CountHistogram:
    """Draw one accumulated count per gate from independent Poisson laws.

    :param gates: (position, center) pairs; defaults to :func:`default_gates`.
    :param seed: Overrides ``cfg.rng_seed``.
    :raises DomainError: If two gates overlap.
    """
    gates = list(gates) if gates is not None else default_gates(cfg)
    _check_gates(cfg, gates)
    seed = cfg.rng_seed if seed is None else seed
    means = np.array([expected_counts(cfg, position) for position, _ in gates])
    rng = np.random.default_rng(seed)
    counts = rng.poisson(means)
    logger.debug("Simulated %d gates with seed %d", len(gates), seed)
    return CountHistogram(
        gate_centers=[center for _, center in gates],
        counts=counts,
        total_gates=cfg.total_gates,
        positions=tuple(position for position, _ in gates),
        seed=seed,
    )


def snr(
    h: CountHistogram, signal_index: int, background_indices: Sequence[int]
) -> SNRReport:
    """Signal-gate counts over the mean of the background gates.

    A zero background mean gives an infinite ratio flagged as background-free.

    :raises DomainError: If the background set is empty, contains the signal
        gate or an index is out of range.
    """
    background_indices = list(background_indices)
    if not background_indices:
        raise DomainError("at least one background gate is required")
    if signal_index in background_indices:
        raise DomainError("signal gate must not be a background gate")
    n = h.counts.size
    for index in [signal_index, *background_indices]:
        if not 0 <= index < n:
            raise DomainError(f"gate index {index} out of range [0, {n})")

    signal = float(h.counts[signal_index])
    background = float(np.mean(h.counts[background_indices]))
    if background == 0.0:
        logger.warning("Background-free histogram: SNR reported as infinite")
        return SNRReport(snr=math.inf, signal=signal, background_mean=0.0, background_free=True)
    return SNRReport(snr=signal / background, signal=signal, background_mean=background)


def gate_indices(h: CountHistogram) -> tuple[int, list[int]]:
    """Index of the first-echo gate and of the off gates."""
    positions = list(h.positions)
    if GatePosition.ECHO1 not in positions:
        raise DomainError("histogram has no echo1 gate")
    background = [i for i, p in enumerate(positions) if p is GatePosition.OFF]
    return positions.index(GatePosition.ECHO1), background


async def ensemble_snr_async(
    cfg: DetectionConfig,
    runs: int,
    gates: Sequence[Gate] | None = None,
    workers: int | None = None,
) -> list[SNRReport]:
    """SNR over ``runs`` independent histograms, seeds rng_seed + run index."""
    if runs < 1:
        raise DomainError("runs must be >= 1")
    gates = list(gates) if gates is not None else default_gates(cfg)

    def one(index: int) -> SNRReport:
        h = simulate_histogram(cfg, gates, seed=cfg.rng_seed + index)
        signal, background = gate_indices(h)
        return snr(h, signal, background)

    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        tasks = [loop.run_in_executor(pool, one, i) for i in range(runs)]
        reports = await asyncio.gather(*tasks)
    finite = [r.snr for r in reports if not r.background_free]
    if finite:
        logger.info("SNR ensemble of %d runs: median %.3g", runs, float(np.median(finite)))
    return list(reports)


def ensemble_snr(
    cfg: DetectionConfig,
    runs: int,
    gates: Sequence[Gate] | None = None,
    workers: int | None = None,
) -> list[SNRReport]:
    """Blocking wrapper around :func:`ensemble_snr_async`."""
    return asyncio.run(ensemble_snr_async(cfg, runs, gates, workers))
