"""Comb preparation by accumulated optical pumping with pulse pairs.

A train of pulse pairs separated by T has the spectral density
|E(ν)|²·2(1 + cos 2πνT): fringes spaced by 1/T under the single-pulse
envelope. Each ion class is bleached through its homogeneous line, whose
width is half the power-broadened hole width, so the pump wings reach the
fringe minima more as the power grows. The surviving population at the
fringe minima sets the height of the comb teeth, the population at the
fringe maxima sets the floor between them, and the teeth take the
power-broadened hole profile. Population moved to the other spin level
shows up as anti-holes at the Δg offsets.

Raising the pump power therefore lowers the teeth and widens them at the
same time, which is the single-knob trade-off the sweep exposes.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from afcmemory.efficiency import (
    efficiency_from_coefficients,
    optimal_efficiency,
    optimal_finesse,
    with_dephasing,
)
from afcmemory.errors import DomainError, FitError, ResolutionError
from afcmemory.models import (
    FrequencyGrid,
    MaterialConfig,
    OpticalDepthSpectrum,
    PreparedComb,
    PumpSequenceConfig,
)
from afcmemory.spectral import (
    finesse_from_hwhm,
    fit_lorentzian_comb,
    fourier_coefficients,
    periodic_lorentzian,
)

logger = logging.getLogger(__name__)

MIN_SAMPLES_PER_PERIOD = 16
FOURIER_ORDER = 8
ANALYSIS_PERIODS = 3
SAMPLES_PER_PERIOD = 64
# Super-Gaussian order of a frequency-scanned pulse envelope.
CHIRP_ENVELOPE_ORDER = 16
# Extra margin (Hz) around the anti-hole offsets on the internal grid.
_MARGIN = 2.0e6
DEFAULT_SWEEP = (0.1, 0.2, 0.4, 0.8, 1.6, 3.0)


class BleachModel(str, Enum):
    EXPONENTIAL = "exponential"
    STEADY_STATE = "steady_state"


class SweepRow(BaseModel):
    """One power point of a preparation sweep."""

    power: float = Field(..., ge=0)
    peak_depth: float = Field(..., ge=0)
    finesse: float | None = None
    eta_fourier: float
    eta_opt: float
    f_opt: float = Field(..., gt=0, description="Optimum finesse at the realized depth")


def transform_limited_width(seq: PumpSequenceConfig) -> float:
    """Intensity-spectrum FWHM (Hz) of one Gaussian pulse, 2·ln2/(π·τ)."""
    return 2.0 * math.log(2.0) / (math.pi * seq.pulse_fwhm)


def pulse_envelope(seq: PumpSequenceConfig, nu: np.ndarray, center: float = 0.0) -> np.ndarray:
    """|E(ν)|² of one pump pulse, normalized to 1 at ``center``.

    A scan wider than the transform limit gives a flat-topped envelope of
    that width; otherwise the Gaussian transform-limited spectrum is used.
    """
    delta = np.asarray(nu, dtype=float) - center
    tl_width = transform_limited_width(seq)
    if seq.chirp_bandwidth > tl_width:
        x = np.abs(2.0 * delta / seq.chirp_bandwidth)
        return np.exp(-math.log(2.0) * x**CHIRP_ENVELOPE_ORDER)
    return np.exp(-4.0 * math.log(2.0) * (delta / tl_width) ** 2)


def pump_spectrum(
    seq: PumpSequenceConfig, grid: FrequencyGrid, center: float = 0.0
) -> np.ndarray:
    """Spectral density of the pulse-pair train, power·|E(ν)|²·2(1 + cos 2πνT).

    :raises ResolutionError: If the grid has fewer than 16 samples per 1/T.
    """
    period = seq.comb_period
    if grid.step > period / MIN_SAMPLES_PER_PERIOD * (1 + 1e-9):
        raise ResolutionError(
            f"grid step {grid.step:.4g} Hz resolves fewer than "
            f"{MIN_SAMPLES_PER_PERIOD} samples per fringe"
        )
    nu = grid.frequencies
    fringes = 2.0 * (1.0 + np.cos(2.0 * np.pi * (nu - center) * seq.pair_delay))
    return seq.power * pulse_envelope(seq, nu, center) * fringes


def power_broadened_width(power: float, mat: MaterialConfig) -> float:
    """Hole HWHM Γ(P) = Γ₀·sqrt(1 + P/P_sat)."""
    if power < 0:
        raise DomainError(f"power must be >= 0, got {power}")
    return mat.hole_width0 * math.sqrt(1.0 + power / mat.saturation_power)


def anti_hole_gain(mat: MaterialConfig) -> float:
    """Fraction of the pumped population shelved in the other spin level.

    Excited ions reach the other spin level through the weak branch and
    must stay there for one excited-state lifetime to be pumped again.
    """
    return mat.branching_ratio * math.exp(-mat.excited_lifetime / mat.zeeman_lifetime)


def hole_pattern(mat: MaterialConfig) -> list[tuple[float, float]]:
    """(offset, weight) of the holes left by burning one class at offset 0.

    Each class absorbs on a strong transition (weight 1 - β) and on a weak
    one through the other excited level (weight β), Δe apart. A class burned
    on one transition and read on the other gives the side holes at ±Δe.
    """
    beta = mat.branching_ratio
    side = beta * (1.0 - beta)
    return [(0.0, (1.0 - beta) ** 2 + beta**2), (mat.delta_e, side), (-mat.delta_e, side)]


def anti_hole_pattern(mat: MaterialConfig) -> list[tuple[float, float]]:
    """(offset, weight) of the anti-holes, normalized to a total weight of 1.

    Population shelved Δg away is read on the same strong and weak
    transitions, giving ±Δg and the four ±(Δg ± Δe) combinations.
    """
    beta = mat.branching_ratio
    g, e = mat.delta_g, mat.delta_e
    strong = 0.5 * ((1.0 - beta) ** 2 + beta**2)
    weak = 0.5 * beta * (1.0 - beta)
    return [
        (g, strong),
        (-g, strong),
        (g + e, weak),
        (g - e, weak),
        (-(g + e), weak),
        (-(g - e), weak),
    ]


def _internal_grid(mat: MaterialConfig, grid: FrequencyGrid) -> tuple[FrequencyGrid, int]:
    pad = int(math.ceil((mat.delta_g + mat.delta_e + _MARGIN) / grid.step))
    ext = FrequencyGrid(
        start=grid.start - pad * grid.step, step=grid.step, count=grid.count + 2 * pad
    )
    return ext, pad


def _homogeneous_response(density: np.ndarray, step: float, width: float) -> np.ndarray:
    """Convolve the pump density with a unit-area Lorentzian of HWHM ``width``.

    The kernel is applied through its Fourier transform exp(-2π·width·|t|).
    """
    t = np.fft.fftfreq(density.size, d=step)
    kernel = np.exp(-2.0 * np.pi * width * np.abs(t))
    return np.clip(np.fft.ifft(np.fft.fft(density) * kernel).real, 0.0, None)


def _shifted(values: np.ndarray, nu: np.ndarray, offset: float, fill: float) -> np.ndarray:
    """values(ν - offset) by linear interpolation, ``fill`` outside the grid."""
    return np.interp(nu - offset, nu, values, left=fill, right=fill)


def bleach_exponent(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    grid: FrequencyGrid,
    center: float = 0.0,
) -> np.ndarray:
    """κ·N·[pump ⊛ L](ν)/(1 + P/P_sat) for each ion class.

    L is the homogeneous line of HWHM Γ(P)/2. The bleach rate per unit power
    falls by 1 + P/P_sat, so P_sat is the power at which it halves.
    """
    nu = grid.frequencies
    width = 0.5 * power_broadened_width(seq.power, mat)
    burn = _homogeneous_response(pump_spectrum(seq, grid, center), grid.step, width)
    # Strong transition at ν, weak one through the other excited level at ν + Δe.
    beta = mat.branching_ratio
    burn = (1.0 - beta) * burn + beta * _shifted(burn, nu, -mat.delta_e, 0.0)
    saturation = 1.0 + seq.power / mat.saturation_power
    return mat.pumping_rate * seq.pair_count * burn / saturation


def population(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    grid: FrequencyGrid,
    bleach: BleachModel = BleachModel.EXPONENTIAL,
    center: float = 0.0,
) -> np.ndarray:
    """Remaining ground-state population fraction n(ν) of each ion class."""
    exponent = bleach_exponent(mat, seq, grid, center)
    if bleach is BleachModel.STEADY_STATE:
        # Pumping balanced against spin relaxation over one preparation cycle.
        return 1.0 / (1.0 + exponent * mat.zeeman_lifetime / seq.duration)
    return np.exp(-exponent)


def _fringe_envelope(
    n: np.ndarray, nu: np.ndarray, period: float, first: float
) -> np.ndarray:
    """n sampled once per period starting at ``first``, interpolated back onto ν."""
    k0 = math.ceil((nu[0] - first) / period)
    k1 = math.floor((nu[-1] - first) / period)
    nodes = first + period * np.arange(k0, k1 + 1)
    values = np.interp(nodes, nu, n)
    return np.interp(nu, nodes, values)


def surviving_fraction(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    grid: FrequencyGrid,
    bleach: BleachModel = BleachModel.EXPONENTIAL,
    center: float = 0.0,
) -> np.ndarray:
    """Fraction of each class still absorbing after the burn.

    Teeth of HWHM Γ(P) sit at the fringe minima with the population found
    there; between them the fraction falls to the population at the maxima.
    """
    nu = grid.frequencies
    period = seq.comb_period
    n = population(mat, seq, grid, bleach, center)
    top = _fringe_envelope(n, nu, period, center + 0.5 * period)
    floor = np.minimum(_fringe_envelope(n, nu, period, center), top)
    teeth_finesse = finesse_from_hwhm(power_broadened_width(seq.power, mat), period)
    teeth = periodic_lorentzian(nu, 1.0, teeth_finesse, period, center + 0.5 * period)
    return floor + (top - floor) * teeth


def burn_comb(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    grid: FrequencyGrid,
    bleach: BleachModel = BleachModel.EXPONENTIAL,
    center: float = 0.0,
) -> PreparedComb:
    """Burn a comb with ``seq`` and analyze it on ``grid``.

    The depth is d₀ times the surviving fraction read through the hole
    pattern, plus the anti-holes, so a zero-power sequence returns d₀
    everywhere. The peak depth is the maximum of the fitted Lorentzian comb,
    or the spectrum maximum when no comb is found.
    """
    ext, pad = _internal_grid(mat, grid)
    nu = ext.frequencies
    s = surviving_fraction(mat, seq, ext, bleach, center)
    holes = s.copy()
    for offset, weight in hole_pattern(mat)[1:]:
        holes += weight * (_shifted(s, nu, offset, 1.0) - s)
    pumped = 1.0 - s
    anti = np.zeros_like(s)
    for offset, weight in anti_hole_pattern(mat):
        anti += weight * _shifted(pumped, nu, offset, 0.0)
    # Shelved ions sit on the same fringe pattern and are bleached like the rest.
    gain = anti_hole_gain(mat)
    depth = mat.initial_depth * (holes + gain * s * anti)[pad : pad + grid.count]

    spectrum = OpticalDepthSpectrum(
        grid=grid,
        depth=depth,
        metadata={"source": "prepare", "power": seq.power, "bleach": bleach.value},
    )
    period = seq.comb_period
    coeffs = fourier_coefficients(spectrum, period, FOURIER_ORDER)
    try:
        fitted, residual = fit_lorentzian_comb(spectrum, period)
    except FitError as exc:
        logger.info("No comb fitted at power %.4g: %s", seq.power, exc)
        fitted, residual = None, None

    if fitted is not None:
        peak = fitted.peak_depth + fitted.background
        finesse: float | None = fitted.finesse
        logger.debug(
            "Prepared comb at power %.4g: d=%.4g F=%.4g (residual %.3g)",
            seq.power,
            peak,
            finesse,
            residual,
        )
    else:
        peak = float(np.max(depth))
        finesse = None

    ceiling = mat.initial_depth * (1.0 + gain)
    if float(np.max(depth)) > ceiling * (1 + 1e-9):
        raise ArithmeticError("prepared depth exceeds d0·(1 + anti-hole gain)")
    return PreparedComb(
        power=seq.power,
        spectrum=spectrum,
        fitted=fitted,
        peak_depth=min(peak, ceiling),
        finesse=finesse,
        coefficients=coeffs,
    )


def default_grid(seq: PumpSequenceConfig, center: float = 0.0) -> FrequencyGrid:
    """Central comb periods analyzed in a sweep."""
    return FrequencyGrid.centered(
        seq.comb_period, ANALYSIS_PERIODS, SAMPLES_PER_PERIOD, center=center
    )


def sweep_row(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    power: float,
    grid: FrequencyGrid | None = None,
    bleach: BleachModel = BleachModel.EXPONENTIAL,
) -> SweepRow:
    """Prepare at one power and compare to the optimum at the realized depth."""
    point = seq.model_copy(update={"power": power})
    comb = burn_comb(mat, point, grid or default_grid(point), bleach)
    return row_from_comb(mat, seq, comb)


def row_from_comb(mat: MaterialConfig, seq: PumpSequenceConfig, comb: PreparedComb) -> SweepRow:
    result = efficiency_from_coefficients(comb.coefficients)
    if mat.apply_dephasing:
        result = with_dephasing(result, seq.pair_delay, mat.coherence_t2)
    return SweepRow(
        power=comb.power,
        peak_depth=comb.peak_depth,
        finesse=comb.finesse,
        eta_fourier=result.eta,
        eta_opt=optimal_efficiency(comb.peak_depth).eta,
        f_opt=optimal_finesse(comb.peak_depth),
    )


def check_powers(powers: Iterable[float]) -> list[float]:
    """Validate a sweep: nonnegative and nondecreasing.

    :raises DomainError: On a negative or decreasing power.
    """
    values = [float(p) for p in powers]
    for prev, cur in zip(values, values[1:]):
        if cur < prev:
            raise DomainError("powers must be nondecreasing")
    if any(p < 0 for p in values):
        raise DomainError("powers must be >= 0")
    return values


def power_sweep(
    mat: MaterialConfig,
    seq: PumpSequenceConfig,
    powers: Iterable[float],
    grid: FrequencyGrid | None = None,
    bleach: BleachModel = BleachModel.EXPONENTIAL,
) -> list[SweepRow]:
    """Rows of (power, peak depth, finesse, η, η_opt, F_opt) for each pump power."""
    rows = [sweep_row(mat, seq, p, grid, bleach) for p in check_powers(powers)]
    logger.info("Power sweep finished: %d points", len(rows))
    return rows
