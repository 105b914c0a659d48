"""Comb spectra, Fourier-series analysis and causal susceptibility.

All spectra are dimensionless optical depths (the product k·L·Im χ), so
the intensity transmission of a spectrum ``d`` is ``exp(-d)``.

Fourier coefficients follow the convention

    d(ν) = b_0 + Σ_{p≥1} [ b_p·exp(-2πipνT) + c.c. ],

i.e. ``b_p = <d(ν)·exp(+2πipνT)>`` averaged over whole periods, which keeps
the echo of order p at the delay pT in the propagation module.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import hilbert

from afcmemory.errors import DomainError, FitError, ResolutionError
from afcmemory.models import (
    CombDescriptor,
    CombShape,
    ComplexSpectrum,
    FourierCoefficientSet,
    FrequencyGrid,
    OpticalDepthSpectrum,
)

logger = logging.getLogger(__name__)

# Relative slack when deciding whether a span is a whole number of periods.
_PERIOD_TOL = 1e-6
MIN_CONTRAST = 0.05
SAMPLES_PER_PEAK_WIDTH = 8


# ---------------------------------------------------------------------------
# Finesse / width conversions
# ---------------------------------------------------------------------------


def hwhm_from_finesse(finesse: float, period: float) -> float:
    """Peak HWHM in Hz for finesse F = π/(Γ_angular·T).

    With Γ_angular = 2π·Γ_Hz and T = 1/period this gives Γ_Hz = period/(2F).
    """
    return period / (2.0 * finesse)


def finesse_from_hwhm(hwhm: float, period: float) -> float:
    """Inverse of :func:`hwhm_from_finesse`."""
    return period / (2.0 * hwhm)


# ---------------------------------------------------------------------------
# Comb synthesis
# ---------------------------------------------------------------------------


def periodic_lorentzian(
    nu: np.ndarray,
    peak_depth: float,
    finesse: float,
    period: float,
    center: float = 0.0,
) -> np.ndarray:
    """Closed-form sum of Lorentzian peaks spaced by ``period``.

    Normalized so that the maximum (at ``center + n·period``) is ``peak_depth``.
    """
    x = math.pi / finesse
    phase = 2.0 * np.pi * (np.asarray(nu) - center) / period
    # sinh/cosh overflow guard for very low finesse
    if x > 50.0:
        return np.full_like(phase, peak_depth, dtype=float)
    return peak_depth * math.tanh(0.5 * x) * math.sinh(x) / (math.cosh(x) - np.cos(phase))


def _periodic_gaussian(
    nu: np.ndarray, peak_depth: float, finesse: float, period: float, center: float
) -> np.ndarray:
    sigma = hwhm_from_finesse(finesse, period) / math.sqrt(2.0 * math.log(2.0))
    images = int(math.ceil(8.0 * sigma / period)) + 1
    offsets = np.arange(-images, images + 1) * period
    rel = (np.asarray(nu) - center) % period
    rel = np.where(rel > 0.5 * period, rel - period, rel)
    total = np.exp(-0.5 * ((rel[:, None] - offsets[None, :]) / sigma) ** 2).sum(axis=1)
    norm = np.exp(-0.5 * (offsets / sigma) ** 2).sum()
    return peak_depth * total / norm


def synth_comb(desc: CombDescriptor, grid: FrequencyGrid) -> OpticalDepthSpectrum:
    """Synthesize the optical depth of a parametric comb on ``grid``.

    Inside ``desc.bandwidth`` around ``desc.center`` the depth is the ideal
    periodized comb plus the background; outside it is the background alone.

    A bandwidth below one period is rejected when the descriptor is built.

    :raises ResolutionError: If the grid spans fewer than 3 periods or does
        not resolve the peaks.
    """
    if grid.span < 3 * desc.period * (1 - _PERIOD_TOL):
        raise ResolutionError(
            f"grid spans {grid.span / desc.period:.2f} periods, at least 3 required"
        )
    if desc.shape in (CombShape.LORENTZIAN, CombShape.GAUSSIAN):
        max_step = desc.period / (SAMPLES_PER_PEAK_WIDTH * desc.finesse)
    elif desc.shape is CombShape.COSINE:
        max_step = desc.period / SAMPLES_PER_PEAK_WIDTH
    else:
        max_step = math.inf
    if grid.step > max_step * (1 + _PERIOD_TOL):
        raise ResolutionError(
            f"grid step {grid.step:.4g} Hz exceeds {max_step:.4g} Hz needed to resolve "
            f"{desc.shape.value} peaks"
        )

    nu = grid.frequencies
    if desc.shape is CombShape.LORENTZIAN:
        comb = periodic_lorentzian(nu, desc.peak_depth, desc.finesse, desc.period, desc.center)
    elif desc.shape is CombShape.GAUSSIAN:
        comb = _periodic_gaussian(nu, desc.peak_depth, desc.finesse, desc.period, desc.center)
    elif desc.shape is CombShape.COSINE:
        comb = desc.peak_depth * 0.5 * (1.0 + np.cos(2.0 * np.pi * (nu - desc.center) / desc.period))
    else:
        comb = np.full(grid.count, desc.peak_depth)

    half_band = 0.5 * desc.bandwidth * (1 + _PERIOD_TOL)
    in_band = np.abs(nu - desc.center) <= half_band
    depth = desc.background + np.where(in_band, comb, 0.0)
    logger.debug(
        "Synthesized %s comb: d=%.4g F=%.4g period=%.4g Hz, %d/%d samples in band",
        desc.shape.value,
        desc.peak_depth,
        desc.finesse,
        desc.period,
        int(in_band.sum()),
        grid.count,
    )
    return OpticalDepthSpectrum(
        grid=grid,
        depth=np.clip(depth, 0.0, None),
        metadata={"source": "synth", "shape": desc.shape.value},
    )


def synth_single_lorentzian(
    depth: float, hwhm: float, grid: FrequencyGrid, center: float = 0.0
) -> OpticalDepthSpectrum:
    """Isolated Lorentzian absorption line of peak depth ``depth``."""
    delta = grid.frequencies - center
    return OpticalDepthSpectrum(
        grid=grid,
        depth=depth * hwhm**2 / (delta**2 + hwhm**2),
        metadata={"source": "synth", "shape": "single_lorentzian"},
    )


def spectrum_from_samples(
    frequencies: np.ndarray, depth: np.ndarray, **metadata: object
) -> OpticalDepthSpectrum:
    """Build a spectrum from sampled (frequency, depth) pairs.

    :raises DomainError: If the frequencies are not uniformly spaced.
    """
    nu = np.asarray(frequencies, dtype=float)
    if nu.size < 2:
        raise DomainError("a spectrum needs at least 2 samples")
    steps = np.diff(nu)
    step = float((nu[-1] - nu[0]) / (nu.size - 1))
    if step <= 0 or np.any(steps <= 0):
        raise DomainError("frequencies must be strictly increasing")
    if np.max(np.abs(steps - step)) > 1e-6 * step:
        raise DomainError("frequency grid is not uniform")
    grid = FrequencyGrid(start=float(nu[0]), step=step, count=nu.size)
    return OpticalDepthSpectrum(grid=grid, depth=depth, metadata=dict(metadata))


# ---------------------------------------------------------------------------
# Fourier analysis
# ---------------------------------------------------------------------------


def analysis_window(
    s: OpticalDepthSpectrum, period: float, periods: int | None = None
) -> tuple[slice, dict[str, object]]:
    """Select the centered run of samples spanning a whole number of periods.

    :param periods: Number of central periods to keep; None keeps as many
        whole periods as the spectrum holds.
    :return: Tuple of (sample slice, window metadata).
    :raises DomainError: If the spectrum spans less than one period.
    """
    available = s.grid.span / period
    whole = int(math.floor(available + _PERIOD_TOL))
    if whole < 1:
        raise DomainError(
            f"analysis window spans {available:.3f} periods, at least 1 required"
        )
    if periods is not None:
        if periods < 1:
            raise DomainError("periods must be >= 1")
        whole = min(whole, periods)
    samples = int(round(whole * period / s.grid.step))
    samples = min(max(samples, 1), s.grid.count)
    first = (s.grid.count - samples) // 2
    trimmed = 1.0 - samples / s.grid.count
    if trimmed > 0:
        logger.info(
            "Fourier window trimmed to %d whole periods (%.2f%% of samples dropped)",
            whole,
            100.0 * trimmed,
        )
    meta = {
        "window": "full" if periods is None else "central",
        "periods": whole,
        "samples": samples,
        "trimmedFraction": trimmed,
    }
    return slice(first, first + samples), meta


def fourier_coefficients(
    s: OpticalDepthSpectrum,
    period: float,
    order: int,
    periods: int | None = None,
) -> FourierCoefficientSet:
    """Project the optical depth onto exp(-2πipν/period), p = 0..order.

    :param s: Optical-depth spectrum.
    :param period: Comb period 1/T (Hz).
    :param order: Highest harmonic P (>= 1).
    :param periods: Optional number of central periods to analyze.
    :raises DomainError: If P < 1 or the window is shorter than one period.
    """
    if order < 1:
        raise DomainError("order P must be >= 1")
    if period <= 0:
        raise DomainError("period must be > 0")
    window, meta = analysis_window(s, period, periods)
    nu = s.grid.frequencies[window]
    d = s.depth[window]
    p = np.arange(order + 1)
    basis = np.exp(2j * np.pi * np.outer(p, nu) / period)
    b = basis @ d / d.size
    b[0] = b[0].real
    return FourierCoefficientSet(period=period, b=b, metadata=meta)


def reconstruct_spectrum(coeffs: FourierCoefficientSet, grid: FrequencyGrid) -> np.ndarray:
    """Evaluate the truncated Fourier series on ``grid``."""
    nu = grid.frequencies
    p = np.arange(1, coeffs.order + 1)
    harmonics = np.exp(-2j * np.pi * np.outer(nu, p) / coeffs.period) @ coeffs.b[1:]
    return coeffs.mean_depth + 2.0 * harmonics.real


# ---------------------------------------------------------------------------
# Causal susceptibility
# ---------------------------------------------------------------------------


def causal_susceptibility(s: OpticalDepthSpectrum) -> ComplexSpectrum:
    """Complex optical depth whose imaginary part is ``s.depth``.

    The real part is the discrete Hilbert partner of the depth, so the
    one-sided time response contains no negative-time component. For a
    spectrum holding whole periods this reproduces c_p·kL = 2i·b_p.
    """
    analytic = hilbert(s.depth)
    values = analytic.imag + 1j * s.depth
    return ComplexSpectrum(grid=s.grid, values=values, metadata=dict(s.metadata))


def causality_leakage(cs: ComplexSpectrum) -> float:
    """Fraction of the response energy at negative times.

    The response of ``-i·D(ν)/2`` is taken on the DFT conjugate axis; index
    n > N/2 maps to negative times.
    """
    response = np.fft.ifft(-1j * cs.values)
    n = response.size
    negative = response[n // 2 + 1 :]
    total = float(np.sum(np.abs(response) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(negative) ** 2)) / total


# ---------------------------------------------------------------------------
# Lorentzian comb fit
# ---------------------------------------------------------------------------


def _lorentzian_comb_model(period: float):
    def model(nu: np.ndarray, depth: float, finesse: float, background: float, center: float) -> np.ndarray:
        return background + periodic_lorentzian(nu, depth, finesse, period, center)

    return model


def fit_lorentzian_comb(
    s: OpticalDepthSpectrum, period: float
) -> tuple[CombDescriptor, float]:
    """Least-squares fit of a periodized Lorentzian comb.

    :return: Tuple of (fitted descriptor, RMS residual / fitted peak depth).
    :raises FitError: If the spectrum holds fewer than 3 periods, shows no
        periodicity (|b_1|/b_0 < 0.05) or the fit does not converge.
    """
    if s.grid.span < 3 * period * (1 - _PERIOD_TOL):
        raise FitError("spectrum must contain at least 3 comb periods")
    coeffs = fourier_coefficients(s, period, 1)
    b0 = coeffs.mean_depth
    b1 = complex(coeffs.b[1])
    ratio = abs(b1) / b0 if b0 > 0 else 0.0
    if ratio < MIN_CONTRAST:
        raise FitError(f"no detectable periodicity (|b1|/b0 = {ratio:.3g})")

    window, _ = analysis_window(s, period)
    nu = s.grid.frequencies[window]
    d = s.depth[window]
    center0 = (np.angle(b1) * period / (2.0 * np.pi)) % period
    center0 = center0 - period * round((center0 - s.grid.center) / period)
    finesse0 = max(-math.pi / math.log(min(ratio, 0.999)), 0.5)
    background0 = float(np.min(d))
    depth0 = max(float(np.max(d)) - background0, 1e-6)

    try:
        popt, _ = curve_fit(
            _lorentzian_comb_model(period),
            nu,
            d,
            p0=[depth0, finesse0, background0, center0],
            bounds=(
                [0.0, 0.1, 0.0, center0 - 0.5 * period],
                [np.inf, 1e4, np.inf, center0 + 0.5 * period],
            ),
            x_scale=[max(depth0, 1e-3), finesse0, max(depth0, 1e-3), period / 10.0],
            maxfev=20000,
        )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"Lorentzian comb fit failed: {exc}") from exc

    depth, finesse, background, center = (float(x) for x in popt)
    misfit = _lorentzian_comb_model(period)(nu, *popt) - d
    residual = float(np.sqrt(np.mean(misfit**2))) / max(depth, 1e-12)
    logger.debug(
        "Lorentzian comb fit: d=%.4g F=%.4g background=%.4g residual=%.3g",
        depth,
        finesse,
        background,
        residual,
    )
    descriptor = CombDescriptor(
        shape=CombShape.LORENTZIAN,
        peak_depth=depth,
        finesse=finesse,
        period=period,
        bandwidth=max(nu.size * s.grid.step, period),
        background=background,
        center=center,
    )
    return descriptor, residual
