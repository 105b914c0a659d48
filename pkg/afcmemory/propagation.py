"""Time-domain propagation of weak pulses through a comb.

The reference propagator applies the exact amplitude transfer function
t(ν) = exp(i·D(ν)/2) of the complex optical depth D = H[d] + i·d to a pulse
spectrum by DFT. Spectra use the numpy ``fft`` sign convention, so a factor
exp(-2πiντ) delays a field by τ and the comb harmonic b_p·exp(-2πipνT)
produces the echo at pT.

:func:`perturbative_amplitudes` integrates the truncated two-component
(a₀, a₁) envelope equations across the medium as an independent check.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import solve_ivp

from afcmemory.errors import DomainError, ResolutionError
from afcmemory.models import (
    ComplexSpectrum,
    EchoReport,
    FourierCoefficientSet,
    PropagationConfig,
    PulseShape,
    PulseSpec,
    TimeTrace,
)

logger = logging.getLogger(__name__)

SAMPLES_PER_FWHM = 8
GUARD_PERIODS = 8
PULSE_BANDWIDTH_FACTOR = 4.0
# Leading part of the window kept before the pulse center, in pulse FWHMs.
LEAD_FWHM = 4.0
HORIZON_PERIODS = 3.0


def transfer_function(
    cs: ComplexSpectrum, config: PropagationConfig | None = None
) -> ComplexSpectrum:
    """Amplitude transmission t(ν) = exp(-d/2 + i·φ), φ = Re D / 2.

    |t(ν)|² equals exp(-d(ν)) exactly.
    """
    scale = (config or PropagationConfig()).scale
    values = np.exp(0.5j * scale * cs.values)
    return ComplexSpectrum(
        grid=cs.grid, values=values, metadata={**cs.metadata, "kind": "transfer"}
    )


def _next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 1).bit_length()


def _gaussian_field(pulse: PulseSpec, times: np.ndarray) -> np.ndarray:
    if pulse.shape is not PulseShape.GAUSSIAN:
        raise DomainError(f"unsupported pulse shape {pulse.shape}")
    return np.exp(-2.0 * math.log(2.0) * ((times - pulse.center) / pulse.fwhm) ** 2)


def _propagate_field(
    pulse: PulseSpec,
    t: ComplexSpectrum,
    horizon: float,
    period: float | None,
) -> tuple[float, float, np.ndarray, np.ndarray]:
    """DFT pipeline shared by :func:`propagate` and :func:`propagate_with_phase`.

    :return: Tuple of (start time, time step, input field, output field).
    """
    grid = t.grid
    if period is not None and horizon < HORIZON_PERIODS / period * (1 - 1e-9):
        raise ResolutionError(
            f"horizon {horizon:.4g} s is shorter than {HORIZON_PERIODS:g} storage times"
        )
    if grid.span < PULSE_BANDWIDTH_FACTOR / pulse.fwhm:
        raise ResolutionError(
            f"spectrum bandwidth {grid.span:.4g} Hz does not resolve a "
            f"{pulse.fwhm:.4g} s pulse (needs {PULSE_BANDWIDTH_FACTOR / pulse.fwhm:.4g} Hz)"
        )
    lead = LEAD_FWHM * pulse.fwhm
    window = 1.0 / grid.step
    if window < lead + horizon:
        raise ResolutionError(
            f"grid step {grid.step:.4g} Hz gives a {window:.4g} s time window, "
            f"{lead + horizon:.4g} s required"
        )

    needed = math.ceil(SAMPLES_PER_FWHM * window / pulse.fwhm)
    if period is not None:
        needed = max(needed, grid.count + 2 * GUARD_PERIODS * math.ceil(period / grid.step))
    n = _next_pow2(max(needed, grid.count))
    dt = window / n
    logger.debug("Propagation DFT: N=%d, dt=%.4g s, window=%.4g s", n, dt, window)

    # Carrier on the grid point nearest the band center; outside the band t = 1.
    carrier = grid.count // 2
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    index = carrier + k
    inside = (index >= 0) & (index < grid.count)
    t_full = np.ones(n, dtype=complex)
    t_full[inside] = t.values[index[inside]]

    n0 = int(round(lead / dt))
    start = pulse.center - n0 * dt
    times = start + dt * np.arange(n)
    field_in = _gaussian_field(pulse, times)
    norm = np.sum(np.abs(field_in) ** 2) * dt
    if norm > 0:
        field_in = field_in * math.sqrt(pulse.mean_photon_number / norm)
    field_out = np.fft.ifft(np.fft.fft(field_in) * t_full)

    keep = min(n, n0 + int(math.ceil(horizon / dt)) + 1)
    return start, dt, field_in[:keep], field_out[:keep]


def propagate(
    pulse: PulseSpec,
    t: ComplexSpectrum,
    horizon: float,
    period: float | None = None,
) -> TimeTrace:
    """Propagate ``pulse`` through the transfer function ``t``.

    :param pulse: Input pulse; its mean photon number sets the trace energy.
    :param t: Amplitude transfer function from :func:`transfer_function`.
    :param horizon: Time after the pulse center to keep (s).
    :param period: Comb period (Hz); when given the horizon must cover 3T.
    :raises ResolutionError: If the bandwidth, horizon or time window is
        insufficient.
    """
    start, dt, field_in, field_out = _propagate_field(pulse, t, horizon, period)
    return TimeTrace(
        time_step=dt,
        start=start,
        origin=pulse.center,
        samples=np.abs(field_out) ** 2,
        reference=np.abs(field_in) ** 2,
        units="photons/s",
    )


def propagate_with_phase(
    pulse: PulseSpec,
    t: ComplexSpectrum,
    horizon: float,
    period: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Debug variant of :func:`propagate` returning (times, complex output field)."""
    start, dt, _, field_out = _propagate_field(pulse, t, horizon, period)
    return start + dt * np.arange(field_out.size), field_out


def _gate_energy(values: np.ndarray, times: np.ndarray, center: float, gate: float, dt: float) -> float:
    mask = np.abs(times - center) <= 0.5 * gate
    return float(np.sum(values[mask]) * dt)


def echo_energies(trace: TimeTrace, storage_time: float, gate: float) -> EchoReport:
    """Integrate the trace in gates centered at origin, origin + T and origin + 2T.

    The input energy is the reference pulse integrated in the origin gate,
    so gated echoes compare against an identically gated input. Traces
    without a reference use their total energy instead.

    :raises DomainError: If the gates overlap (gate >= T/2).
    :raises ResolutionError: If the trace ends before origin + 2T + gate.
    """
    if gate <= 0:
        raise DomainError("gate must be > 0")
    if gate >= 0.5 * storage_time:
        raise DomainError(
            f"gate {gate:.4g} s must be shorter than T/2 = {0.5 * storage_time:.4g} s"
        )
    if trace.horizon < 2.0 * storage_time + gate * (1 - 1e-9):
        raise ResolutionError(
            f"trace horizon {trace.horizon:.4g} s is shorter than 2T + gate"
        )
    times = trace.times
    dt = trace.time_step
    energies = [
        _gate_energy(trace.samples, times, trace.origin + p * storage_time, gate, dt)
        for p in range(3)
    ]
    if trace.reference is not None:
        input_energy = _gate_energy(trace.reference, times, trace.origin, gate, dt)
    else:
        input_energy = trace.energy
    if input_energy > 0:
        eta1, eta2 = energies[1] / input_energy, energies[2] / input_energy
    else:
        eta1 = eta2 = 0.0
    logger.info("Echo efficiencies: first %.4g, second %.4g", eta1, eta2)
    return EchoReport(
        input_energy=input_energy,
        transmitted_energy=energies[0],
        echo1_energy=energies[1],
        echo2_energy=energies[2],
        eta_echo1=eta1,
        eta_echo2=eta2,
    )


def echo_peak_time(trace: TimeTrace, storage_time: float) -> float:
    """Time of the intensity maximum in the half-period around origin + T."""
    times = trace.times
    mask = np.abs(times - trace.origin - storage_time) <= 0.5 * storage_time
    if not mask.any():
        raise ResolutionError("trace does not cover the first echo")
    return float(times[mask][np.argmax(trace.samples[mask])])


def solve_two_component(c0: complex, c1: complex) -> tuple[complex, complex]:
    """Integrate the slowly-varying envelope equations over z ∈ [0, 1].

    da₀/dz = (i/2)·c₀·a₀,  da₁/dz = (i/2)·(c₀·a₁ + c₁·a₀),
    with c_p already multiplied by k·L and a₀(0) = 1, a₁(0) = 0.
    """

    def rhs(_z: float, y: np.ndarray) -> np.ndarray:
        a0, a1 = y
        return np.array([0.5j * c0 * a0, 0.5j * (c0 * a1 + c1 * a0)])

    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        np.array([1.0 + 0j, 0.0 + 0j]),
        method="DOP853",
        rtol=1e-13,
        atol=1e-16,
    )
    if not sol.success:
        raise ArithmeticError(f"envelope integration failed: {sol.message}")
    a0, a1 = sol.y[:, -1]
    return complex(a0), complex(a1)


def perturbative_amplitudes(coeffs: FourierCoefficientSet) -> tuple[complex, complex]:
    """Carrier and first-echo amplitudes from the truncated expansion.

    |a₀|² = exp(-b₀) and |a₁|² = |b₁|²·exp(-b₀); no second echo exists at
    this truncation.
    """
    c = coeffs.c()
    return solve_two_component(complex(c[0]), complex(c[1]))
