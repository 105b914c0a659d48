"""Data models for AFC memory simulation.

This module defines Pydantic models for representing:
- Frequency grids and optical-depth / complex spectra
- Comb descriptors and Fourier coefficient sets
- Efficiency results, pulses, time traces and echo reports
- Material, pump-sequence and detection configuration
- Count histograms and run manifests
"""

from __future__ import annotations

import math
from datetime import datetime, timezone
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic.alias_generators import to_camel

# Slack for comparisons that follow from floating-point sums.
_TOL = 1e-9
FORWARD_LIMIT = 4.0 * math.exp(-2.0)


def _readonly(values: Any, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


class _Frozen(BaseModel):
    """Immutable value object; numpy arrays are stored read-only."""

    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        alias_generator=to_camel,
        populate_by_name=True,
    )


class _Document(_Frozen):
    """Configuration document read from JSON: unknown fields are rejected."""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        alias_generator=to_camel,
        populate_by_name=True,
    )


# ---------------------------------------------------------------------------
# Spectral types
# ---------------------------------------------------------------------------


class FrequencyGrid(_Frozen):
    """Uniform frequency axis ν_i = start + i·step (Hz)."""

    start: float = Field(..., description="First grid frequency (Hz)")
    step: float = Field(..., gt=0, description="Grid spacing (Hz)")
    count: int = Field(..., ge=2, description="Number of grid points")

    @classmethod
    def centered(
        cls,
        period: float,
        periods: int,
        samples_per_period: int,
        center: float = 0.0,
    ) -> FrequencyGrid:
        """Grid covering exactly ``periods`` comb periods around ``center``."""
        step = period / samples_per_period
        count = periods * samples_per_period
        return cls(start=center - 0.5 * count * step, step=step, count=count)

    @property
    def frequencies(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def span(self) -> float:
        """Width of the analysis window W = count·step."""
        return self.count * self.step

    @property
    def center(self) -> float:
        return self.start + 0.5 * (self.count - 1) * self.step


class OpticalDepthSpectrum(_Frozen):
    """Dimensionless optical depth d(ν) sampled on a FrequencyGrid."""

    grid: FrequencyGrid
    depth: np.ndarray
    metadata: dict[str, Any] = Field(default_factory=dict)

    @field_validator("depth", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return _readonly(v, float)

    @model_validator(mode="after")
    def _check(self) -> OpticalDepthSpectrum:
        if self.depth.size != self.grid.count:
            raise ValueError(
                f"depth has {self.depth.size} samples, grid has {self.grid.count}"
            )
        if not np.all(np.isfinite(self.depth)):
            raise ValueError("depth contains non-finite values")
        if np.any(self.depth < 0):
            raise ValueError("optical depth must be >= 0 everywhere")
        return self

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    def scaled(self, factor: float) -> OpticalDepthSpectrum:
        return OpticalDepthSpectrum(
            grid=self.grid, depth=self.depth * factor, metadata=dict(self.metadata)
        )


class ComplexSpectrum(_Frozen):
    """Complex-valued spectrum on a FrequencyGrid.

    Used both for the complex optical depth (real part: dispersion,
    imaginary part: optical depth) and for amplitude transfer functions.
    """

    grid: FrequencyGrid
    values: np.ndarray
    metadata: dict[str, Any] = Field(default_factory=dict)

    @field_validator("values", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return _readonly(v, complex)

    @model_validator(mode="after")
    def _check(self) -> ComplexSpectrum:
        if self.values.size != self.grid.count:
            raise ValueError(
                f"values has {self.values.size} samples, grid has {self.grid.count}"
            )
        return self

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag


class CombShape(str, Enum):
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"
    COSINE = "cosine"
    FLAT = "flat"


class CombDescriptor(_Document):
    """Parametric comb: peak shape, peak depth, finesse, period and band."""

    shape: CombShape = Field(..., description="Peak shape")
    peak_depth: float = Field(..., ge=0, description="Maximum optical depth d")
    finesse: float = Field(default=1.0, gt=0, description="Comb finesse F")
    period: float = Field(..., gt=0, description="Comb period 1/T (Hz)")
    bandwidth: float = Field(..., gt=0, description="Comb bandwidth (Hz)")
    background: float = Field(default=0.0, ge=0, description="Uniform depth")
    center: float = Field(default=0.0, description="Band center (Hz)")

    @model_validator(mode="after")
    def _check(self) -> CombDescriptor:
        if self.bandwidth < self.period:
            raise ValueError(
                f"bandwidth ({self.bandwidth} Hz) must be >= period ({self.period} Hz)"
            )
        return self

    @property
    def storage_time(self) -> float:
        """Echo delay T = 1/period (s)."""
        return 1.0 / self.period


class FourierCoefficientSet(_Frozen):
    """One-sided Fourier coefficients b_p (p = 0..P) of a periodic depth."""

    period: float = Field(..., gt=0)
    b: np.ndarray
    metadata: dict[str, Any] = Field(default_factory=dict)

    @field_validator("b", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return _readonly(v, complex)

    @model_validator(mode="after")
    def _check(self) -> FourierCoefficientSet:
        if self.b.size < 2:
            raise ValueError("at least b_0 and b_1 are required")
        b0 = self.b[0]
        if abs(b0.imag) > _TOL * max(1.0, abs(b0.real)) or b0.real < -_TOL:
            raise ValueError(f"b_0 must be real and >= 0, got {b0}")
        if np.any(np.abs(self.b[1:]) > b0.real * (1 + _TOL) + 1e-12):
            raise ValueError("|b_p| must not exceed b_0 for a nonnegative depth")
        return self

    @property
    def mean_depth(self) -> float:
        return float(self.b[0].real)

    @property
    def order(self) -> int:
        return self.b.size - 1

    def c(self) -> np.ndarray:
        """Susceptibility coefficients c_p·kL under the causal map."""
        c = 2j * self.b
        c[0] = 1j * self.b[0].real
        return c


# ---------------------------------------------------------------------------
# Efficiency
# ---------------------------------------------------------------------------


class EfficiencyMethod(str, Enum):
    FOURIER = "fourier"
    LORENTZIAN_CLOSED_FORM = "lorentzianClosedForm"
    OPTIMAL_CLOSED_FORM = "optimalClosedForm"
    NUMERIC_OPTIMUM = "numericOptimum"


class EfficiencyResult(_Frozen):
    """Forward-retrieval efficiency with the quantities it was derived from.

    ``eta`` is never clamped here: out-of-range values are rejected so that
    convention errors surface immediately.
    """

    eta: float
    mean_depth: float = Field(..., ge=0)
    contrast_ratio: float = Field(default=0.0, ge=0)
    method: EfficiencyMethod
    transparent: bool = Field(default=False, description="b_0 = 0, no absorption")

    @model_validator(mode="after")
    def _check(self) -> EfficiencyResult:
        if not (-1e-12 <= self.eta <= 1.0 + 1e-12):
            raise ValueError(f"efficiency {self.eta} outside [0, 1]")
        if self.method is EfficiencyMethod.NUMERIC_OPTIMUM and self.eta > FORWARD_LIMIT + _TOL:
            raise ValueError(f"efficiency {self.eta} exceeds the forward limit 4e^-2")
        return self


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------


class PropagationConfig(_Document):
    """Scale factor k·L applied to input spectra (1 for optical depths)."""

    scale: float = Field(default=1.0, gt=0)


class PulseShape(str, Enum):
    GAUSSIAN = "gaussian"


class PulseSpec(_Document):
    shape: PulseShape = PulseShape.GAUSSIAN
    fwhm: float = Field(..., gt=0, description="Intensity FWHM (s)")
    center: float = Field(default=0.0, description="Pulse center (s)")
    mean_photon_number: float = Field(default=1.0, ge=0)


class TimeTrace(_Frozen):
    """Intensity samples at t_i = start + i·time_step."""

    time_step: float = Field(..., gt=0)
    start: float = Field(default=0.0, description="Time of the first sample (s)")
    origin: float = Field(default=0.0, description="Input-pulse center (s)")
    samples: np.ndarray
    reference: np.ndarray | None = Field(
        default=None, description="Input-pulse intensity on the same time axis"
    )
    units: str = Field(default="arb")

    @field_validator("samples", mode="before")
    @classmethod
    def _to_array(cls, v: Any) -> np.ndarray:
        return _readonly(v, float)

    @field_validator("reference", mode="before")
    @classmethod
    def _reference(cls, v: Any) -> np.ndarray | None:
        return None if v is None else _readonly(v, float)

    @model_validator(mode="after")
    def _check(self) -> TimeTrace:
        for name, arr in (("samples", self.samples), ("reference", self.reference)):
            if arr is None:
                continue
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"trace {name} contain non-finite values")
            if np.any(arr < 0):
                raise ValueError(f"trace {name} must be >= 0")
        if self.reference is not None and self.reference.size != self.samples.size:
            raise ValueError("reference and samples differ in length")
        return self

    @property
    def times(self) -> np.ndarray:
        return self.start + self.time_step * np.arange(self.samples.size)

    @property
    def energy(self) -> float:
        return float(np.sum(self.samples) * self.time_step)

    @property
    def horizon(self) -> float:
        """Time covered after the origin."""
        return self.start + self.time_step * self.samples.size - self.origin


class EchoReport(_Frozen):
    input_energy: float = Field(..., ge=0)
    transmitted_energy: float = Field(..., ge=0)
    echo1_energy: float = Field(..., ge=0)
    echo2_energy: float = Field(..., ge=0)
    eta_echo1: float = Field(..., ge=0)
    eta_echo2: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _check(self) -> EchoReport:
        out = self.transmitted_energy + self.echo1_energy + self.echo2_energy
        if out > self.input_energy * (1 + 1e-6) + 1e-300:
            raise ValueError("gated output energy exceeds input energy")
        return self


# ---------------------------------------------------------------------------
# Preparation
# ---------------------------------------------------------------------------


class MaterialConfig(_Document):
    """Inhomogeneous line and level structure of the doped crystal."""

    initial_depth: float = Field(default=5.0, gt=0, description="d_0 before pumping")
    delta_g: float = Field(default=6.0e6, gt=0, description="Ground splitting (Hz)")
    delta_e: float = Field(default=1.3e6, gt=0, description="Excited splitting (Hz)")
    branching_ratio: float = Field(default=0.02, gt=0, le=1)
    hole_width0: float = Field(default=40.0e3, gt=0, description="Unsaturated hole HWHM (Hz)")
    saturation_power: float = Field(default=1.0, gt=0)
    zeeman_lifetime: float = Field(default=7.0, gt=0)
    excited_lifetime: float = Field(default=800e-6, gt=0)
    pumping_rate: float = Field(
        default=8.0e-4, gt=0, description="Bleach exponent per pair per unit pump density (kappa)"
    )
    coherence_t2: float = Field(default=30e-6, gt=0)
    apply_dephasing: bool = Field(
        default=False, description="Multiply efficiencies by exp(-2T/T2)"
    )


class PumpSequenceConfig(_Document):
    """Train of weak pulse pairs that burns the comb."""

    pair_delay: float = Field(default=1.5e-6, gt=0, description="T (s)")
    pulse_fwhm: float = Field(default=300e-9, gt=0)
    pair_count: int = Field(default=5000, ge=1)
    dead_time: float = Field(default=100e-6, ge=0)
    wait_time: float = Field(default=50e-3, ge=0)
    power: float = Field(default=1.0, ge=0)
    chirp_bandwidth: float = Field(
        default=6.0e6, ge=0, description="Frequency-scan width of each pump pulse (Hz)"
    )

    @model_validator(mode="after")
    def _check(self) -> PumpSequenceConfig:
        if self.pair_delay <= self.pulse_fwhm:
            raise ValueError("pairDelay must exceed pulseFwhm")
        return self

    @property
    def comb_period(self) -> float:
        return 1.0 / self.pair_delay

    @property
    def duration(self) -> float:
        """Wall-clock length of one preparation cycle (s)."""
        return self.pair_count * (self.pair_delay + self.dead_time) + self.wait_time


class PreparedComb(_Frozen):
    power: float = Field(..., ge=0)
    spectrum: OpticalDepthSpectrum
    fitted: CombDescriptor | None = None
    peak_depth: float = Field(..., ge=0)
    finesse: float | None = None
    coefficients: FourierCoefficientSet


# ---------------------------------------------------------------------------
# Detection
# ---------------------------------------------------------------------------


class GatePosition(str, Enum):
    TRANSMITTED = "transmitted"
    ECHO1 = "echo1"
    ECHO2 = "echo2"
    OFF = "off"


class DetectionConfig(_Document):
    """Single-photon counting chain and accumulation schedule."""

    mean_photon_number: float = Field(default=0.5, ge=0)
    afc_efficiency: float = Field(default=0.09, ge=0, le=1)
    transmitted_fraction: float = Field(default=0.1, ge=0, le=1)
    echo2_fraction: float = Field(default=0.0, ge=0, le=1)
    collection_efficiency: float = Field(default=0.3, ge=0, le=1)
    quantum_efficiency: float = Field(default=0.6, ge=0, le=1)
    dark_rate: float = Field(default=61.7, ge=0, description="counts/s")
    leak_rate: float = Field(default=0.0, ge=0, description="counts/s")
    gate_width: float = Field(default=300e-9, gt=0)
    pulses_per_second: float = Field(default=3039.0, ge=0)
    accumulation_time: float = Field(default=5.51, ge=0)
    storage_time: float = Field(default=1.5e-6, gt=0, description="Echo delay T (s)")
    rng_seed: int = Field(default=0, ge=0)

    @property
    def total_gates(self) -> int:
        return int(math.floor(self.pulses_per_second * self.accumulation_time))


class CountHistogram(_Frozen):
    gate_centers: np.ndarray
    counts: np.ndarray
    total_gates: int = Field(..., ge=0)
    positions: tuple[GatePosition, ...] = ()
    seed: int | None = None

    @field_validator("gate_centers", mode="before")
    @classmethod
    def _centers(cls, v: Any) -> np.ndarray:
        return _readonly(v, float)

    @field_validator("counts", mode="before")
    @classmethod
    def _counts(cls, v: Any) -> np.ndarray:
        return _readonly(v, np.int64)

    @model_validator(mode="after")
    def _check(self) -> CountHistogram:
        if self.counts.size != self.gate_centers.size:
            raise ValueError("counts and gateCenters differ in length")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        if self.positions and len(self.positions) != self.counts.size:
            raise ValueError("positions and counts differ in length")
        return self


class SNRReport(_Frozen):
    snr: float
    signal: float
    background_mean: float
    background_free: bool = False


# ---------------------------------------------------------------------------
# Provenance
# ---------------------------------------------------------------------------


class RunManifest(_Frozen):
    """Provenance record written once per CLI run."""

    tool_version: str
    subcommand: str
    config_digest: str = Field(..., pattern=r"^[0-9a-f]{64}$")
    input_files: list[str] = Field(default_factory=list)
    output_files: list[str] = Field(default_factory=list)
    rng_seed: int | None = None
    created_at: datetime = Field(
        default_factory=lambda: datetime.now(timezone.utc),
        description="Not part of the digest",
    )
