"""Shared fixtures for afcmemory tests."""

from __future__ import annotations

import pytest

from afcmemory.models import (
    CombDescriptor,
    CombShape,
    DetectionConfig,
    FrequencyGrid,
    MaterialConfig,
    PumpSequenceConfig,
)

STORAGE_TIME = 1.5e-6
PERIOD = 1.0 / STORAGE_TIME


@pytest.fixture()
def period() -> float:
    return PERIOD


@pytest.fixture()
def comb_grid() -> FrequencyGrid:
    """20 periods at 64 samples per period around 0 Hz."""
    return FrequencyGrid.centered(PERIOD, 20, 64)


@pytest.fixture()
def lorentzian_desc() -> CombDescriptor:
    return CombDescriptor(
        shape=CombShape.LORENTZIAN,
        peak_depth=2.0,
        finesse=5.0,
        period=PERIOD,
        bandwidth=20 * PERIOD,
    )


@pytest.fixture()
def matched_material() -> MaterialConfig:
    """Default crystal with the excited splitting at 2/T."""
    return MaterialConfig(delta_e=2.0 / STORAGE_TIME)


@pytest.fixture()
def pump_sequence() -> PumpSequenceConfig:
    return PumpSequenceConfig(pair_delay=STORAGE_TIME)


@pytest.fixture()
def snr_detection() -> DetectionConfig:
    """Echo gate mean 88 counts over an off-gate background of 8 counts.

    Dark counts give 0.31 of the background; pump leakage gives the rest.
    """
    gates = 16744
    return DetectionConfig(
        mean_photon_number=0.5,
        afc_efficiency=0.09,
        collection_efficiency=0.177,
        quantum_efficiency=0.6,
        dark_rate=61.7,
        leak_rate=8.0 / (gates * 300e-9) - 61.7,
        gate_width=300e-9,
        pulses_per_second=3039.0,
        accumulation_time=5.51,
        storage_time=STORAGE_TIME,
    )
