"""Tests for afcmemory.models."""

from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from afcmemory.models import (
    CombDescriptor,
    CombShape,
    CountHistogram,
    DetectionConfig,
    EchoReport,
    EfficiencyMethod,
    EfficiencyResult,
    FourierCoefficientSet,
    FrequencyGrid,
    MaterialConfig,
    OpticalDepthSpectrum,
    PumpSequenceConfig,
    RunManifest,
)


class TestFrequencyGrid:
    def test_centered_covers_whole_periods(self):
        grid = FrequencyGrid.centered(1.0e6, 3, 64)
        assert grid.count == 192
        assert grid.span == pytest.approx(3.0e6)
        assert grid.frequencies[0] == pytest.approx(-1.5e6)

    def test_step_must_be_positive(self):
        with pytest.raises(ValidationError, match="step"):
            FrequencyGrid(start=0.0, step=0.0, count=10)

    def test_frozen(self):
        grid = FrequencyGrid(start=0.0, step=1.0, count=4)
        with pytest.raises(ValidationError):
            grid.step = 2.0


class TestOpticalDepthSpectrum:
    def test_rejects_negative_depth(self):
        grid = FrequencyGrid(start=0.0, step=1.0, count=3)
        with pytest.raises(ValidationError, match="optical depth must be >= 0"):
            OpticalDepthSpectrum(grid=grid, depth=[1.0, -0.1, 1.0])

    def test_rejects_length_mismatch(self):
        grid = FrequencyGrid(start=0.0, step=1.0, count=3)
        with pytest.raises(ValidationError, match="samples"):
            OpticalDepthSpectrum(grid=grid, depth=[1.0, 1.0])

    def test_depth_is_read_only(self):
        grid = FrequencyGrid(start=0.0, step=1.0, count=3)
        s = OpticalDepthSpectrum(grid=grid, depth=[1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            s.depth[0] = 5.0

    def test_scaled(self):
        grid = FrequencyGrid(start=0.0, step=1.0, count=2)
        s = OpticalDepthSpectrum(grid=grid, depth=[1.0, 2.0]).scaled(2.0)
        np.testing.assert_allclose(s.depth, [2.0, 4.0])


class TestCombDescriptor:
    def test_bandwidth_below_period_rejected(self):
        with pytest.raises(ValidationError, match="bandwidth"):
            CombDescriptor(
                shape=CombShape.LORENTZIAN, peak_depth=1.0, finesse=5.0,
                period=1.0e6, bandwidth=0.5e6,
            )

    def test_nonpositive_period_names_field(self):
        with pytest.raises(ValidationError, match="period"):
            CombDescriptor(shape="flat", peak_depth=1.0, period=0.0, bandwidth=1.0e6)

    def test_camel_case_aliases(self):
        desc = CombDescriptor.model_validate(
            {"shape": "cosine", "peakDepth": 1.0, "period": 1.0e6, "bandwidth": 3.0e6}
        )
        assert desc.peak_depth == 1.0
        assert desc.storage_time == pytest.approx(1.0e-6)

    def test_unknown_field_rejected(self):
        with pytest.raises(ValidationError):
            CombDescriptor.model_validate(
                {"shape": "flat", "peakDepth": 1.0, "period": 1.0, "bandwidth": 1.0, "depht": 2}
            )


class TestFourierCoefficientSet:
    def test_b0_must_be_nonnegative(self):
        with pytest.raises(ValidationError, match="b_0"):
            FourierCoefficientSet(period=1.0, b=[-1.0, 0.0])

    def test_harmonic_bounded_by_mean(self):
        with pytest.raises(ValidationError, match="exceed b_0"):
            FourierCoefficientSet(period=1.0, b=[1.0, 1.5])

    def test_causal_map(self):
        coeffs = FourierCoefficientSet(period=1.0, b=[2.0, 0.5 + 0.5j])
        c = coeffs.c()
        assert c[0] == pytest.approx(2.0j)
        assert c[1] == pytest.approx(2j * (0.5 + 0.5j))
        assert coeffs.order == 1


class TestEfficiencyResult:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError, match="outside"):
            EfficiencyResult(eta=1.2, mean_depth=1.0, method=EfficiencyMethod.FOURIER)

    def test_numeric_optimum_above_forward_limit_rejected(self):
        with pytest.raises(ValidationError, match="forward limit"):
            EfficiencyResult(
                eta=0.6, mean_depth=1.0, method=EfficiencyMethod.NUMERIC_OPTIMUM
            )


class TestEchoReport:
    def test_output_cannot_exceed_input(self):
        with pytest.raises(ValidationError, match="exceeds input"):
            EchoReport(
                input_energy=1.0, transmitted_energy=0.8, echo1_energy=0.3,
                echo2_energy=0.0, eta_echo1=0.3, eta_echo2=0.0,
            )


class TestPumpSequenceConfig:
    def test_pair_delay_exceeds_pulse(self):
        with pytest.raises(ValidationError, match="pairDelay"):
            PumpSequenceConfig(pair_delay=200e-9, pulse_fwhm=300e-9)

    def test_duration(self):
        seq = PumpSequenceConfig()
        assert seq.duration == pytest.approx(5000 * (1.5e-6 + 100e-6) + 50e-3)
        assert seq.comb_period == pytest.approx(1.0 / 1.5e-6)


class TestMaterialConfig:
    def test_defaults(self):
        mat = MaterialConfig()
        assert mat.initial_depth == 5.0
        assert mat.delta_g == 6.0e6
        assert mat.delta_e == 1.3e6

    def test_branching_ratio_bounded(self):
        with pytest.raises(ValidationError):
            MaterialConfig(branching_ratio=1.5)


class TestDetectionConfig:
    def test_total_gates_floor(self):
        assert DetectionConfig().total_gates == 16744
        assert DetectionConfig(accumulation_time=0.0).total_gates == 0

    def test_efficiency_fields_bounded(self):
        with pytest.raises(ValidationError, match="quantumEfficiency|quantum_efficiency"):
            DetectionConfig(quantum_efficiency=1.5)


class TestCountHistogram:
    def test_counts_nonnegative(self):
        with pytest.raises(ValidationError, match="nonnegative"):
            CountHistogram(gate_centers=[0.0, 1.0], counts=[1, -1], total_gates=1)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="differ in length"):
            CountHistogram(gate_centers=[0.0], counts=[1, 2], total_gates=1)


class TestRunManifest:
    def test_digest_pattern(self):
        with pytest.raises(ValidationError):
            RunManifest(tool_version="0.1.0", subcommand="synth", config_digest="abc")

    def test_camel_case_dump(self):
        manifest = RunManifest(
            tool_version="0.1.0", subcommand="counts", config_digest="0" * 64, rng_seed=3
        )
        data = manifest.model_dump(mode="json", by_alias=True)
        assert data["toolVersion"] == "0.1.0"
        assert data["rngSeed"] == 3
        assert "createdAt" in data
        assert not math.isnan(manifest.created_at.timestamp())
