"""Tests for afcmemory.preparation."""

from __future__ import annotations

import math

import numpy as np
import pytest

from afcmemory.efficiency import optimal_efficiency, optimal_finesse
from afcmemory.errors import DomainError, ResolutionError
from afcmemory.models import FrequencyGrid, MaterialConfig, PumpSequenceConfig
from afcmemory.preparation import (
    DEFAULT_SWEEP,
    BleachModel,
    SweepRow,
    anti_hole_gain,
    anti_hole_pattern,
    burn_comb,
    check_powers,
    default_grid,
    hole_pattern,
    population,
    power_broadened_width,
    power_sweep,
    pulse_envelope,
    pump_spectrum,
    sweep_row,
    transform_limited_width,
)
from tests.conftest import PERIOD, STORAGE_TIME

MATCHED = MaterialConfig(delta_e=2.0 / STORAGE_TIME)
SEQUENCE = PumpSequenceConfig(pair_delay=STORAGE_TIME)


@pytest.fixture(scope="module")
def default_sweep() -> list[SweepRow]:
    return power_sweep(MATCHED, SEQUENCE, DEFAULT_SWEEP)


class TestPumpSpectrum:
    def test_flat_top_envelope(self):
        seq = PumpSequenceConfig(chirp_bandwidth=6.0e6)
        values = pulse_envelope(seq, np.array([0.0, 1.0e6, 3.0e6, 5.0e6]))
        assert values[0] == pytest.approx(1.0)
        assert values[1] == pytest.approx(1.0, abs=1e-6)
        assert values[2] == pytest.approx(0.5)
        assert values[3] < 1e-6

    def test_transform_limited_envelope(self):
        seq = PumpSequenceConfig(chirp_bandwidth=0.0)
        width = transform_limited_width(seq)
        assert width == pytest.approx(2 * math.log(2) / (math.pi * 300e-9))
        assert pulse_envelope(seq, np.array([0.5 * width]))[0] == pytest.approx(0.5)

    def test_fringes(self):
        seq = SEQUENCE.model_copy(update={"power": 2.0})
        grid = default_grid(seq)
        density = pump_spectrum(seq, grid)
        nu = grid.frequencies
        assert density[np.argmin(np.abs(nu))] == pytest.approx(8.0)
        assert density[np.argmin(np.abs(nu - 0.5 * PERIOD))] == pytest.approx(0.0, abs=1e-9)

    def test_coarse_grid(self):
        grid = FrequencyGrid.centered(PERIOD, 3, 8)
        with pytest.raises(ResolutionError, match="samples per fringe"):
            pump_spectrum(SEQUENCE, grid)


class TestMaterialResponse:
    def test_power_broadening(self):
        mat = MaterialConfig()
        assert power_broadened_width(0.0, mat) == pytest.approx(40.0e3)
        assert power_broadened_width(3.0, mat) == pytest.approx(80.0e3)

    def test_negative_power(self):
        with pytest.raises(DomainError):
            power_broadened_width(-1.0, MaterialConfig())

    def test_anti_hole_gain(self):
        assert anti_hole_gain(MaterialConfig()) == pytest.approx(0.02 * math.exp(-8e-4 / 7))
        assert anti_hole_gain(MaterialConfig(branching_ratio=0.1)) == pytest.approx(
            0.1 * math.exp(-8e-4 / 7)
        )
        slow = MaterialConfig(zeeman_lifetime=1e-3, excited_lifetime=1e-3)
        assert anti_hole_gain(slow) == pytest.approx(0.02 * math.exp(-1.0))

    def test_hole_pattern_weights(self):
        mat = MaterialConfig(branching_ratio=0.1)
        pattern = dict(hole_pattern(mat))
        assert pattern[0.0] == pytest.approx(0.82)
        assert pattern[mat.delta_e] == pytest.approx(0.09)
        assert pattern[-mat.delta_e] == pytest.approx(0.09)
        assert sum(pattern.values()) == pytest.approx(1.0)

    def test_anti_hole_pattern_offsets(self):
        mat = MaterialConfig(branching_ratio=0.1)
        pattern = anti_hole_pattern(mat)
        g, e = mat.delta_g, mat.delta_e
        offsets = sorted(offset for offset, _ in pattern)
        assert offsets == pytest.approx(sorted([g, -g, g + e, g - e, -g - e, -g + e]))
        weights = dict(pattern)
        assert weights[g] == pytest.approx(0.41)
        assert weights[g - e] == pytest.approx(0.045)
        assert sum(w for _, w in pattern) == pytest.approx(1.0)

    def test_population_bounded(self):
        seq = SEQUENCE.model_copy(update={"power": 1.0})
        n = population(MATCHED, seq, default_grid(seq))
        assert np.all(n > 0.0)
        assert np.all(n <= 1.0)

    def test_population_follows_fringes(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        grid = default_grid(seq)
        nu = grid.frequencies
        n = population(MATCHED, seq, grid)
        at_maximum = n[np.argmin(np.abs(nu))]
        at_minimum = n[np.argmin(np.abs(nu - 0.5 * PERIOD))]
        assert at_maximum < at_minimum < 1.0

    def test_steady_state_bleaches_less_deeply(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        grid = default_grid(seq)
        fast = population(MATCHED, seq, grid, BleachModel.EXPONENTIAL)
        balanced = population(MATCHED, seq, grid, BleachModel.STEADY_STATE)
        assert float(np.min(balanced)) > float(np.min(fast))
        assert np.all(balanced <= 1.0)


class TestBurnComb:
    def test_zero_power_is_unstructured(self):
        seq = SEQUENCE.model_copy(update={"power": 0.0})
        comb = burn_comb(MATCHED, seq, default_grid(seq))
        np.testing.assert_array_equal(comb.spectrum.depth, 5.0)
        assert comb.fitted is None
        assert comb.finesse is None
        assert comb.peak_depth == 5.0

    def test_depth_bounded_by_anti_hole_ceiling(self):
        seq = SEQUENCE.model_copy(update={"power": 3.0})
        comb = burn_comb(MATCHED, seq, default_grid(seq))
        assert float(np.max(comb.spectrum.depth)) <= 5.0 * (1 + anti_hole_gain(MATCHED))
        assert comb.peak_depth < 5.0

    def test_comb_period(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        comb = burn_comb(MATCHED, seq, default_grid(seq))
        assert comb.fitted is not None
        assert comb.fitted.period == pytest.approx(PERIOD)
        assert abs(comb.coefficients.b[1]) > 0.1 * comb.coefficients.mean_depth

    def test_exponential_bleach(self):
        minima = []
        for power in (0.0, 0.5, 2.0):
            seq = SEQUENCE.model_copy(update={"power": power})
            comb = burn_comb(MATCHED, seq, default_grid(seq), BleachModel.EXPONENTIAL)
            minima.append(float(np.min(comb.spectrum.depth)))
        assert minima[0] == 5.0
        assert minima[0] > minima[1] > minima[2]

    def test_steady_state_comb(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        comb = burn_comb(MATCHED, seq, default_grid(seq), BleachModel.STEADY_STATE)
        assert comb.fitted is not None
        assert comb.spectrum.metadata["bleach"] == "steady_state"
        assert 0.0 < comb.peak_depth < 5.0

    def test_teeth_take_hole_width(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        comb = burn_comb(MATCHED, seq, default_grid(seq))
        hwhm = power_broadened_width(0.8, MATCHED)
        assert comb.finesse == pytest.approx(PERIOD / (2 * hwhm), rel=0.05)

    def test_anti_holes_at_ground_splitting(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8, "chirp_bandwidth": 2.0e6})
        grid = FrequencyGrid.centered(PERIOD, 24, 16)
        comb = burn_comb(MATCHED, seq, grid)
        nu = grid.frequencies
        top = int(np.argmax(comb.spectrum.depth))
        assert comb.spectrum.depth[top] > 5.01
        assert comb.spectrum.depth[top] <= 5.0 * (1 + anti_hole_gain(MATCHED))
        assert abs(abs(nu[top]) - MATCHED.delta_g) < 1.5e6

    def test_branching_ratio_changes_spectrum(self):
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        grid = default_grid(seq)
        weak = MaterialConfig(delta_e=1.37 / STORAGE_TIME, branching_ratio=0.02)
        strong = weak.model_copy(update={"branching_ratio": 0.3})
        a = burn_comb(weak, seq, grid).spectrum.depth
        b = burn_comb(strong, seq, grid).spectrum.depth
        assert float(np.max(np.abs(a - b))) > 1e-3


class TestPowerSweep:
    def test_peak_depth_decreases(self, default_sweep):
        depths = [row.peak_depth for row in default_sweep]
        assert all(b < a for a, b in zip(depths, depths[1:]))
        assert depths[0] <= 5.0

    def test_finesse_decreases_with_power(self, default_sweep):
        finesse = [row.finesse for row in default_sweep]
        assert all(f is not None for f in finesse)
        assert all(b < a for a, b in zip(finesse, finesse[1:]))

    def test_finesse_follows_hole_width(self, default_sweep):
        for row in default_sweep:
            hwhm = power_broadened_width(row.power, MATCHED)
            assert row.finesse == pytest.approx(PERIOD / (2 * hwhm), rel=0.05)

    def test_f_opt_column(self, default_sweep):
        for row in default_sweep:
            assert row.f_opt == pytest.approx(optimal_finesse(row.peak_depth))
        assert [row.f_opt for row in default_sweep] == sorted(
            (row.f_opt for row in default_sweep), reverse=True
        )

    def test_single_interior_efficiency_maximum(self, default_sweep):
        by_depth = sorted(default_sweep, key=lambda row: row.peak_depth)
        eta = [row.eta_fourier for row in by_depth]
        best = int(np.argmax(eta))
        assert 0 < best < len(eta) - 1
        assert all(b > a for a, b in zip(eta[: best + 1], eta[1 : best + 1]))
        assert all(b < a for a, b in zip(eta[best:], eta[best + 1 :]))

    def test_low_depth_close_to_optimum(self, default_sweep):
        shallow = [row for row in default_sweep if row.peak_depth <= 3.0]
        assert shallow
        for row in shallow:
            assert 0.75 * row.eta_opt <= row.eta_fourier <= 1.25 * row.eta_opt

    def test_breakdown_at_highest_depth(self, default_sweep):
        deepest = max(default_sweep, key=lambda row: row.peak_depth)
        assert deepest.eta_fourier < 0.5 * deepest.eta_opt

    def test_eta_opt_column(self, default_sweep):
        for row in default_sweep:
            assert row.eta_opt == pytest.approx(optimal_efficiency(row.peak_depth).eta)

    def test_empty(self):
        assert power_sweep(MATCHED, SEQUENCE, []) == []

    def test_zero_power_row(self):
        row = sweep_row(MATCHED, SEQUENCE, 0.0)
        assert row.peak_depth == 5.0
        assert row.finesse is None
        assert row.eta_fourier == pytest.approx(0.0, abs=1e-20)

    def test_dephasing(self):
        plain = sweep_row(MATCHED, SEQUENCE, 0.8)
        mat = MATCHED.model_copy(update={"apply_dephasing": True})
        decayed = sweep_row(mat, SEQUENCE, 0.8)
        assert decayed.eta_fourier == pytest.approx(plain.eta_fourier * math.exp(-0.1))


class TestExcitedSplitting:
    @staticmethod
    def contrast(mat: MaterialConfig) -> float:
        seq = SEQUENCE.model_copy(update={"power": 0.8})
        coeffs = burn_comb(mat, seq, default_grid(seq)).coefficients
        return abs(coeffs.b[1]) / coeffs.mean_depth

    def test_matched_splitting_beats_mismatched(self):
        mismatched = MaterialConfig(delta_e=1.37 / STORAGE_TIME)
        assert self.contrast(MATCHED) > self.contrast(mismatched)

    def test_scan_peaks_at_two_over_t(self):
        ratios = [1.6, 1.8, 2.0, 2.2, 2.4]
        contrast = [self.contrast(MaterialConfig(delta_e=r / STORAGE_TIME)) for r in ratios]
        assert ratios[int(np.argmax(contrast))] == 2.0


class TestCheckPowers:
    def test_decreasing(self):
        with pytest.raises(DomainError, match="nondecreasing"):
            check_powers([1.0, 0.5])

    def test_negative(self):
        with pytest.raises(DomainError, match=">= 0"):
            check_powers([-0.1])

    def test_accepts_repeats(self):
        assert check_powers([0.1, 0.1, 2]) == [0.1, 0.1, 2.0]
