"""Tests for afcmemory.efficiency."""

from __future__ import annotations

import math

import numpy as np
import pytest

from afcmemory.efficiency import (
    dephasing_factor,
    efficiency_curve,
    efficiency_from_coefficients,
    efficiency_lorentzian,
    efficiency_unreduced,
    numeric_optimal_finesse,
    optimal_efficiency,
    optimal_finesse,
    report_efficiency,
    with_dephasing,
)
from afcmemory.errors import DomainError
from afcmemory.models import (
    CombDescriptor,
    CombShape,
    EfficiencyMethod,
    EfficiencyResult,
    FourierCoefficientSet,
    FrequencyGrid,
    OpticalDepthSpectrum,
)
from afcmemory.spectral import fourier_coefficients, synth_comb
from tests.conftest import PERIOD

FORWARD_LIMIT = 4.0 * math.exp(-2.0)


class TestFourierEfficiency:
    def test_reduced_form(self):
        coeffs = FourierCoefficientSet(period=PERIOD, b=[1.0, 0.3 - 0.1j])
        result = efficiency_from_coefficients(coeffs)
        assert result.eta == pytest.approx(0.1 * math.exp(-1.0))
        assert result.method is EfficiencyMethod.FOURIER
        assert result.contrast_ratio == pytest.approx(2 * math.sqrt(0.1))

    def test_unreduced_matches_reduced(self):
        b0, b1 = 1.7, 0.4 + 0.2j
        c0, c1 = 1j * b0, 2j * b1
        assert efficiency_unreduced(c0, c1, b0) == pytest.approx(abs(b1) ** 2 * math.exp(-b0))

    def test_transparent_medium(self):
        result = efficiency_from_coefficients(FourierCoefficientSet(period=PERIOD, b=[0.0, 0.0]))
        assert result.eta == 0.0
        assert result.transparent

    @pytest.mark.parametrize("alpha", [0.5, 1.7, 3.0])
    def test_depth_scaling(self, alpha):
        desc = CombDescriptor(
            shape=CombShape.LORENTZIAN, peak_depth=1.0, finesse=5.0,
            period=PERIOD, bandwidth=20 * PERIOD,
        )
        grid = FrequencyGrid.centered(PERIOD, 20, 64)
        s = synth_comb(desc, grid)
        scaled = OpticalDepthSpectrum(grid=grid, depth=alpha * s.depth)
        base = fourier_coefficients(s, PERIOD, 1)
        coeffs = fourier_coefficients(scaled, PERIOD, 1)
        assert coeffs.mean_depth == pytest.approx(alpha * base.mean_depth, rel=1e-12)
        assert coeffs.b[1] == pytest.approx(alpha * base.b[1], rel=1e-12)
        b0, b1 = base.mean_depth, abs(base.b[1])
        assert efficiency_from_coefficients(coeffs).eta == pytest.approx(
            alpha**2 * b1**2 * math.exp(-alpha * b0), rel=1e-10
        )

    def test_cosine_comb_peak_depth_one(self):
        desc = CombDescriptor(shape=CombShape.COSINE, peak_depth=1.0, period=PERIOD, bandwidth=20 * PERIOD)
        grid = FrequencyGrid.centered(PERIOD, 20, 64)
        result = efficiency_from_coefficients(fourier_coefficients(synth_comb(desc, grid), PERIOD, 4))
        assert result.eta == pytest.approx(0.0625 * math.exp(-0.5), rel=1e-9)
        assert result.eta == pytest.approx(0.0379, abs=1e-4)


class TestLorentzianClosedForm:
    @pytest.mark.parametrize("d", [0.5, 1.0, 2.0, 3.0, 5.0])
    @pytest.mark.parametrize("finesse", [2.0, 3.0, 5.0, 8.0, 12.0, 20.0])
    def test_agrees_with_fourier_pipeline(self, d, finesse):
        samples = max(64, math.ceil(8 * finesse))
        grid = FrequencyGrid.centered(PERIOD, 20, samples)
        desc = CombDescriptor(
            shape=CombShape.LORENTZIAN, peak_depth=d, finesse=finesse,
            period=PERIOD, bandwidth=20 * PERIOD,
        )
        coeffs = fourier_coefficients(synth_comb(desc, grid), PERIOD, 8)
        eta_fourier = efficiency_from_coefficients(coeffs).eta
        eta_closed = efficiency_lorentzian(d, finesse).eta
        assert abs(eta_fourier - eta_closed) / eta_closed < 0.01

    @pytest.mark.parametrize("d", [0.5, 2.0, 6.0])
    def test_single_interior_maximum_in_finesse(self, d):
        finesse = np.linspace(0.5, 60.0, 2000)
        eta = np.array([efficiency_lorentzian(d, f).eta for f in finesse])
        slope = np.sign(np.diff(eta))
        changes = np.flatnonzero(slope[1:] != slope[:-1])
        assert changes.size == 1
        assert slope[0] > 0 > slope[-1]

    def test_zero_depth(self):
        assert efficiency_lorentzian(0.0, 5.0).eta == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            efficiency_lorentzian(-1.0, 5.0)
        with pytest.raises(DomainError):
            efficiency_lorentzian(1.0, 0.0)


class TestOptimum:
    def test_forward_limit(self):
        assert optimal_efficiency(1e6).eta == pytest.approx(FORWARD_LIMIT, abs=1e-4)

    def test_monotone_in_depth(self):
        values = [optimal_efficiency(d).eta for d in np.linspace(0.0, 100.0, 501)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert max(values) < FORWARD_LIMIT

    def test_optimal_finesse(self):
        assert optimal_finesse(0.0) == pytest.approx(math.pi)
        assert optimal_finesse(4.0) == pytest.approx(2 * math.pi)

    def test_closed_form_consistent_with_lorentzian(self):
        # High-finesse limit of the Lorentzian formula at F_opt.
        d = 40.0
        f = optimal_finesse(d)
        high_finesse = (d * math.pi / (2 * f)) ** 2 * math.exp(-d * math.pi / (2 * f) - 2 * math.pi / f)
        assert optimal_efficiency(d).eta == pytest.approx(high_finesse, rel=1e-9)

    @pytest.mark.parametrize("d", [2.0, 3.0, 5.0, 7.5, 10.0])
    def test_numeric_optimum_close_to_closed_form(self, d):
        f_star, eta_star = numeric_optimal_finesse(d)
        assert f_star == pytest.approx(optimal_finesse(d), rel=0.05)
        assert eta_star == pytest.approx(optimal_efficiency(d).eta, rel=0.05)

    @pytest.mark.parametrize("d", [1.0, 2.0, 5.0, 10.0])
    def test_numeric_optimum_never_below_closed_form_choice(self, d):
        _, eta_star = numeric_optimal_finesse(d)
        assert eta_star >= efficiency_lorentzian(d, optimal_finesse(d)).eta - 1e-12

    def test_numeric_optimum_is_maximum(self):
        f_star, eta_star = numeric_optimal_finesse(4.0)
        for f in (0.9 * f_star, 1.1 * f_star):
            assert efficiency_lorentzian(4.0, f).eta <= eta_star

    def test_numeric_optimum_requires_positive_depth(self):
        with pytest.raises(DomainError):
            numeric_optimal_finesse(0.0)


class TestEfficiencyCurve:
    def test_rows(self):
        rows = efficiency_curve([0.0, 1.0, 5.0])
        assert [r.d for r in rows] == [0.0, 1.0, 5.0]
        assert rows[0].eta_star == 0.0
        assert rows[0].f_opt == pytest.approx(math.pi)
        assert rows[2].eta_opt == pytest.approx(4 * math.exp(-2) * 25 / 81)
        assert all(r.eta_star <= FORWARD_LIMIT for r in rows)

    def test_negative_depth(self):
        with pytest.raises(DomainError):
            efficiency_curve([-1.0])


class TestDephasing:
    def test_factor(self):
        assert dephasing_factor(1.5e-6, 30e-6) == pytest.approx(math.exp(-0.1))

    def test_with_dephasing(self):
        result = efficiency_lorentzian(3.0, 5.0)
        decayed = with_dephasing(result, 1.5e-6, 30e-6)
        assert decayed.eta == pytest.approx(result.eta * math.exp(-0.1))
        assert decayed.mean_depth == result.mean_depth


class TestReportEfficiency:
    def test_passthrough(self):
        result = efficiency_lorentzian(2.0, 5.0)
        assert report_efficiency(result) == result.eta

    def test_clamps_rounding_noise(self, caplog):
        result = EfficiencyResult(eta=-1e-13, mean_depth=0.0, method=EfficiencyMethod.FOURIER)
        assert report_efficiency(result) == 0.0
        assert "Clamped" in caplog.text
