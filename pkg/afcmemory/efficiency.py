"""Forward-retrieval storage efficiency of an atomic frequency comb.

Three levels of description are provided:

- the general Fourier-coefficient formula, valid for any periodic comb,
  η = ¼·|c₁|²/Im(c₀)²·d̃²·exp(-d̃), evaluated through the causal map
  c_p·kL = 2i·b_p, which reduces it to η = |b₁|²·exp(-b₀);
- the closed form for a comb of Lorentzian peaks of maximum depth d and
  finesse F;
- the high-finesse optimum F_opt = π(1 + d/4), η_opt = 4e⁻²·d²/(4 + d)²,
  plus the exact numeric optimum it approximates.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable

from pydantic import BaseModel, Field

from afcmemory.errors import DomainError
from afcmemory.models import (
    EfficiencyMethod,
    FORWARD_LIMIT,
    EfficiencyResult,
    FourierCoefficientSet,
)
from afcmemory.utils.search import bracketed_max

logger = logging.getLogger(__name__)

FINESSE_SEARCH_RANGE = (math.pi / 4.0, 100.0 * math.pi)
FINESSE_REL_TOL = 1e-8


class EfficiencyCurveRow(BaseModel):
    """One row of the optimum-efficiency table."""

    d: float = Field(..., ge=0)
    f_opt: float
    eta_opt: float
    f_star: float
    eta_star: float


def efficiency_unreduced(c0: complex, c1: complex, d_tilde: float) -> float:
    """Fourier-coefficient efficiency in unreduced form, ¼·|c₁|²/Im(c₀)²·d̃²·exp(-d̃)."""
    return 0.25 * abs(c1) ** 2 / c0.imag**2 * d_tilde**2 * math.exp(-d_tilde)


def efficiency_from_coefficients(coeffs: FourierCoefficientSet) -> EfficiencyResult:
    """Efficiency of an arbitrary periodic comb from its Fourier coefficients."""
    b0 = coeffs.mean_depth
    b1 = complex(coeffs.b[1])
    if b0 == 0.0:
        logger.info("Transparent medium (b0 = 0): no retrieval")
        return EfficiencyResult(
            eta=0.0,
            mean_depth=0.0,
            contrast_ratio=0.0,
            method=EfficiencyMethod.FOURIER,
            transparent=True,
        )

    eta = abs(b1) ** 2 * math.exp(-b0)
    c = coeffs.c()
    unreduced = efficiency_unreduced(complex(c[0]), complex(c[1]), float(c[0].imag))
    if not math.isclose(eta, unreduced, rel_tol=1e-10, abs_tol=1e-300):
        raise ArithmeticError(
            f"efficiency convention mismatch: reduced {eta!r} vs unreduced {unreduced!r}"
        )
    return EfficiencyResult(
        eta=eta,
        mean_depth=b0,
        contrast_ratio=2.0 * abs(b1) / b0,
        method=EfficiencyMethod.FOURIER,
    )


def efficiency_lorentzian(d: float, finesse: float) -> EfficiencyResult:
    """Closed-form efficiency of a comb of Lorentzian peaks.

    η = d²·tanh²(π/2F)·exp(-d·tanh(π/2F))·exp(-2π/F)

    :raises DomainError: If d < 0 or F <= 0.
    """
    if d < 0:
        raise DomainError(f"optical depth must be >= 0, got {d}")
    if finesse <= 0:
        raise DomainError(f"finesse must be > 0, got {finesse}")
    mean_depth = d * math.tanh(math.pi / (2.0 * finesse))
    eta = mean_depth**2 * math.exp(-mean_depth) * math.exp(-2.0 * math.pi / finesse)
    return EfficiencyResult(
        eta=eta,
        mean_depth=mean_depth,
        contrast_ratio=2.0 * math.exp(-math.pi / finesse),
        method=EfficiencyMethod.LORENTZIAN_CLOSED_FORM,
    )


def optimal_finesse(d: float) -> float:
    """High-finesse optimum F_opt = π(1 + d/4)."""
    if d < 0:
        raise DomainError(f"optical depth must be >= 0, got {d}")
    return math.pi * (1.0 + d / 4.0)


def optimal_efficiency(d: float) -> EfficiencyResult:
    """η_opt = 4e⁻²·d²/(4 + d)², bounded by the forward limit 4e⁻²."""
    finesse = optimal_finesse(d)
    eta = 4.0 * math.exp(-2.0) * d**2 / (4.0 + d) ** 2
    return EfficiencyResult(
        eta=eta,
        mean_depth=d * math.tanh(math.pi / (2.0 * finesse)),
        contrast_ratio=2.0 * math.exp(-math.pi / finesse),
        method=EfficiencyMethod.OPTIMAL_CLOSED_FORM,
    )


def numeric_optimal_finesse(d: float) -> tuple[float, float]:
    """Exact maximizer of the Lorentzian efficiency over F ∈ [π/4, 100π].

    :return: Tuple of (F_star, eta_star).
    :raises DomainError: If d <= 0.
    """
    if d <= 0:
        raise DomainError(f"optical depth must be > 0, got {d}")

    def objective(finesse: float) -> float:
        return efficiency_lorentzian(d, finesse).eta

    f_star, eta_star = bracketed_max(
        objective, *FINESSE_SEARCH_RANGE, rel_tol=FINESSE_REL_TOL
    )
    # The grid scan may miss a maximum that sits exactly on F_opt.
    f_opt = optimal_finesse(d)
    if FINESSE_SEARCH_RANGE[0] <= f_opt <= FINESSE_SEARCH_RANGE[1]:
        eta_at_opt = objective(f_opt)
        if eta_at_opt > eta_star:
            f_star, eta_star = f_opt, eta_at_opt
    if eta_star > FORWARD_LIMIT + 1e-9:
        raise ArithmeticError(f"numeric optimum {eta_star!r} exceeds the forward limit")
    logger.debug("Numeric optimum for d=%.4g: F*=%.8g eta*=%.8g", d, f_star, eta_star)
    return f_star, eta_star


def efficiency_curve(d_range: Iterable[float]) -> list[EfficiencyCurveRow]:
    """Closed-form and numeric optimum for each depth in ``d_range``."""
    rows: list[EfficiencyCurveRow] = []
    for d in d_range:
        d = float(d)
        f_opt = optimal_finesse(d)
        eta_opt = optimal_efficiency(d).eta
        if d == 0.0:
            f_star, eta_star = math.pi, 0.0
        else:
            f_star, eta_star = numeric_optimal_finesse(d)
        rows.append(
            EfficiencyCurveRow(
                d=d, f_opt=f_opt, eta_opt=eta_opt, f_star=f_star, eta_star=eta_star
            )
        )
    return rows


def dephasing_factor(storage_time: float, coherence_t2: float) -> float:
    """Intensity decay exp(-2T/T₂) of the optical coherence over the storage time.

    Not part of the comb efficiency formulas; applied only on request.
    """
    return math.exp(-2.0 * storage_time / coherence_t2)


def with_dephasing(
    result: EfficiencyResult, storage_time: float, coherence_t2: float
) -> EfficiencyResult:
    return result.model_copy(
        update={"eta": result.eta * dephasing_factor(storage_time, coherence_t2)}
    )


def report_efficiency(result: EfficiencyResult) -> float:
    """Efficiency clamped to [0, 1] for output files."""
    eta = min(max(result.eta, 0.0), 1.0)
    if eta != result.eta:
        logger.warning("Clamped efficiency %.3g to %.3g", result.eta, eta)
    return eta
