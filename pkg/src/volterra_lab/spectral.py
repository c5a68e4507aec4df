"""Resolvent summability via characteristic roots, and the limit constants.

For a kernel with M stored entries the characteristic condition reduces to
the polynomial

    p(z) = z^M - sum_{l=0}^{M-1} k(l) z^{M-1-l},

whose roots must all lie strictly inside the unit disc for the resolvent
to be summable.  The module also computes kappa(lam) = sum k(l) lam^(l+1),
the multiplier L(lam) = 1 / (1 - kappa(lam)), and the geometric-weighted
resolvent sum rho(lam) = sum r(j) lam^j, which coincides with L(lam) for
summable kernels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import Kernel, resolvent
from .exceptions import InputError, SingularMultiplierError, SpectralError
from .series import Trajectory

logger = logging.getLogger(__name__)

__all__ = [
    "SpectralReport",
    "characteristic_roots",
    "kappa",
    "multiplier_L",
    "rho_of_lambda",
    "RhoResult",
    "ROOT_TOLERANCE",
]

# open-unit-disc test width; the dichotomy is sharp, floating point is not,
# so roots within [1 - tol, 1 + tol] of the circle yield verdict "marginal"
ROOT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpectralReport:
    """Roots of the truncated characteristic polynomial and the verdict.

    ``summable`` is True exactly when every root modulus is below
    1 - ROOT_TOLERANCE; ``verdict`` refines the boolean with "marginal"
    for roots within ROOT_TOLERANCE of the unit circle.  ``tail_caveat``
    carries the kernel's discarded-tail bound: the verdict is exact only
    when it is zero.
    """

    roots: np.ndarray
    max_modulus: float
    summable: bool
    verdict: str
    tail_caveat: float = 0.0


def _polish_roots(coeffs, roots):
    """Newton-polish companion-matrix roots to small scaled residual."""
    deriv = np.polyder(coeffs)
    norm = float(np.linalg.norm(np.nan_to_num(coeffs)))
    m = len(coeffs) - 1
    polished = np.array(roots, dtype=np.complex128)
    errstate = np.errstate(invalid="ignore", divide="ignore", over="ignore")
    with errstate:
        return _polish_loop(coeffs, deriv, norm, m, polished)


def _polish_loop(coeffs, deriv, norm, m, polished):
    for i, z in enumerate(polished):
        best = z
        for attempt in range(4):
            zi = z if attempt == 0 else z * (1.0 + 1e-8 * attempt) + 1e-12 * attempt
            for _ in range(12):
                pv = np.polyval(coeffs, zi)
                scale = norm * max(1.0, abs(zi)) ** m
                if abs(pv) <= 1e-12 * scale:
                    break
                dv = np.polyval(deriv, zi)
                if dv == 0:
                    break
                zi = zi - pv / dv
            pv = np.polyval(coeffs, zi)
            scale = norm * max(1.0, abs(zi)) ** m
            if abs(pv) <= 1e-12 * scale:
                best = zi
                break
        else:
            raise SpectralError(
                f"root polishing failed to converge near z = {z!r}"
            )
        polished[i] = best
    return polished


def characteristic_roots(kernel: Kernel) -> SpectralReport:
    """All M roots of the truncated characteristic polynomial.

    Root finding goes through companion-matrix eigenvalues followed by
    Newton polishing.  An empty kernel is trivially summable.
    """
    m = kernel.size
    if m == 0:
        return SpectralReport(
            roots=np.zeros(0, dtype=np.complex128),
            max_modulus=0.0,
            summable=True,
            verdict="summable",
            tail_caveat=kernel.tail_bound,
        )
    coeffs = np.concatenate(([1.0], -kernel.coefficients))
    roots = np.roots(coeffs)
    roots = _polish_roots(coeffs, roots)
    max_mod = float(np.max(np.abs(roots))) if roots.size else 0.0
    if max_mod < 1.0 - ROOT_TOLERANCE:
        verdict = "summable"
    elif max_mod <= 1.0 + ROOT_TOLERANCE:
        verdict = "marginal"
    else:
        verdict = "nonsummable"
    return SpectralReport(
        roots=roots,
        max_modulus=max_mod,
        summable=(verdict == "summable"),
        verdict=verdict,
        tail_caveat=kernel.tail_bound,
    )


def kappa(kernel: Kernel, lam: float) -> float:
    """Weighted kernel sum kappa(lam) = sum_{l<M} k(l) lam^(l+1)."""
    if kernel.size == 0:
        return 0.0
    lam = float(lam)
    powers = lam ** (np.arange(kernel.size) + 1)
    return float(np.dot(kernel.coefficients, powers))


def multiplier_L(kernel: Kernel, lam: float) -> float:
    """The growth multiplier L(lam) = 1 / (1 - kappa(lam)) for lam in [0, 1].

    For a summable kernel the denominator is bounded away from zero; a
    near-zero denominator therefore signals an inconsistent input and
    raises.  Non-summable kernels are allowed through (the value is still
    well defined) but are flagged with a warning since the limit statement
    this constant belongs to does not apply.
    """
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"lambda must lie in [0, 1], got {lam!r}")
    report = characteristic_roots(kernel)
    if not report.summable:
        logger.warning(
            "multiplier requested for a kernel with %s resolvent "
            "(max root modulus %.6g); the limit statement does not apply",
            report.verdict,
            report.max_modulus,
        )
    denom = 1.0 - kappa(kernel, lam)
    if abs(denom) <= 1e-12:
        raise SingularMultiplierError(
            f"1 - kappa(lambda) = {denom!r} at lambda = {lam!r}"
        )
    return 1.0 / denom


@dataclass(frozen=True)
class RhoResult:
    """Partial sums of sum r(j) lam^j next to their closed-form limit.

    The gap at the final index is reported, never asserted; callers decide
    what tolerance their experiment needs.
    """

    partial_sums: Trajectory
    limit: float
    gap: float
    tolerance: float = None
    within_tolerance: bool = None


def rho_of_lambda(kernel: Kernel, lam: float, horizon: int, tolerance: float = None) -> RhoResult:
    """Partial sums of the geometric-weighted resolvent series.

    partial_sums(n) = sum_{j<=n} r(j) lam^j; the limit is multiplier_L.
    """
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"lambda must lie in [0, 1], got {lam!r}")
    r = resolvent(kernel, horizon)
    weights = r.values * lam ** np.arange(horizon + 1)
    sums = Trajectory(np.cumsum(weights), start=0)
    limit = multiplier_L(kernel, lam)
    gap = abs(float(sums.values[-1]) - limit)
    within = None if tolerance is None else bool(gap < tolerance)
    return RhoResult(
        partial_sums=sums,
        limit=limit,
        gap=gap,
        tolerance=tolerance,
        within_tolerance=within,
    )
