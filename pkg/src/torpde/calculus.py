"""Symbol-level expansions for adjoints and compositions.

The truncated expansions are

    adjoint:      sum_{|alpha| <= N} (1/alpha!) Delta^alpha D_x^(alpha) conj(a)
    composition:  sum_{|alpha| <= N} (1/alpha!) (Delta^alpha a1) (D_x^(alpha) a2)

where D_x^(alpha) is the falling-factorial spectral derivative (x-mode k is
weighted by k(k-1)...(k-alpha+1) per axis), the normalization under which the
discrete Newton series reproduces exact shifts. The reference symbol comes
from the materialized finite section, so the remainder is measured on
|xi| <= N/2 where truncation and alias contamination from the lattice
boundary are negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decay import DecayEstimate, estimate_decay_slope
from .quantize import adjoint, compose, extract_symbol, materialize
from .symbols import (
    ScalarSymbol,
    SymbolClassParams,
    _multi_indices_up_to,
    forward_difference,
    restrict_to_margin,
    symbol_conjugate,
    symbol_product,
    x_falling_derivative,
)

__all__ = [
    "ExpansionResult",
    "adjoint_expansion",
    "composition_expansion",
    "remainder_order_estimate",
    "expansion_report_csv",
]


@dataclass(frozen=True)
class ExpansionResult:
    partial_sum: ScalarSymbol
    remainder: ScalarSymbol
    reference: ScalarSymbol
    truncation_order: int
    claimed_remainder_order: float

    def remainder_estimate(self, min_shells: int = 4) -> DecayEstimate:
        return remainder_order_estimate(self.remainder, min_shells=min_shells)


def _sum_terms(spec, params: SymbolClassParams, terms) -> ScalarSymbol:
    acc = None
    for term, weight in terms:
        base = restrict_to_margin(term, 0).values
        acc = weight * base if acc is None else acc + weight * base
    return ScalarSymbol(spec, params, 0, acc, provenance="expansion")


def adjoint_expansion(a: ScalarSymbol, truncation: int) -> ExpansionResult:
    """Truncated adjoint-symbol expansion against the finite-section reference.

    Claimed remainder order is m - (rho - delta)(N + 1).
    """
    if truncation < 0:
        raise ValueError("truncation order must be nonnegative")
    p = a.params
    dim = a.spec.dim
    conj_a = symbol_conjugate(a)
    terms = []
    for alpha in _multi_indices_up_to(dim, truncation):
        term = forward_difference(x_falling_derivative(conj_a, alpha), alpha)
        terms.append((term, 1.0 / math.prod(math.factorial(k) for k in alpha)))
    partial = _sum_terms(a.spec, p, terms)
    reference = extract_symbol(adjoint(materialize(a)), params=p)
    remainder = ScalarSymbol(a.spec, p, 0, reference.values - partial.values, "remainder")
    claimed = p.order - (p.rho - p.delta) * (truncation + 1)
    return ExpansionResult(partial, remainder, reference, truncation, claimed)


def composition_expansion(a1: ScalarSymbol, a2: ScalarSymbol, truncation: int) -> ExpansionResult:
    """Truncated composition-symbol expansion against the finite-section reference.

    Claimed remainder order is m1 + m2 - (rho - delta)(N + 1).
    """
    if truncation < 0:
        raise ValueError("truncation order must be nonnegative")
    if a1.spec != a2.spec:
        raise ValueError("symbols live on different grids")
    p1, p2 = a1.params, a2.params
    rho = min(p1.rho, p2.rho)
    delta = max(p1.delta, p2.delta)
    params = SymbolClassParams(p1.order + p2.order, rho, delta)
    dim = a1.spec.dim
    terms = []
    for alpha in _multi_indices_up_to(dim, truncation):
        term = symbol_product(forward_difference(a1, alpha), x_falling_derivative(a2, alpha))
        terms.append((term, 1.0 / math.prod(math.factorial(k) for k in alpha)))
    partial = _sum_terms(a1.spec, params, terms)
    reference = extract_symbol(compose(materialize(a1), materialize(a2)), params=params)
    remainder = ScalarSymbol(a1.spec, params, 0, reference.values - partial.values, "remainder")
    claimed = p1.order + p2.order - (rho - delta) * (truncation + 1)
    return ExpansionResult(partial, reference=reference, remainder=remainder,
                           truncation_order=truncation, claimed_remainder_order=claimed)


def remainder_order_estimate(
    r: ScalarSymbol, max_radius: float | None = None, min_shells: int = 4
) -> DecayEstimate:
    """Empirical <xi>-order of a symbol via dyadic-shell regression.

    Defaults to the boundary-safe window |xi| <= N/2. Slope -inf means the
    remainder vanishes to the shell threshold everywhere.
    """
    if max_radius is None:
        max_radius = r.spec.freq_cutoff / 2.0
    base = restrict_to_margin(r, 0)
    dim = r.spec.dim
    mags = np.abs(base.values).max(axis=tuple(range(dim)))
    return estimate_decay_slope(mags, r.spec.lattice_radii(), max_radius, min_shells)


def expansion_report_csv(results: dict[int, tuple[ExpansionResult, DecayEstimate]], slack: float = 0.3) -> str:
    """CSV rows (N, shell, sup, fitted_slope, claimed_order, pass) per truncation order."""
    lines = ["N,shell,sup,fitted_slope,claimed_order,pass"]
    for n, (res, est) in sorted(results.items()):
        ok = est.is_zero or est.slope <= res.claimed_remainder_order + slack
        for radius, sup in zip(est.shell_radii, est.shell_sups):
            lines.append(
                f"{n},{format(radius, '.17g')},{format(sup, '.17g')},"
                f"{format(est.slope, '.17g')},{format(res.claimed_remainder_order, '.17g')},"
                f"{int(ok)}"
            )
    return "\n".join(lines) + "\n"
