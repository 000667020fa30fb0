"""Dyadic-shell regression for empirical decay/growth orders.

A quantity tabulated over lattice points is reduced to its suprema on the
shells {|xi| in [2^k, 2^(k+1))} and its polynomial order in <xi> is read off
by least squares in log2-log2 coordinates. Each shell contributes the point
(log2 <xi*>, log2 sup) where xi* is the lattice point attaining the shell
supremum; anchoring at the arg-max removes the small-lattice bias of
center-based fits (pure bracket powers <xi>^m fit their order exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ZERO_SHELL_TOL = 1e-13

__all__ = [
    "Shell",
    "DecayEstimate",
    "InsufficientShellsError",
    "dyadic_shells",
    "estimate_decay_slope",
    "fit_log2_slope",
]


class InsufficientShellsError(ValueError):
    """Raised when the lattice does not carry enough dyadic shells."""


@dataclass(frozen=True)
class Shell:
    index: int
    lo: float
    hi: float
    mask: np.ndarray


@dataclass(frozen=True)
class DecayEstimate:
    slope: float
    residual: float
    shell_radii: tuple[float, ...]
    shell_sups: tuple[float, ...]

    @property
    def is_zero(self) -> bool:
        return math.isinf(self.slope) and self.slope < 0


def dyadic_shells(radii: np.ndarray, max_radius: float | None = None) -> list[Shell]:
    """Nonempty shells {2^k <= |xi| < 2^(k+1)} intersected with |xi| <= max_radius."""
    rmax = float(radii.max()) if max_radius is None else float(max_radius)
    shells: list[Shell] = []
    k = 0
    while 2.0**k <= rmax:
        lo, hi = 2.0**k, 2.0 ** (k + 1)
        mask = (radii >= lo) & (radii < hi) & (radii <= rmax)
        if mask.any():
            shells.append(Shell(k, lo, hi, mask))
        k += 1
    return shells


def fit_log2_slope(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of ys against xs with rms residual."""
    coeffs = np.polyfit(xs, ys, 1)
    res = float(np.sqrt(np.mean((ys - np.polyval(coeffs, xs)) ** 2)))
    return float(coeffs[0]), res


def estimate_decay_slope(
    magnitudes: np.ndarray,
    radii: np.ndarray,
    max_radius: float | None = None,
    min_shells: int = 4,
) -> DecayEstimate:
    """Fit the <xi>-order of nonnegative ``magnitudes`` indexed by ``radii``.

    Returns slope -inf when every shell supremum sits below the zero
    threshold. Raises InsufficientShellsError when fewer than ``min_shells``
    shells exist in the requested radius range.
    """
    if magnitudes.shape != radii.shape:
        raise ValueError("magnitudes and radii must have the same shape")
    shells = dyadic_shells(radii, max_radius)
    if len(shells) < min_shells:
        raise InsufficientShellsError(
            f"only {len(shells)} dyadic shells available, need {min_shells}"
        )
    sups = []
    arg_radii = []
    for s in shells:
        vals = magnitudes[s.mask]
        rads = radii[s.mask]
        i = int(np.argmax(vals))
        sups.append(float(vals[i]))
        arg_radii.append(float(rads[i]))
    sups = np.array(sups)
    arg_radii = np.array(arg_radii)
    live = sups > ZERO_SHELL_TOL
    if live.sum() < 2:
        # at most one live shell carries no trend; effectively zero
        return DecayEstimate(-math.inf, 0.0, tuple(arg_radii), tuple(sups))
    xs = np.log2(np.sqrt(1.0 + arg_radii[live] ** 2))
    ys = np.log2(sups[live])
    slope, res = fit_log2_slope(xs, ys)
    return DecayEstimate(slope, res, tuple(arg_radii), tuple(sups))
