"""Standard operators and data shared by scenarios and the verification suite.

The variable-coefficient positive operator is built in sandwich form
C Op(m) C with C = multiplication by sqrt(1 + q(x)): positive semidefinite by
construction, hermitian exactly, with principal symbol (1+q)(2 pi)^nu |xi|^nu.
(The plain symmetrization of Op((1+q) m) dips below zero by ~ (amp pi)^2/2 —
a Gaarding-type defect — and cannot carry the positive flag with c = 0.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, GridSpec, make_exponential, inverse_transform, SpectralCoeffs
from .hyperbolic import CauchyData, Forcing
from .quantize import DenseOperator, materialize, symmetrize_positive
from .symbols import frac_laplacian_symbol

__all__ = [
    "multiplier_operator",
    "variable_positive_operator",
    "sine_profile",
    "mode_mixture",
    "WaveRun",
    "standard_wave_corpus",
]


def multiplier_operator(spec: GridSpec, nu: float) -> DenseOperator:
    """Materialized fractional multiplier (2 pi)^nu |xi|^nu with flags set."""
    return symmetrize_positive(materialize(frac_laplacian_symbol(spec, nu)))


def sandwich_coefficient(spec: GridSpec, amp: float, freq: int = 1) -> np.ndarray:
    """Grid samples of q(x) = amp sin(2 pi freq x_1)."""
    x = spec.axis_coordinates()
    q = amp * np.sin(2.0 * np.pi * freq * x)
    shape = [1] * spec.dim
    shape[0] = spec.points_per_axis
    return np.broadcast_to(q.reshape(shape), spec.grid_shape).copy()


def variable_positive_operator(
    spec: GridSpec, nu: float, amp: float = 0.5, freq: int = 1
) -> DenseOperator:
    """Positive variable-coefficient operator C Op((2 pi)^nu |xi|^nu) C.

    C multiplies by sqrt(1 + q); the result is psd by construction and its
    symbol has principal part (1 + q(x)) (2 pi)^nu |xi|^nu.
    """
    if not -1.0 < amp < 1.0:
        raise ValueError("amplitude must keep 1 + q positive")
    base = materialize(frac_laplacian_symbol(spec, nu))
    c = np.sqrt(1.0 + sandwich_coefficient(spec, amp, freq)).ravel()
    mat = (c[:, None] * base.matrix) * c[None, :]
    return symmetrize_positive(DenseOperator(spec, 1, mat, nu))


def sine_profile(spec: GridSpec, freq: int = 1, axis: int = 0) -> GridFunction:
    """sin(2 pi freq x_axis) as a single-channel grid function."""
    xi = [0] * spec.dim
    xi[axis] = freq
    plus = make_exponential(spec, xi)
    xi[axis] = -freq
    minus = make_exponential(spec, xi)
    return (plus - minus) * (-0.5j)


def mode_mixture(spec: GridSpec, modes: dict[tuple[int, ...], complex]) -> GridFunction:
    """Band-limited function from a {frequency: coefficient} table."""
    coeffs = np.zeros(spec.lattice_shape + (1,), dtype=np.complex128)
    for xi, c in modes.items():
        idx = tuple(int(v) + spec.freq_cutoff for v in np.atleast_1d(xi))
        coeffs[idx + (0,)] = complex(c)
    return inverse_transform(SpectralCoeffs(spec, coeffs))


@dataclass(frozen=True)
class WaveRun:
    name: str
    p_op: DenseOperator
    data: CauchyData
    forcing: Forcing | None


def standard_wave_corpus(spec: GridSpec, sobolev_index: float = 0.0, horizon: float = 1.0) -> list[WaveRun]:
    """Multiplier and variable-coefficient runs, with and without forcing."""
    zero = 0.0 * make_exponential(spec, [0] * spec.dim)
    runs: list[WaveRun] = []

    p1 = multiplier_operator(spec, 1.0)
    e1 = make_exponential(spec, [1] + [0] * (spec.dim - 1))
    runs.append(
        WaveRun("multiplier_nu1_single_mode", p1,
                CauchyData(e1, zero, sobolev_index, 1.0, horizon), None)
    )

    p2 = multiplier_operator(spec, 2.0)
    mixed0 = mode_mixture(
        spec,
        {(1,) + (0,) * (spec.dim - 1): 1.0,
         (-2,) + (0,) * (spec.dim - 1): 0.5j,
         (3,) + (0,) * (spec.dim - 1): 0.25},
    )
    mixed1 = mode_mixture(
        spec,
        {(0,) * spec.dim: 0.2, (2,) + (0,) * (spec.dim - 1): -0.4},
    )
    runs.append(
        WaveRun("multiplier_nu2_mixed", p2,
                CauchyData(mixed0, mixed1, sobolev_index, 2.0, horizon), None)
    )

    profile = sine_profile(spec, 2)
    forcing = Forcing.time_profile(profile, lambda t: np.cos(3.0 * t))
    runs.append(
        WaveRun("multiplier_nu2_forced", p2,
                CauchyData(mixed0, zero, sobolev_index, 2.0, horizon), forcing)
    )

    pv = variable_positive_operator(spec, 2.0, amp=0.5)
    runs.append(
        WaveRun("variable_nu2_mixed", pv,
                CauchyData(mixed0, mixed1, sobolev_index, 2.0, horizon), None)
    )
    runs.append(
        WaveRun("variable_nu2_forced", pv,
                CauchyData(mixed0, zero, sobolev_index, 2.0, horizon), forcing)
    )
    return runs
