"""Tabulated symbols on the phase space T^n x Z^n.

A scalar symbol a(x, xi) is stored on the spatial grid times an *inflated*
lattice {|xi_i| <= N + margin}; the margin supplies the extra values consumed
by forward differences, so Delta^alpha is exact without extrapolation. Class
metadata (order m, rho, delta) travels with the tables and is bookkeeping
only — membership is decided empirically by shell regression.

Conventions:
  - forward difference along axis j:  (D_j a)(xi) = a(xi + e_j) - a(xi)
  - x-derivatives are spectral: x-Fourier mode k picks up (2 pi i k)^beta
  - every operation returns a new symbol; tables are immutable
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .decay import estimate_decay_slope
from .grid import GridSpec

__all__ = [
    "SymbolClassParams",
    "MultiIndex",
    "ScalarSymbol",
    "MatrixSymbol",
    "MarginExhaustedError",
    "tabulate_symbol",
    "constant_symbol",
    "frac_laplacian_symbol",
    "bessel_symbol",
    "oscillating_symbol",
    "variable_coefficient_symbol",
    "builtin_symbol",
    "forward_difference",
    "difference_binomial",
    "x_derivative",
    "x_falling_derivative",
    "seminorm_estimate",
    "class_membership_probe",
    "ellipticity_check",
    "strong_ellipticity_check",
    "symbol_conjugate",
    "symbol_product",
    "symbol_add",
    "symbol_sub",
    "restrict_to_margin",
    "save_symbol",
    "load_symbol",
]

MultiIndex = tuple[int, ...]

DEFAULT_MARGIN = 4


class MarginExhaustedError(ValueError):
    """Difference order exceeds the symbol's lattice margin."""


@dataclass(frozen=True)
class SymbolClassParams:
    """Order and (rho, delta) type of a symbol class."""

    order: float
    rho: float = 1.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.order):
            raise ValueError("order must be finite")
        if not (0.0 <= self.rho <= 1.0 and 0.0 <= self.delta <= 1.0):
            raise ValueError("rho and delta must lie in [0, 1]")


def _as_multi_index(alpha, dim: int) -> MultiIndex:
    if isinstance(alpha, (int, np.integer)):
        alpha = (int(alpha),)
    idx = tuple(int(a) for a in alpha)
    if len(idx) != dim:
        raise ValueError(f"multi-index {alpha} has {len(idx)} components, expected {dim}")
    if any(a < 0 for a in idx):
        raise ValueError(f"multi-index must be componentwise nonnegative, got {alpha}")
    return idx


def _index_order(alpha: MultiIndex) -> int:
    return sum(alpha)


def _multi_indices_up_to(dim: int, max_order: int):
    for total in range(max_order + 1):
        for alpha in itertools.product(range(total + 1), repeat=dim):
            if sum(alpha) == total:
                yield alpha


@dataclass(frozen=True)
class ScalarSymbol:
    """Tabulated a(x, xi) with class metadata.

    ``values`` has shape grid_shape + inflated lattice shape, where the
    inflated lattice is {|xi_i| <= N + margin}.
    """

    spec: GridSpec
    params: SymbolClassParams
    margin: int
    values: np.ndarray
    provenance: str = "tabulated"

    def __post_init__(self) -> None:
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")
        vals = np.asarray(self.values, dtype=np.complex128)
        expected = self.spec.grid_shape + self.inflated_shape
        if vals.shape != expected:
            raise ValueError(f"values must have shape {expected}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("symbol values must be finite")
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def inflated_cutoff(self) -> int:
        return self.spec.freq_cutoff + self.margin

    @property
    def inflated_shape(self) -> tuple[int, ...]:
        return (2 * self.inflated_cutoff + 1,) * self.spec.dim

    def axis_frequencies(self) -> np.ndarray:
        return np.arange(-self.inflated_cutoff, self.inflated_cutoff + 1)

    def lattice_radii(self) -> np.ndarray:
        axes = [self.axis_frequencies().astype(float)] * self.spec.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.sqrt(sum(m * m for m in mesh))

    def bracket_mesh(self) -> np.ndarray:
        return np.sqrt(1.0 + self.lattice_radii() ** 2)

    def base_values(self) -> np.ndarray:
        """Values restricted to the base lattice {|xi_i| <= N}."""
        sl = (slice(None),) * self.spec.dim + tuple(
            slice(self.margin, self.margin + 2 * self.spec.freq_cutoff + 1)
            for _ in range(self.spec.dim)
        )
        return self.values[sl]

    def at(self, x_index, xi) -> complex:
        jx = tuple(int(j) for j in np.atleast_1d(x_index))
        ix = tuple(int(x) + self.inflated_cutoff for x in np.atleast_1d(xi))
        return complex(self.values[jx + ix])


@dataclass(frozen=True)
class MatrixSymbol:
    """Square array of scalar symbols sharing grid and class metadata."""

    entries: tuple[tuple[ScalarSymbol, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(row) for row in self.entries)
        size = len(rows)
        if size == 0 or any(len(row) != size for row in rows):
            raise ValueError("entries must form a square array")
        first = rows[0][0]
        for row in rows:
            for entry in row:
                if entry.spec != first.spec:
                    raise ValueError("all entries must share one GridSpec")
                if entry.params.order > first.params.order + 1e-12 and not np.isclose(
                    entry.params.order, first.params.order
                ):
                    raise ValueError("entry order exceeds the declared matrix order bound")
        object.__setattr__(self, "entries", rows)

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def spec(self) -> GridSpec:
        return self.entries[0][0].spec

    @property
    def params(self) -> SymbolClassParams:
        return self.entries[0][0].params


# ---------------------------------------------------------------------------
# construction


def tabulate_symbol(
    spec: GridSpec,
    fn: Callable[[list[np.ndarray], list[np.ndarray]], np.ndarray],
    params: SymbolClassParams,
    margin: int = DEFAULT_MARGIN,
    provenance: str = "closed-form",
) -> ScalarSymbol:
    """Tabulate a(x, xi) from a vectorized callable fn(xs, xis).

    ``xs`` and ``xis`` are lists of n coordinate arrays broadcastable to the
    full grid x inflated-lattice shape.
    """
    n = spec.dim
    x_axis = spec.axis_coordinates()
    xi_axis = np.arange(-(spec.freq_cutoff + margin), spec.freq_cutoff + margin + 1, dtype=float)
    full_ndim = 2 * n
    xs = []
    for k in range(n):
        shape = [1] * full_ndim
        shape[k] = x_axis.size
        xs.append(x_axis.reshape(shape))
    xis = []
    for k in range(n):
        shape = [1] * full_ndim
        shape[n + k] = xi_axis.size
        xis.append(xi_axis.reshape(shape))
    vals = np.asarray(fn(xs, xis), dtype=np.complex128)
    target = spec.grid_shape + (2 * (spec.freq_cutoff + margin) + 1,) * n
    vals = np.broadcast_to(vals, target).copy()
    return ScalarSymbol(spec, params, margin, vals, provenance)


def constant_symbol(spec: GridSpec, value: complex = 1.0, margin: int = DEFAULT_MARGIN) -> ScalarSymbol:
    return tabulate_symbol(
        spec,
        lambda xs, xis: np.full((1,) * (2 * spec.dim), value, dtype=np.complex128),
        SymbolClassParams(0.0, 1.0, 0.0),
        margin,
        provenance="closed-form:constant",
    )


def _radius(xis: list[np.ndarray]) -> np.ndarray:
    return np.sqrt(sum(x * x for x in xis))


def frac_laplacian_symbol(spec: GridSpec, nu: float, margin: int = DEFAULT_MARGIN) -> ScalarSymbol:
    """Multiplier (2 pi)^nu |xi|^nu; zero at xi = 0 for every nu > 0."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    return tabulate_symbol(
        spec,
        lambda xs, xis: (2.0 * np.pi) ** nu * _radius(xis) ** nu + 0j,
        SymbolClassParams(nu, 1.0, 0.0),
        margin,
        provenance="closed-form:frac_laplacian",
    )


def bessel_symbol(spec: GridSpec, s: float, margin: int = DEFAULT_MARGIN) -> ScalarSymbol:
    """Multiplier <xi>^s = (1 + |xi|^2)^(s/2)."""
    return tabulate_symbol(
        spec,
        lambda xs, xis: (1.0 + _radius(xis) ** 2) ** (s / 2.0) + 0j,
        SymbolClassParams(s, 1.0, 0.0),
        margin,
        provenance="closed-form:bessel",
    )


def oscillating_symbol(
    spec: GridSpec, nu: float, rho: float, margin: int = DEFAULT_MARGIN
) -> ScalarSymbol:
    """Multiplier <xi>^nu e^{i (2 pi |xi|)^(1-rho)} with reduced difference decay rho."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")

    def fn(xs, xis):
        r = _radius(xis)
        return (1.0 + r * r) ** (nu / 2.0) * np.exp(1j * (2.0 * np.pi * r) ** (1.0 - rho))

    return tabulate_symbol(
        spec, fn, SymbolClassParams(nu, rho, 0.0), margin, provenance="closed-form:oscillating"
    )


def variable_coefficient_symbol(
    spec: GridSpec,
    nu: float,
    q_coeffs: Mapping[tuple[int, ...], complex],
    margin: int = DEFAULT_MARGIN,
) -> ScalarSymbol:
    """(1 + q(x)) (2 pi)^nu |xi|^nu with band-limited real q, 1 + q > 0.

    ``q_coeffs`` maps frequency tuples to coefficients; the synthesized q must
    come out real (pass conjugate-symmetric coefficients).
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    x_axis = spec.axis_coordinates()
    q = np.zeros(spec.grid_shape, dtype=np.complex128)
    for freq, coeff in q_coeffs.items():
        k = tuple(int(f) for f in np.atleast_1d(freq))
        if len(k) != spec.dim:
            raise ValueError(f"coefficient frequency {freq} must have {spec.dim} components")
        phase = np.zeros(spec.grid_shape)
        for ax, kk in enumerate(k):
            shape = [1] * spec.dim
            shape[ax] = x_axis.size
            phase = phase + kk * x_axis.reshape(shape)
        q = q + complex(coeff) * np.exp(2j * np.pi * phase)
    if np.max(np.abs(q.imag)) > 1e-12 * max(1.0, np.max(np.abs(q.real))):
        raise ValueError("q must be real: pass conjugate-symmetric coefficients")
    qr = q.real
    if np.min(1.0 + qr) <= 0.0:
        raise ValueError("1 + q(x) must stay positive")

    def fn(xs, xis):
        r = _radius(xis)
        coeff = (1.0 + qr).reshape(spec.grid_shape + (1,) * spec.dim)
        return coeff * (2.0 * np.pi) ** nu * r**nu + 0j

    return tabulate_symbol(
        spec, fn, SymbolClassParams(nu, 1.0, 0.0), margin, provenance="closed-form:variable"
    )


def builtin_symbol(spec: GridSpec, kind: str, margin: int = DEFAULT_MARGIN, **params) -> ScalarSymbol:
    """Dispatch to the built-in symbol library by name."""
    if kind == "frac_laplacian":
        return frac_laplacian_symbol(spec, params["nu"], margin)
    if kind == "bessel":
        return bessel_symbol(spec, params["s"], margin)
    if kind == "oscillating":
        return oscillating_symbol(spec, params["nu"], params["rho"], margin)
    if kind == "variable":
        return variable_coefficient_symbol(spec, params["nu"], params["q_coeffs"], margin)
    if kind == "constant":
        return constant_symbol(spec, params.get("value", 1.0), margin)
    raise ValueError(f"unknown builtin symbol kind {kind!r}")


# ---------------------------------------------------------------------------
# difference and derivative operators


def _crop_lattice(values: np.ndarray, dim: int, amount: int) -> np.ndarray:
    if amount == 0:
        return values
    sl = [slice(None)] * values.ndim
    for ax in range(dim, 2 * dim):
        sl[ax] = slice(amount, values.shape[ax] - amount)
    return values[tuple(sl)]


def forward_difference(a: ScalarSymbol, alpha) -> ScalarSymbol:
    """Iterated forward difference Delta^alpha, tabulated on the deflated lattice.

    The output margin drops by |alpha| (uniformly over the axes); order
    metadata becomes m - rho |alpha|.
    """
    alpha = _as_multi_index(alpha, a.spec.dim)
    total = _index_order(alpha)
    if total > a.margin:
        raise MarginExhaustedError(
            f"difference order {total} exceeds margin {a.margin}"
        )
    dim = a.spec.dim
    vals = a.values
    for axis_j, count in enumerate(alpha):
        for _ in range(count):
            ax = dim + axis_j
            upper = [slice(None)] * vals.ndim
            lower = [slice(None)] * vals.ndim
            upper[ax] = slice(1, vals.shape[ax])
            lower[ax] = slice(0, vals.shape[ax] - 1)
            d = vals[tuple(upper)] - vals[tuple(lower)]
            # shrink every lattice axis by one to keep the sub-lattice symmetric
            sl = [slice(None)] * d.ndim
            for k in range(dim, 2 * dim):
                sl[k] = slice(1, d.shape[k]) if k == ax else slice(1, d.shape[k] - 1)
            vals = d[tuple(sl)]
    params = SymbolClassParams(a.params.order - a.params.rho * total, a.params.rho, a.params.delta)
    return ScalarSymbol(a.spec, params, a.margin - total, vals, a.provenance)


def difference_binomial(a: ScalarSymbol, alpha) -> ScalarSymbol:
    """Delta^alpha via the closed binomial sum over beta <= alpha.

    Agrees with forward_difference on the same deflated lattice (bitwise on
    integer tables).
    """
    alpha = _as_multi_index(alpha, a.spec.dim)
    total = _index_order(alpha)
    if total > a.margin:
        raise MarginExhaustedError(
            f"difference order {total} exceeds margin {a.margin}"
        )
    dim = a.spec.dim
    out_margin = a.margin - total
    out_len = 2 * (a.spec.freq_cutoff + out_margin) + 1
    out_shape = a.spec.grid_shape + (out_len,) * dim
    acc = np.zeros(out_shape, dtype=np.complex128)
    for beta in itertools.product(*(range(ai + 1) for ai in alpha)):
        sign = (-1) ** (total - sum(beta))
        coeff = sign * math.prod(math.comb(ai, bi) for ai, bi in zip(alpha, beta))
        sl = [slice(None)] * dim
        for k in range(dim):
            start = total + beta[k]
            sl.append(slice(start, start + out_len))
        acc += coeff * a.values[tuple(sl)]
    params = SymbolClassParams(a.params.order - a.params.rho * total, a.params.rho, a.params.delta)
    return ScalarSymbol(a.spec, params, out_margin, acc, a.provenance)


def _spectral_x_weights(spec: GridSpec) -> np.ndarray:
    return np.fft.fftfreq(spec.points_per_axis) * spec.points_per_axis


def _apply_x_multiplier(a: ScalarSymbol, weight_fn: Callable[[np.ndarray, int], np.ndarray]) -> np.ndarray:
    """Multiply x-Fourier modes of the table by per-axis weights."""
    dim = a.spec.dim
    axes = tuple(range(dim))
    xhat = np.fft.fftn(a.values, axes=axes)
    k = _spectral_x_weights(a.spec)
    for ax in range(dim):
        w = weight_fn(k, ax)
        shape = [1] * a.values.ndim
        shape[ax] = k.size
        xhat = xhat * w.reshape(shape)
    return np.fft.ifftn(xhat, axes=axes)


def x_derivative(a: ScalarSymbol, beta) -> ScalarSymbol:
    """Spectral x-derivative: mode k picks up (2 pi i k)^beta per axis."""
    beta = _as_multi_index(beta, a.spec.dim)
    if _index_order(beta) == 0:
        return a
    vals = _apply_x_multiplier(a, lambda k, ax: (2j * np.pi * k) ** beta[ax])
    params = SymbolClassParams(
        a.params.order + a.params.delta * _index_order(beta), a.params.rho, a.params.delta
    )
    return ScalarSymbol(a.spec, params, a.margin, vals, a.provenance)


def x_falling_derivative(a: ScalarSymbol, alpha) -> ScalarSymbol:
    """Falling-factorial spectral derivative: mode k picks up k(k-1)...(k-a+1).

    This is the x-operation paired with Delta^alpha in discrete Taylor
    (Newton) expansions; plain powers of 2 pi i k do not reproduce them.
    """
    alpha = _as_multi_index(alpha, a.spec.dim)
    if _index_order(alpha) == 0:
        return a

    def weights(k: np.ndarray, ax: int) -> np.ndarray:
        w = np.ones_like(k, dtype=np.complex128)
        for l in range(alpha[ax]):
            w = w * (k - l)
        return w

    vals = _apply_x_multiplier(a, weights)
    params = SymbolClassParams(
        a.params.order + a.params.delta * _index_order(alpha), a.params.rho, a.params.delta
    )
    return ScalarSymbol(a.spec, params, a.margin, vals, a.provenance)


# ---------------------------------------------------------------------------
# symbol arithmetic


def restrict_to_margin(a: ScalarSymbol, margin: int) -> ScalarSymbol:
    if margin > a.margin:
        raise MarginExhaustedError(f"cannot inflate margin {a.margin} to {margin}")
    vals = _crop_lattice(a.values, a.spec.dim, a.margin - margin)
    return ScalarSymbol(a.spec, a.params, margin, vals, a.provenance)


def symbol_conjugate(a: ScalarSymbol) -> ScalarSymbol:
    return ScalarSymbol(a.spec, a.params, a.margin, np.conj(a.values), a.provenance)


def _align(a: ScalarSymbol, b: ScalarSymbol) -> tuple[np.ndarray, np.ndarray, int]:
    if a.spec != b.spec:
        raise ValueError("symbols live on different grids")
    m = min(a.margin, b.margin)
    return (
        _crop_lattice(a.values, a.spec.dim, a.margin - m),
        _crop_lattice(b.values, b.spec.dim, b.margin - m),
        m,
    )


def symbol_add(a: ScalarSymbol, b: ScalarSymbol) -> ScalarSymbol:
    va, vb, m = _align(a, b)
    params = SymbolClassParams(max(a.params.order, b.params.order), a.params.rho, a.params.delta)
    return ScalarSymbol(a.spec, params, m, va + vb, "tabulated")


def symbol_sub(a: ScalarSymbol, b: ScalarSymbol) -> ScalarSymbol:
    va, vb, m = _align(a, b)
    params = SymbolClassParams(max(a.params.order, b.params.order), a.params.rho, a.params.delta)
    return ScalarSymbol(a.spec, params, m, va - vb, "tabulated")


def symbol_product(a: ScalarSymbol, b: ScalarSymbol) -> ScalarSymbol:
    va, vb, m = _align(a, b)
    params = SymbolClassParams(a.params.order + b.params.order, a.params.rho, a.params.delta)
    return ScalarSymbol(a.spec, params, m, va * vb, "tabulated")


# ---------------------------------------------------------------------------
# diagnostics


class SeminormEstimate(NamedTuple):
    value: float
    x_index: tuple[int, ...]
    xi: tuple[int, ...]


def seminorm_estimate(a: ScalarSymbol, alpha, beta) -> SeminormEstimate:
    """Finite-lattice supremum of <xi>^(rho|a|-delta|b|-m) |d_x^beta Delta^alpha a|.

    Reported together with the arg-max location; no claim is made that the
    supremum has stabilized in the lattice size.
    """
    alpha = _as_multi_index(alpha, a.spec.dim)
    beta = _as_multi_index(beta, a.spec.dim)
    g = x_derivative(forward_difference(a, alpha), beta)
    p = a.params
    exponent = p.rho * _index_order(alpha) - p.delta * _index_order(beta) - p.order
    weighted = np.abs(g.values) * g.bracket_mesh() ** exponent
    flat = int(np.argmax(weighted))
    loc = np.unravel_index(flat, weighted.shape)
    dim = a.spec.dim
    x_index = tuple(int(i) for i in loc[:dim])
    xi = tuple(int(i) - g.inflated_cutoff for i in loc[dim:])
    return SeminormEstimate(float(weighted[loc]), x_index, xi)


@dataclass(frozen=True)
class ClassProbeEntry:
    alpha: MultiIndex
    beta: MultiIndex
    slope: float
    expected: float
    passed: bool


@dataclass(frozen=True)
class ClassProbeReport:
    params: SymbolClassParams
    slack: float
    entries: tuple[ClassProbeEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)


def class_membership_probe(
    a: ScalarSymbol,
    max_alpha: int,
    max_beta: int,
    slack: float = 0.3,
    min_shells: int = 4,
) -> ClassProbeReport:
    """Shell-regression test of the claimed (m, rho, delta) membership.

    For each (alpha, beta) the growth order of sup_x |d^beta Delta^alpha a|
    over dyadic shells is fitted and compared with m - rho|alpha| + delta|beta|;
    an entry passes when the fitted slope does not exceed that exponent plus
    ``slack``. Finite lattices cannot certify asymptotics — the slack is
    calibrated on known symbols.
    """
    if max_alpha > a.margin:
        raise MarginExhaustedError(f"max_alpha {max_alpha} exceeds margin {a.margin}")
    dim = a.spec.dim
    p = a.params
    entries = []
    radii = a.spec.lattice_radii()
    for alpha in _multi_indices_up_to(dim, max_alpha):
        diffed = forward_difference(a, alpha)
        for beta in _multi_indices_up_to(dim, max_beta):
            g = x_derivative(diffed, beta)
            base = restrict_to_margin(g, 0)
            mags = np.abs(base.values).max(axis=tuple(range(dim)))
            est = estimate_decay_slope(mags, radii, min_shells=min_shells)
            expected = p.order - p.rho * sum(alpha) + p.delta * sum(beta)
            passed = est.is_zero or est.slope <= expected + slack
            entries.append(ClassProbeEntry(alpha, beta, est.slope, expected, passed))
    return ClassProbeReport(p, slack, tuple(entries))


class EllipticityResult(NamedTuple):
    is_elliptic: bool
    constant: float


def _ellipticity(a: ScalarSymbol, n0: int, magnitude: Callable[[np.ndarray], np.ndarray]) -> EllipticityResult:
    if n0 < 0:
        raise ValueError("n0 must be nonnegative")
    base = a.base_values()
    spec = a.spec
    radii = spec.lattice_radii()
    mask = radii >= n0
    if not mask.any():
        raise ValueError(f"no lattice points with |xi| >= {n0}")
    weight = spec.bracket_mesh() ** (-a.params.order)
    dim = spec.dim
    ratio = magnitude(base) * weight.reshape((1,) * dim + spec.lattice_shape)
    region = ratio.reshape(spec.grid_shape + (-1,))[..., mask.ravel()]
    c0 = float(region.min())
    return EllipticityResult(c0 > 0.0, c0)


def ellipticity_check(a: ScalarSymbol, n0: int = 1) -> EllipticityResult:
    """Infimum of |a(x, xi)| / <xi>^m over the grid and {|xi| >= n0}."""
    return _ellipticity(a, n0, np.abs)


def strong_ellipticity_check(a: ScalarSymbol, n0: int = 1) -> EllipticityResult:
    """Infimum of Re a(x, xi) / <xi>^m over the grid and {|xi| >= n0}."""
    return _ellipticity(a, n0, lambda v: v.real)


# ---------------------------------------------------------------------------
# serialization: columnar text, 17 significant digits, exact round-trip


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_symbol(a: ScalarSymbol, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        write_symbol(a, fh)


def write_symbol(a: ScalarSymbol, fh: io.TextIOBase) -> None:
    spec = a.spec
    p = a.params
    fh.write("# torpde scalar symbol v1\n")
    fh.write(
        f"n={spec.dim} G={spec.points_per_axis} N={spec.freq_cutoff} "
        f"margin={a.margin} order={_fmt(p.order)} rho={_fmt(p.rho)} delta={_fmt(p.delta)} "
        f"provenance={a.provenance}\n"
    )
    offset = a.inflated_cutoff
    for full_idx in np.ndindex(a.values.shape):
        jx = full_idx[: spec.dim]
        xi = tuple(i - offset for i in full_idx[spec.dim :])
        v = a.values[full_idx]
        cols = [str(j) for j in jx] + [str(x) for x in xi] + [_fmt(v.real), _fmt(v.imag)]
        fh.write(" ".join(cols) + "\n")


def load_symbol(path) -> ScalarSymbol:
    with open(path, "r", encoding="ascii") as fh:
        return read_symbol(fh)


def read_symbol(fh: io.TextIOBase) -> ScalarSymbol:
    magic = fh.readline()
    if not magic.startswith("# torpde scalar symbol"):
        raise ValueError("not a torpde symbol file")
    header = dict(item.split("=", 1) for item in fh.readline().split())
    spec = GridSpec(int(header["n"]), int(header["G"]), int(header["N"]))
    margin = int(header["margin"])
    params = SymbolClassParams(float(header["order"]), float(header["rho"]), float(header["delta"]))
    offset = spec.freq_cutoff + margin
    shape = spec.grid_shape + (2 * offset + 1,) * spec.dim
    vals = np.empty(shape, dtype=np.complex128)
    n = spec.dim
    for line in fh:
        parts = line.split()
        if not parts:
            continue
        jx = tuple(int(p) for p in parts[:n])
        xi = tuple(int(p) + offset for p in parts[n : 2 * n])
        vals[jx + xi] = complex(float(parts[2 * n]), float(parts[2 * n + 1]))
    return ScalarSymbol(spec, params, margin, vals, header.get("provenance", "tabulated"))
