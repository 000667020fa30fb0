"""Discretization of the torus and its frequency lattice.

The torus is the unit cube [0, 1)^n sampled on the uniform grid x_j = j/G;
frequencies live on the symmetric integer lattice L = {xi : max_i |xi_i| <= N}
with 2N+1 <= G so that band-limited data are represented without aliasing.

Transform conventions (grid-mean forward):

    forward:  c(xi) = G^{-n} sum_j exp(-2 pi i x_j . xi) u(x_j)
    inverse:  u(x_j) = sum_{xi in L} exp(2 pi i x_j . xi) c(xi)

so the exponential exp(2 pi i x . xi0) has coefficient exactly 1 at xi0. The
L^2 inner product is the grid mean, conjugate-linear in its second argument.

All objects are immutable after construction and every operation is a pure
function, safe to call concurrently.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "GridFunction",
    "SpectralCoeffs",
    "japanese_bracket",
    "forward_transform",
    "inverse_transform",
    "sobolev_norm",
    "l2_norm",
    "l2_inner_product",
    "make_exponential",
    "random_band_limited",
]


@dataclass(frozen=True)
class GridSpec:
    """Spatial grid resolution and symmetric frequency truncation.

    Attributes:
        dim: torus dimension n (1 to 3)
        points_per_axis: even number of grid points G per axis
        freq_cutoff: lattice cutoff N; the lattice is {|xi_i| <= N}
    """

    dim: int
    points_per_axis: int
    freq_cutoff: int

    def __post_init__(self) -> None:
        if not 1 <= self.dim <= 3:
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.points_per_axis < 2 or self.points_per_axis % 2 != 0:
            raise ValueError(
                f"points_per_axis must be a positive even integer, got {self.points_per_axis}"
            )
        if self.freq_cutoff < 1:
            raise ValueError(f"freq_cutoff must be >= 1, got {self.freq_cutoff}")
        if 2 * self.freq_cutoff + 1 > self.points_per_axis:
            raise ValueError(
                f"aliasing constraint violated: 2*{self.freq_cutoff}+1 > {self.points_per_axis}"
            )

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def lattice_shape(self) -> tuple[int, ...]:
        return (2 * self.freq_cutoff + 1,) * self.dim

    @property
    def num_grid_points(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def num_lattice_points(self) -> int:
        return (2 * self.freq_cutoff + 1) ** self.dim

    def axis_coordinates(self) -> np.ndarray:
        """Grid coordinates j/G along one axis."""
        return np.arange(self.points_per_axis) / self.points_per_axis

    def axis_frequencies(self) -> np.ndarray:
        """Lattice coordinates -N..N along one axis."""
        return np.arange(-self.freq_cutoff, self.freq_cutoff + 1)

    def lattice_points(self) -> np.ndarray:
        """All lattice points as an integer array of shape (|L|, n), row-major."""
        return _lattice_points(self)

    def grid_points(self) -> np.ndarray:
        """All grid points as an array of shape (G^n, n), row-major."""
        return _grid_points(self)

    def lattice_radii(self) -> np.ndarray:
        """Euclidean norms |xi| on the lattice, shaped like the lattice."""
        return _lattice_radii(self)

    def bracket_mesh(self) -> np.ndarray:
        """Japanese bracket <xi> = (1+|xi|^2)^(1/2) on the lattice grid."""
        return _bracket_mesh(self)


@functools.lru_cache(maxsize=None)
def _lattice_points(spec: GridSpec) -> np.ndarray:
    axes = [spec.axis_frequencies()] * spec.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    pts.setflags(write=False)
    return pts


@functools.lru_cache(maxsize=None)
def _grid_points(spec: GridSpec) -> np.ndarray:
    axes = [spec.axis_coordinates()] * spec.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    pts.setflags(write=False)
    return pts


@functools.lru_cache(maxsize=None)
def _lattice_radii(spec: GridSpec) -> np.ndarray:
    pts = _lattice_points(spec)
    r = np.sqrt((pts.astype(float) ** 2).sum(axis=-1)).reshape(spec.lattice_shape)
    r.setflags(write=False)
    return r


@functools.lru_cache(maxsize=None)
def _bracket_mesh(spec: GridSpec) -> np.ndarray:
    b = np.sqrt(1.0 + _lattice_radii(spec) ** 2)
    b.setflags(write=False)
    return b


def japanese_bracket(xi) -> np.ndarray | float:
    """(1 + |xi|^2)^(1/2) for a lattice point or an array of points.

    The last axis holds the coordinates; a bare scalar is treated as a
    one-dimensional lattice point.
    """
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.sqrt(1.0 + (arr * arr).sum(axis=-1))
    return float(out) if out.ndim == 0 else out


def _coerce_values(spec: GridSpec, values, leading_shape: tuple[int, ...]) -> np.ndarray:
    vals = np.asarray(values, dtype=np.complex128)
    if vals.shape == leading_shape:
        vals = vals[..., np.newaxis]
    if vals.ndim != len(leading_shape) + 1 or vals.shape[: len(leading_shape)] != leading_shape:
        raise ValueError(
            f"values must have shape {leading_shape} or {leading_shape}+(channels,), got {vals.shape}"
        )
    if not np.all(np.isfinite(vals)):
        raise ValueError("values must be finite")
    vals = np.ascontiguousarray(vals)
    vals.setflags(write=False)
    return vals


@dataclass(frozen=True)
class GridFunction:
    """Sampled periodic function, scalar or multi-channel.

    ``values`` has shape grid_shape + (channels,); a bare grid-shaped array is
    promoted to a single channel.
    """

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _coerce_values(self.spec, self.values, self.spec.grid_shape))

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    @property
    def scalar_values(self) -> np.ndarray:
        """The grid-shaped array of a single-channel function."""
        if self.channels != 1:
            raise ValueError(f"function has {self.channels} channels")
        return self.values[..., 0]

    def channel(self, i: int) -> "GridFunction":
        return GridFunction(self.spec, self.values[..., i])

    def conjugate(self) -> "GridFunction":
        return GridFunction(self.spec, np.conj(self.values))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_compatible(self, other)
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_compatible(self, other)
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, scalar: complex) -> "GridFunction":
        return GridFunction(self.spec, self.values * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralCoeffs:
    """Fourier coefficients on the truncated lattice.

    ``coeffs`` has shape lattice_shape + (channels,); axis index i along each
    lattice axis corresponds to frequency xi = i - N.
    """

    spec: GridSpec
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "coeffs", _coerce_values(self.spec, self.coeffs, self.spec.lattice_shape)
        )

    @property
    def channels(self) -> int:
        return self.coeffs.shape[-1]

    def at(self, xi, channel: int = 0) -> complex:
        """Coefficient at lattice point xi."""
        idx = tuple(int(x) + self.spec.freq_cutoff for x in np.atleast_1d(xi))
        if len(idx) != self.spec.dim or any(not 0 <= i < 2 * self.spec.freq_cutoff + 1 for i in idx):
            raise ValueError(f"{xi} is outside the lattice")
        return complex(self.coeffs[idx + (channel,)])


def _check_compatible(u: GridFunction, v: GridFunction) -> None:
    if u.spec != v.spec or u.channels != v.channels:
        raise ValueError("grid functions have mismatched spec or channels")


def forward_transform(u: GridFunction) -> SpectralCoeffs:
    """Coefficients c(xi) = G^{-n} sum_j exp(-2 pi i x_j . xi) u(x_j), xi in L."""
    spec = u.spec
    axes = tuple(range(spec.dim))
    full = np.fft.fftn(u.values, axes=axes) / spec.num_grid_points
    idx = spec.axis_frequencies() % spec.points_per_axis
    out = full
    for ax in axes:
        out = np.take(out, idx, axis=ax)
    return SpectralCoeffs(spec, out)


def inverse_transform(c: SpectralCoeffs) -> GridFunction:
    """Values u(x_j) = sum_{xi in L} exp(2 pi i x_j . xi) c(xi)."""
    spec = c.spec
    axes = tuple(range(spec.dim))
    full = np.zeros(spec.grid_shape + (c.channels,), dtype=np.complex128)
    idx = spec.axis_frequencies() % spec.points_per_axis
    full[np.ix_(*([idx] * spec.dim))] = c.coeffs
    vals = np.fft.ifftn(full, axes=axes) * spec.num_grid_points
    return GridFunction(spec, vals)


def sobolev_norm(u: GridFunction, s: float) -> float:
    """Truncated-lattice Sobolev norm (sum_xi <xi>^{2s} |c(xi)|^2)^(1/2).

    Multi-channel functions get the root-sum-of-squares of per-channel norms.
    """
    if not np.isfinite(s):
        raise ValueError("sobolev index must be finite")
    c = forward_transform(u).coeffs
    weight = u.spec.bracket_mesh() ** (2.0 * s)
    return float(np.sqrt(np.sum(weight[..., np.newaxis] * np.abs(c) ** 2)))


def l2_norm(u: GridFunction) -> float:
    return sobolev_norm(u, 0.0)


def l2_inner_product(u: GridFunction, v: GridFunction) -> complex:
    """Grid-mean inner product, conjugate-linear in the second argument."""
    _check_compatible(u, v)
    return complex(np.vdot(v.values, u.values) / u.spec.num_grid_points)


def make_exponential(spec: GridSpec, xi0, channel: int = 0, channels: int = 1) -> GridFunction:
    """Samples of exp(2 pi i x . xi0) in the requested channel, zero elsewhere."""
    xi = np.atleast_1d(np.asarray(xi0, dtype=int))
    if xi.shape != (spec.dim,):
        raise ValueError(f"xi0 must have {spec.dim} components, got {xi0}")
    if np.any(np.abs(xi) > spec.freq_cutoff):
        raise ValueError(f"{tuple(xi)} is outside the lattice (cutoff {spec.freq_cutoff})")
    if not 0 <= channel < channels:
        raise ValueError("channel index out of range")
    x = spec.axis_coordinates()
    phase = np.zeros(spec.grid_shape)
    for k in range(spec.dim):
        shape = [1] * spec.dim
        shape[k] = spec.points_per_axis
        phase = phase + xi[k] * x.reshape(shape)
    vals = np.zeros(spec.grid_shape + (channels,), dtype=np.complex128)
    vals[..., channel] = np.exp(2j * np.pi * phase)
    return GridFunction(spec, vals)


def random_band_limited(
    spec: GridSpec,
    rng: np.random.Generator,
    max_abs_freq: int | None = None,
    channels: int = 1,
) -> GridFunction:
    """Random function with coefficients supported on {|xi_i| <= max_abs_freq}."""
    kmax = spec.freq_cutoff if max_abs_freq is None else int(max_abs_freq)
    if not 0 <= kmax <= spec.freq_cutoff:
        raise ValueError("max_abs_freq must lie within the lattice cutoff")
    coeffs = np.zeros(spec.lattice_shape + (channels,), dtype=np.complex128)
    n = spec.freq_cutoff
    block = tuple(slice(n - kmax, n + kmax + 1) for _ in range(spec.dim))
    size = (2 * kmax + 1,) * spec.dim + (channels,)
    coeffs[block] = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return inverse_transform(SpectralCoeffs(spec, coeffs))
