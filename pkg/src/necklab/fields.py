"""Polar grids, sampled fields, quadrature and differential operators.

Every grid is a tensor product of radial nodes and equispaced angles.  Two
radial layouts exist:

* ``disc`` (``r_min == 0``): uniform spacing ``h``, nodes at ``(i + 1/2) h``
  with the last node sitting exactly on ``r_max``;
* ``log`` (``r_min > 0``): nodes uniform in ``s = log r`` including both
  boundary radii, so every dyadic annulus holds the same number of rings.

Each node owns the dual cell bounded by the neighbouring half-way radii (the
geometric mean on log grids), clipped to ``[r_min, r_max]``.  Cell measures
are exact annular sector areas, so the total equals ``pi (r_max^2 - r_min^2)``
up to round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class GridError(ValueError):
    pass


class FieldError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    r_min: float
    r_max: float
    n_r: int
    n_theta: int
    radii: np.ndarray = field(init=False, repr=False)
    edges: np.ndarray = field(init=False, repr=False)
    theta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.r_max > self.r_min >= 0.0):
            raise GridError(f"need 0 <= r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.n_r < 5:
            raise GridError("need at least 5 radial nodes")
        if self.n_theta < 8 or self.n_theta & (self.n_theta - 1):
            raise GridError("n_theta must be a power of two >= 8")
        if self.r_min == 0.0:
            h = self.r_max / (self.n_r - 0.5)
            radii = (np.arange(self.n_r) + 0.5) * h
            radii[-1] = self.r_max
            edges = np.concatenate([[0.0], np.arange(1, self.n_r) * h, [self.r_max]])
        else:
            s = np.linspace(np.log(self.r_min), np.log(self.r_max), self.n_r)
            radii = np.exp(s)
            radii[0], radii[-1] = self.r_min, self.r_max
            mid = np.exp(0.5 * (s[1:] + s[:-1]))
            edges = np.concatenate([[self.r_min], mid, [self.r_max]])
        theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def disc(cls, r_max: float = 1.0, n_r: int = 64, n_theta: int = 64) -> "Grid":
        return cls(0.0, r_max, n_r, n_theta)

    @classmethod
    def annulus(cls, r_min: float, r_max: float, n_r: int, n_theta: int = 64) -> "Grid":
        if r_min <= 0:
            raise GridError("annulus needs r_min > 0")
        return cls(r_min, r_max, n_r, n_theta)

    @classmethod
    def log_per_decade(cls, r_min: float, r_max: float, per_decade: int,
                       n_theta: int = 64) -> "Grid":
        n_r = max(3, int(np.ceil(per_decade * np.log10(r_max / r_min))) + 1)
        return cls.annulus(r_min, r_max, n_r, n_theta)

    @property
    def kind(self) -> str:
        return "disc" if self.r_min == 0.0 else "log"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    @property
    def spacing(self) -> float:
        """Uniform spacing of the radial coordinate (``r`` on discs, ``log r`` otherwise)."""
        if self.kind == "disc":
            return self.radii[1] - self.radii[0]
        return np.log(self.r_max / self.r_min) / (self.n_r - 1)

    @property
    def rho(self) -> np.ndarray:
        return np.broadcast_to(self.radii[:, None], self.shape)

    @property
    def x(self) -> np.ndarray:
        return self.radii[:, None] * np.cos(self.theta)[None, :]

    @property
    def y(self) -> np.ndarray:
        return self.radii[:, None] * np.sin(self.theta)[None, :]

    @property
    def cell_measure(self) -> np.ndarray:
        ring = 0.5 * (self.edges[1:] ** 2 - self.edges[:-1] ** 2) * self.dtheta
        return np.broadcast_to(ring[:, None], self.shape).copy()

    def annulus_weights(self, r_lo: float, r_hi: float) -> np.ndarray:
        """Cell measures of ``B_{r_hi} \\ B_{r_lo}`` (origin-centred), clipped exactly."""
        lo = np.clip(self.edges[:-1], r_lo, r_hi)
        hi = np.clip(self.edges[1:], r_lo, r_hi)
        ring = 0.5 * (hi ** 2 - lo ** 2) * self.dtheta
        return np.broadcast_to(ring[:, None], self.shape).copy()

    def ball_weights(self, center, r_lo: float, r_hi: float) -> np.ndarray:
        """Cell measures of the nodes whose centre distance lies in ``[r_lo, r_hi)``."""
        d = np.hypot(self.x - center[0], self.y - center[1])
        return np.where((d >= r_lo) & (d < r_hi), self.cell_measure, 0.0)

    def header(self, dim: int) -> str:
        return f"grid {self.r_min!r} {self.r_max!r} {self.n_r} {self.n_theta} {dim}"

    def same_as(self, other: "Grid") -> bool:
        return (self is other) or (
            self.r_min == other.r_min and self.r_max == other.r_max
            and self.n_r == other.n_r and self.n_theta == other.n_theta)


@dataclass(frozen=True, eq=False)
class Field:
    """Samples on a grid: ``values`` has shape ``(n_r, n_theta)`` or ``(n_r, n_theta, dim)``."""
    grid: Grid
    values: np.ndarray
    unit_sphere: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape[:2] != self.grid.shape or v.ndim not in (2, 3):
            raise FieldError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise FieldError("non-finite field values")
        if self.unit_sphere:
            if v.ndim != 3:
                raise FieldError("sphere-valued field needs a component axis")
            dev = np.max(np.abs(np.linalg.norm(v, axis=-1) - 1.0))
            if dev > 1e-8:
                raise FieldError(f"|u| deviates from 1 by {dev:.2e}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable, unit_sphere: bool = False) -> "Field":
        return cls(grid, np.asarray(func(grid.x, grid.y)), unit_sphere)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 2 else self.values.shape[-1]

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == 2

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def components(self) -> np.ndarray:
        """Values with an explicit trailing component axis."""
        return self.values[..., None] if self.is_scalar else self.values

    def magnitude(self) -> "Field":
        return Field(self.grid, np.sqrt(np.sum(np.abs(self.components()) ** 2, axis=-1)))

    def with_values(self, values, unit_sphere: bool = False) -> "Field":
        return Field(self.grid, values, unit_sphere)


# ---------------------------------------------------------------------------
# radial and angular differences


def _reflected_ring(v: np.ndarray, n_theta: int) -> np.ndarray:
    # value at r = -h/2 is the first ring seen from the opposite direction
    return np.roll(v[0], n_theta // 2, axis=0)


def _d_coord(v: np.ndarray, grid: Grid) -> np.ndarray:
    """First derivative along the uniform radial coordinate (axis 0)."""
    h = grid.spacing
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    if grid.kind == "disc":
        out[0] = (v[1] - _reflected_ring(v, grid.n_theta)) / (2 * h)
    else:
        out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    return out


def _dd_coord(v: np.ndarray, grid: Grid) -> np.ndarray:
    h2 = grid.spacing ** 2
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h2
    out[-1] = (35 * v[-1] - 104 * v[-2] + 114 * v[-3] - 56 * v[-4] + 11 * v[-5]) / (12 * h2)
    if grid.kind == "disc":
        out[0] = (v[1] - 2 * v[0] + _reflected_ring(v, grid.n_theta)) / h2
    else:
        out[0] = (35 * v[0] - 104 * v[1] + 114 * v[2] - 56 * v[3] + 11 * v[4]) / (12 * h2)
    return out


def _wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n)


def _d_theta(v: np.ndarray, order: int = 1) -> np.ndarray:
    n = v.shape[1]
    k = _wavenumbers(n)
    if order == 1:
        k = k.copy()
        k[n // 2] = 0.0  # Nyquist mode has no consistent odd derivative
        mult = 1j * k
    else:
        mult = -(k ** 2)
    mult = mult.reshape((1, n) + (1,) * (v.ndim - 2))
    out = np.fft.ifft(np.fft.fft(v, axis=1) * mult, axis=1)
    return out if np.iscomplexobj(v) else out.real


def _radial_first(v: np.ndarray, grid: Grid) -> np.ndarray:
    d = _d_coord(v, grid)
    if grid.kind == "log":
        d = d / _bcast(grid.radii, v)
    return d


def _bcast(radii: np.ndarray, v: np.ndarray) -> np.ndarray:
    return radii.reshape((-1,) + (1,) * (v.ndim - 1))


def polar_gradient(u: Field) -> tuple[Field, Field]:
    """Return ``(u_rho, u_theta / rho)`` from one shared finite-difference pass."""
    g = u.grid
    v = u.values
    u_r = _radial_first(v, g)
    u_t = _d_theta(v) / _bcast(g.radii, v)
    return Field(g, u_r), Field(g, u_t)


def polar_to_cartesian(u_rho: Field, u_t: Field) -> tuple[Field, Field]:
    g = u_rho.grid
    c = np.cos(g.theta)[None, :]
    s = np.sin(g.theta)[None, :]
    if not u_rho.is_scalar:
        c, s = c[..., None], s[..., None]
    a, b = u_rho.values, u_t.values
    return Field(g, a * c - b * s), Field(g, a * s + b * c)


def cartesian_gradient(u: Field) -> tuple[Field, Field]:
    return polar_to_cartesian(*polar_gradient(u))


def laplacian(u: Field) -> Field:
    g = u.grid
    v = u.values
    r = _bcast(g.radii, v)
    vtt = _d_theta(v, order=2)
    if g.kind == "log":
        return Field(g, (_dd_coord(v, g) + vtt) / r ** 2)
    # conservative (1/r)(r u_r)_r; the flux through r = 0 vanishes
    h = g.spacing
    half = _bcast(g.edges[:-1], v)
    flux = np.zeros_like(v)
    flux[1:] = half[1:] * (v[1:] - v[:-1]) / h
    radial = np.empty_like(v)
    radial[:-1] = (flux[1:] - flux[:-1]) / (r[:-1] * h)
    radial[-1] = (_dd_coord(v, g) + _d_coord(v, g) / r)[-1]
    return Field(g, radial + vtt / r ** 2)


def hessian(u: Field) -> tuple[Field, Field, Field]:
    """Cartesian second derivatives ``(u_xx, u_xy, u_yy)``; ``u_xy`` is symmetrised."""
    ux, uy = cartesian_gradient(u)
    uxx, uxy = cartesian_gradient(ux)
    uyx, uyy = cartesian_gradient(uy)
    return uxx, Field(u.grid, 0.5 * (uxy.values + uyx.values)), uyy


def hessian_norm(u: Field) -> Field:
    """Pointwise Frobenius norm of the Hessian, summed over components."""
    uxx, uxy, uyy = hessian(u)
    tot = (np.abs(uxx.components()) ** 2 + 2 * np.abs(uxy.components()) ** 2
           + np.abs(uyy.components()) ** 2)
    return Field(u.grid, np.sqrt(tot.sum(axis=-1)))


def gradient_norm(u: Field) -> Field:
    """Pointwise ``|grad u|``, summed over components."""
    ur, ut = polar_gradient(u)
    tot = np.abs(ur.components()) ** 2 + np.abs(ut.components()) ** 2
    return Field(u.grid, np.sqrt(tot.sum(axis=-1)))


# ---------------------------------------------------------------------------
# quadrature and angular transforms


def integrate(g: Grid, v: Field, weights: Optional[np.ndarray] = None):
    if not v.is_scalar:
        raise FieldError("integrate expects a scalar field")
    if not v.grid.same_as(g):
        raise FieldError("field lives on a different grid")
    w = g.cell_measure if weights is None else weights
    return np.sum(v.values * w)


def angular_modes(v: Field) -> np.ndarray:
    """Per-ring DFT coefficients ``c[i, n] = mean_j v[i, j] exp(-i n theta_j)``."""
    return np.fft.fft(v.values, axis=1) / v.grid.n_theta


def from_modes(grid: Grid, coeffs: np.ndarray, real: bool = True) -> Field:
    vals = np.fft.ifft(coeffs * grid.n_theta, axis=1)
    return Field(grid, vals.real if real else vals)


# ---------------------------------------------------------------------------
# text serialisation


def write_field(path, u: Field) -> None:
    comps = u.components()
    if u.is_complex:
        comps = np.concatenate([comps.real, comps.imag], axis=-1)
    dim = comps.shape[-1]
    ir, it = np.meshgrid(np.arange(u.grid.n_r), np.arange(u.grid.n_theta), indexing="ij")
    rows = np.column_stack([ir.ravel(), it.ravel(), comps.reshape(-1, dim)])
    fmt = ["%d", "%d"] + ["%.17g"] * dim
    with open(path, "w") as fh:
        fh.write(u.grid.header(dim) + "\n")
        np.savetxt(fh, rows, fmt=fmt, delimiter=",")


def read_field(path, unit_sphere: bool = False) -> Field:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 6 or head[0] != "grid":
            raise FieldError(f"bad field header in {path}")
        grid = Grid(float(head[1]), float(head[2]), int(head[3]), int(head[4]))
        dim = int(head[5])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (grid.size, dim + 2):
        raise FieldError(f"expected {grid.size} rows of {dim + 2} columns")
    vals = np.empty(grid.shape + (dim,))
    vals[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2:]
    return Field(grid, vals[..., 0] if dim == 1 else vals, unit_sphere)
