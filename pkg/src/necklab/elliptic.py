"""Mode-wise Poisson solves on polar grids, Wente problems and Hodge splitting.

The angular direction is diagonalised by the FFT; each Fourier mode ``n``
leaves a radial two-point problem

    psi'' + psi'/r - n^2 psi / r^2 = f_n

discretised with exactly the stencils of :func:`necklab.fields.laplacian`,
so the discrete residual vanishes away from the boundary rings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .fields import (Field, Grid, cartesian_gradient, gradient_norm, hessian_norm,
                     laplacian)
from .lorentz import norm_L1, norm_L2, norm_L21


class BoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryData:
    """Per-angle boundary samples.  ``outer_kind`` is ``"dirichlet"`` or ``"neumann"``
    (outward radial derivative)."""
    outer: np.ndarray
    inner: Optional[np.ndarray] = None
    outer_kind: str = "dirichlet"

    @classmethod
    def zero(cls, g: Grid) -> "BoundaryData":
        inner = np.zeros(g.n_theta) if g.kind == "log" else None
        return cls(np.zeros(g.n_theta), inner)


def _mode_numbers(n_theta: int) -> np.ndarray:
    return np.abs(np.fft.fftfreq(n_theta, d=1.0 / n_theta))


def _radial_system(g: Grid, n: float, neumann: bool):
    """Banded (l=2, u=2) matrix and rhs scaling for one mode."""
    m = g.n_r
    ab = np.zeros((5, m))
    r = g.radii

    def put(i, j, val):
        ab[2 + i - j, j] += val

    if g.kind == "disc":
        h = g.spacing
        e = g.edges
        for i in range(m - 1):
            c = 1.0 / (r[i] * h * h)
            if i > 0:
                put(i, i - 1, c * e[i])
            put(i, i, -c * (e[i] + e[i + 1]) - n * n / r[i] ** 2)
            put(i, i + 1, c * e[i + 1])
        scale = np.ones(m)
    else:
        hs2 = g.spacing ** 2
        for i in range(1, m - 1):
            put(i, i - 1, 1.0 / hs2)
            put(i, i, -2.0 / hs2 - n * n)
            put(i, i + 1, 1.0 / hs2)
        put(0, 0, 1.0)
        scale = r ** 2
    last = m - 1
    if neumann:
        h = g.spacing
        rr = r[-1] if g.kind == "log" else 1.0
        put(last, last, 3.0 / (2 * h * rr))
        put(last, last - 1, -4.0 / (2 * h * rr))
        put(last, last - 2, 1.0 / (2 * h * rr))
    else:
        put(last, last, 1.0)
    return ab, scale


def poisson_solve(rhs: Field, bc: Optional[BoundaryData] = None) -> Field:
    """Solve ``Lap psi = rhs`` with the given boundary data."""
    g = rhs.grid
    if bc is None:
        bc = BoundaryData.zero(g)
    if g.kind == "disc" and bc.inner is not None:
        raise BoundaryError("inner boundary data given on a disc grid")
    if g.kind == "log" and bc.inner is None:
        raise BoundaryError("annulus grid needs inner boundary data")
    for arr in (bc.outer, bc.inner):
        if arr is not None and np.shape(arr) != (g.n_theta,):
            raise BoundaryError("boundary samples must match n_theta")
    neumann = bc.outer_kind == "neumann"
    f_hat = np.fft.fft(rhs.values, axis=1)
    out_hat = np.fft.fft(np.asarray(bc.outer, float))
    in_hat = np.fft.fft(np.asarray(bc.inner, float)) if bc.inner is not None else None
    ns = _mode_numbers(g.n_theta)
    psi_hat = np.empty_like(f_hat, dtype=complex)
    cache = {}
    for k, n in enumerate(ns):
        # mode 0 of a pure Neumann problem is fixed by a Dirichlet zero instead
        neu = neumann and not (n == 0 and g.kind == "disc")
        key = (n, neu)
        if key not in cache:
            cache[key] = _radial_system(g, n, neu)
        ab, scale = cache[key]
        b = f_hat[:, k] * scale
        b = b.astype(complex)
        if g.kind == "log":
            b[0] = in_hat[k]
        b[-1] = out_hat[k] if (neu or not neumann) else 0.0
        psi_hat[:, k] = solve_banded((2, 2), ab, b)
    return Field(g, np.fft.ifft(psi_hat, axis=1).real)


def poisson_residual(psi: Field, rhs: Field, weights=None) -> float:
    return norm_L1(Field(psi.grid, laplacian(psi).values - rhs.values), weights)


# ---------------------------------------------------------------------------
# Wente problem on an annulus


def jacobian_rhs(a: Field, b: Field) -> Field:
    """``grad a . grad^perp b`` with ``grad^perp = (-d_y, d_x)``."""
    ax, ay = cartesian_gradient(a)
    bx, by = cartesian_gradient(b)
    return Field(a.grid, -ax.values * by.values + ay.values * bx.values)


def dirichlet_norm(func: Callable, disc: Grid) -> float:
    """``||grad f||_{L^2}`` of a function sampled on a disc grid."""
    return norm_L2(gradient_norm(Field.from_function(disc, func)))


@dataclass(frozen=True)
class SineSum:
    """``sum_i c_i sin(k_i . x + p_i)``: smooth data on ``B_1`` with a JSON form."""
    amps: tuple
    waves: tuple      # integer wave vectors (kx, ky)
    phases: tuple

    @classmethod
    def random(cls, rng: np.random.Generator, n_terms: int = 3, k_max: int = 3) -> "SineSum":
        k = rng.integers(-k_max, k_max + 1, size=(n_terms, 2))
        ph = rng.uniform(0, 2 * np.pi, n_terms)
        c = rng.normal(size=n_terms)
        return cls(tuple(c.tolist()), tuple(map(tuple, k.tolist())), tuple(ph.tolist()))

    @classmethod
    def from_dict(cls, d: dict) -> "SineSum":
        n = len(d["amps"])
        if len(d["waves"]) != n or len(d["phases"]) != n:
            raise ValueError("amps, waves and phases must have equal length")
        return cls(tuple(map(float, d["amps"])), tuple(tuple(map(float, w)) for w in d["waves"]),
                   tuple(map(float, d["phases"])))

    def to_dict(self) -> dict:
        return {"amps": list(self.amps), "waves": [list(w) for w in self.waves],
                "phases": list(self.phases)}

    def scaled(self, c: float) -> "SineSum":
        return SineSum(tuple(c * a for a in self.amps), self.waves, self.phases)

    def __call__(self, x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for c, (kx, ky), p in zip(self.amps, self.waves, self.phases):
            out = out + c * np.sin(kx * x + ky * y + p)
        return out


def wente_solve(a: Callable, b: Callable, g: Grid, lam: float,
                disc: Optional[Grid] = None) -> tuple[Field, dict]:
    """Solve ``Lap psi = grad a . grad^perp b`` on the annulus ``g`` with zero data.

    ``a`` and ``b`` are vectorised functions of ``(x, y)`` defined on ``B_1``.
    The report measures ``psi`` on ``B_lam \\ B_{r/lam}`` against
    ``||grad a||_{L^2(B_1)} ||grad b||_{L^2(B_1)}``.
    """
    if g.kind != "log":
        raise BoundaryError("the Wente problem is posed on an annulus grid")
    r = g.r_min
    if not (r < lam < 0.5 and r / lam < lam):
        raise ValueError("need r < lam < 1/2 and r/lam < lam")
    fa = Field.from_function(g, a)
    fb = Field.from_function(g, b)
    psi = poisson_solve(jacobian_rhs(fa, fb))
    disc = disc or Grid.disc(1.0, 256, 128)
    w = g.annulus_weights(r / lam, lam)
    hess = norm_L1(hessian_norm(psi), w)
    grad = norm_L21(gradient_norm(psi), w)
    scale = dirichlet_norm(a, disc) * dirichlet_norm(b, disc)
    lhs = hess + grad
    if scale == 0 and lhs > 1e-12:
        raise ArithmeticError("nonzero solution for vanishing data")
    return psi, {
        "r": r, "lambda": lam,
        "hessian_L1": hess, "gradient_L21": grad, "lhs": lhs,
        "data_scale": scale,
        "ratio": lhs / scale if scale > 0 else 0.0,
    }


def wente_sweep(a: Callable, b: Callable, r_values, lam: float, per_decade: int = 64,
                n_theta: int = 128, disc: Optional[Grid] = None) -> list[dict]:
    """Wente reports for one data pair over several inner radii."""
    disc = disc or Grid.disc(1.0, 256, 128)
    return [wente_solve(a, b, Grid.log_per_decade(r, 1.0, per_decade, n_theta), lam, disc)[1]
            for r in r_values]


# ---------------------------------------------------------------------------
# Hodge decomposition on a disc


def div_curl(V: Field) -> tuple[Field, Field]:
    comps = V.components()
    vx = Field(V.grid, comps[..., 0])
    vy = Field(V.grid, comps[..., 1])
    vxx, vxy = cartesian_gradient(vx)
    vyx, vyy = cartesian_gradient(vy)
    return (Field(V.grid, vxx.values + vyy.values),
            Field(V.grid, vyx.values - vxy.values))


def hodge_decompose(V: Field) -> tuple[Field, Field]:
    """Split ``V = grad C + grad^perp D`` on a disc.

    ``C`` vanishes on the boundary; ``D`` solves the Neumann problem
    ``d_r D = V . tau`` with its mean fixed by ``D = 0`` on the outer ring.
    """
    g = V.grid
    if g.kind != "disc" or V.dim != 2:
        raise ValueError("hodge_decompose expects a 2-vector field on a disc grid")
    div, curl = div_curl(V)
    C = poisson_solve(div)
    comps = V.components()[-1]
    tangential = -comps[:, 0] * np.sin(g.theta) + comps[:, 1] * np.cos(g.theta)
    D = poisson_solve(curl, BoundaryData(tangential, None, "neumann"))
    return C, D


def hodge_report(V: Field, C: Field, D: Field) -> dict:
    cx, cy = cartesian_gradient(C)
    dx, dy = cartesian_gradient(D)
    comps = V.components()
    rx = comps[..., 0] - cx.values + dy.values
    ry = comps[..., 1] - cy.values - dx.values
    v2 = norm_L2(V.magnitude()) ** 2
    split = norm_L2(gradient_norm(C)) ** 2 + norm_L2(gradient_norm(D)) ** 2
    return {
        "reconstruction_L2": norm_L2(Field(V.grid, np.hypot(rx, ry))),
        "energy_V": v2,
        "energy_split": split,
        "split_excess": split / v2 - 1.0 if v2 > 0 else 0.0,
    }
