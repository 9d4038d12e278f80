"""Harmonic spheres from rational maps, their potentials and glued sequences.

A rational map ``R = P/Q`` gives the harmonic map ``u = Pi^{-1}(R(z))`` into
``S^2`` where ``Pi^{-1}(w) = (2 Re w, 2 Im w, |w|^2 - 1) / (1 + |w|^2)``.
Everything is evaluated homogeneously in ``(P, Q)`` so poles are harmless.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .fields import (Field, FieldError, Grid, cartesian_gradient, gradient_norm, integrate,
                     laplacian)
from .hopf import hopf_differential
from .lorentz import norm_L1, norm_L2, norm_L21, norm_LlogL

NORTH = np.array([0.0, 0.0, 1.0])
SOUTH = np.array([0.0, 0.0, -1.0])


class DegenerateMapError(ValueError):
    pass


class ProjectionError(ArithmeticError):
    pass


def _trim(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, complex))
    nz = np.nonzero(np.abs(c) > 0)[0]
    return c[: nz[-1] + 1] if nz.size else np.zeros(1, complex)


def inverse_stereo(w: np.ndarray) -> np.ndarray:
    s = 1.0 + np.abs(w) ** 2
    return np.stack([2 * w.real / s, 2 * w.imag / s, (np.abs(w) ** 2 - 1) / s], -1)


def _d_inverse_stereo(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Differential of ``Pi^{-1}`` at ``w`` applied to the complex tangent ``v``."""
    s = 1.0 + np.abs(w) ** 2
    ds = 2.0 * np.real(np.conj(w) * v)
    return np.stack([
        2 * v.real / s - 2 * w.real * ds / s ** 2,
        2 * v.imag / s - 2 * w.imag * ds / s ** 2,
        2 * ds / s ** 2,
    ], -1)


@dataclass(frozen=True)
class RationalMap:
    """``P/Q`` with coefficient arrays in ascending powers of ``z``."""
    p: np.ndarray
    q: np.ndarray = field(default_factory=lambda: np.ones(1, complex))
    tol: float = 1e-8

    def __post_init__(self):
        p, q = _trim(self.p), _trim(self.q)
        if not np.any(q):
            raise DegenerateMapError("denominator vanishes identically")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if self.degree < 1:
            raise DegenerateMapError("constant map")
        if p.size > 1 and q.size > 1:
            rp, rq = npoly.polyroots(p), npoly.polyroots(q)
            gap = np.min(np.abs(rp[:, None] - rq[None, :]))
            if gap < self.tol * max(1.0, np.max(np.abs(np.concatenate([rp, rq])))):
                raise DegenerateMapError("numerator and denominator share a root")

    @classmethod
    def identity(cls) -> "RationalMap":
        return cls([0, 1])

    @classmethod
    def inversion(cls) -> "RationalMap":
        """``1/z``: north pole at the centre, south pole at infinity."""
        return cls([1], [0, 1])

    @classmethod
    def power(cls, d: int) -> "RationalMap":
        return cls(np.eye(d + 1)[d])

    @property
    def degree(self) -> int:
        if not np.any(self.p):
            return self.q.size - 1
        return max(self.p.size, self.q.size) - 1

    @property
    def value_at_infinity(self) -> np.ndarray:
        dp, dq = self.p.size - 1, self.q.size - 1
        if not np.any(self.p) or dq > dp:
            return SOUTH.copy()
        if dp > dq:
            return NORTH.copy()
        return inverse_stereo(np.array(self.p[-1] / self.q[-1]))

    def homogeneous(self, z):
        return npoly.polyval(z, self.p), npoly.polyval(z, self.q)

    def sphere(self, z: np.ndarray) -> np.ndarray:
        P, Q = self.homogeneous(z)
        n = np.abs(P) ** 2 + np.abs(Q) ** 2
        pq = P * np.conj(Q)
        return np.stack([2 * pq.real / n, 2 * pq.imag / n,
                         (np.abs(P) ** 2 - np.abs(Q) ** 2) / n], -1)

    def sphere_derivatives(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``u``, ``u_x``, ``u_y`` at the complex points ``z``."""
        P, Q = self.homogeneous(z)
        dP = npoly.polyval(z, npoly.polyder(self.p)) if self.p.size > 1 else np.zeros_like(P)
        dQ = npoly.polyval(z, npoly.polyder(self.q)) if self.q.size > 1 else np.zeros_like(Q)
        big = np.abs(P) > np.abs(Q)
        # where |R| > 1 work with 1/R and reflect: Pi^{-1}(1/w) = (X, -Y, -Z)(w)
        num = np.where(big, Q, P)
        den = np.where(big, P, Q)
        w = num / den
        dw = np.where(big, dQ * P - Q * dP, dP * Q - P * dQ) / den ** 2
        u = inverse_stereo(w)
        ux = _d_inverse_stereo(w, dw)
        uy = _d_inverse_stereo(w, 1j * dw)
        flip = np.ones(u.shape)
        flip[big, 1:] = -1.0
        return u * flip, ux * flip, uy * flip

    def energy_density(self, z: np.ndarray) -> np.ndarray:
        """``|grad u|^2 = 8 |R'|^2 / (1 + |R|^2)^2`` written homogeneously."""
        P, Q = self.homogeneous(z)
        dP = npoly.polyval(z, npoly.polyder(self.p)) if self.p.size > 1 else np.zeros_like(P)
        dQ = npoly.polyval(z, npoly.polyder(self.q)) if self.q.size > 1 else np.zeros_like(Q)
        return 8.0 * np.abs(dP * Q - P * dQ) ** 2 / (np.abs(P) ** 2 + np.abs(Q) ** 2) ** 2


def _local_z(g: Grid, center, scale) -> np.ndarray:
    return ((g.x - center[0]) + 1j * (g.y - center[1])) / scale


def bubble_field(m: RationalMap, g: Grid, center=(0.0, 0.0), scale: float = 1.0) -> Field:
    return Field(g, m.sphere(_local_z(g, center, scale)), unit_sphere=True)


def bubble_gradient(m: RationalMap, g: Grid, center=(0.0, 0.0),
                    scale: float = 1.0) -> tuple[Field, Field]:
    _, ux, uy = m.sphere_derivatives(_local_z(g, center, scale))
    return Field(g, ux / scale), Field(g, uy / scale)


def bubble_energy(m: RationalMap, g: Grid, center=(0.0, 0.0), scale: float = 1.0,
                  weights: Optional[np.ndarray] = None) -> float:
    """``(1/2) int |grad u|^2`` from the closed-form density; ``4 pi deg`` on the plane."""
    dens = m.energy_density(_local_z(g, center, scale)) / scale ** 2
    return 0.5 * float(integrate(g, Field(g, dens), weights))


def dirichlet_energy(u: Field, weights: Optional[np.ndarray] = None) -> float:
    """``(1/2) int |grad u|^2`` with the discrete gradient."""
    return 0.5 * float(integrate(u.grid, Field(u.grid, gradient_norm(u).values ** 2), weights))


# ---------------------------------------------------------------------------
# antisymmetric potential


@dataclass(frozen=True)
class Omega:
    """``values[..., i, j, c]`` is the ``c``-th Cartesian component of ``Omega^i_j``."""
    grid: Grid
    values: np.ndarray

    def magnitude(self) -> Field:
        """Norm summed over pairs ``i < j``; equals ``|grad u|`` for sphere maps."""
        return Field(self.grid, np.sqrt(0.5 * np.sum(self.values ** 2, axis=(-3, -2, -1))))

    def density(self) -> Field:
        return Field(self.grid, 0.5 * np.sum(self.values ** 2, axis=(-3, -2, -1)))

    def dot(self, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
        """``(Omega . grad v)^i = sum_j Omega^i_j . (v^j_x, v^j_y)``."""
        return (np.einsum("...ij,...j->...i", self.values[..., 0], gx)
                + np.einsum("...ij,...j->...i", self.values[..., 1], gy))


def tangent_gradient(u: Field) -> tuple[np.ndarray, np.ndarray]:
    """Discrete Cartesian gradient projected onto ``T_u S^2``."""
    ux, uy = cartesian_gradient(u)
    uv = u.components()
    out = []
    for d in (ux.components(), uy.components()):
        out.append(d - uv * np.sum(uv * d, -1, keepdims=True))
    return out[0], out[1]


def sphere_omega(u: Field, grads=None) -> Omega:
    """``Omega^i_j = u^i grad u^j - u^j grad u^i`` built from the tangential gradient."""
    if not u.unit_sphere:
        dev = np.max(np.abs(np.linalg.norm(u.components(), axis=-1) - 1.0))
        if dev > 1e-6:
            raise FieldError(f"sphere_omega needs |u| = 1 (deviation {dev:.2e})")
    gx, gy = grads if grads is not None else tangent_gradient(u)
    uv = u.components()
    parts = []
    for d in (gx, gy):
        a = uv[..., :, None] * d[..., None, :]
        parts.append(a - np.swapaxes(a, -1, -2))
    return Omega(u.grid, np.stack(parts, -1))


def omega_residuals(u: Field, weights=None) -> dict:
    """``||Lap u + Omega . grad u||_{L^1}`` and the nodewise size of ``Omega . grad^perp u``."""
    gx, gy = tangent_gradient(u)
    om = sphere_omega(u, (gx, gy))
    pde = laplacian(u).components() + om.dot(gx, gy)
    perp = om.dot(-gy, gx)
    pde_abs = Field(u.grid, np.linalg.norm(pde, axis=-1))
    perp_abs = np.linalg.norm(perp, axis=-1)
    return {
        "pde_L1": norm_L1(pde_abs, weights),
        "perp_L1": norm_L1(Field(u.grid, perp_abs), weights),
        "perp_max": float(np.max(perp_abs)),
    }


# ---------------------------------------------------------------------------
# bubbling sequences


@dataclass(frozen=True)
class BubbleSpec:
    map: RationalMap
    centers: np.ndarray
    scales: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, float))
        t = np.atleast_1d(np.asarray(self.scales, float))
        if c.shape[0] == 1 and t.size > 1:
            c = np.repeat(c, t.size, axis=0)
        if c.shape != (t.size, 2):
            raise ValueError("need one centre per scale")
        if np.any(t <= 0) or np.any(np.diff(t) >= 0):
            raise ValueError("scales must be positive and strictly decreasing")
        if np.any(np.hypot(c[:, 0], c[:, 1]) >= 1.0):
            raise ValueError("centres must lie in the unit disc")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "scales", t)

    @property
    def n_steps(self) -> int:
        return self.scales.size


def separation(t1: float, t2: float, x1, x2) -> float:
    """``max(t/t', t'/t, |x - x'| / (t + t'))``."""
    d = float(np.hypot(x1[0] - x2[0], x1[1] - x2[1]))
    return max(t1 / t2, t2 / t1, d / (t1 + t2))


@dataclass(frozen=True, eq=False)
class SynthResult:
    k: int
    u: Field
    f: Field
    report: dict


def glue(body: Field, bubbles: Sequence[BubbleSpec], k: int) -> Field:
    g = body.grid
    acc = body.components().astype(float).copy()
    for b in bubbles:
        acc += bubble_field(b.map, g, b.centers[k], b.scales[k]).values - b.map.value_at_infinity
    norm = np.linalg.norm(acc, axis=-1)
    if np.min(norm) < 1e-6:
        raise ProjectionError(f"projection to the sphere undefined at index {k}")
    return Field(g, acc / norm[..., None], unit_sphere=True)


def constant_body(g: Grid, value=NORTH) -> Field:
    return Field(g, np.broadcast_to(np.asarray(value, float), g.shape + (3,)).copy(),
                 unit_sphere=True)


def tension(u: Field) -> Field:
    """``f = -Lap u - Omega . grad u``."""
    gx, gy = tangent_gradient(u)
    om = sphere_omega(u, (gx, gy))
    return Field(u.grid, -laplacian(u).components() - om.dot(gx, gy))


def synthesize_sequence(body: Field, bubbles: Sequence[BubbleSpec], k: int,
                        weights: Optional[np.ndarray] = None) -> SynthResult:
    """Glue the bubbles at index ``k`` and measure the resulting defect ``f_k``."""
    u = glue(body, bubbles, k)
    f = tension(u)
    phi = hopf_differential(u)
    sep = [separation(a.scales[k], b.scales[k], a.centers[k], b.centers[k])
           for i, a in enumerate(bubbles) for b in bubbles[i + 1:]]
    report = {
        "k": k,
        "f_LlogL": norm_LlogL(f.magnitude(), weights),
        "f_L2": norm_L2(f.magnitude(), weights),
        "phi_half_L21": norm_L21(Field(u.grid, np.sqrt(np.abs(phi.values))), weights),
        "min_separation": min(sep) if sep else float("inf"),
    }
    return SynthResult(k, u, f, report)
