"""Hopf differential and its pointwise identities.

All quantities are assembled from a single discrete polar-gradient pass, so
the algebraic identities relating ``phi`` to ``u_rho`` and ``u_theta/rho``
hold to round-off rather than to truncation error.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import Field, cartesian_gradient, integrate, polar_gradient, polar_to_cartesian


@dataclass(frozen=True)
class HopfParts:
    """Shared building blocks of one gradient pass (component axis last)."""
    u_rho: np.ndarray
    u_t: np.ndarray  # u_theta / rho
    u_x: np.ndarray
    u_y: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return (np.sum(self.u_x ** 2, -1) - np.sum(self.u_y ** 2, -1)
                - 2j * np.sum(self.u_x * self.u_y, -1))

    @property
    def grad_sq_max(self) -> float:
        return float(np.max(np.sum(self.u_rho ** 2 + self.u_t ** 2, -1)))


def hopf_parts(u: Field) -> HopfParts:
    ur, ut = polar_gradient(u)
    ux, uy = polar_to_cartesian(ur, ut)
    return HopfParts(ur.components(), ut.components(), ux.components(), uy.components())


def hopf_differential(u: Field) -> Field:
    """``phi = |u_x|^2 - |u_y|^2 - 2i <u_x, u_y>`` as a complex scalar field."""
    return Field(u.grid, hopf_parts(u).phi)


def polar_identity_residual(u: Field) -> float:
    p = hopf_parts(u)
    a = np.sum(p.u_rho ** 2, -1) - np.sum(p.u_t ** 2, -1)
    b = np.sum(p.u_rho * p.u_t, -1)
    return float(np.max(np.abs(np.abs(p.phi) ** 2 - a ** 2 - 4 * b ** 2)))


def radial_bound_margin(u: Field) -> float:
    """min over nodes of ``|phi|^{1/2} + |u_theta|/rho - |u_rho|``."""
    p = hopf_parts(u)
    m = (np.sqrt(np.abs(p.phi)) + np.linalg.norm(p.u_t, axis=-1)
         - np.linalg.norm(p.u_rho, axis=-1))
    return float(np.min(m))


def dbar(v: Field) -> Field:
    """``(d_x + i d_y) / 2`` of a scalar field."""
    vx, vy = cartesian_gradient(v)
    return Field(v.grid, 0.5 * (vx.values + 1j * vy.values))


def dbar_residual(u: Field, f: Optional[Field] = None, g: Optional[Field] = None,
                  weights: Optional[np.ndarray] = None) -> float:
    """L^1 norm of ``dbar(phi) + 2 <f + g, u_z>`` with ``u_z = (u_x - i u_y) / 2``."""
    p = hopf_parts(u)
    res = dbar(Field(u.grid, p.phi)).values
    forcing = np.zeros(u.grid.shape + (u.dim,))
    for extra in (f, g):
        if extra is not None:
            forcing = forcing + extra.components()
    u_z = 0.5 * (p.u_x - 1j * p.u_y)
    res = res + 2.0 * np.sum(forcing * u_z, -1)
    return float(integrate(u.grid, Field(u.grid, np.abs(res)), weights))


def random_sphere_map(g, rng: np.random.Generator, n_terms: int = 3, k_max: int = 3) -> Field:
    """Smooth ``S^2``-valued test map: a fixed vector plus bounded low-frequency waves."""
    v = np.zeros(g.shape + (3,))
    v[..., 0] = 3.0
    for c in range(3):
        k = rng.integers(-k_max, k_max + 1, size=(n_terms, 2))
        ph = rng.uniform(0, 2 * np.pi, n_terms)
        amp = rng.uniform(-1, 1, n_terms) / n_terms
        for (kx, ky), p, a in zip(k, ph, amp):
            v[..., c] += a * np.sin(kx * g.x + ky * g.y + p)
    return Field(g, v / np.linalg.norm(v, axis=-1, keepdims=True), unit_sphere=True)
