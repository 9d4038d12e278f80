"""Harmonic functions on annuli via Laurent series, and their Lorentz bounds.

A real harmonic function on ``B_1 \\ B_eps`` is stored as::

    h = c0 + d0 log r + 2 Re sum_{n>=1} (a_n r^n + b_n r^-n) e^{i n theta}

which is the two-sided expansion with ``c_n = a_n``, ``d_n = b_n`` for
``n > 0`` and ``c_{-n} = conj(b_n)``, ``d_{-n} = conj(a_n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import Field, Grid, GridError
from .lorentz import norm_L1, norm_L2, norm_L21

N_MAX = 32


@dataclass(frozen=True)
class LaurentSeries:
    c0: float = 0.0
    d0: float = 0.0
    a: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, complex))
        b = np.atleast_1d(np.asarray(self.b, complex))
        n = max(a.size, b.size)
        if n > N_MAX:
            raise ValueError(f"at most {N_MAX} angular modes are supported, got {n}")
        object.__setattr__(self, "a", np.pad(a, (0, n - a.size)))
        object.__setattr__(self, "b", np.pad(b, (0, n - b.size)))

    @classmethod
    def from_modes(cls, c0=0.0, d0=0.0, c=None, d=None) -> "LaurentSeries":
        """Build from dicts ``{n: coefficient}`` over ``n != 0`` (two-sided form).

        Pairs ``(c_n, d_{-n})`` and ``(d_n, c_{-n})`` must be complex conjugates;
        a missing partner is filled in.
        """
        c, d = dict(c or {}), dict(d or {})
        n_max = max([abs(k) for k in list(c) + list(d)] + [0])
        a = np.zeros(n_max, complex)
        b = np.zeros(n_max, complex)
        for n in range(1, n_max + 1):
            a[n - 1] = c.get(n, np.conj(d.get(-n, 0.0)))
            b[n - 1] = d.get(n, np.conj(c.get(-n, 0.0)))
            if n in c and -n in d and not np.isclose(c[n], np.conj(d[-n])):
                raise ValueError(f"c_{n} and d_{-n} must be conjugate for a real h")
            if n in d and -n in c and not np.isclose(d[n], np.conj(c[-n])):
                raise ValueError(f"d_{n} and c_{-n} must be conjugate for a real h")
        return cls(c0, d0, a, b)

    @classmethod
    def random(cls, rng: np.random.Generator, n_max: int = 8,
               inner_scale: float = 1e-2) -> "LaurentSeries":
        """Gaussian coefficients; ``b_n`` carries ``inner_scale**n`` so the
        singular part is O(1) at ``r = inner_scale``."""
        n = np.arange(1, n_max + 1)
        a = rng.normal(size=n_max) + 1j * rng.normal(size=n_max)
        b = (rng.normal(size=n_max) + 1j * rng.normal(size=n_max)) * inner_scale ** n
        return cls(rng.normal(), rng.normal(), a, b)

    @classmethod
    def from_dict(cls, d: dict) -> "LaurentSeries":
        """``{"c0", "d0", "a", "b"}`` with complex entries given as ``[re, im]`` pairs."""
        def cplx(v):
            return [complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in v]
        return cls(float(d.get("c0", 0.0)), float(d.get("d0", 0.0)),
                   cplx(d.get("a", [])), cplx(d.get("b", [])))

    def to_dict(self) -> dict:
        return {"c0": self.c0, "d0": self.d0,
                "a": [[z.real, z.imag] for z in self.a.tolist()],
                "b": [[z.real, z.imag] for z in self.b.tolist()]}

    @property
    def n_max(self) -> int:
        return self.a.size

    @property
    def has_singular_part(self) -> bool:
        return self.d0 != 0 or bool(np.any(self.b != 0))

    def scaled(self, c: float) -> "LaurentSeries":
        return LaurentSeries(c * self.c0, c * self.d0, c * self.a, c * self.b)

    def majorant(self, r: np.ndarray) -> np.ndarray:
        """``H = sum_{n != 0} |n^2 c_n| r^{n-1} + |n^2 d_n| r^{-n-1}``."""
        r = np.asarray(r, float)
        shape = (-1,) + (1,) * r.ndim
        n = np.arange(1, self.n_max + 1).reshape(shape)
        terms = n ** 2 * (np.abs(self.a).reshape(shape) * r ** (n - 1)
                          + np.abs(self.b).reshape(shape) * r ** (-n - 1))
        return 2.0 * terms.sum(axis=0)


@dataclass(frozen=True)
class HarmonicEval:
    """Analytic values of ``h`` and its derivatives on a grid."""
    grid: Grid
    h: np.ndarray
    h_r: np.ndarray
    h_rr: np.ndarray
    h_t: np.ndarray     # h_theta / r
    h_tt: np.ndarray    # h_thetatheta / r
    h_rt: np.ndarray    # d_r d_theta h
    h_xx: np.ndarray
    h_xy: np.ndarray
    h_yy: np.ndarray

    @property
    def d_r_rhr(self) -> np.ndarray:
        """``d/dr (r h_r)``."""
        return self.h_r + self.grid.rho * self.h_rr

    @property
    def hessian_norm(self) -> np.ndarray:
        return np.sqrt(self.h_xx ** 2 + 2 * self.h_xy ** 2 + self.h_yy ** 2)

    def field(self, name: str) -> Field:
        vals = self.d_r_rhr if name == "d_r_rhr" else getattr(self, name)
        return Field(self.grid, vals)


def evaluate(series: LaurentSeries, g: Grid) -> HarmonicEval:
    if g.r_min == 0 and series.has_singular_part:
        raise GridError("log / negative-power terms cannot be evaluated on a disc")
    r = g.radii[None, :]
    n = np.arange(1, series.n_max + 1)[:, None]
    a = series.a[:, None]
    b = series.b[:, None]
    e = np.exp(1j * n * g.theta[None, :])  # (n, theta)

    def resum(radial):  # radial: (n, r) -> real (r, theta)
        if series.n_max == 0:
            return np.zeros(g.shape)
        return 2.0 * np.real(radial.T @ e)

    rp = r ** n
    rm = r ** (-n)
    rr = g.radii[:, None]
    h = series.c0 + series.d0 * np.log(rr) + resum(a * rp + b * rm)
    h_r = series.d0 / rr + resum(n * (a * rp - b * rm) / r)
    h_rr = -series.d0 / rr ** 2 + resum((n * (n - 1) * a * rp + n * (n + 1) * b * rm) / r ** 2)
    h_th = resum(1j * n * (a * rp + b * rm))
    h_thth = resum(-(n ** 2) * (a * rp + b * rm))
    h_rth = resum(1j * n ** 2 * (a * rp - b * rm) / r)

    x, y = g.x, g.y
    r2 = rr ** 2
    r3 = rr ** 3
    r4 = rr ** 4
    h_xx = h_rr * x ** 2 / r2 + h_r * y ** 2 / r3 + h_thth * y ** 2 / r4 \
        + h_th * 2 * x * y / r4 - 2 * h_rth * x * y / r3
    h_yy = h_rr * y ** 2 / r2 + h_r * x ** 2 / r3 + h_thth * x ** 2 / r4 \
        - h_th * 2 * x * y / r4 + 2 * h_rth * x * y / r3
    h_xy = h_rr * x * y / r2 - h_r * x * y / r3 - h_thth * x * y / r4 \
        + h_th * (y ** 2 - x ** 2) / r4 + h_rth * (x ** 2 - y ** 2) / r3
    return HarmonicEval(g, h, h_r, h_rr, h_th / rr, h_thth / rr, h_rth, h_xx, h_xy, h_yy)


def centered_annulus(r_lo: float, r_hi: float, per_decade: int,
                     n_theta: int) -> tuple[Grid, np.ndarray]:
    """Log grid whose rings sit at the log-midpoints of cells tiling ``[r_lo, r_hi]``.

    Returns the grid and the cell weights of the annulus; the two padding
    rings carry zero weight.
    """
    m = max(4, int(np.ceil(per_decade * np.log10(r_hi / r_lo))))
    hs = np.log(r_hi / r_lo) / m
    g = Grid.annulus(r_lo * np.exp(-hs / 2), r_hi * np.exp(hs / 2), m + 2, n_theta)
    return g, g.annulus_weights(r_lo, r_hi)


def monomial_L21(n: int, lam: float, eps: float, per_decade: int = 64,
                 n_theta: int = 8) -> dict:
    """L^{2,1} norms of ``r^{n-1}`` and ``r^{-n-1}`` on ``B_lam \\ B_{eps/lam}``.

    Both functions are radial, so a coarse angular grid is exact.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    inner = eps / lam
    if not inner < lam:
        raise ValueError("empty annulus: need eps / lam < lam")
    g, w = centered_annulus(inner, lam, per_decade, n_theta)
    rho = g.rho
    return {
        "n": n, "lambda": lam, "eps": eps,
        "computed": norm_L21(Field(g, rho ** (n - 1)), w),
        "bound": np.sqrt(np.pi) * lam ** n,
        "computed_negative": norm_L21(Field(g, rho ** (-n - 1)), w),
        "bound_negative": 2.0 * np.sqrt(np.pi) * (lam / eps) ** n,
    }


def _prop32_norms(series, lam, eps, per_decade, n_theta):
    inner, wi = centered_annulus(eps / lam, lam, per_decade, n_theta)
    outer, wo = centered_annulus(eps, 1.0, per_decade, n_theta)
    hi = evaluate(series, inner)
    ho = evaluate(series, outer)
    parts = {
        "d_r_rhr": norm_L21(Field(inner, hi.d_r_rhr), wi),
        "h_t": norm_L21(Field(inner, hi.h_t), wi),
        "h_tt": norm_L21(Field(inner, hi.h_tt), wi),
        "h_rt": norm_L21(Field(inner, hi.h_rt), wi),
    }
    return {
        **parts,
        "lhs_31": sum(parts.values()),
        "lhs_32": norm_L1(Field(inner, hi.hessian_norm), wi),
        "hr_L21_inner": norm_L21(Field(inner, hi.h_r), wi),
        "rhs": norm_L2(Field(outer, ho.h_r), wo),
    }


def prop32_ratio(series: LaurentSeries, lam: float, eps: float, per_decade: int = 192,
                 n_theta: int = 256, rel_tol: float = 1e-3, max_doublings: int = 3) -> dict:
    """Both sides of the annulus estimates for ``h``, refined until stable.

    The radial resolution is doubled until every reported norm
    moves by less than ``rel_tol``; the last relative change is returned as
    ``refinement_change``.
    """
    if not (eps < 0.25 and lam < 0.5 and eps / lam < lam):
        raise ValueError("need eps < 1/4, lam < 1/2 and a non-empty annulus")
    cur = _prop32_norms(series, lam, eps, per_decade, n_theta)
    change = np.inf
    for _ in range(max_doublings):
        per_decade *= 2
        nxt = _prop32_norms(series, lam, eps, per_decade, n_theta)
        change = max(abs(nxt[k] - cur[k]) / max(abs(nxt[k]), 1e-300)
                     for k in nxt if abs(nxt[k]) > 1e-12 * max(1.0, abs(nxt["rhs"])))
        cur = nxt
        if change < rel_tol:
            break
    if cur["rhs"] == 0 and cur["lhs_31"] > 0:
        raise ArithmeticError("zero right-hand side with nonzero left-hand side")
    rhs = cur["rhs"]
    cur["ratio_31"] = cur["lhs_31"] / rhs if rhs > 0 else 0.0
    den = cur["hr_L21_inner"] + rhs
    cur["ratio_32"] = cur["lhs_32"] / den if den > 0 else 0.0
    cur["refinement_change"] = float(change)
    cur["grid"] = {"per_decade": per_decade, "n_theta": n_theta}
    return cur
