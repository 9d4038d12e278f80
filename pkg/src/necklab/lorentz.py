"""Exact Lorentz-space functionals of piecewise-constant fields.

A field is read as constant on each grid cell, so its distribution function
``lambda(s) = |{|f| > s}|`` is a step function and every functional below is
a finite sum over the steps of the decreasing rearrangement.

Normalisations used throughout::

    ||f||_{2,1}   = int_0^inf lambda(s)^{1/2} ds
    ||f||_{2,inf} = sup_s  s lambda(s)^{1/2}
    ||f||_2^2     = int_0^inf 2 s lambda(s) ds

With these, ``|int f g| <= 2 ||f||_{2,1} ||g||_{2,inf}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import Field, FieldError, integrate


@dataclass(frozen=True)
class RearrangedProfile:
    """Distinct values of ``|f|`` in decreasing order with the measure at each value.

    ``cumulative[j]`` is ``lambda(s)`` for ``values[j+1] <= s < values[j]``.
    """
    values: np.ndarray
    measures: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.measures)

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    def steps(self) -> tuple[np.ndarray, np.ndarray]:
        """Step heights ``a_j - a_{j+1}`` (with ``a_{m+1} = 0``) and the level measures."""
        a = self.values
        nxt = np.append(a[1:], 0.0)
        return a - nxt, self.cumulative

    def distribution(self, s: float) -> float:
        return float(self.measures[self.values > s].sum())


def _abs_values(v) -> np.ndarray:
    if isinstance(v, Field):
        return np.abs(v.values) if v.is_scalar else v.magnitude().values
    return np.abs(np.asarray(v))


def _weights(v, weights) -> np.ndarray:
    if weights is not None:
        return np.asarray(weights)
    if isinstance(v, Field):
        return v.grid.cell_measure
    raise FieldError("raw arrays need explicit cell weights")


def profile(v, weights: Optional[np.ndarray] = None) -> RearrangedProfile:
    """Decreasing rearrangement of ``|v|``.  Cells of zero weight are ignored."""
    a = _abs_values(v).ravel()
    w = np.broadcast_to(_weights(v, weights), _abs_values(v).shape).ravel()
    keep = w > 0
    a, w = a[keep], w[keep]
    if a.size == 0:
        return RearrangedProfile(np.zeros(0), np.zeros(0))
    vals, inv = np.unique(a, return_inverse=True)  # ties merge into one step
    meas = np.bincount(inv, weights=w, minlength=vals.size)
    return RearrangedProfile(vals[::-1].copy(), meas[::-1].copy())


def distribution_function(v, s: float, weights: Optional[np.ndarray] = None) -> float:
    if s < 0:
        raise ValueError("distribution function needs s >= 0")
    a = _abs_values(v)
    w = np.broadcast_to(_weights(v, weights), a.shape)
    return float(w[a > s].sum())


def norm_L21(v, weights: Optional[np.ndarray] = None) -> float:
    p = profile(v, weights)
    if p.values.size == 0:
        return 0.0
    dh, lam = p.steps()
    return float(np.sum(dh * np.sqrt(lam)))


def norm_L2weak(v, weights: Optional[np.ndarray] = None) -> float:
    p = profile(v, weights)
    if p.values.size == 0:
        return 0.0
    return float(np.max(p.values * np.sqrt(p.cumulative)))


def norm_L2_layercake(v, weights: Optional[np.ndarray] = None) -> float:
    p = profile(v, weights)
    if p.values.size == 0:
        return 0.0
    top = p.values[0]
    if top == 0:
        return 0.0
    a = p.values / top          # scaled so tiny or huge values do not under/overflow
    nxt = np.append(a[1:], 0.0)
    return float(top * np.sqrt(np.sum((a ** 2 - nxt ** 2) * p.cumulative)))


def norm_L2(v, weights: Optional[np.ndarray] = None) -> float:
    """Direct quadrature route to the L^2 norm."""
    a = _abs_values(v)
    w = np.broadcast_to(_weights(v, weights), a.shape)
    top = float(np.max(a)) if a.size else 0.0
    if top == 0:
        return 0.0
    return float(top * np.sqrt(np.sum((a / top) ** 2 * w)))


def norm_L1(v, weights: Optional[np.ndarray] = None) -> float:
    a = _abs_values(v)
    return float(np.sum(a * np.broadcast_to(_weights(v, weights), a.shape)))


def norm_LlogL(v, weights: Optional[np.ndarray] = None) -> float:
    a = _abs_values(v)
    w = np.broadcast_to(_weights(v, weights), a.shape)
    return float(np.sum(a * np.log(2.0 + a) * w))


def duality_check(f: Field, g: Field, weights: Optional[np.ndarray] = None) -> tuple[float, float]:
    """Return ``(|int f g|, 2 ||f||_{2,1} ||g||_{2,inf})``."""
    if not f.grid.same_as(g.grid):
        raise FieldError("duality_check needs fields on one grid")
    w = f.grid.cell_measure if weights is None else weights
    lhs = abs(float(integrate(f.grid, Field(f.grid, f.values * g.values), w)))
    return lhs, 2.0 * norm_L21(f, w) * norm_L2weak(g, w)


def report(v, weights: Optional[np.ndarray] = None) -> dict:
    """All functionals plus the profile breakpoints, ready for JSON."""
    p = profile(v, weights)
    return {
        "L21": norm_L21(v, weights),
        "L2weak": norm_L2weak(v, weights),
        "L2_layercake": norm_L2_layercake(v, weights),
        "L2_quadrature": norm_L2(v, weights),
        "LlogL": norm_LlogL(v, weights),
        "breakpoints": {"values": p.values.tolist(), "lambda": p.cumulative.tolist()},
    }
