"""Planted bubbling sequences used by the verification harness and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bubbles import BubbleSpec, RationalMap, constant_body
from .fields import Field, Grid

KINDS = ("single", "concentric", "separated")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    grid: Grid
    body: Field
    bubbles: list
    parents: dict = field(default_factory=dict)   # label -> parent label
    steps: int = 0                                # index count when there are no bubbles

    @property
    def n_steps(self) -> int:
        return self.bubbles[0].n_steps if self.bubbles else self.steps

    @property
    def planted(self) -> int:
        return len(self.bubbles)

    def final_scale(self) -> float:
        return min(b.scales[-1] for b in self.bubbles)


def _steps(n_steps: int) -> np.ndarray:
    return np.arange(1, n_steps + 1, dtype=float)


def single(n_steps: int = 8, per_decade: int = 64, n_theta: int = 256) -> Scenario:
    """One degree-one bubble at the origin with ``t_k = 4^-k``."""
    k = _steps(n_steps)
    b = BubbleSpec(RationalMap.identity(), (0.0, 0.0), 4.0 ** -k, "A")
    g = Grid.log_per_decade(1e-3 * b.scales[-1], 1.0, per_decade, n_theta)
    return Scenario("single", g, constant_body(g), [b])


def concentric(n_steps: int = 8, per_decade: int = 64, n_theta: int = 256) -> Scenario:
    """A bubble at scale ``2^-k`` carrying a second one at scale ``4^-k`` at its south pole."""
    k = _steps(n_steps)
    parent = BubbleSpec(RationalMap.identity(), (0.0, 0.0), 2.0 ** -k, "A")
    child = BubbleSpec(RationalMap.inversion(), (0.0, 0.0), 4.0 ** -k, "B")
    g = Grid.log_per_decade(1e-3 * child.scales[-1], 1.0, per_decade, n_theta)
    return Scenario("concentric", g, constant_body(g), [parent, child], {"B": "A"})


def separated(n_steps: int = 8, n_r: int = 512, n_theta: int = 1024,
              offset: float = 0.25) -> Scenario:
    """Two degree-one bubbles at ``(+-offset, 0)`` with ``t_k = 0.1 * 0.8^k``."""
    k = _steps(n_steps)
    t = 0.1 * 0.8 ** k
    g = Grid.disc(1.0, n_r, n_theta)
    a = BubbleSpec(RationalMap.identity(), (offset, 0.0), t, "A")
    b = BubbleSpec(RationalMap.identity(), (-offset, 0.0), t, "B")
    return Scenario("separated", g, constant_body(g), [a, b])


def empty(n_steps: int = 8, n_r: int = 64, n_theta: int = 64) -> Scenario:
    g = Grid.disc(1.0, n_r, n_theta)
    return Scenario("empty", g, constant_body(g), [], steps=n_steps)


def build(name: str, **kw) -> Scenario:
    table = {"single": single, "concentric": concentric, "separated": separated,
             "empty": empty}
    if name not in table:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(table)}")
    return table[name](**kw)


def _coeffs(v) -> list:
    return [complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in v]


def from_dict(d: dict) -> Scenario:
    """Scenario from a JSON-style spec.

    Either ``{"scenario": name, ...keyword overrides}`` or an explicit form::

        {"grid": {"r_min": 0, "r_max": 1, "n_r": 256, "n_theta": 256},
         "bubbles": [{"p": [0, 1], "q": [1], "centers": [[0, 0]],
                      "scales": [0.1, 0.05], "label": "A", "parent": null}]}
    """
    if "scenario" in d:
        kw = {k: v for k, v in d.items() if k != "scenario"}
        return build(d["scenario"], **kw)
    for key in ("grid", "bubbles"):
        if key not in d:
            raise ValueError(f"scenario spec is missing {key!r}")
    gd = d["grid"]
    if "per_decade" in gd:
        g = Grid.log_per_decade(gd["r_min"], gd.get("r_max", 1.0), gd["per_decade"],
                                gd.get("n_theta", 256))
    else:
        g = Grid(gd.get("r_min", 0.0), gd.get("r_max", 1.0), gd["n_r"], gd.get("n_theta", 256))
    bubbles, parents = [], {}
    for i, b in enumerate(d["bubbles"]):
        label = b.get("label", chr(ord("A") + i))
        m = RationalMap(_coeffs(b["p"]), _coeffs(b.get("q", [1])))
        bubbles.append(BubbleSpec(m, b.get("centers", [[0.0, 0.0]]), b["scales"], label))
        if b.get("parent"):
            parents[label] = b["parent"]
    return Scenario(d.get("name", "custom"), g, constant_body(g), bubbles, parents)
