"""Point-scale extraction, bubble strings and the bubble/neck/empty/body cover.

All routines act on the density ``|Omega|^2`` sampled on a grid.  Masses are
compared to ``eps**2`` because ``eps`` bounds the ``L^2`` norm of ``Omega``.
Balls are node-inclusion balls; the radius at which a ball around a node
reaches a given mass is linearly interpolated between consecutive nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fields import Field, Grid

LADDER_RATIO = 2.0 ** 0.25


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


@dataclass(frozen=True)
class Extraction:
    """Result of one concentration search."""
    center: tuple
    radius: float
    node: int
    mass: float


@dataclass
class PointScaleSequence:
    id: int
    ks: np.ndarray
    centers: np.ndarray
    radii: np.ndarray

    def at(self, k: int) -> tuple[np.ndarray, float]:
        j = int(np.nonzero(self.ks == k)[0][0])
        return self.centers[j], float(self.radii[j])

    @property
    def final(self) -> tuple[np.ndarray, float]:
        return self.centers[-1], float(self.radii[-1])

    def to_dict(self) -> dict:
        return {"id": self.id, "k": self.ks.tolist(), "x": self.centers[:, 0].tolist(),
                "y": self.centers[:, 1].tolist(), "rho": self.radii.tolist()}


@dataclass(frozen=True)
class TreeConfig:
    eps: float = 4.0
    theta: float = 10.0
    delta: float = 0.3
    rho_decay: float = 0.5      # rho "tends to zero": last/first below this, monotone tail
    n_candidates: int = 48
    n_refine: int = 96

    def __post_init__(self):
        for name in ("eps", "theta", "delta", "rho_decay"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# ---------------------------------------------------------------------------
# concentration search


class _Nodes:
    """Node coordinates and masses with exclusions applied."""

    def __init__(self, density: Field, excluded: Sequence[Ball]):
        g = density.grid
        self.grid = g
        self.x2, self.y2 = g.x, g.y
        self.x = self.x2.ravel()
        self.y = self.y2.ravel()
        dens = np.asarray(density.values, float).copy()
        for b in excluded:
            dens[np.hypot(self.x2 - b.center[0], self.y2 - b.center[1]) < b.radius] = 0.0
        self.mass2 = dens * g.cell_measure
        self.dens = dens.ravel()
        self.mass = self.mass2.ravel()

    def _window(self, node: int, reach: float):
        """Coordinates and masses of a block of nodes containing ``B_reach(node)``."""
        g = self.grid
        cx, cy = self.x[node], self.y[node]
        rc = np.hypot(cx, cy)
        i0 = int(np.searchsorted(g.radii, rc - reach, side="left"))
        i1 = int(np.searchsorted(g.radii, rc + reach, side="right"))
        i0, i1 = max(0, i0 - 1), min(g.n_r, i1 + 1)
        rows = slice(i0, i1)
        if rc > reach and g.radii[i0] > 0:
            half = np.arcsin(min(1.0, reach / max(rc - reach, g.radii[i0])))
            w = int(np.ceil(half / g.dtheta)) + 1
            if 2 * w + 1 < g.n_theta:
                jc = node % g.n_theta
                cols = np.arange(jc - w, jc + w + 1) % g.n_theta
                return (self.x2[rows][:, cols].ravel(), self.y2[rows][:, cols].ravel(),
                        self.mass2[rows][:, cols].ravel())
        return self.x2[rows].ravel(), self.y2[rows].ravel(), self.mass2[rows].ravel()

    def radius_for(self, node: int, target: float, cap: float) -> float:
        """Smallest radius around ``node`` holding mass ``target``; ``inf`` beyond ``cap``."""
        cx, cy = self.x[node], self.y[node]
        cap = min(cap, self.grid.r_max - np.hypot(cx, cy))
        if cap <= 0:
            return np.inf
        # the interpolation needs the first node beyond the radius, hence the slack
        reach = 1.25 * cap
        xs, ys, ms_all = self._window(node, reach)
        d = np.hypot(xs - cx, ys - cy)
        keep = (d <= reach) & (ms_all > 0)
        dn, mn = d[keep], ms_all[keep]
        if mn.sum() < target:
            return np.inf
        # locate the crossing with a histogram, then sort only that bin
        nb = max(1, dn.size // 64)
        top = dn.max() * (1 + 1e-12) + 1e-300
        bins = np.minimum((dn / top * nb).astype(int), nb - 1)
        cum = np.cumsum(np.bincount(bins, weights=mn, minlength=nb))
        # a total equal to the target up to round-off may sum to just below it
        b = min(int(np.searchsorted(cum, target)), int(bins.max()))
        before = bins < b
        prev_m = cum[b - 1] if b > 0 else 0.0
        prev_d = dn[before].max() if b > 0 and before.any() else 0.0
        inbin = np.nonzero(bins == b)[0]
        order = inbin[np.argsort(dn[inbin], kind="stable")]
        ds, ms = dn[order], mn[order]
        cm = prev_m + np.cumsum(ms)
        j = min(int(np.searchsorted(cm, target)), ms.size - 1)
        if j > 0:
            prev_m, prev_d = cm[j - 1], ds[j - 1]
        frac = (target - prev_m) / ms[j] if ms[j] > 0 else 1.0
        r = prev_d + frac * (ds[j] - prev_d)
        return float(r) if r <= cap else np.inf


def concentration_radius(density: Field, eps: float, excluded: Sequence[Ball] = (),
                         hints: Sequence = (), n_candidates: int = 48,
                         n_refine: int = 96) -> Optional[Extraction]:
    """Smallest ball inside the grid disc whose corrected mass reaches ``eps**2``.

    Returns ``None`` when the corrected total mass is below ``eps**2``.
    Centres are grid nodes: the densest nodes, the nodes nearest to ``hints``
    and a neighbourhood of the best of those.  Ties go to the lowest node index.
    """
    nodes = _Nodes(density, excluded)
    target = eps ** 2
    if nodes.mass.sum() < target:
        return None
    full = np.asarray(density.values, float).ravel()
    cand = set(np.argsort(-nodes.dens, kind="stable")[:n_candidates].tolist())
    cand |= set(np.argsort(-full, kind="stable")[:n_candidates].tolist())
    for h in hints:
        cand.add(int(np.argmin(np.hypot(nodes.x - h[0], nodes.y - h[1]))))

    best_r, best_node = np.inf, -1

    def consider(idxs):
        nonlocal best_r, best_node
        # densest first so the radius cap tightens early; ties still go to the lowest index
        for i in sorted(idxs, key=lambda n: (-nodes.dens[n], n)):
            cap = best_r * (1 + 1e-12) if np.isfinite(best_r) else np.inf
            r = nodes.radius_for(i, target, cap)
            if r < best_r * (1 - 1e-12) or (abs(r - best_r) <= 1e-12 * best_r and i < best_node):
                best_r, best_node = r, i

    consider(cand)
    if best_node < 0:
        # no candidate fits; scan everything with mass
        consider(np.nonzero(nodes.mass > 0)[0].tolist())
        if best_node < 0:
            return None
    # local refinement around the best centre
    for _ in range(3):
        d = np.hypot(nodes.x - nodes.x[best_node], nodes.y - nodes.y[best_node])
        near = np.argsort(d, kind="stable")[:n_refine]
        before = best_node
        consider(set(near.tolist()) - {best_node})
        if best_node == before:
            break
    c = (float(nodes.x[best_node]), float(nodes.y[best_node]))
    return Extraction(c, float(best_r), int(best_node), target)


def ball_mass(density: Field, center, r_lo: float, r_hi: float,
              excluded: Sequence[Ball] = ()) -> float:
    g = density.grid
    w = g.ball_weights(center, r_lo, r_hi)
    for b in excluded:
        w = np.where(np.hypot(g.x - b.center[0], g.y - b.center[1]) < b.radius, 0.0, w)
    return float(np.sum(density.values * w))


# ---------------------------------------------------------------------------
# point-scale sequences


def _monotone_tail(v: np.ndarray, increasing: bool) -> bool:
    tail = v[len(v) // 2:]
    if tail.size < 2:
        return True
    d = np.diff(tail)
    return bool(np.all(d > 0) if increasing else np.all(d <= 0))


def separation(seq_l: PointScaleSequence, seq_i: PointScaleSequence) -> np.ndarray:
    """``rho_i / rho_l + |x_l - x_i| / rho_i`` on the indices both sequences share."""
    ks = np.intersect1d(seq_l.ks, seq_i.ks)
    out = []
    for k in ks:
        xl, rl = seq_l.at(k)
        xi, ri = seq_i.at(k)
        out.append(ri / rl + np.hypot(*(xl - xi)) / ri)
    return np.array(out)


@dataclass
class ExtractionResult:
    sequences: list
    log: list
    raw: list                   # per k: list of Extraction
    config: TreeConfig

    def to_dict(self) -> dict:
        return {"sequences": [s.to_dict() for s in self.sequences], "log": self.log,
                "eps": self.config.eps, "theta": self.config.theta}


def extract_all(density: Field, cfg: TreeConfig, hints: Sequence = (),
                max_count: Optional[int] = None) -> list:
    """Repeated extraction at one index until the corrected mass drops below ``eps**2``."""
    total = float(np.sum(density.values * density.grid.cell_measure))
    limit = int(total / cfg.eps ** 2) + 1 if max_count is None else max_count
    out, excl = [], []
    for _ in range(limit):
        e = concentration_radius(density, cfg.eps, excl, hints, cfg.n_candidates, cfg.n_refine)
        if e is None:
            break
        out.append(e)
        excl.append(Ball(e.center, e.radius))
    return out


def extract_point_scales(densities: Sequence[Field], cfg: TreeConfig = TreeConfig(),
                         ks: Optional[Sequence[int]] = None) -> ExtractionResult:
    """Run the extraction at every index and keep the separated sequences.

    The ``i``-th extraction at each index forms candidate sequence ``i``.  It
    is kept when its radius tends to zero and, against every kept earlier
    sequence, the separation exceeds ``theta`` at the last index while
    increasing over the last half.  A candidate whose radius does not tend to
    zero ends the search.
    """
    if len(densities) < 4:
        raise ValueError("need at least four indices")
    ks = np.arange(len(densities)) if ks is None else np.asarray(ks)
    raw, hints = [], []
    for dens in densities:
        ext = extract_all(dens, cfg, hints)
        raw.append(ext)
        hints = [e.center for e in ext]
    n_cand = max(len(r) for r in raw)
    half = len(ks) // 2
    kept, log = [], []
    for i in range(n_cand):
        present = [j for j, r in enumerate(raw) if len(r) > i]
        if not set(range(half, len(ks))) <= set(present):
            log.append({"candidate": i, "action": "stop", "reason": "missing at late indices"})
            break
        seq = PointScaleSequence(
            len(kept), ks[present],
            np.array([raw[j][i].center for j in present]),
            np.array([raw[j][i].radius for j in present]))
        r = seq.radii
        if not (r[-1] <= cfg.rho_decay * r[0] and _monotone_tail(r, increasing=False)):
            log.append({"candidate": i, "action": "stop", "reason": "radius does not tend to zero",
                        "rho_first": float(r[0]), "rho_last": float(r[-1])})
            break
        if np.hypot(*seq.final[0]) > densities[-1].grid.r_max - cfg.delta:
            log.append({"candidate": i, "action": "discard", "reason": "boundary concentration"})
            continue
        absorbed = None
        for other in kept:
            s = separation(other, seq)
            if not (s[-1] > cfg.theta and _monotone_tail(s, increasing=True)):
                absorbed = other.id
                break
        if absorbed is not None:
            log.append({"candidate": i, "action": "discard", "absorbed_by": absorbed})
            continue
        kept.append(seq)
        log.append({"candidate": i, "action": "keep", "id": seq.id})
    return ExtractionResult(kept, log, raw, cfg)


# ---------------------------------------------------------------------------
# strings


@dataclass
class BubbleTree:
    sequences: list
    parent: dict                 # id -> parent id or None
    strings: list                # [(initial id, [child ids])]
    gamma: float

    def children(self, sid: int) -> list:
        return [c for c, p in self.parent.items() if p == sid]

    @property
    def roots(self) -> list:
        return [s for s, p in self.parent.items() if p is None]

    def by_id(self, sid: int) -> PointScaleSequence:
        return next(s for s in self.sequences if s.id == sid)

    def to_dict(self) -> dict:
        return {"parent": {str(k): v for k, v in self.parent.items()},
                "strings": [{"initial": a, "children": b} for a, b in self.strings],
                "gamma": self.gamma}


def group_strings(sequences: Sequence[PointScaleSequence], theta: float = 10.0) -> BubbleTree:
    """Attach each sequence to the smallest larger-scale bubble it stays close to."""
    order = sorted(sequences, key=lambda s: (-s.final[1], s.id))
    parent: dict = {}
    gamma = 2.0
    for pos, s in enumerate(order):
        xs, rs = s.final
        parent[s.id] = None
        for p in reversed(order[:pos]):
            xp, rp = p.final
            if np.hypot(*(xs - xp)) / rp <= theta:
                parent[s.id] = p.id
                gamma = max(gamma, (np.hypot(*(xs - xp)) + rs) / rp)
                break
    roots = [s.id for s in order if parent[s.id] is None]

    def descendants(sid):
        out = []
        for c in [t.id for t in order if parent[t.id] == sid]:
            out += [c] + descendants(c)
        return out

    strings = [(r, descendants(r)) for r in roots]
    return BubbleTree(list(order), parent, strings, float(gamma))


# ---------------------------------------------------------------------------
# domain decomposition


@dataclass
class Region:
    kind: str                    # bubble | neck | empty | body
    center: tuple
    r_in: float
    r_out: float
    owner: Optional[int] = None
    mass: float = 0.0
    dyadic: list = field(default_factory=list)
    valid: bool = True

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": list(self.center), "r_in": self.r_in,
                "r_out": self.r_out, "owner": self.owner, "mass": self.mass,
                "dyadic": self.dyadic, "valid": self.valid}


@dataclass
class DomainDecomposition:
    regions: list
    labels: np.ndarray           # per node: index into regions
    violations: list

    @property
    def necks(self) -> list:
        return [r for r in self.regions if r.kind == "neck"]

    @property
    def valid(self) -> bool:
        return not self.violations

    def count(self, kind: str) -> int:
        return sum(r.kind == kind for r in self.regions)

    def to_dict(self) -> dict:
        return {"regions": [r.to_dict() for r in self.regions],
                "violations": self.violations, "valid": self.valid}


def dyadic_table(density: Field, center, r_lo: float, r_hi: float) -> list:
    """Masses of ``B_{2 rho} \\ B_rho`` for ``rho`` on a ``2^{1/4}`` ladder in ``[r_lo, r_hi]``."""
    out = []
    rho = r_lo
    while rho <= r_hi * (1 + 1e-12):
        out.append((float(rho), ball_mass(density, center, rho, 2 * rho)))
        rho *= LADDER_RATIO
    return out


def _neck(density, center, r_in, r_out, owner, eps) -> tuple[Region, list]:
    table = dyadic_table(density, center, r_in, r_out / 2) if r_out > 2 * r_in else []
    bad = [(rho, m) for rho, m in table if m >= eps ** 2]
    reg = Region("neck", tuple(map(float, center)), float(r_in), float(r_out), owner,
                 ball_mass(density, center, r_in, r_out), table, not bad)
    viol = [{"neck_owner": owner, "rho": rho, "mass": m,
             "new_candidate": {"center": list(map(float, center)), "radius": rho}}
            for rho, m in bad]
    return reg, viol


def decompose_domains(density: Field, tree: BubbleTree, cfg: TreeConfig = TreeConfig(),
                      k: Optional[int] = None) -> DomainDecomposition:
    """Label bubble balls, neck annuli, empty balls and the body at one index.

    A bubble with radius ``rho`` and outer radius ``d`` gets the ball
    ``B_R`` with ``R = sqrt(gamma rho d)`` and the neck ``B_d \\ B_R``; a root
    uses ``d = delta`` shrunk to half the distance to other roots and the
    boundary, a child uses ``delta`` times its parent's radius.  Roots closer
    than ``2 delta`` are covered jointly: one neck around the cluster and an
    empty ball for whatever the bubble balls leave inside.
    """
    g = density.grid
    x, y = g.x, g.y
    labels = np.full(g.shape, -1, int)
    regions: list = []
    violations: list = []
    eps = cfg.eps

    def pos(sid):
        s = tree.by_id(sid)
        return s.final if k is None else s.at(k)

    def paint(reg, inside):
        regions.append(reg)
        labels[inside] = len(regions) - 1

    def dist(c):
        return np.hypot(x - c[0], y - c[1])

    # cluster the roots
    roots = tree.roots
    clusters: list = []
    for r in roots:
        c = pos(r)[0]
        hit = [cl for cl in clusters if any(np.hypot(*(c - pos(o)[0])) < 2 * cfg.delta for o in cl)]
        merged = [r] + [o for cl in hit for o in cl]
        clusters = [cl for cl in clusters if cl not in hit] + [merged]
    clusters.sort(key=lambda cl: min(cl))

    def cluster_geometry(cl):
        pts = np.array([pos(s)[0] for s in cl])
        center = pts.mean(axis=0)
        spread = max(np.hypot(*(p - center)) + np.sqrt(tree.gamma * pos(s)[1] * cfg.delta)
                     for p, s in zip(pts, cl))
        return center, spread

    geo = [cluster_geometry(cl) for cl in clusters]
    outer = []
    for i, (c, spread) in enumerate(geo):
        d = min(cfg.delta, g.r_max - np.hypot(*c))
        for j, (c2, s2) in enumerate(geo):
            if j != i:
                d = min(d, 0.5 * np.hypot(*(c - c2)))
        outer.append(max(d, spread))

    def bubble_with_children(sid, d_out):
        c, rho = pos(sid)
        R = min(np.sqrt(tree.gamma * rho * d_out), d_out)
        reg, viol = _neck(density, c, R, d_out, sid, eps)
        violations.extend(viol)
        paint(reg, (dist(c) < d_out) & (dist(c) >= R))
        inside = dist(c) < R
        paint(Region("bubble", tuple(map(float, c)), 0.0, float(R), sid,
                     float(np.sum(density.values * g.cell_measure * inside))), inside)
        for ch in tree.children(sid):
            bubble_with_children(ch, min(cfg.delta * rho, R))

    # body first, then paint clusters over it
    for cl, (c, spread), d_out in zip(clusters, geo, outer):
        if len(cl) == 1:
            bubble_with_children(cl[0], d_out)
            continue
        reg, viol = _neck(density, c, spread, d_out, None, eps)
        violations.extend(viol)
        paint(reg, (dist(c) < d_out) & (dist(c) >= spread))
        inside = dist(c) < spread
        empty = Region("empty", tuple(map(float, c)), 0.0, float(spread), None)
        paint(empty, inside)
        for s in cl:
            pts = [pos(o)[0] for o in cl if o != s]
            sep = min(np.hypot(*(pos(s)[0] - p)) for p in pts)
            bubble_with_children(s, min(cfg.delta, 0.5 * sep))
        e_idx = regions.index(empty)
        empty.mass = float(np.sum(density.values * g.cell_measure * (labels == e_idx)))
        if empty.mass >= eps ** 2:
            empty.valid = False
            violations.append({"empty_cluster": cl, "mass": empty.mass})
    body_mask = labels == -1
    body = Region("body", (0.0, 0.0), 0.0, float(g.r_max), None,
                  float(np.sum(density.values * g.cell_measure * body_mask)))
    regions.append(body)
    labels[body_mask] = len(regions) - 1
    return DomainDecomposition(regions, labels, violations)
