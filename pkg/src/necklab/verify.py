"""Energy identities, neck decay and the uniform second-order bound along sequences.

Every contract below is a finite-k surrogate: a quantity "tends to zero"
when it decreases strictly over the last half of the indices, and the
identities are checked against bubble energies measured on the same grid
and region as ``u_k`` so that discretisation error cancels.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bubbletree as bt
from .bubbles import bubble_field, bubble_gradient, glue, sphere_omega, tangent_gradient
from .fields import Field, cartesian_gradient, gradient_norm, hessian_norm, laplacian
from .hopf import hopf_differential
from .lorentz import norm_L1, norm_L2, norm_L21, norm_LlogL
from .scenarios import Scenario


@dataclass(frozen=True)
class VerifyConfig:
    r: float = 0.9              # body radius for the identities
    K: float = 0.9              # K = B_K for the global bound
    tol_ei: float = 0.05
    growth: float = 10.0        # required growth of sup |grad u_k|
    bound_factor: float = 3.0   # max W21 <= factor * median W21
    tree: bt.TreeConfig = field(default_factory=bt.TreeConfig)

    def __post_init__(self):
        for name in ("r", "K", "tol_ei", "growth", "bound_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (self.r <= 1 and self.K < 1):
            raise ValueError("r and K must lie inside the unit disc")


def decreasing_tail(v, floor: float = 0.0) -> bool:
    """Strictly decreasing over the last half; entries at or below ``floor``
    count as having reached zero and must stay there."""
    v = np.asarray(v, float)
    tail = v[len(v) // 2:]
    for a, b in zip(tail[:-1], tail[1:]):
        if a <= floor:
            if b > floor:
                return False
        elif not b < a:
            return False
    return True


def _union_L21(mags: list, weights: np.ndarray) -> float:
    """``int (sum_j lambda_j)^{1/2}`` for functions living on disjoint copies of the domain."""
    vals = np.concatenate([m.values.ravel() for m in mags])
    w = np.concatenate([np.broadcast_to(weights, m.values.shape).ravel() for m in mags])
    return norm_L21(vals, w)


# ---------------------------------------------------------------------------
# per-index quantities


def index_quantities(sc: Scenario, k: int, cfg: VerifyConfig,
                     perturb: Optional[Callable] = None) -> tuple[dict, Field, Field]:
    """Scalar reports at index ``k``; also returns ``u_k`` and ``|Omega_k|^2``."""
    g = sc.grid
    u = glue(sc.body, sc.bubbles, k)
    if perturb is not None:
        u = perturb(u, k)
    wr = g.annulus_weights(0.0, cfg.r)
    wK = g.annulus_weights(0.0, cfg.K)
    gx, gy = tangent_gradient(u)
    om = sphere_omega(u, (gx, gy))
    dens = om.density()
    grad = gradient_norm(u)
    hess = hessian_norm(u)
    f = Field(g, -laplacian(u).components() - om.dot(gx, gy))
    phi = hopf_differential(u)
    phi_half = Field(g, np.sqrt(np.abs(phi.values)))

    E2 = float(np.sum(grad.values ** 2 * wr))
    E21 = norm_L21(grad, wr)
    H1 = norm_L1(hess, wr)
    parts = [gradient_norm(sc.body)] + [
        gradient_norm(bubble_field(b.map, g, b.centers[k], b.scales[k])) for b in sc.bubbles]
    hparts = [hessian_norm(sc.body)] + [
        hessian_norm(bubble_field(b.map, g, b.centers[k], b.scales[k])) for b in sc.bubbles]
    E2_parts = [float(np.sum(p.values ** 2 * wr)) for p in parts]
    E21_parts = [norm_L21(p, wr) for p in parts]
    degree = sum(b.map.degree for b in sc.bubbles)
    q = {
        "k": k,
        "E2": E2,
        "E21": E21,
        "W21": norm_L1(hess, wK) + norm_L21(grad, wK),
        "grad_inf": float(np.max(grad.values)),
        "grad_L2": norm_L2(grad),
        "omega_L2": float(np.sqrt(np.sum(dens.values * g.cell_measure))),
        "f_LlogL": norm_LlogL(f.magnitude()),
        "f_L2": norm_L2(f.magnitude()),
        "phi_half_L21_K": norm_L21(phi_half, wK),
        "E2_bubbles": E2_parts[1:],
        "defect2": abs(E2 - sum(E2_parts)),
        "defect2_analytic": abs(E2 - 8 * np.pi * degree),
        "defect21": abs(E21 - _union_L21(parts, wr)),
        "defect21_squared": abs(E21 ** 2 - sum(p ** 2 for p in E21_parts)),
        "defectW21": abs(H1 - sum(norm_L1(h, wr) for h in hparts)),
    }
    return q, u, dens


# ---------------------------------------------------------------------------
# whole-sequence reports


@dataclass
class SequenceReport:
    scenario: str
    rows: list                          # one dict per index
    tree: Optional[bt.BubbleTree]
    extraction: Optional[bt.ExtractionResult]
    decompositions: list
    contracts: dict

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], float)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.contracts.values())

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "contracts": self.contracts,
            "tree": self.tree.to_dict() if self.tree else None,
            "extraction": self.extraction.to_dict() if self.extraction else None,
            "decompositions": [d.to_dict() if d is not None else None
                               for d in self.decompositions[-1:]],
            "pass": self.passed,
        }


def _neck_quantities(u: Field, dens: Field, tree, cfg: VerifyConfig, k: int):
    g = u.grid
    dd = bt.decompose_domains(dens, tree, cfg.tree, k=k)
    neck_ids = [i for i, r in enumerate(dd.regions) if r.kind == "neck"]
    mask = np.isin(dd.labels, neck_ids)
    w = g.cell_measure * mask
    grad = gradient_norm(u)
    phi = hopf_differential(u)
    osc = 0.0
    for i in neck_ids:
        sel = dd.labels == i
        if sel.any():
            vals = u.components()[sel]
            osc = max(osc, float(np.max(vals.max(axis=0) - vals.min(axis=0))))
    return {
        "neck_E2": float(np.sum(grad.values ** 2 * w)),
        "neck_E21": norm_L21(grad, w) if mask.any() else 0.0,
        "neck_osc": osc,
        "neck_phi_half_L21": norm_L21(Field(g, np.sqrt(np.abs(phi.values))), w)
        if mask.any() else 0.0,
        "neck_valid": dd.valid,
    }, dd


def _contract(ok: bool, **detail) -> dict:
    return {"pass": bool(ok), **{k: (float(v) if isinstance(v, (np.floating, float)) else v)
                                 for k, v in detail.items()}}


def _index_task(args):
    q, _, dens = index_quantities(*args)
    return q, dens


def run_sequence(sc: Scenario, cfg: VerifyConfig = VerifyConfig(),
                 perturb: Optional[Callable] = None, headline: bool = False,
                 jobs: int = 1) -> SequenceReport:
    """Synthesize every index, extract the bubble tree and evaluate all contracts.

    With ``jobs > 1`` the per-index work runs in a process pool; results are
    collected in index order so the report does not depend on scheduling.
    """
    tasks = [(sc, k, cfg, perturb) for k in range(sc.n_steps)]
    if jobs > 1 and perturb is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_index_task, tasks))
    else:
        done = [_index_task(t) for t in tasks]
    rows = [q for q, _ in done]
    dens_list = [d for _, d in done]
    tree = ext = None
    decomps = [None] * sc.n_steps
    if sc.bubbles:
        ext = bt.extract_point_scales(dens_list, cfg.tree)
        tree = bt.group_strings(ext.sequences, cfg.tree.theta)
    for k in range(sc.n_steps):
        if tree is None or any(k not in s.ks for s in tree.sequences):
            rows[k].update(neck_E2=0.0, neck_E21=0.0, neck_osc=0.0, neck_phi_half_L21=0.0,
                           neck_valid=True)
            continue
        u = glue(sc.body, sc.bubbles, k)
        if perturb is not None:
            u = perturb(u, k)
        nq, decomps[k] = _neck_quantities(u, dens_list[k], tree, cfg, k)
        rows[k].update(nq)
    rep = SequenceReport(sc.name, rows, tree, ext, decomps, {})
    rep.contracts = contracts(rep, sc, cfg, headline)
    return rep


def contracts(rep: SequenceReport, sc: Scenario, cfg: VerifyConfig, headline: bool) -> dict:
    c = {}
    if not sc.bubbles:
        c["no_bubbles"] = _contract(rep.column("defect2")[-1] < 1e-8,
                                    defect2=rep.column("defect2")[-1])
        return c
    E2, E21 = rep.column("E2"), rep.column("E21")
    for name, total in (("defect2", E2), ("defect21", E21)):
        d = rep.column(name)
        floor = 1e-12 * total[-1]
        c[f"{name}_decreasing"] = _contract(decreasing_tail(d, floor),
                                            tail=d[len(d) // 2:].tolist())
        c[f"{name}_final"] = _contract(d[-1] < cfg.tol_ei * total[-1],
                                       relative=d[-1] / total[-1], tol=cfg.tol_ei)
    da = rep.column("defect2_analytic")
    c["defect2_analytic_final"] = _contract(da[-1] < cfg.tol_ei * E2[-1],
                                            relative=da[-1] / E2[-1])
    half = len(rep.rows) // 2
    for name in ("neck_E2", "neck_E21", "neck_osc"):
        v = rep.column(name)
        c[f"{name}_decreasing"] = _contract(decreasing_tail(v), tail=v[half:].tolist())
    c["neck_dyadic"] = _contract(all(r["neck_valid"] for r in rep.rows[half:]))
    c["planted_count"] = _contract(len(rep.tree.sequences) == sc.planted,
                                   found=len(rep.tree.sequences), planted=sc.planted)
    if headline:
        w, gi = rep.column("W21"), rep.column("grad_inf")
        c["W21_bounded"] = _contract(w.max() <= cfg.bound_factor * np.median(w),
                                     max=w.max(), median=float(np.median(w)))
        c["grad_inf_growth"] = _contract(gi[-1] >= cfg.growth * gi[0], ratio=gi[-1] / gi[0])
    return c


# ---------------------------------------------------------------------------
# tree checks against the planted configuration


def nearest_node(g, point) -> tuple[int, int]:
    d = np.hypot(g.x - point[0], g.y - point[1])
    return tuple(int(i) for i in np.unravel_index(np.argmin(d), g.shape))


def node_adjacent(g, a: tuple, b: tuple) -> bool:
    """Index neighbours (or equal); all nodes of the innermost ring of an annulus
    grid are treated as neighbours of one another."""
    if g.kind == "log" and a[0] == 0 and b[0] == 0:
        return True
    dj = min((a[1] - b[1]) % g.n_theta, (b[1] - a[1]) % g.n_theta)
    return abs(a[0] - b[0]) <= 1 and dj <= 1


def match_planted(rep: SequenceReport, sc: Scenario) -> dict:
    """Pair every recovered sequence with a planted bubble at the final index."""
    g = sc.grid
    out = {"pairs": [], "centers_ok": True, "ratio_ok": True}
    k = sc.n_steps - 1
    for s in rep.tree.sequences:
        xs, rs = s.final
        cands = sorted(sc.bubbles, key=lambda b: abs(np.log(rs / b.scales[k]))
                       + np.hypot(*(xs - b.centers[k])) / b.scales[k])
        b = cands[0]
        ok = node_adjacent(g, nearest_node(g, xs), nearest_node(g, b.centers[k]))
        ratio = s.radii / b.scales[np.asarray(s.ks)]
        tail = ratio[len(ratio) // 2:]
        spread = float(tail.max() / tail.min() - 1.0)
        out["pairs"].append({"sequence": s.id, "bubble": b.label,
                             "center_error": float(np.hypot(*(xs - b.centers[k]))),
                             "center_adjacent": ok, "ratio_tail": tail.tolist(),
                             "ratio_spread": spread})
        out["centers_ok"] &= ok
        out["ratio_ok"] &= spread <= 0.2
    labels = {p["sequence"]: p["bubble"] for p in out["pairs"]}
    got = {labels[c]: (labels[p] if p is not None else None) for c, p in rep.tree.parent.items()}
    want = {b.label: sc.parents.get(b.label) for b in sc.bubbles}
    out["parents"] = got
    out["parents_ok"] = got == want
    return out


# ---------------------------------------------------------------------------
# analytic Hessian cross-check and neck perturbation


def hessian_crosscheck(m, g, center=(0.0, 0.0), scale: float = 1.0, weights=None) -> dict:
    """``||grad^2 u||_{L^1}`` from differences of the exact gradient vs of ``u`` itself."""
    ux, uy = bubble_gradient(m, g, center, scale)
    uxx, uxy = cartesian_gradient(ux)
    uyx, uyy = cartesian_gradient(uy)
    mixed = 0.5 * (uxy.components() + uyx.components())
    tot = uxx.components() ** 2 + 2 * mixed ** 2 + uyy.components() ** 2
    analytic = norm_L1(Field(g, np.sqrt(tot.sum(-1))), weights)
    fd = norm_L1(hessian_norm(bubble_field(m, g, center, scale)), weights)
    return {"analytic_gradient": analytic, "finite_difference": fd,
            "relative": abs(fd - analytic) / analytic}


def neck_bump(center=(0.0, 0.0), r_in: float = 0.12, r_out: float = 0.24,
              amplitude: float = 0.6, mode: int = 3) -> Callable:
    """A fixed, non-decaying wiggle in an annulus: a negative control for the neck tests."""
    def apply(u: Field, k: int) -> Field:
        g = u.grid
        d = np.hypot(g.x - center[0], g.y - center[1])
        th = np.arctan2(g.y - center[1], g.x - center[0])
        s = np.clip((d - r_in) / (r_out - r_in), 0.0, 1.0)
        env = amplitude * np.sin(np.pi * s) ** 2
        v = u.components() + env[..., None] * np.stack(
            [np.cos(mode * th), np.sin(mode * th), np.zeros_like(th)], -1)
        return Field(g, v / np.linalg.norm(v, axis=-1, keepdims=True), unit_sphere=True)
    return apply
