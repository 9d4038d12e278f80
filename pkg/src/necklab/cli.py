"""``neck-lab``: batch driver over all modules.

Every pipeline writes plain CSV/JSON plus whitespace-separated ``.dat``
columns for gnuplot.  Reports carry no timestamps; the single exception is
the first line of ``manifest.txt``, which also lists a SHA-256 for every
other file written by the run.  The exit status is 0 iff every contract
passed; otherwise the failing contracts are named on stderr.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import bubbletree as bt
from . import elliptic, harmonic_annulus, hopf, lorentz, scenarios, verify
from .bubbles import sphere_omega, synthesize_sequence, tangent_gradient
from .fields import Field, Grid, read_field, write_field

OUT_ENV = "NECKLAB_OUT"
PIPELINES = ("lorentz", "hopf", "harm", "wente", "synth", "tree", "verify")

# Shipped single-bubble experiment; ``configs/single.ini`` holds the same text.
DEFAULT_CONFIG = """\
[run]
seed = 0
jobs = 1
out = neck-lab-out

[scenario]
name = single
n_steps = 8

[tree]
eps = 4.0
theta = 10.0
delta = 0.3

[verify]
r = 0.9
K = 0.9
tol_ei = 0.05
growth = 10.0
bound_factor = 3.0

[lorentz]
n_fields = 50

[hopf]
n_maps = 10

[harm]
n_series = 5
lambda = 0.25
eps = 1e-2, 1e-5

[wente]
n_pairs = 3
lambda = 0.49
r = 1e-1, 1e-2, 1e-3, 1e-4
"""

REQUIRED = (("scenario", "name"), ("scenario", "n_steps"),
            ("tree", "eps"), ("tree", "theta"), ("tree", "delta"))


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    scenario: str
    n_steps: int
    tree: bt.TreeConfig
    verify: verify.VerifyConfig
    seed: int = 0
    jobs: int = 1
    out: str = "neck-lab-out"
    grid: dict = field(default_factory=dict)       # scenario keyword overrides
    n_fields: int = 50
    n_maps: int = 10
    n_series: int = 5
    harm_lambda: float = 0.25
    harm_eps: list = field(default_factory=lambda: [1e-2, 1e-5])
    n_pairs: int = 3
    wente_lambda: float = 0.49
    wente_r: list = field(default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])

    def build_scenario(self) -> scenarios.Scenario:
        return scenarios.build(self.scenario, n_steps=self.n_steps, **self.grid)


def _get(cp, section, key, conv, default=None):
    path = f"{section}.{key}"
    if not cp.has_option(section, key):
        if default is None:
            raise ConfigError(f"missing field {path}")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {path}: {raw!r} ({exc})") from None


def _positive(cp, section, key, conv, default=None):
    v = _get(cp, section, key, conv, default)
    if not v > 0:
        raise ConfigError(f"{section}.{key} must be positive, got {v}")
    return v


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate INI text; errors name the offending field."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    for section, key in REQUIRED:
        if not cp.has_option(section, key):
            raise ConfigError(f"missing field {section}.{key}")
    name = cp.get("scenario", "name")
    if name not in scenarios.KINDS:
        raise ConfigError(f"scenario.name must be one of {list(scenarios.KINDS)}, got {name!r}")
    n_steps = _positive(cp, "scenario", "n_steps", int)
    if n_steps < 4:
        raise ConfigError("scenario.n_steps must be at least 4")
    grid = {}
    for key in ("per_decade", "n_theta", "n_r"):
        if cp.has_option("scenario", key):
            grid[key] = _positive(cp, "scenario", key, int)
    if cp.has_option("scenario", "offset"):
        grid["offset"] = _positive(cp, "scenario", "offset", float)
    tree = bt.TreeConfig(eps=_positive(cp, "tree", "eps", float),
                         theta=_positive(cp, "tree", "theta", float),
                         delta=_positive(cp, "tree", "delta", float),
                         rho_decay=_positive(cp, "tree", "rho_decay", float, 0.5))
    d = verify.VerifyConfig()
    try:
        ver = verify.VerifyConfig(
            r=_positive(cp, "verify", "r", float, d.r),
            K=_positive(cp, "verify", "K", float, d.K),
            tol_ei=_positive(cp, "verify", "tol_ei", float, d.tol_ei),
            growth=_positive(cp, "verify", "growth", float, d.growth),
            bound_factor=_positive(cp, "verify", "bound_factor", float, d.bound_factor),
            tree=tree)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"verify: {exc}") from None
    seed = _get(cp, "run", "seed", int, 0)
    if seed < 0:
        raise ConfigError("run.seed must be non-negative")
    harm_eps = _get(cp, "harm", "eps", _floats, [1e-2, 1e-5])
    wente_r = _get(cp, "wente", "r", _floats, [1e-1, 1e-2, 1e-3, 1e-4])
    if not harm_eps or min(harm_eps) <= 0:
        raise ConfigError("harm.eps must list positive values")
    if not wente_r or min(wente_r) <= 0:
        raise ConfigError("wente.r must list positive values")
    return ExperimentConfig(
        scenario=name, n_steps=n_steps, tree=tree, verify=ver, seed=seed,
        jobs=_positive(cp, "run", "jobs", int, 1),
        out=_get(cp, "run", "out", str, "neck-lab-out"),
        grid=grid,
        n_fields=_positive(cp, "lorentz", "n_fields", int, 50),
        n_maps=_positive(cp, "hopf", "n_maps", int, 10),
        n_series=_positive(cp, "harm", "n_series", int, 5),
        harm_lambda=_positive(cp, "harm", "lambda", float, 0.25),
        harm_eps=harm_eps,
        n_pairs=_positive(cp, "wente", "n_pairs", int, 3),
        wente_lambda=_positive(cp, "wente", "lambda", float, 0.49),
        wente_r=wente_r)


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    """JSON-safe copy with numpy scalars unwrapped and non-finite floats spelled out."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class Writer:
    """Collects every file of a run so the manifest can hash them."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.files: list[Path] = []

    def path(self, rel: str) -> Path:
        p = self.root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        if p not in self.files:
            self.files.append(p)
        return p

    def json(self, rel: str, obj) -> None:
        self.path(rel).write_text(json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n")

    def csv(self, rel: str, header: list, rows: list) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self.path(rel).write_text(buf.getvalue())

    def dat(self, rel: str, header: list, rows: list) -> None:
        lines = ["# " + " ".join(header)]
        lines += [" ".join(_fmt(v) for v in row) for row in rows]
        self.path(rel).write_text("\n".join(lines) + "\n")

    def field(self, rel: str, u: Field) -> None:
        write_field(self.path(rel), u)

    def text(self, rel: str, text: str) -> None:
        self.path(rel).write_text(text)

    def manifest(self) -> Path:
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        lines = [f"# generated {stamp}"]
        for p in sorted(self.files):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            lines.append(f"{digest}  {p.relative_to(self.root).as_posix()}")
        out = self.root / "manifest.txt"
        out.write_text("\n".join(lines) + "\n")
        return out


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


# ---------------------------------------------------------------------------
# pipelines; each returns a dict of contracts {name: {"pass": bool, ...}}


def _c(ok, **detail):
    return {"pass": bool(ok), **detail}


def run_lorentz(cfg: ExperimentConfig, w: Writer, field_path=None, fmt="json") -> dict:
    if field_path is not None:
        u = read_field(field_path)
        rep = lorentz.report(u.magnitude())
        if fmt == "csv":
            w.csv("lorentz/report.csv", ["quantity", "value"],
                  [[k, v] for k, v in rep.items() if k != "breakpoints"])
        else:
            w.json("lorentz/report.json", rep)
        bp = rep["breakpoints"]
        w.dat("lorentz/profile.dat", ["value", "lambda"], list(zip(bp["values"], bp["lambda"])))
        return {}
    rng = np.random.default_rng([cfg.seed, 1])
    g = Grid.disc(1.0, 16, 16)
    worst_lc, violations, rows = 0.0, 0, []
    for i in range(cfg.n_fields):
        f = Field(g, rng.standard_normal(g.shape) * rng.uniform(0.1, 10))
        h = Field(g, rng.standard_normal(g.shape))
        lc = lorentz.norm_L2_layercake(f)
        q = lorentz.norm_L2(f)
        rel = abs(lc - q) / q
        lhs, bound = lorentz.duality_check(f, h)
        violations += lhs > bound
        worst_lc = max(worst_lc, rel)
        rows.append([i, lorentz.norm_L2weak(f), lc, lorentz.norm_L21(f), rel, lhs, bound])
    w.csv("lorentz/random_fields.csv",
          ["i", "L2weak", "L2_layercake", "L21", "layercake_rel_error", "duality_lhs",
           "duality_bound"], rows)
    return {"lorentz.layercake": _c(worst_lc < 1e-10, worst=worst_lc),
            "lorentz.duality": _c(violations == 0, violations=violations)}


def run_hopf(cfg: ExperimentConfig, w: Writer, map_path=None, f_path=None, g_path=None) -> dict:
    if map_path is not None:
        u = read_field(map_path, unit_sphere=True)
        f = read_field(f_path) if f_path else None
        gg = read_field(g_path) if g_path else None
        w.field("hopf/phi.field", hopf.hopf_differential(u))
        w.json("hopf/report.json", {
            "polar_identity_residual": hopf.polar_identity_residual(u),
            "radial_bound_margin": hopf.radial_bound_margin(u),
            "dbar_residual_L1": hopf.dbar_residual(u, f, gg)})
        return {}
    rng = np.random.default_rng([cfg.seed, 2])
    g = Grid.disc(1.0, 48, 64)
    rows, ok_res, ok_margin = [], True, True
    for i in range(cfg.n_maps):
        u = hopf.random_sphere_map(g, rng)
        gmax = hopf.hopf_parts(u).grad_sq_max
        res = hopf.polar_identity_residual(u)
        margin = hopf.radial_bound_margin(u)
        ok_res &= res <= 1e-10 * (1 + gmax ** 2)
        ok_margin &= margin >= -1e-8 * (1 + np.sqrt(gmax))
        rows.append([i, res, margin, gmax])
    w.csv("hopf/random_maps.csv", ["i", "polar_residual", "radial_margin", "max_grad_sq"], rows)
    return {"hopf.polar_identity": _c(ok_res), "hopf.radial_bound": _c(ok_margin)}


def run_harm(cfg: ExperimentConfig, w: Writer, series=None, lam=None, eps=None) -> dict:
    lam = cfg.harm_lambda if lam is None else lam
    eps_list = cfg.harm_eps if eps is None else [eps]
    if series is not None:
        batch = [series]
    else:
        rng = np.random.default_rng([cfg.seed, 3])
        batch = [harmonic_annulus.LaurentSeries.random(rng, 6) for _ in range(cfg.n_series)]
    rows, contracts = [], {}
    ratios = np.zeros((len(batch), len(eps_list), 2))
    for i, s in enumerate(batch):
        for j, e in enumerate(eps_list):
            rep = harmonic_annulus.prop32_ratio(s, lam, e)
            ratios[i, j] = rep["ratio_31"], rep["ratio_32"]
            rows.append([i, lam, e, rep["lhs_31"], rep["lhs_32"], rep["rhs"],
                         rep["ratio_31"], rep["ratio_32"], rep["refinement_change"]])
    w.csv("harm/ratios.csv", ["series", "lambda", "eps", "lhs_31", "lhs_32", "rhs", "ratio_31",
                              "ratio_32", "refinement_change"], rows)
    if series is None and len(eps_list) > 1:
        worst = float(np.max(ratios[:, -1, :] / ratios[:, 0, :]))
        contracts["harm.eps_uniform"] = _c(worst <= 2.0, worst_growth=worst)
    mono, bad = [], 0
    for n in range(1, 11):
        for e in eps_list:
            if e / lam < lam:
                m = harmonic_annulus.monomial_L21(n, lam, e)
                bad += m["computed"] > m["bound"]
                mono.append([n, lam, e, m["computed"], m["bound"]])
    w.csv("harm/monomials.csv", ["n", "lambda", "eps", "computed", "bound"], mono)
    contracts["harm.monomial_bounds"] = _c(bad == 0, violations=bad)
    return contracts


def run_wente(cfg: ExperimentConfig, w: Writer, a=None, b=None, annulus=None) -> dict:
    disc = Grid.disc(1.0, 256, 128)
    if a is not None:
        r, lam = annulus
        psi, rep = elliptic.wente_solve(a, b, Grid.log_per_decade(r, 1.0, 64, 128), lam, disc)
        w.field("wente/psi.field", psi)
        w.json("wente/report.json", rep)
        return {}
    rng = np.random.default_rng([cfg.seed, 4])
    rows, spreads, bil, anti = [], [], 0.0, 0.0
    lam = cfg.wente_lambda
    for i in range(cfg.n_pairs):
        a, b = elliptic.SineSum.random(rng), elliptic.SineSum.random(rng)
        reps = elliptic.wente_sweep(a, b, cfg.wente_r, lam, disc=disc)
        ratios = [rp["ratio"] for rp in reps]
        spreads.append(max(ratios) / min(ratios))
        for rp in reps:
            rows.append([i, rp["r"], lam, rp["hessian_L1"], rp["gradient_L21"],
                         rp["data_scale"], rp["ratio"]])
        g = Grid.log_per_decade(min(cfg.wente_r), 1.0, 64, 128)
        p_ab, _ = elliptic.wente_solve(a, b, g, lam, disc)
        p_ba, _ = elliptic.wente_solve(b, a, g, lam, disc)
        p_2a, _ = elliptic.wente_solve(a.scaled(2.0), b, g, lam, disc)
        scale = np.max(np.abs(p_ab.values))
        anti = max(anti, np.max(np.abs(p_ab.values + p_ba.values)) / scale)
        bil = max(bil, np.max(np.abs(p_2a.values - 2 * p_ab.values)) / scale)
    w.csv("wente/ratios.csv", ["pair", "r", "lambda", "hessian_L1", "gradient_L21",
                               "data_scale", "ratio"], rows)
    w.json("wente/summary.json", {"lambda": lam, "r": cfg.wente_r, "ratio_spread": spreads,
                                  "bilinearity": bil, "antisymmetry": anti})
    # the r-spread is a measurement, reported above; it is not a run contract
    return {"wente.bilinear": _c(bil < 1e-10, worst=bil),
            "wente.antisymmetric": _c(anti < 1e-10, worst=anti)}


def run_synth(cfg: ExperimentConfig, w: Writer, sc=None, k=None, all_densities=False) -> dict:
    sc = sc or cfg.build_scenario()
    ks = range(sc.n_steps) if k is None else [k]
    if k is not None and not 0 <= k < sc.n_steps:
        raise ConfigError(f"--k must lie in [0, {sc.n_steps - 1}]")
    g = sc.grid
    wr = g.annulus_weights(0.0, cfg.verify.r)
    rows = []
    for kk in range(sc.n_steps):
        if kk not in ks and not all_densities:
            continue
        res = synthesize_sequence(sc.body, sc.bubbles, kk, wr)
        if all_densities:
            om = sphere_omega(res.u, tangent_gradient(res.u))
            w.field(f"synth/density_k{kk}.field", om.density())
        if kk in ks:
            rows.append(res.report)
    last = max(ks)
    res = synthesize_sequence(sc.body, sc.bubbles, last, wr)
    om = sphere_omega(res.u, tangent_gradient(res.u))
    w.field(f"synth/u_k{last}.field", res.u)
    w.field(f"synth/f_k{last}.field", res.f)
    w.field(f"synth/omega_k{last}.field", Field(g, om.values.reshape(g.shape + (-1,))))
    w.json("synth/report.json", {"scenario": sc.name, "indices": rows,
                                 "omega_layout": "i, j, cartesian component (row-major)"})
    return {}


def run_tree(cfg: ExperimentConfig, w: Writer, densities=None, tcfg=None) -> dict:
    tcfg = tcfg or cfg.tree
    if densities is None:
        sc = cfg.build_scenario()
        densities = []
        for k in range(sc.n_steps):
            u = synthesize_sequence(sc.body, sc.bubbles, k).u
            densities.append(sphere_omega(u, tangent_gradient(u)).density())
    ext = bt.extract_point_scales(densities, tcfg)
    tree = bt.group_strings(ext.sequences, tcfg.theta)
    dd = bt.decompose_domains(densities[-1], tree, tcfg)
    w.json("tree/tree.json", {"config": vars(tcfg), "extraction": ext.to_dict(),
                              "tree": tree.to_dict(), "domains": dd.to_dict()})
    rows = []
    for s in tree.sequences:
        for kk, (x, rho) in zip(s.ks, zip(s.centers, s.radii)):
            rows.append([s.id, kk, x[0], x[1], rho])
    w.dat("tree/scales.dat", ["sequence", "k", "x", "y", "rho"], rows)
    return {"tree.domains_valid": _c(dd.valid, violations=len(dd.violations))}


def run_verify(cfg: ExperimentConfig, w: Writer, sc=None, jobs: int = 1) -> dict:
    sc = sc or cfg.build_scenario()
    headline = sc.name == "single"
    rep = verify.run_sequence(sc, cfg.verify, headline=headline, jobs=jobs)
    cols = [k for k, v in rep.rows[0].items() if np.isscalar(v)]
    w.csv("verify/rows.csv", cols, [[r[c] for c in cols] for r in rep.rows])
    w.dat("verify/series.dat", cols, [[r[c] for c in cols] for r in rep.rows])
    summary = rep.summary()
    if sc.bubbles:
        summary["planted"] = verify.match_planted(rep, sc)
    w.json("verify/summary.json", summary)
    out = {f"verify.{sc.name}.{k}": v for k, v in rep.contracts.items()}
    if sc.bubbles:
        pm = summary["planted"]
        out[f"verify.{sc.name}.centers"] = _c(pm["centers_ok"])
        out[f"verify.{sc.name}.scale_ratio"] = _c(pm["ratio_ok"])
        out[f"verify.{sc.name}.parents"] = _c(pm["parents_ok"])
    return out


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file (default: built-in single-bubble run)")
    common.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and run.out)")
    common.add_argument("--jobs", type=int, help="worker processes for per-index work")
    common.add_argument("--seed", type=int, help="seed for the random test families")
    p = argparse.ArgumentParser(prog="neck-lab", parents=[common],
                                description="Bubble-tree and neck-estimate laboratory.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("lorentz", parents=[common], help="Lorentz norms of a field file")
    s.add_argument("--field")
    s.add_argument("--report", choices=("json", "csv"), default="json")
    s = sub.add_parser("hopf", parents=[common], help="Hopf differential of a map file")
    s.add_argument("--map")
    s.add_argument("--f")
    s.add_argument("--g")
    s = sub.add_parser("harm", parents=[common], help="annulus ratio table for a Laurent series")
    s.add_argument("--coeffs", help="JSON with c0, d0, a, b")
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--eps", type=float)
    s = sub.add_parser("wente", parents=[common], help="Wente solve on an annulus")
    s.add_argument("--a", help="JSON sine-sum data")
    s.add_argument("--b", help="JSON sine-sum data")
    s.add_argument("--annulus", nargs=2, type=float, metavar=("R", "LAMBDA"))
    s = sub.add_parser("synth", parents=[common], help="synthesize a bubbling sequence")
    s.add_argument("--spec", help="JSON scenario spec")
    s.add_argument("--k", type=int)
    s = sub.add_parser("tree", parents=[common], help="extract the bubble tree")
    s.add_argument("--seq", help="directory of density_k*.field files")
    s.add_argument("--eps", type=float)
    s.add_argument("--theta", type=float)
    s.add_argument("--delta", type=float)
    s = sub.add_parser("verify", parents=[common], help="energy identities and neck contracts")
    s.add_argument("--spec", help="JSON scenario spec")
    s.add_argument("--report", help="report directory (defaults to the output directory)")
    sub.add_parser("all", parents=[common], help="run every pipeline")
    return p


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _dispatch(args, cfg: ExperimentConfig, w: Writer) -> dict:
    cmd = args.command
    if cmd == "lorentz":
        return run_lorentz(cfg, w, args.field, args.report)
    if cmd == "hopf":
        if (args.f or args.g) and not args.map:
            raise ConfigError("--f/--g need --map")
        return run_hopf(cfg, w, args.map, args.f, args.g)
    if cmd == "harm":
        series = (harmonic_annulus.LaurentSeries.from_dict(_load_json(args.coeffs))
                  if args.coeffs else None)
        return run_harm(cfg, w, series, args.lam, args.eps)
    if cmd == "wente":
        if bool(args.a) != bool(args.b) or (args.a and not args.annulus):
            raise ConfigError("wente needs --a, --b and --annulus together")
        if args.a:
            a = elliptic.SineSum.from_dict(_load_json(args.a))
            b = elliptic.SineSum.from_dict(_load_json(args.b))
            return run_wente(cfg, w, a, b, tuple(args.annulus))
        return run_wente(cfg, w)
    if cmd == "synth":
        sc = scenarios.from_dict(_load_json(args.spec)) if args.spec else None
        return run_synth(cfg, w, sc, args.k, all_densities=args.k is None)
    if cmd == "tree":
        tc = cfg.tree
        over = {k: getattr(args, k) for k in ("eps", "theta", "delta")
                if getattr(args, k) is not None}
        try:
            tc = bt.TreeConfig(**{**vars(tc), **over})
        except ValueError as exc:
            raise ConfigError(f"tree: {exc}") from None
        dens = None
        if args.seq:
            files = sorted(Path(args.seq).glob("density_k*.field"),
                           key=lambda p: int(p.stem.split("_k")[1]))
            if len(files) < 4:
                raise ConfigError(f"--seq needs at least 4 density_k*.field files in {args.seq}")
            dens = [read_field(f) for f in files]
        return run_tree(cfg, w, dens, tc)
    if cmd == "verify":
        sc = scenarios.from_dict(_load_json(args.spec)) if args.spec else None
        return run_verify(cfg, w, sc, cfg.jobs)
    contracts = {}
    for name in PIPELINES:
        if name == "synth":
            run_synth(cfg, w, k=cfg.n_steps - 1)
        elif name == "tree":
            continue    # the verify pipeline extracts the tree and writes it in its summary
        elif name == "verify":
            contracts.update(run_verify(cfg, w, jobs=cfg.jobs))
        else:
            contracts.update(globals()[f"run_{name}"](cfg, w))
    return contracts


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = DEFAULT_CONFIG
        if args.config:
            text = Path(args.config).read_text()
        cfg = parse_config(text)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = args.seed
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            cfg.jobs = args.jobs
        out = args.out or os.environ.get(OUT_ENV) or cfg.out
        if args.command == "verify" and args.report:
            out = args.report
        w = Writer(Path(out))
        contracts = _dispatch(args, cfg, w)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"neck-lab: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"neck-lab: invalid input: {exc}", file=sys.stderr)
        return 2
    w.text("config.ini", _resolved(cfg, text))
    w.json("contracts.json", {"command": args.command, "seed": cfg.seed, "contracts": contracts})
    w.manifest()
    failed = sorted(k for k, v in contracts.items() if not v["pass"])
    for name in failed:
        print(f"contract failed: {name}", file=sys.stderr)
    return 1 if failed else 0


def _resolved(cfg: ExperimentConfig, text: str) -> str:
    # the config text plus the effective seed; jobs and paths do not affect results
    return text.rstrip("\n") + f"\n\n# effective seed = {cfg.seed}\n"


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
