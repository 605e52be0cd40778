"""Convergence sweeps and report emission behind the ``ahmass`` command line.

A run produces a :class:`Report`: a table of raw numbers plus named checks
that are recomputable from the table alone.  Reports are written as CSV and
JSON (and optionally SVG line charts) by :func:`emit_report`.

Configuration files are YAML mappings::

    field: {family: conformal, m: 1.0, tau_prime: 3.0}
    polyhedron: {family: box, sizes: [4, 8, 16]}      # or family: cone, n: 6, s: 3
    quadrature: {face_order: 6, edge_order: 8, max_depth: 8, rtol: 1.0e-8}
    eps_schedule: [0.125, 0.0625, 0.03125]
    radii: [4, 5, 6]
    rel_tol: 0.02
    out_dir: results
    threads: 1
    seed: 0

Every key is optional; missing ones fall back to the per-command defaults in
:data:`DEFAULTS`.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path

import numpy as np
import yaml

from .mass import error_integral_edge, error_integral_face, evaluate_theorem, \
    polyhedral_mass, sphere_mass
from .metric import builtin_family, decay_check
from .polyhedron import cone_polyhedron, cube_box
from .quadrature import QuadratureSpec, triangle_rule, triangulate
from .surface import dihedral_angle_g, mean_curvature_g

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "ExperimentConfig",
    "Report",
    "cone_sweep_rows",
    "emit_report",
    "load_config",
    "run_cone_sweep",
    "run_decay_check",
    "run_mass_compare",
    "run_theorem_check",
]

log = logging.getLogger(__name__)

THEOREM_COLUMNS = ["param", "flux", "mean_curv_term", "angle_term", "residual",
                   "face_bound", "edge_bound", "quad_error"]
CONE_COLUMNS = ["eps", "rho", "E1", "E2", "base_face", "side_face", "E1_top", "E1_top_scale"]
COMPARE_COLUMNS = ["kind", "param", "mass", "quad_error"]
DECAY_COLUMNS = ["radius", "sup_norm", "ratio", "sup_dnorm", "dratio"]

# Relative slack when comparing a residual against K * bounds.
K_STABILITY = 2.0
ZERO_ATOL = 1e-12


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2 on the command line)."""


DEFAULTS = {
    "theorem-check": {
        "field": {"family": "conformal", "m": 1.0, "tau_prime": 3.0},
        "polyhedron": {"family": "box", "sizes": [4, 8, 16]},
    },
    "cone-sweep": {
        "field": {"family": "conformal", "m": 1.0, "tau_prime": 2.0},
        "polyhedron": {"family": "cone", "n": 6, "s": 3.0},
        "eps_schedule": [2.0 ** -k for k in range(3, 8)],
        "quadrature": {"max_depth": 60, "atol": 1e-300},
    },
    "mass-compare": {
        "field": {"family": "conformal", "m": 1.0, "tau_prime": 3.0},
        "polyhedron": {"family": "box", "sizes": [4, 8, 16]},
        "radii": [4.0, 5.0, 6.0],
        "rel_tol": 0.02,
    },
    "decay-check": {
        "field": {"family": "conformal", "m": 1.0, "tau_prime": 3.0},
        "radii": [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
    },
}


@dataclass
class ExperimentConfig:
    field: dict = dc_field(default_factory=lambda: {"family": "zero"})
    polyhedron: dict = dc_field(default_factory=lambda: {"family": "box", "sizes": [4, 8, 16]})
    quadrature: dict = dc_field(default_factory=dict)
    eps_schedule: list = dc_field(default_factory=list)
    radii: list = dc_field(default_factory=list)
    rel_tol: float = 0.02
    out_dir: str = "results"
    threads: int = 1
    seed: int = 0
    verbose: bool = False
    sphere_resolution: tuple = (128, 256)

    def make_field(self):
        params = dict(self.field)
        name = params.pop("family", "zero")
        try:
            return builtin_family(name, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field: {exc}") from exc

    def make_quad(self) -> QuadratureSpec:
        try:
            return QuadratureSpec(**self.quadrature)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"quadrature: {exc}") from exc

    def sizes(self):
        sizes = [float(x) for x in self.polyhedron.get("sizes", [])]
        _check_schedule("polyhedron.sizes", sizes, increasing=True)
        return sizes


def _check_schedule(name, values, increasing):
    if not values:
        raise ConfigError(f"{name}: schedule must be non-empty")
    d = np.diff(values)
    if (increasing and np.any(d <= 0)) or (not increasing and np.any(d >= 0)):
        raise ConfigError(f"{name}: schedule must be strictly {'increasing' if increasing else 'decreasing'}")


def load_config(command: str, path=None, overrides=None) -> ExperimentConfig:
    """Merge per-command defaults, an optional YAML file and CLI overrides."""
    doc = copy.deepcopy(DEFAULTS.get(command, {}))
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        for key, val in loaded.items():
            base = doc.get(key)
            # a different family discards the default family's parameters
            same_family = not isinstance(val, dict) or val.get("family") in (None, (base or {}).get("family"))
            if isinstance(val, dict) and isinstance(base, dict) and same_family:
                doc[key] = {**base, **val}
            else:
                doc[key] = val
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "tau_prime":
            doc.setdefault("field", {})["tau_prime"] = float(val)
        elif key == "m":
            doc.setdefault("field", {})["m"] = float(val)
        else:
            doc[key] = val
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(**doc)
    tp = cfg.field.get("tau_prime")
    if tp is not None and not float(tp) > 1.5:
        raise ConfigError(f"tau_prime must exceed 3/2, got {tp}")
    return cfg


@dataclass
class Report:
    name: str
    columns: list
    rows: list = dc_field(default_factory=list)
    checks: list = dc_field(default_factory=list)
    info: dict = dc_field(default_factory=dict)

    def check(self, name, passed, detail="", gating=True):
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail, "gating": gating})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks if c["gating"])

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in self.columns])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"name": self.name, "columns": list(self.columns),
                "rows": [{c: row[c] for c in self.columns} for row in self.rows],
                "checks": self.checks, "info": self.info, "passed": self.passed}

    @classmethod
    def from_dict(cls, doc) -> "Report":
        return cls(doc["name"], list(doc["columns"]), [dict(r) for r in doc["rows"]],
                   list(doc["checks"]), dict(doc.get("info", {})))

    def summary(self) -> str:
        lines = [f"[{self.name}] {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            tag = "pass" if c["passed"] else "FAIL"
            extra = "" if c["gating"] else " (reported)"
            lines.append(f"  {tag}: {c['name']}{extra} {c['detail']}".rstrip())
        return "\n".join(lines)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def emit_report(report: Report, out_dir, plots=False, plot_x=None, plot_y=()):
    """Write ``<name>.csv`` and ``<name>.json`` (and ``<name>.svg`` if `plots`)."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{report.name}.csv", out / f"{report.name}.json"]
        paths[0].write_text(report.to_csv())
        paths[1].write_text(json.dumps(report.to_dict(), indent=2, default=float))
    except OSError as exc:
        raise ConfigError(f"cannot write report to {out}: {exc}") from exc
    if plots and report.rows and plot_x is not None:
        paths.append(_plot(report, out / f"{report.name}.svg", plot_x, plot_y))
    return paths


def _plot(report, path, xcol, ycols):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ahmass"
    fig, ax = plt.subplots(figsize=(6, 4))
    x = report.column(xcol)
    for col in ycols:
        y = np.abs(report.column(col))
        mask = y > 0
        ax.loglog(x[mask], y[mask], marker="o", label=col)
    ax.set_xlabel(xcol)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _fit_exponent(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.any(y <= 0):
        return float("nan")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _strictly_decreasing(v):
    return bool(np.all(np.diff(v) < 0))


def _dump_nodes(fld, poly, path):
    """Per-node H and alpha on the unrefined fan triangulation / Gauss points."""
    bary, _ = triangle_rule(3)
    x, _ = np.polynomial.legendre.leggauss(4)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "id", "x1", "x2", "x3", "value", "background"])
        for f in poly.faces:
            pts = np.einsum("mk,tkd->tmd", bary, triangulate(f)).reshape(-1, 3)
            for p, h in zip(pts, mean_curvature_g(fld, f, pts)):
                w.writerow(["H", f.face_id, *map(_fmt, p), _fmt(h), _fmt(-2 * f.normal[2])])
        for e in poly.edges:
            pts = e.endpoints[0] + np.outer(0.5 * (x + 1), e.endpoints[1] - e.endpoints[0])
            for p, a in zip(pts, dihedral_angle_g(fld, e, pts)):
                w.writerow(["alpha", e.edge_id, *map(_fmt, p), _fmt(a), _fmt(e.background_angle)])


def run_theorem_check(cfg: ExperimentConfig) -> Report:
    """Both sides of the polyhedral mass identity over a schedule of boxes.

    Gating checks: the residual magnitude is strictly decreasing (or all rows
    vanish), ``K_i = |residual_i| / (face_bound_i + edge_bound_i)`` varies by
    less than a factor 2, and each row satisfies
    ``|residual| <= 2 K_0 (face_bound + edge_bound) + quad_error``.
    """
    fld = cfg.make_field()
    quad = cfg.make_quad()
    family = cfg.polyhedron.get("family", "box")
    if family != "box":
        raise ConfigError("theorem-check supports the box family only")
    rep = Report("theorem_check", THEOREM_COLUMNS,
                 info={"field": fld.name, "params": fld.params, "tau": fld.tau})
    for L in cfg.sizes():
        poly = cube_box(L)
        b = evaluate_theorem(fld, poly, quad, threads=cfg.threads)
        log.info("L=%g flux=%.12g residual=%.6g", L, b.flux_total, b.residual)
        rep.rows.append({"param": L, "flux": b.flux_total, "mean_curv_term": b.mean_curv_term,
                         "angle_term": b.angle_term, "residual": b.residual,
                         "face_bound": b.face_error_bound, "edge_bound": b.edge_error_bound,
                         "quad_error": b.quad_error})
        if cfg.verbose:
            Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
            _dump_nodes(fld, poly, Path(cfg.out_dir) / f"nodes_L{L:g}.csv")
    theorem_checks(rep)
    return rep


def theorem_checks(rep: Report) -> None:
    res = np.abs(rep.column("residual"))
    bound = rep.column("face_bound") + rep.column("edge_bound")
    qerr = rep.column("quad_error")
    if np.all(res <= ZERO_ATOL):
        rep.check("residual vanishes", True, f"max |residual| = {res.max():.3g}")
        return
    rep.check("residual strictly decreasing", _strictly_decreasing(res),
              "residuals " + ", ".join(f"{r:.4g}" for r in res))
    K = res / bound
    rep.info["K"] = K.tolist()
    rep.check("K stable within factor 2", K.max() / K.min() < K_STABILITY,
              f"K range [{K.min():.4g}, {K.max():.4g}]")
    bad = [i for i in range(len(res)) if res[i] > K_STABILITY * K[0] * bound[i] + qerr[i]]
    rep.check("residual <= 2 K_0 * bounds + quad_error", not bad,
              f"offending rows {bad}" if bad else f"K_0 = {K[0]:.4g}")


def cone_sweep_rows(n, s, tau, eps_schedule, quad: QuadratureSpec, threads=1):
    """Error integrals over the cone family, one row per ``eps``.

    ``E1`` is a full side edge, ``E2`` a base edge, ``E1_top`` the part of
    ``E1`` with ``x3 in [1/(2 eps), 1/eps]`` and ``E1_top_scale`` the predicted
    scale ``max(eps rho, 1) eps^(2 tau - 1)`` for it.
    """
    rows = []
    for eps in eps_schedule:
        poly = cone_polyhedron(n, eps, s)
        base, side = poly.faces[0], poly.faces[1]
        e1 = next(e for e in poly.edges if 0 not in e.face_ids)
        e2 = next(e for e in poly.edges if 0 in e.face_ids)
        lo, hi = sorted(e1.endpoints, key=lambda p: p[2])
        t = (0.5 / eps - lo[2]) / (hi[2] - lo[2])
        top = (lo + t * (hi - lo), hi)
        rho = eps ** (-s)
        vals = [error_integral_edge([e1], tau, quad), error_integral_edge([e2], tau, quad),
                error_integral_face(base, tau, quad), error_integral_face(side, tau, quad),
                error_integral_edge([top], tau, quad)]
        if not all(v.converged for v in vals):
            log.warning("eps=%g: some cone integrals did not converge", eps)
        rows.append({"eps": eps, "rho": rho, "E1": vals[0].value, "E2": vals[1].value,
                     "base_face": vals[2].value, "side_face": vals[3].value,
                     "E1_top": vals[4].value,
                     "E1_top_scale": max(eps * rho, 1.0) * eps ** (2 * tau - 1)})
    return rows


def run_cone_sweep(cfg: ExperimentConfig) -> Report:
    """Error integrals of the cone family along a decreasing ``eps`` schedule.

    Gating: each of ``E1, E2, base_face, side_face`` strictly decreases and its
    last value is below a quarter of its first.  Reported only: the fitted
    exponent of ``E2`` against ``2 tau - 2`` and the ``E1_top`` envelope.
    """
    fld = cfg.make_field()
    tau = fld.tau
    n = int(cfg.polyhedron.get("n", 6))
    s = float(cfg.polyhedron.get("s", 3.0))
    if s >= 2 * tau:
        raise ConfigError(f"cone exponent s={s} must satisfy s < 2 tau = {2 * tau} "
                          "(rho(eps) = o(eps^(-2 tau)))")
    eps = [float(e) for e in cfg.eps_schedule]
    _check_schedule("eps_schedule", eps, increasing=False)
    if any(not 0 < e < 1 for e in eps):
        raise ConfigError("eps values must lie in (0, 1)")
    rep = Report("cone_sweep", CONE_COLUMNS, info={"n": n, "s": s, "tau": tau})
    rep.rows = cone_sweep_rows(n, s, tau, eps, cfg.make_quad(), cfg.threads)
    cone_checks(rep, tau)
    return rep


def cone_checks(rep: Report, tau: float, gate_fits=False) -> None:
    for col in ("E1", "E2", "base_face", "side_face"):
        v = rep.column(col)
        ok = _strictly_decreasing(v) and v[-1] < v[0] / 4 and np.all(v >= 0)
        rep.check(f"{col} strictly decreasing toward 0", ok,
                  f"first {v[0]:.4g}, last {v[-1]:.4g}")
    eps = rep.column("eps")
    p = _fit_exponent(eps, rep.column("E2"))
    rep.info["E2_exponent"] = p
    rep.check("E2 fitted exponent within 0.5 of 2 tau - 2", abs(p - (2 * tau - 2)) <= 0.5,
              f"fitted {p:.3f}, predicted {2 * tau - 2:g}", gating=gate_fits)
    top, scale = rep.column("E1_top"), rep.column("E1_top_scale")
    C = top[0] / scale[0]
    rep.info["E1_top_C"] = C
    rep.check("E1 top segment below 10 x C max(eps rho,1) eps^(2tau-1)",
              bool(np.all(top <= 10 * C * scale)), f"C = {C:.4g} (fitted on first row)",
              gating=gate_fits)


def run_mass_compare(cfg: ExperimentConfig) -> Report:
    """Sphere-flux oracle against box fluxes.

    Gating: the last sphere value and last polyhedron value agree within
    ``rel_tol``, and every polyhedral quadrature converged.
    """
    fld = cfg.make_field()
    quad = cfg.make_quad()
    radii = [float(r) for r in cfg.radii]
    _check_schedule("radii", radii, increasing=True)
    rep = Report("mass_compare", COMPARE_COLUMNS, info={"field": fld.name, "params": fld.params})
    for r in radii:
        rep.rows.append({"kind": "sphere", "param": r,
                         "mass": sphere_mass(fld, r, tuple(cfg.sphere_resolution)), "quad_error": 0.0})
    converged = True
    for L in cfg.sizes():
        b = polyhedral_mass(fld, cube_box(L), quad, threads=cfg.threads)
        converged &= b.converged
        rep.rows.append({"kind": "polyhedron", "param": L, "mass": b.flux_total, "quad_error": b.quad_error})
    mass_compare_checks(rep, cfg.rel_tol, converged)
    return rep


def mass_compare_checks(rep: Report, rel_tol: float, converged=True) -> None:
    sph = [r["mass"] for r in rep.rows if r["kind"] == "sphere"]
    pol = [r["mass"] for r in rep.rows if r["kind"] == "polyhedron"]
    a, b = sph[-1], pol[-1]
    diff = abs(a - b)
    ok = diff <= rel_tol * max(abs(a), abs(b)) + ZERO_ATOL
    rep.info["relative_gap"] = diff / max(abs(a), abs(b)) if max(abs(a), abs(b)) > 0 else 0.0
    rep.check(f"last sphere vs last polyhedron within {rel_tol:g}", ok,
              f"sphere {a:.10g}, polyhedron {b:.10g}")
    rep.check("polyhedral quadrature converged", converged)


def run_decay_check(cfg: ExperimentConfig) -> Report:
    fld = cfg.make_field()
    radii = [float(r) for r in cfg.radii]
    _check_schedule("radii", radii, increasing=True)
    dr = decay_check(fld, radii)
    rep = Report("decay_check", DECAY_COLUMNS, info={"field": fld.name, "tau": dr.tau})
    for row in zip(dr.radii, dr.sup_norm, dr.ratio, dr.sup_dnorm, dr.dratio):
        rep.rows.append(dict(zip(DECAY_COLUMNS, map(float, row))))
    rep.check("weighted sup norms non-increasing within factor 2", dr.passed)
    return rep
