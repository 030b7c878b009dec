"""Experiment runner: YAML configs in, CSV result tables out.

Usage::

    elastocauchy run experiments/ex1_neumann.yaml --output ex1.csv
    elastocauchy sweep experiments/ex2_neumann.yaml --M 8,16,32,64 --emit-plot-data ex2_plot.csv

Exit status is 0 on success, 2 for an invalid config and 3 for a numerical
failure; no result file is written unless the run succeeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .cauchy_solver import (LUSolver, NoiseSpec, SVDSolver, TikhonovConfig, add_noise, gamma1_trace,
                            gamma1_traction, gamma2_trace, gamma2_traction, interior_eval, relative_l2,
                            solve_sequence, transient_error)
from .geometry import MaterialParams, make_curve, winding_inside
from .laguerre import laguerre_table, test_signal_coeffs
from .nystrom import (CAUCHY_ROWS, DIRICHLET_ROWS, NEUMANN_ROWS, Geometry, KernelBank, NystromGrid,
                      assemble, cauchy_rhs, direct_rhs, dirichlet_rhs)

logger = logging.getLogger(__name__)

EXPERIMENTS = ("direct-dirichlet-exact", "direct-neumann-exact", "cauchy-stationary", "cauchy-transient")
CSV_COLUMNS = ("experiment", "n_or_t", "M", "kappa", "alpha", "delta", "seed", "component",
               "computed", "exact", "error")
RNG_NAME = "numpy.random.default_rng (PCG64), one standard normal per scalar component"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class NumericalFailure(RuntimeError):
    def __init__(self, message: str, order: int | None = None):
        super().__init__(message if order is None else f"order {order}: {message}")
        self.order = order


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One experiment.

    ``N`` is the highest order for stationary experiments and the number of
    Laguerre terms (orders ``0..N-1``) for ``cauchy-transient``.
    ``data`` is ``"fundamental"`` (columns of ``E_n(., z1)``),
    ``"test-signal"`` (Dirichlet pulse on the inner curve, zero on the outer
    one) or ``{"file": path}`` with Cauchy data written by a Dirichlet run.
    Components are 1-based.
    """

    id: str
    experiment: str
    inner: dict
    outer: dict
    lam: float
    mu: float
    rho: float = 1.0
    kappa: float = 1.0
    M: int = 32
    N: int = 0
    alpha: float = 0.0
    delta: float = 0.0
    seed: int | None = None
    source_point: tuple | None = None
    data: object = "fundamental"
    eval_points: list = field(default_factory=list)
    components: list = field(default_factory=lambda: [1])
    orders: list | None = None
    times: list = field(default_factory=list)
    T: float = 3.0
    dt: float = 0.2
    exact_terms: int | None = None
    data_output: str | None = None
    output: str | None = None
    base_dir: str = "."

    @property
    def n_orders(self) -> int:
        return self.N if self.experiment == "cauchy-transient" else self.N + 1

    def report_orders(self) -> list[int]:
        return list(range(self.n_orders)) if self.orders is None else [int(n) for n in self.orders]

    def params(self) -> MaterialParams:
        return MaterialParams(self.lam, self.mu, self.rho, self.kappa)

    def geometry(self) -> Geometry:
        return Geometry(make_curve(self.inner), make_curve(self.outer))

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p


_KEYS = {"lambda": "lam", "z1": "source_point"}


def _number(raw, key, kind=float):
    try:
        val = kind(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {raw!r}") from None
    if kind is float and not math.isfinite(val):
        raise ConfigError(key, "must be finite")
    if kind is int and float(raw) != val:
        raise ConfigError(key, f"expected an integer, got {raw!r}")
    return val


def _point(raw, key):
    try:
        p = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a point [x, y], got {raw!r}") from None
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise ConfigError(key, f"expected a point [x, y], got {raw!r}")
    return tuple(float(v) for v in p)


def config_from_dict(raw: dict, base_dir: str = ".") -> ExperimentConfig:
    """Build and validate a config from parsed YAML."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    raw = {_KEYS.get(k, k): v for k, v in raw.items()}
    curves = raw.pop("curves", None)
    if not isinstance(curves, dict) or "inner" not in curves or "outer" not in curves:
        raise ConfigError("curves", "need a mapping with 'inner' and 'outer' curve specs")
    known = {f for f in ExperimentConfig.__dataclass_fields__ if f not in ("inner", "outer", "base_dir")}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    for key in ("id", "experiment", "lam", "mu"):
        if key not in raw:
            raise ConfigError(key, "missing")
    kw = dict(raw)
    kw["id"] = str(kw["id"])
    for key in ("lam", "mu", "rho", "kappa", "alpha", "delta", "T", "dt"):
        if key in kw:
            kw[key] = _number(kw[key], key)
    for key in ("M", "N"):
        if key in kw:
            kw[key] = _number(kw[key], key, int)
    for key in ("seed", "exact_terms"):
        if kw.get(key) is not None:
            kw[key] = _number(kw[key], key, int)
    if kw.get("source_point") is not None:
        kw["source_point"] = _point(kw["source_point"], "source_point")
    kw["eval_points"] = [_point(p, "eval_points") for p in kw.get("eval_points") or []]
    kw["times"] = [_number(t, "times") for t in kw.get("times") or []]
    kw["components"] = [_number(c, "components", int) for c in kw.get("components") or [1]]
    if kw.get("orders") is not None:
        kw["orders"] = [_number(n, "orders", int) for n in kw["orders"]]
    cfg = ExperimentConfig(inner=dict(curves["inner"]), outer=dict(curves["outer"]), base_dir=base_dir, **kw)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return config_from_dict(raw, str(path.parent))


def validate(cfg: ExperimentConfig):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
    try:
        geo = cfg.geometry()
    except (ValueError, TypeError) as exc:
        raise ConfigError("curves", str(exc)) from None
    if not winding_inside(geo.inner, geo.outer, 64):
        raise ConfigError("curves", "inner curve is not strictly inside the outer curve")
    try:
        cfg.params()
    except ValueError as exc:
        raise ConfigError("lambda/mu/rho/kappa", str(exc)) from None
    if cfg.M < 4:
        raise ConfigError("M", "must be at least 4")
    if cfg.N < 0:
        raise ConfigError("N", "must be nonnegative")
    if cfg.experiment == "cauchy-transient" and cfg.N < 1:
        raise ConfigError("N", "transient runs need at least one Laguerre term")
    if cfg.alpha < 0:
        raise ConfigError("alpha", "must be nonnegative")
    if cfg.delta < 0:
        raise ConfigError("delta", "must be nonnegative")
    if any(c not in (1, 2) for c in cfg.components):
        raise ConfigError("components", "components are 1 or 2")
    if any(not 0 <= n < cfg.n_orders for n in cfg.report_orders()):
        raise ConfigError("orders", f"orders must lie in 0..{cfg.n_orders - 1}")
    if cfg.T <= 0 or cfg.dt <= 0 or abs(round(cfg.T / cfg.dt) * cfg.dt - cfg.T) > 1e-9 * cfg.T:
        raise ConfigError("T/dt", "T must be a positive multiple of dt")
    data = cfg.data
    if isinstance(data, dict):
        if set(data) != {"file"}:
            raise ConfigError("data", "file data is given as {file: path}")
        if not cfg.experiment.startswith("cauchy"):
            raise ConfigError("data", "data files feed the Cauchy experiments only")
    elif data == "test-signal":
        if cfg.experiment != "direct-dirichlet-exact":
            raise ConfigError("data", "the test signal is Dirichlet data")
    elif data == "fundamental":
        if cfg.source_point is None:
            raise ConfigError("source_point", "required for fundamental-solution data")
        z = np.asarray(cfg.source_point)
        if _inside(geo.outer, z) and not _inside(geo.inner, z):
            raise ConfigError("source_point", "must lie outside the annular domain")
    else:
        raise ConfigError("data", "must be 'fundamental', 'test-signal' or {file: path}")
    if cfg.experiment.startswith("direct") and data == "fundamental":
        for p in cfg.eval_points:
            if not (_inside(geo.outer, np.asarray(p)) and not _inside(geo.inner, np.asarray(p))):
                raise ConfigError("eval_points", f"{p} is not inside the annular domain")
    if cfg.exact_terms is not None and cfg.exact_terms < 1:
        raise ConfigError("exact_terms", "must be positive")


def _inside(curve, p, n: int = 512) -> bool:
    """Winding number test on a closed polygon through ``n`` curve samples."""
    rel = curve.point(np.arange(n) * 2 * np.pi / n) - p
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    dang = (np.diff(np.append(ang, ang[0])) + np.pi) % (2 * np.pi) - np.pi
    return abs(dang.sum()) > np.pi


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------


@dataclass
class ResultRow:
    experiment: str
    n_or_t: float
    M: int
    kappa: float
    alpha: float
    delta: float
    seed: int | None
    component: int
    computed: float
    exact: float | None = None
    error: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.computed):
            raise NumericalFailure(f"non-finite value for {self.experiment}")


@dataclass
class RunResult:
    rows: list
    metrics: dict = field(default_factory=dict)
    cond: float | None = None


def _row(cfg, name, n_or_t, comp, computed, exact=None):
    err = None if exact is None else abs(float(computed) - float(exact))
    return ResultRow(f"{cfg.id}:{name}", n_or_t, cfg.M, cfg.kappa, cfg.alpha, cfg.delta, cfg.seed,
                     comp, float(computed), None if exact is None else float(exact), err)


def _node_index(cfg, bank, p) -> int:
    pts = bank.nodes[1].points
    d = np.linalg.norm(pts - np.asarray(p), axis=1)
    k = int(np.argmin(d))
    if d[k] > 1e-9 * (1.0 + np.linalg.norm(p)):
        raise ConfigError("eval_points", f"{p} is not a node of the inner curve for M = {cfg.M}")
    return k


def _column(seq, n, x, z, nu=None):
    if nu is None:
        return seq.E(n, x, np.asarray(z))[..., 0]
    return seq.TE(n, x, np.asarray(z), nu)[..., 0]


def _solver(matrix, cfg):
    if cfg.alpha == 0 and cfg.experiment.startswith("direct"):
        return LUSolver(matrix)
    return SVDSolver(matrix, TikhonovConfig(cfg.alpha))


def _solve(system, rhs, cfg, solver):
    try:
        return solve_sequence(system, rhs, cfg.n_orders - 1, solver)
    except FloatingPointError as exc:
        raise NumericalFailure(str(exc)) from None


def _run_direct(cfg, bank) -> RunResult:
    geo, seq = bank.geometry, bank.seq
    neumann = cfg.experiment == "direct-neumann-exact"
    rows_def = NEUMANN_ROWS if neumann else DIRICHLET_ROWS
    system = assemble(rows_def, geo, bank.grid, bank.params, bank)
    n1, n2 = bank.nodes[1], bank.nodes[2]
    if cfg.data == "test-signal":
        c = test_signal_coeffs(cfg.n_orders, cfg.kappa) / cfg.kappa
        d1 = [np.full((bank.grid.n_nodes, 2), cn) for cn in c]
        d2 = [np.zeros((bank.grid.n_nodes, 2))] * cfg.n_orders
    else:
        z = cfg.source_point
        if neumann:
            d1 = [_column(seq, n, n1.points, z, n1.normal) for n in range(cfg.n_orders)]
            d2 = [_column(seq, n, n2.points, z, n2.normal) for n in range(cfg.n_orders)]
        else:
            d1 = [_column(seq, n, n1.points, z) for n in range(cfg.n_orders)]
            d2 = [_column(seq, n, n2.points, z) for n in range(cfg.n_orders)]
    rhs_fn = direct_rhs if neumann else dirichlet_rhs
    solver = _solver(system.matrix, cfg)
    dens = _solve(system, lambda n, d: rhs_fn(n, d1[n], d2[n], d, bank), cfg, solver)
    out = RunResult([], cond=float(np.linalg.cond(system.matrix)))
    if cfg.data == "test-signal":
        for n in cfg.report_orders():
            f1 = gamma1_trace(dens, n, bank)
            g1 = gamma1_traction(dens, n, bank)
            for i, p in enumerate(cfg.eval_points):
                k = _node_index(cfg, bank, p)
                for comp in cfg.components:
                    out.rows.append(_row(cfg, _tag("f1", i, cfg), n, comp, f1[k, comp - 1], d1[n][k, comp - 1]))
                    out.rows.append(_row(cfg, _tag("g1", i, cfg), n, comp, g1[k, comp - 1]))
        if cfg.data_output:
            _write_data(cfg, bank, dens)
        return out
    errs = {}
    for n in cfg.report_orders():
        sq = 0.0
        for i, p in enumerate(cfg.eval_points):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                u = interior_eval(dens, n, np.asarray(p), bank)
            ex = _column(seq, n, np.asarray(p), cfg.source_point)
            for comp in cfg.components:
                out.rows.append(_row(cfg, _tag("u", i, cfg), n, comp, u[comp - 1], ex[comp - 1]))
                sq += (u[comp - 1] - ex[comp - 1]) ** 2
        errs[n] = math.sqrt(sq)
    out.metrics = errs
    return out


def _tag(name, i, cfg):
    return name if len(cfg.eval_points) <= 1 else f"{name}[{i}]"


def _write_data(cfg, bank, dens):
    """Cauchy data on the outer curve (and reference traces on the inner one) for later inversion."""
    n = range(cfg.n_orders)
    payload = dict(
        M=cfg.M, kappa=cfg.kappa, lam=cfg.lam, mu=cfg.mu, rho=cfg.rho,
        f2=np.array([gamma2_trace(dens, k, bank) for k in n]),
        g2=np.array([gamma2_traction(dens, k, bank) for k in n]),
        f1=np.array([gamma1_trace(dens, k, bank) for k in n]),
        g1=np.array([gamma1_traction(dens, k, bank) for k in n]),
    )
    path = cfg.resolve(cfg.data_output)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".npz")
    os.close(fd)
    np.savez(tmp, **payload)
    os.replace(tmp, path)


def _cauchy_data(cfg, bank):
    """``(f2, g2, reference)`` per order; reference holds exact inner traces when known."""
    n_ord = cfg.n_orders
    if isinstance(cfg.data, dict):
        path = cfg.resolve(cfg.data["file"])
        try:
            src = np.load(path)
        except OSError as exc:
            raise ConfigError("data", f"cannot read {path}: {exc}") from None
        m_src = int(src["M"])
        if m_src % cfg.M:
            raise ConfigError("M", f"data were generated with M = {m_src}; M must divide it")
        for key in ("kappa", "lam", "mu", "rho"):
            if not np.isclose(float(src[key]), getattr(cfg, key)):
                raise ConfigError(key, f"differs from the data file ({float(src[key])})")
        if src["g2"].shape[0] < n_ord:
            raise ConfigError("N", f"data file holds only {src['g2'].shape[0]} orders")
        step = m_src // cfg.M
        return src["f2"][:n_ord, ::step], src["g2"][:n_ord, ::step], None
    n2 = bank.nodes[2]
    n1 = bank.nodes[1]
    z = cfg.source_point
    f2 = np.array([_column(bank.seq, n, n2.points, z) for n in range(n_ord)])
    g2 = np.array([_column(bank.seq, n, n2.points, z, n2.normal) for n in range(n_ord)])
    ref = dict(f1=np.array([_column(bank.seq, n, n1.points, z) for n in range(n_ord)]),
               g1=np.array([-_column(bank.seq, n, n1.points, z, n1.normal) for n in range(n_ord)]))
    return f2, g2, ref


def _run_cauchy(cfg, bank) -> RunResult:
    system = assemble(CAUCHY_ROWS, bank.geometry, bank.grid, bank.params, bank)
    f2, g2, ref = _cauchy_data(cfg, bank)
    if cfg.delta > 0:
        rng = np.random.default_rng(cfg.seed)
        g2 = np.array([add_noise(g, NoiseSpec(cfg.delta, cfg.seed), rng) for g in g2])
    solver = _solver(system.matrix, cfg)
    dens = _solve(system, lambda n, d: cauchy_rhs(n, f2[n], g2[n], d, bank), cfg, solver)
    out = RunResult([], cond=solver.condition_number)
    f1 = np.array([gamma1_trace(dens, n, bank) for n in range(cfg.n_orders)])
    g1 = np.array([gamma1_traction(dens, n, bank) for n in range(cfg.n_orders)])
    if cfg.experiment == "cauchy-stationary":
        for n in cfg.report_orders():
            for i, p in enumerate(cfg.eval_points):
                k = _node_index(cfg, bank, p)
                for comp in cfg.components:
                    c = comp - 1
                    out.rows.append(_row(cfg, _tag("f1", i, cfg), n, comp, f1[n, k, c],
                                         None if ref is None else ref["f1"][n, k, c]))
                    out.rows.append(_row(cfg, _tag("g1", i, cfg), n, comp, g1[n, k, c],
                                         None if ref is None else ref["g1"][n, k, c]))
            if ref is not None:
                for comp in cfg.components:
                    c = comp - 1
                    ef = relative_l2(f1[n, :, c], ref["f1"][n, :, c])
                    eg = relative_l2(g1[n, :, c], ref["g1"][n, :, c])
                    out.rows.append(_row(cfg, "e_f", n, comp, ef))
                    out.rows.append(_row(cfg, "e_g", n, comp, eg))
                    out.metrics.setdefault(n, ef)
        return out
    return _transient(cfg, bank, dens, f1, out)


def _synth(coeffs, kappa, t):
    lag = laguerre_table(coeffs.shape[0], kappa * np.asarray(t, dtype=float))
    return kappa * np.tensordot(lag, coeffs, axes=(0, 0))


def _transient(cfg, bank, dens, f1, out: RunResult) -> RunResult:
    kap = cfg.kappa
    if cfg.data == "fundamental":
        # interior values of the time-domain field, compared with the truncated exact expansion
        for i, p in enumerate(cfg.eval_points):
            x = np.asarray(p)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                u = np.array([interior_eval(dens, n, x, bank) for n in range(cfg.n_orders)])
            ex = _exact_column(cfg, x, cfg.exact_terms or cfg.n_orders)
            for t in cfg.times:
                ut, et = _synth(u, kap, t), _synth(ex, kap, t)
                for comp in cfg.components:
                    out.rows.append(_row(cfg, _tag("u", i, cfg), t, comp, ut[comp - 1], et[comp - 1]))
        return out
    # inner-curve reconstruction against the known Dirichlet pulse
    m_ex = cfg.exact_terms or cfg.n_orders
    c = test_signal_coeffs(m_ex, kap) / kap
    ones = np.ones((bank.grid.n_nodes, 2))
    exact = c[:, None, None] * ones[None]
    for i, p in enumerate(cfg.eval_points):
        k = _node_index(cfg, bank, p)
        for t in cfg.times:
            ft, et = _synth(f1[:, k], kap, t), _synth(exact[:, k], kap, t)
            for comp in cfg.components:
                out.rows.append(_row(cfg, _tag("f1", i, cfg), t, comp, ft[comp - 1], et[comp - 1]))
    for comp in cfg.components:
        e = transient_error(lambda t: _synth(f1[:, :, comp - 1], kap, t),
                            lambda t: _synth(exact[:, :, comp - 1], kap, t), cfg.T, cfg.dt)
        out.rows.append(_row(cfg, "e", cfg.T, comp, e))
        out.metrics.setdefault(cfg.T, e)
    return out


def _exact_column(cfg, x, m):
    from .fundamental import get_sequence

    seq = get_sequence(cfg.params(), m - 1)
    return np.array([_column(seq, n, x, cfg.source_point) for n in range(m)])


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute one experiment and return its result rows."""
    validate(cfg)
    geo = cfg.geometry()
    grid = NystromGrid(cfg.M)
    try:
        bank = KernelBank(geo, grid, cfg.params(), cfg.n_orders - 1)
        if cfg.experiment.startswith("direct"):
            return _run_direct(cfg, bank)
        return _run_cauchy(cfg, bank)
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        raise NumericalFailure(str(exc)) from None


def convergence_sweep(cfg: ExperimentConfig, M_list) -> tuple[list, list]:
    """Rerun ``cfg`` for each M; returns (all rows, plot rows ``(M, n_or_t, log10 error)``)."""
    M_list = [int(m) for m in M_list]
    if not M_list or any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ConfigError("--M", "M list must be nonempty and strictly ascending")
    rows, plot = [], []
    for M in M_list:
        sub = replace(cfg, M=M)
        res = run(sub)
        rows.extend(res.rows)
        for key, err in sorted(res.metrics.items()):
            lg = math.log10(max(err, 1e-300))
            plot.append((M, key, lg))
            # component 0: the error aggregates all reported components
            rows.append(_row(sub, "log10_error", key, 0, lg, None))
    return rows, plot


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.experiment, _fmt(r.n_or_t), r.M, _fmt(r.kappa), _fmt(r.alpha), _fmt(r.delta),
                    _fmt(r.seed), r.component, _fmt(r.computed), _fmt(r.exact), _fmt(r.error)])
    return buf.getvalue()


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _metadata(cfg, extra=None) -> str:
    meta = {"version": __version__, "rng": RNG_NAME, "seed": cfg.seed,
            "config": {k: v for k, v in asdict(cfg).items() if k != "base_dir"}}
    meta.update(extra or {})
    return json.dumps(meta, indent=2, sort_keys=True, default=list) + "\n"


def _emit(cfg, rows, output, extra=None):
    text = rows_to_csv(rows)
    target = output or (str(cfg.resolve(cfg.output)) if cfg.output else None)
    if target is None:
        sys.stdout.write(text)
        return
    path = Path(target)
    _atomic_write(path, text)
    _atomic_write(path.with_name(path.name + ".meta.json"), _metadata(cfg, extra))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elastocauchy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--output", help="CSV path (default: config 'output', else stdout)")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        if name == "sweep":
            sp.add_argument("--M", required=True, help="comma separated ascending list, e.g. 8,16,32,64")
            sp.add_argument("--emit-plot-data", metavar="PATH", help="write M,n_or_t,log10_error rows")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.command == "run":
            res = run(cfg)
            _emit(cfg, res.rows, args.output, {"condition_number": res.cond})
        else:
            try:
                M_list = [int(m) for m in args.M.split(",") if m.strip()]
            except ValueError:
                raise ConfigError("--M", f"not a list of integers: {args.M!r}") from None
            for M in M_list:
                validate(replace(cfg, M=M))
            rows, plot = convergence_sweep(cfg, M_list)
            _emit(cfg, rows, args.output, {"M_list": M_list})
            if args.emit_plot_data:
                lines = ["M,n_or_t,log10_error"] + [f"{m},{_fmt(k)},{_fmt(e)}" for m, k, e in plot]
                _atomic_write(Path(args.emit_plot_data), "\n".join(lines) + "\n")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
