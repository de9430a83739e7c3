"""Parameter sweeps behind the figure experiments, and their CSV/JSON writers.

Column layouts (CSV header order):

* ``fig1``: beta, u, affinity, minus_current
* ``fig2``: beta, u, ticking_rate, diffusion, delta2, tur_product
  [, gillespie_ticking_rate, gillespie_ticking_rate_se,
  gillespie_diffusion, gillespie_diffusion_se when a seed is given]
* ``fig4``: beta, u, w_max, relative_entropy, ergotropy
* ``sweep``: beta, u, classification, max_abs_affinity, max_abs_current,
  entropy_production, w_max, ergotropy, p0 .. p{n-1}

Rows always come out in grid order (u outer, beta inner) regardless of the
number of workers.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .bath import BathParams
from .config import ConfigError, ExperimentConfig
from .counting import CountingSpec, clock_stats, gillespie_count
from .steady_state import analyze, cycle_affinity_delta, delta_cycle_current, solve_steady
from .system import LevelSystem, rate_matrix
from .thermo import max_work

__all__ = [
    "SCHEMA_VERSION",
    "Table",
    "run_fig1",
    "run_fig2",
    "run_fig4",
    "run_sweep",
    "run_experiment",
    "format_csv",
    "format_json",
]

SCHEMA_VERSION = 1


@dataclass
class Table:
    experiment: str
    columns: list[str]
    rows: list[tuple]
    meta: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def where(self, **match) -> "Table":
        idx = {k: self.columns.index(k) for k in match}
        rows = [r for r in self.rows if all(r[idx[k]] == v for k, v in match.items())]
        return Table(self.experiment, self.columns, rows, self.meta)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def format_csv(table: Table) -> str:
    buf = io.StringIO()
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def format_json(table: Table) -> str:
    """Versioned JSON document; non-finite floats are written as ``null``."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "experiment": table.experiment,
        "columns": table.columns,
        "rows": [[_jsonable(v) for v in row] for row in table.rows],
        "meta": table.meta,
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def _grid(config: ExperimentConfig):
    return [(u, beta) for u in config.u_list for beta in config.beta_grid]


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _require_delta(sys: LevelSystem, experiment: str) -> None:
    a = sys.coupling
    if sys.n_levels != 3 or not (abs(a[1, 0]) > 0 and abs(a[2, 1]) > 0 and abs(a[2, 0]) > 0):
        raise ConfigError(f"system: {experiment} needs a three-level Delta system with all couplings nonzero")


def _require_battery(sys: LevelSystem) -> None:
    a = sys.coupling
    if sys.n_levels != 3 or abs(a[1, 0]) != 0 or not (abs(a[2, 1]) > 0 and abs(a[2, 0]) > 0):
        raise ConfigError("system: fig4 needs the three-level battery system (1<->0 coupling zero)")


def _fig1_point(args):
    sys, lam, u, beta = args
    bath = BathParams(beta, u, lam)
    k = rate_matrix(sys, bath)
    return (beta, u, cycle_affinity_delta(sys, bath), -delta_cycle_current(k))


def run_fig1(config: ExperimentConfig) -> Table:
    """Cycle affinity and (minus) cycle current of the Delta system over (beta, u)."""
    _require_delta(config.system, "fig1")
    items = [(config.system, config.lam, u, beta) for u, beta in _grid(config)]
    rows = _pmap(_fig1_point, items, config.workers)
    return Table("fig1", ["beta", "u", "affinity", "minus_current"], rows, config.describe())


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _fig2_point(args):
    sys, lam, u, beta, gil = args
    bath = BathParams(beta, u, lam)
    k = rate_matrix(sys, bath)
    spec = CountingSpec((2, 0), (0, 2))
    st = clock_stats(k, spec)
    row = (beta, u, st.ticking_rate, st.diffusion, st.relative_uncertainty, st.tur_product)
    if gil is not None:
        seed, n_traj, tau_l2 = gil
        est = gillespie_count(k, spec, tau_l2 / (lam * lam), n_traj, seed)
        row += (est.ticking_rate, est.ticking_rate_se, est.diffusion, est.diffusion_se)
    return row


def run_fig2(config: ExperimentConfig) -> Table:
    """Clock statistics on the 2<->0 edge; adds Gillespie columns when seeded."""
    _require_delta(config.system, "fig2")
    cols = ["beta", "u", "ticking_rate", "diffusion", "delta2", "tur_product"]
    if config.seed is not None:
        cols += ["gillespie_ticking_rate", "gillespie_ticking_rate_se", "gillespie_diffusion", "gillespie_diffusion_se"]
    items = []
    for idx, (u, beta) in enumerate(_grid(config)):
        gil = None
        if config.seed is not None:
            gil = (_point_seed(config.seed, idx), config.gillespie_traj, config.gillespie_tau_lambda2)
        items.append((config.system, config.lam, u, beta, gil))
    rows = _pmap(_fig2_point, items, config.workers)
    return Table("fig2", cols, rows, config.describe())


def _fig4_point(args):
    sys, lam, u, beta = args
    k = rate_matrix(sys, BathParams(beta, u, lam))
    rep = max_work(solve_steady(k), sys.energies, beta)
    return (beta, u, rep.w_max, rep.relative_entropy, rep.ergotropy)


def run_fig4(config: ExperimentConfig) -> Table:
    """Maximum extractable work of the battery steady state over (beta, u)."""
    _require_battery(config.system)
    items = [(config.system, config.lam, u, beta) for u, beta in _grid(config)]
    rows = _pmap(_fig4_point, items, config.workers)
    return Table("fig4", ["beta", "u", "w_max", "relative_entropy", "ergotropy"], rows, config.describe())


def _sweep_point(args):
    sys, lam, u, beta = args
    k = rate_matrix(sys, BathParams(beta, u, lam))
    rep = analyze(k)
    rec = rep.to_record()
    work = max_work(rep.populations, sys.energies, beta)
    return (
        beta,
        u,
        rec["classification"],
        rec["max_abs_affinity"],
        rec["max_abs_current"],
        rec["entropy_production"],
        work.w_max,
        work.ergotropy,
    ) + tuple(float(p) for p in rep.populations)


def run_sweep(config: ExperimentConfig) -> Table:
    """Steady-state summary of an arbitrary level system over (beta, u)."""
    n = config.system.n_levels
    cols = [
        "beta", "u", "classification", "max_abs_affinity", "max_abs_current",
        "entropy_production", "w_max", "ergotropy",
    ] + [f"p{i}" for i in range(n)]
    items = [(config.system, config.lam, u, beta) for u, beta in _grid(config)]
    rows = _pmap(_sweep_point, items, config.workers)
    return Table("sweep", cols, rows, config.describe())


_RUNNERS = {"fig1": run_fig1, "fig2": run_fig2, "fig4": run_fig4, "sweep": run_sweep}


def run_experiment(config: ExperimentConfig) -> Table:
    try:
        runner = _RUNNERS[config.experiment]
    except KeyError:
        raise ConfigError(f"experiment: {config.experiment!r} does not produce a table") from None
    return runner(config)
