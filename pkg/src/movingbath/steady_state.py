"""Stationary populations, loop-condition classification and cycle thermodynamics.

A steady state is *current-free* when the log rate ratios sum to zero around
every cycle of the transition graph; the populations then take the form
``exp(-F_i)/Z_F`` with potentials ``F`` read off along a spanning tree.
Otherwise the state is a NESS carrying persistent cycle currents.

Cycles are written as node tuples ``(i_1, ..., i_n)`` meaning
``i_1 -> i_2 -> ... -> i_n -> i_1``, rotated so the smallest node comes first
and oriented so that the second node is smaller than the last. For a
three-level system this fixes the orientation ``0 -> 1 -> 2 -> 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Optional

import networkx as nx
import numpy as np

from .bath import BathParams, kms_log_ratio
from .system import LevelSystem, RateMatrix

__all__ = [
    "Classification",
    "CycleAffinity",
    "LoopCheck",
    "SteadyStateReport",
    "DisconnectedGraphError",
    "NotCurrentFreeError",
    "AFFINITY_TOL",
    "solve_steady",
    "transition_graph",
    "spanning_tree",
    "fundamental_cycles",
    "canonical_cycle",
    "cycle_affinity",
    "classify",
    "potential_form",
    "currents",
    "entropy_production",
    "steady_entropy_production",
    "analyze",
    "delta_cycle_current",
    "cycle_affinity_delta",
    "affinity_small_u",
]

#: Loop-condition threshold on |sum of log rate ratios|.
AFFINITY_TOL = 1e-10


class DisconnectedGraphError(ValueError):
    """The transition graph has more than one communicating class."""


class NotCurrentFreeError(ValueError):
    """Exponential-form potentials requested for a state that violates the loop condition."""


class Classification(str, enum.Enum):
    CURRENT_FREE = "current-free"
    NESS = "NESS"


@dataclass(frozen=True)
class CycleAffinity:
    cycle: tuple[int, ...]
    affinity: float


@dataclass(frozen=True)
class LoopCheck:
    """Outcome of :func:`classify`. ``witness`` is the largest violation, if any."""

    classification: Classification
    cycles: tuple[CycleAffinity, ...]
    violations: tuple[CycleAffinity, ...]

    @property
    def witness(self) -> Optional[CycleAffinity]:
        if not self.violations:
            return None
        return max(self.violations, key=lambda c: abs(c.affinity))


@dataclass(frozen=True, eq=False)
class SteadyStateReport:
    populations: np.ndarray
    classification: Classification
    edge_currents: np.ndarray
    cycle_affinities: tuple[CycleAffinity, ...]
    entropy_production: float
    potentials: Optional[tuple[np.ndarray, float]] = None

    @property
    def max_abs_current(self) -> float:
        return float(np.max(np.abs(self.edge_currents)))

    def to_record(self) -> dict[str, Any]:
        """Flat, JSON-friendly summary used by the command-line emitters."""
        rec: dict[str, Any] = {
            "classification": self.classification.value,
            "entropy_production": float(self.entropy_production),
            "max_abs_current": self.max_abs_current,
            "max_abs_affinity": max((abs(c.affinity) for c in self.cycle_affinities), default=0.0),
        }
        for i, p in enumerate(self.populations):
            rec[f"p{i}"] = float(p)
        return rec


def transition_graph(k: RateMatrix) -> nx.Graph:
    """Undirected support graph of the rate matrix."""
    g = nx.Graph()
    g.add_nodes_from(range(k.n_levels))
    g.add_edges_from(k.edges())
    return g


def _require_connected(k: RateMatrix) -> None:
    g = transition_graph(k)
    parts = sorted(sorted(c) for c in nx.connected_components(g))
    if len(parts) > 1:
        raise DisconnectedGraphError(f"transition graph is disconnected; components: {parts}")
    support = k.support
    if np.any(support != support.T):
        dg = nx.DiGraph()
        dg.add_nodes_from(range(k.n_levels))
        dg.add_edges_from(zip(*np.nonzero(support)))
        classes = sorted(sorted(c) for c in nx.strongly_connected_components(dg))
        if len(classes) > 1:
            raise DisconnectedGraphError(
                f"transition graph is not strongly connected; communicating classes: {classes}"
            )


def solve_steady(k: RateMatrix) -> np.ndarray:
    """Unique stationary distribution of the Pauli generator.

    Uses Grassmann-Taksar-Heyman elimination, which avoids subtractions and so
    keeps every population to full relative precision even when they span
    hundreds of orders of magnitude.
    """
    _require_connected(k)
    n = k.n_levels
    a = np.array(k.rates, dtype=float)
    # Rescale for conditioning; the stationary vector is scale invariant.
    a /= a.max()
    for m in range(n - 1, 0, -1):
        s = a[m, :m].sum()
        if s <= 0.0:
            raise DisconnectedGraphError("steady state is not unique: a level cannot be left")
        a[:m, m] /= s
        a[:m, :m] += np.outer(a[:m, m], a[m, :m])
    p = np.zeros(n)
    p[0] = 1.0
    for m in range(1, n):
        p[m] = p[:m] @ a[:m, m]
    p /= p.sum()
    return p


def spanning_tree(k: RateMatrix, root: int = 0, order: str = "bfs") -> dict[int, int]:
    """Parent map ``{child: parent}`` of a BFS or DFS spanning tree rooted at ``root``."""
    _require_connected(k)
    g = transition_graph(k)
    if order == "bfs":
        tree = nx.bfs_tree(g, root)
    elif order == "dfs":
        tree = nx.dfs_tree(g, root)
    else:
        raise ValueError(f"order must be 'bfs' or 'dfs', got {order!r}")
    return {child: parent for parent, child in tree.edges()}


def canonical_cycle(cycle) -> tuple[int, ...]:
    cycle = list(cycle)
    start = cycle.index(min(cycle))
    cycle = cycle[start:] + cycle[:start]
    if len(cycle) > 2 and cycle[1] > cycle[-1]:
        cycle = [cycle[0]] + cycle[:0:-1]
    return tuple(cycle)


def _root_path(parents, node):
    path = [node]
    while path[-1] in parents:
        path.append(parents[path[-1]])
    return path[::-1]


def fundamental_cycles(k: RateMatrix, root: int = 0, order: str = "bfs") -> list[tuple[int, ...]]:
    """Fundamental cycle basis: one cycle per edge not in the spanning tree."""
    parents = spanning_tree(k, root, order)
    tree_edges = {frozenset(e) for e in parents.items()}
    cycles = []
    for i, j in k.edges():
        if frozenset((i, j)) in tree_edges:
            continue
        pi, pj = _root_path(parents, i), _root_path(parents, j)
        common = 0
        while common < min(len(pi), len(pj)) and pi[common] == pj[common]:
            common += 1
        # lca -> ... -> i -> j -> ... -> (just below lca)
        cyc = pi[common - 1 :] + pj[common:][::-1]
        cycles.append(canonical_cycle(cyc))
    return cycles


def cycle_affinity(k: RateMatrix, cycle) -> float:
    """Sum of ``log(k_fwd/k_bwd)`` around ``cycle`` (closed back to its first node)."""
    nodes = list(cycle)
    total = 0.0
    for a, b in zip(nodes, nodes[1:] + nodes[:1]):
        total += k.log_ratio(a, b)
    return total


def classify(k: RateMatrix, tol: float = AFFINITY_TOL, root: int = 0) -> LoopCheck:
    """Kolmogorov loop-condition test on a fundamental cycle basis."""
    cycles = tuple(CycleAffinity(c, cycle_affinity(k, c)) for c in fundamental_cycles(k, root))
    violations = tuple(c for c in cycles if not abs(c.affinity) <= tol)
    cls = Classification.NESS if violations else Classification.CURRENT_FREE
    return LoopCheck(cls, cycles, violations)


def potential_form(
    k: RateMatrix, root: int = 0, order: str = "bfs", tol: float = AFFINITY_TOL
) -> tuple[np.ndarray, float]:
    """Potentials ``F`` (``F[root] = 0``) and ``Z_F`` with ``p_i = exp(-F_i)/Z_F``.

    ``F`` accumulates ``log(k_{child->parent}/k_{parent->child})`` down the
    spanning tree; every non-tree edge is then checked for consistency.
    """
    parents = spanning_tree(k, root, order)
    n = k.n_levels
    f = np.full(n, np.nan)
    f[root] = 0.0
    for node in _bfs_order(parents, root, n):
        if node != root:
            par = parents[node]
            f[node] = f[par] + k.log_ratio(node, par)
    for i, j in k.edges():
        mismatch = f[i] - f[j] - k.log_ratio(i, j)
        if not abs(mismatch) <= tol:
            raise NotCurrentFreeError(
                f"loop condition violated on edge {i}<->{j} (mismatch {mismatch:.3e}); "
                "no exponential-form steady state exists"
            )
    shift = f.min()
    z = math.exp(-shift) * float(np.exp(-(f - shift)).sum())
    return f, z


def _bfs_order(parents, root, n):
    children = {i: [] for i in range(n)}
    for c, p in parents.items():
        children[p].append(c)
    order, queue = [], [root]
    while queue:
        node = queue.pop(0)
        order.append(node)
        queue.extend(sorted(children[node]))
    return order


def currents(p, k: RateMatrix) -> np.ndarray:
    """Edge currents ``J[i, j] = p_i k_{i->j} - p_j k_{j->i}`` (antisymmetric)."""
    flux = np.asarray(p, dtype=float)[:, None] * k.rates
    return flux - flux.T


def entropy_production(p, k: RateMatrix) -> float:
    """Entropy production rate, summed edge by edge.

    ``sum_{i<j} J_ij log(p_i k_ij / (p_j k_ji))``; reduces to ``J * A`` on a
    single cycle.
    """
    p = np.asarray(p, dtype=float)
    j = currents(p, k)
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    total = 0.0
    for a, b in k.edges():
        if j[a, b] == 0.0:
            continue
        total += j[a, b] * (k.log_ratio(a, b) + log_p[a] - log_p[b])
    return float(total)


def steady_entropy_production(k: RateMatrix, p=None) -> float:
    """Steady-state entropy production, using ``J * A`` on a bare three-cycle.

    The cycle form is exact to rounding both near detailed balance and deep
    in the low-temperature regime, where edge currents obtained from
    populations suffer cancellation.
    """
    if k.n_levels == 3 and len(k.edges()) == 3:
        return delta_cycle_current(k) * cycle_affinity(k, (0, 1, 2))
    return entropy_production(solve_steady(k) if p is None else p, k)


def analyze(k: RateMatrix, tol: float = AFFINITY_TOL) -> SteadyStateReport:
    """Steady state plus classification, currents and entropy production."""
    p = solve_steady(k)
    loops = classify(k, tol)
    potentials = potential_form(k, tol=tol) if loops.classification is Classification.CURRENT_FREE else None
    j = currents(p, k)
    sigma = steady_entropy_production(k, p) if potentials is None else 0.0
    return SteadyStateReport(p, loops.classification, j, loops.cycles, sigma, potentials)


def delta_cycle_current(k: RateMatrix) -> float:
    """Current around 0->1->2->0 of a three-state cycle, free of cancellation.

    Markov-chain tree theorem: ``J = (P_fwd - P_bwd) / T`` with ``P`` the rate
    products around the cycle and ``T`` the total spanning-tree weight. The
    numerator is evaluated as ``P_bwd * expm1(A)``.
    """
    if k.n_levels != 3 or len(k.edges()) != 3:
        raise ValueError("delta_cycle_current needs a fully connected three-level system")
    r = k.rates
    trees = (
        r[1, 0] * r[2, 0] + r[1, 2] * r[2, 0] + r[2, 1] * r[1, 0]
        + r[0, 1] * r[2, 1] + r[0, 2] * r[2, 1] + r[2, 0] * r[0, 1]
        + r[0, 2] * r[1, 2] + r[0, 1] * r[1, 2] + r[1, 0] * r[0, 2]
    )
    affinity = cycle_affinity(k, (0, 1, 2))
    log_bwd = k.log_rates[0, 2] + k.log_rates[2, 1] + k.log_rates[1, 0]
    return float(math.exp(log_bwd - math.log(trees)) * math.expm1(affinity))


def _delta_frequencies(sys: LevelSystem):
    if sys.n_levels != 3:
        raise ValueError("Delta-system affinity needs exactly three levels")
    a = sys.coupling
    if not (abs(a[1, 0]) > 0 and abs(a[2, 1]) > 0 and abs(a[2, 0]) > 0):
        raise ValueError("Delta-system affinity needs all three couplings nonzero")
    e = sys.energies
    return e[1] - e[0], e[2] - e[1], e[2] - e[0]


def cycle_affinity_delta(sys: LevelSystem, bath: BathParams) -> float:
    """Affinity of the cycle 0->1->2->0 from effective temperatures.

    ``w20 beta_eff(w20) - w21 beta_eff(w21) - w10 beta_eff(w10)``; negative
    values mean the current circulates 0->2->1->0.
    """
    w10, w21, w20 = _delta_frequencies(sys)
    x = kms_log_ratio(np.array([w10, w21, w20]), bath)
    return float(x[2] - x[1] - x[0])


def _x2coth(w, beta):
    return w * w / math.tanh(0.5 * beta * w)


def affinity_small_u(omega10: float, omega21: float, beta: float, u: float) -> float:
    """Leading ``u**2`` behaviour of the Delta-system cycle affinity."""
    w20 = omega10 + omega21
    bracket = _x2coth(omega10, beta) + _x2coth(omega21, beta) - _x2coth(w20, beta)
    return beta * beta * u * u / 6.0 * bracket
