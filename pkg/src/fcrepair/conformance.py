"""Replay fitness and entropy-based precision of a net system w.r.t. a log.

The entropy of a language is taken from its minimal deterministic automaton
"short-circuited" with one fresh arc from every final state back to the
initial state: it is the natural logarithm of the spectral radius of the
resulting arc-count adjacency matrix.

Conventions for degenerate languages:

* the empty language has entropy 0;
* a single-trace language also has entropy 0, so when the model entropy is 0
  precision is 1 if the log-model intersection equals the model language
  and 0 otherwise (the same rule applies to entropy fitness and the log);
* precision of a model with an empty language is undefined (``None``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import ConvergenceError, PreconditionError
from .petri_net import DEFAULT_MAX_STATES, NetSystem, accepts, reachability_graph
from .transition_system import (
    TransitionSystem,
    build_prefix_tree,
    intersect,
    languages_equal,
    minimize,
    tau_closure,
    trim,
)

POWER_TOL = 1e-9
POWER_MAX_ITER = 10_000
_ZERO_ENTROPY = 1e-12


@dataclass(frozen=True)
class ConformanceSummary:
    replay_fitness: float
    weighted_fitness: float
    entropy_log: float
    entropy_model: float
    entropy_intersection: float
    precision: float | None
    fitness_entropy: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def replay_fitness(sys: NetSystem, log, max_states: int = DEFAULT_MAX_STATES) -> float:
    """Share of distinct log traces the net accepts (1.0 for an empty log)."""
    if not len(log):
        return 1.0
    ok = sum(1 for trace in log if accepts(sys, trace, max_states))
    return ok / len(log)


def weighted_fitness(sys: NetSystem, log, max_states: int = DEFAULT_MAX_STATES) -> float:
    total = sum(log.values())
    if not total:
        return 1.0
    ok = sum(n for trace, n in log.items() if accepts(sys, trace, max_states))
    return ok / total


def spectral_radius(matrix, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Spectral radius of a non-negative square matrix.

    The matrix is split into strongly connected blocks; each irreducible
    block is shifted by the identity (making it primitive) and iterated until
    the Collatz-Wielandt lower and upper bounds agree to ``tol`` relative.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if (a < 0).any():
        raise ValueError("expected a non-negative matrix")
    n = a.shape[0]
    if n == 0:
        return 0.0
    n_comp, comp = connected_components(csr_matrix(a), directed=True, connection="strong")
    rho = 0.0
    for c in range(n_comp):
        idx = np.flatnonzero(comp == c)
        block = a[np.ix_(idx, idx)]
        if len(idx) == 1:
            rho = max(rho, float(block[0, 0]))
            continue
        rho = max(rho, _irreducible_radius(block, tol, max_iter))
    return rho


def _irreducible_radius(block, tol, max_iter):
    shifted = block + np.eye(block.shape[0])
    x = np.full(block.shape[0], 1.0 / block.shape[0])
    for _ in range(max_iter):
        y = shifted @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return float((lo + hi) / 2.0) - 1.0
        x = y / y.sum()
    raise ConvergenceError(f"power iteration did not reach relative tolerance {tol} in {max_iter} iterations")


def short_circuit_matrix(ts: TransitionSystem) -> np.ndarray:
    """Arc-count adjacency matrix of the trimmed system plus final -> initial arcs."""
    ts = trim(ts)
    order = ts.sorted_states()
    index = {s: i for i, s in enumerate(order)}
    a = np.zeros((len(order), len(order)))
    for s, _, t in ts.arcs:
        a[index[s], index[t]] += 1
    for f in ts.finals:
        a[index[f], index[ts.initial]] += 1
    return a


def entropy(ts: TransitionSystem, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    if not ts.deterministic:
        raise PreconditionError("entropy needs a deterministic τ-free transition system")
    if not trim(ts).finals:
        return 0.0
    rho = spectral_radius(short_circuit_matrix(ts), tol, max_iter)
    return max(0.0, math.log(rho))


def _ratio(num, den, inter_ts, ref_ts):
    if den > _ZERO_ENTROPY:
        return num / den
    return 1.0 if languages_equal(inter_ts, ref_ts) else 0.0


def precision(sys: NetSystem, log, max_states: int = DEFAULT_MAX_STATES) -> ConformanceSummary:
    """Fitness and entropy-based precision of ``sys`` with respect to ``log``."""
    model = tau_closure(reachability_graph(sys, max_states))
    log_ts = minimize(build_prefix_tree(log))
    inter = minimize(intersect(model, log_ts))
    h_log, h_model, h_inter = entropy(log_ts), entropy(model), entropy(inter)
    prec = None if not model.finals else _ratio(h_inter, h_model, inter, model)
    fit = None if not log_ts.finals else _ratio(h_inter, h_log, inter, log_ts)
    return ConformanceSummary(
        replay_fitness=replay_fitness(sys, log, max_states),
        weighted_fitness=weighted_fitness(sys, log, max_states),
        entropy_log=h_log,
        entropy_model=h_model,
        entropy_intersection=h_inter,
        precision=prec,
        fitness_entropy=fit,
    )
