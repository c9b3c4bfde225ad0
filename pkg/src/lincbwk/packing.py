"""Exact solver for block-structured packing linear programs.

The LP family solved here has one probability-simplex block per sample and d
coupling capacity rows:

    maximize    scale * sum_i  r_i . pi_i
    subject to  scale * sum_i  C_i pi_i  <=  caps        (d rows)
                pi_i in the (K+1)-simplex for every block i,

where option 0 of every block is the no-op (zero reward, zero consumption),
so a feasible point always exists.  Two solution paths share the same
contract:

* a dense primal simplex with Bland's rule on the full LP, used up to
  roughly 5,000 option variables;
* above that, Dantzig-Wolfe column generation on the d-dimensional
  Lagrangian, whose pricing step is the closed-form per-block argmax.  The
  restricted master is solved by the same dense simplex, so the returned
  primal/dual pair satisfies the master's optimality conditions exactly and
  the Lagrangian bound certifies the duality gap.

Every solve is validated (feasibility, simplex distributions, complementary
slackness, duality gap) before returning; failures dump the instance to a
text file and raise LpNumericsError.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np

from .envs import LinearEnvironment, sample_slate_batch
from .errors import LpNumericsError

# Full dense simplex up to this many option variables, column generation above.
SIMPLEX_VARIABLE_LIMIT = 5000

_FEAS_TOL = 1e-6
_GAP_TOL = 1e-6
_PIVOT_TOL = 1e-9


@dataclass
class PackingInstance:
    """Block data in array form: option 0 of every block is the no-op."""

    rewards: np.ndarray  # (T0, K+1)
    consumption: np.ndarray  # (T0, K+1, d)
    caps: np.ndarray  # (d,)
    scale: float = 1.0

    def __post_init__(self) -> None:
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.consumption = np.asarray(self.consumption, dtype=float)
        self.caps = np.asarray(self.caps, dtype=float)
        if self.rewards.ndim != 2 or self.consumption.ndim != 3:
            raise ValueError("rewards must be (T0, K+1) and consumption (T0, K+1, d)")
        t0, k1 = self.rewards.shape
        if self.consumption.shape[:2] != (t0, k1) or self.consumption.shape[2] != self.caps.shape[0]:
            raise ValueError("inconsistent instance shapes")
        if np.any(self.rewards[:, 0] != 0.0) or np.any(self.consumption[:, 0, :] != 0.0):
            raise ValueError("option 0 of every block must be the no-op (zero reward/consumption)")
        if np.any(self.caps < 0):
            raise ValueError("caps must be nonnegative")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def n_blocks(self) -> int:
        return self.rewards.shape[0]

    @property
    def n_options(self) -> int:
        return self.rewards.shape[1]

    @property
    def n_resources(self) -> int:
        return self.caps.shape[0]


@dataclass
class PackingSolution:
    value: float
    distributions: np.ndarray  # (T0, K+1), rows on the simplex
    duals: np.ndarray  # (d,) nonnegative capacity multipliers
    duality_gap: float
    pivots: int


def simplex_max(
    c: np.ndarray,
    a_mat: np.ndarray,
    b: np.ndarray,
    max_pivots: int = 200_000,
) -> tuple[np.ndarray, float, np.ndarray, int]:
    """Dense primal simplex for: maximize c.x  s.t.  A x <= b, x >= 0, b >= 0.

    Starts from the all-slack basis (feasible since b >= 0) and pivots with
    Bland's rule, which cannot cycle.  Returns (x, value, duals, pivots)
    where duals are the multipliers of the <= rows.
    """
    c = np.asarray(c, dtype=float)
    a_mat = np.asarray(a_mat, dtype=float)
    b = np.asarray(b, dtype=float)
    n_rows, n_cols = a_mat.shape
    if np.any(b < 0):
        raise ValueError("simplex_max requires b >= 0")

    # tableau: [A | I | b], objective row holds reduced costs for -c.
    tab = np.empty((n_rows, n_cols + n_rows + 1))
    tab[:, :n_cols] = a_mat
    tab[:, n_cols:-1] = np.eye(n_rows)
    tab[:, -1] = b
    obj = np.zeros(n_cols + n_rows + 1)
    obj[:n_cols] = -c
    basis = np.arange(n_cols, n_cols + n_rows)

    pivots = 0
    while True:
        negative = np.nonzero(obj[:-1] < -_PIVOT_TOL)[0]
        if negative.size == 0:
            break
        enter = int(negative[0])  # Bland: smallest eligible index
        col = tab[:, enter]
        rows = np.nonzero(col > _PIVOT_TOL)[0]
        if rows.size == 0:
            raise LpNumericsError("unbounded direction in simplex (malformed instance)")
        ratios = tab[rows, -1] / col[rows]
        best = np.min(ratios)
        tie = rows[ratios <= best + 1e-12]
        leave = int(tie[np.argmin(basis[tie])])  # Bland: smallest basis index

        piv = tab[leave, enter]
        tab[leave, :] /= piv
        factors = tab[:, enter].copy()
        factors[leave] = 0.0
        tab -= np.outer(factors, tab[leave, :])
        obj -= obj[enter] * tab[leave, :]
        basis[leave] = enter
        pivots += 1
        if pivots > max_pivots:
            raise LpNumericsError(f"simplex exceeded {max_pivots} pivots")

    x = np.zeros(n_cols + n_rows)
    x[basis] = tab[:, -1]
    duals = obj[n_cols:-1].copy()
    return x[:n_cols], float(obj[-1]), duals, pivots


def _solve_dense(inst: PackingInstance) -> PackingSolution:
    """Full LP: one column per real option, block mass <= 1 with no-op as slack."""
    t0, k1, d = inst.n_blocks, inst.n_options, inst.n_resources
    k = k1 - 1
    c = (inst.scale * inst.rewards[:, 1:]).ravel()
    a_mat = np.zeros((t0 + d, t0 * k))
    for i in range(t0):
        a_mat[i, i * k : (i + 1) * k] = 1.0
    a_mat[t0:, :] = (inst.scale * inst.consumption[:, 1:, :]).reshape(t0 * k, d).T
    b = np.concatenate([np.ones(t0), inst.caps])

    x, value, duals_all, pivots = simplex_max(c, a_mat, b)
    dual_value = float(duals_all @ b)

    distributions = np.empty((t0, k1))
    distributions[:, 1:] = np.maximum(x.reshape(t0, k), 0.0)
    distributions[:, 0] = np.maximum(1.0 - distributions[:, 1:].sum(axis=1), 0.0)
    return PackingSolution(
        value=value,
        distributions=distributions,
        duals=np.maximum(duals_all[t0:], 0.0),
        duality_gap=abs(value - dual_value),
        pivots=pivots,
    )


def _solve_column_generation(inst: PackingInstance, max_rounds: int = 1000) -> PackingSolution:
    """Dantzig-Wolfe on the block structure for large instances.

    Columns are pure per-block selections; the pricing problem under
    capacity prices theta picks argmax_a (r_ia - theta . c_ia) per block
    (the no-op keeps every block's contribution at >= 0).  The Lagrangian
    value at theta upper-bounds the LP, certifying termination.
    """
    scaled_r = inst.scale * inst.rewards  # (T0, K+1)
    scaled_c = inst.scale * inst.consumption  # (T0, K+1, d)
    t0, k1, d = inst.n_blocks, inst.n_options, inst.n_resources
    rows = np.arange(t0)

    def column_for(theta: np.ndarray) -> tuple[np.ndarray, float, np.ndarray, float]:
        scores = scaled_r - scaled_c @ theta
        sel = np.argmax(scores, axis=1)
        value = float(scaled_r[rows, sel].sum())
        cons = scaled_c[rows, sel, :].sum(axis=0)
        lagrangian = float(scores[rows, sel].sum() + theta @ inst.caps)
        return sel, value, cons, lagrangian

    selections: list[np.ndarray] = []
    col_values: list[float] = []
    col_cons: list[np.ndarray] = []

    def add_column(sel: np.ndarray, value: float, cons: np.ndarray) -> bool:
        for existing in selections:
            if np.array_equal(existing, sel):
                return False
        selections.append(sel)
        col_values.append(value)
        col_cons.append(cons)
        return True

    add_column(np.zeros(t0, dtype=int), 0.0, np.zeros(d))
    sel, value, cons, _ = column_for(np.zeros(d))
    add_column(sel, value, cons)

    upper = np.inf
    master_val = 0.0
    lam = np.zeros(1)
    theta = np.zeros(d)
    pivots = 0
    for _ in range(max_rounds):
        n_col = len(selections)
        a_mat = np.zeros((d + 1, n_col))
        a_mat[:d, :] = np.array(col_cons).T
        a_mat[d, :] = 1.0
        b = np.concatenate([inst.caps, [1.0]])
        lam, master_val, duals, piv = simplex_max(np.array(col_values), a_mat, b)
        pivots += piv
        theta = np.maximum(duals[:d], 0.0)

        sel, value, cons, lagrangian = column_for(theta)
        upper = min(upper, lagrangian)
        if upper - master_val <= _GAP_TOL * (1.0 + abs(master_val)):
            break
        if not add_column(sel, value, cons):
            # pricing repeated a known column: master and bound have met
            break
    else:
        raise LpNumericsError(f"column generation failed to converge in {max_rounds} rounds")

    distributions = np.zeros((t0, k1))
    for weight, sel in zip(lam, selections):
        if weight > 0.0:
            distributions[rows, sel] += weight
    distributions[:, 0] += np.maximum(1.0 - lam.sum(), 0.0)
    return PackingSolution(
        value=master_val,
        distributions=distributions,
        duals=theta,
        duality_gap=max(upper - master_val, 0.0),
        pivots=pivots,
    )


def _validate(inst: PackingInstance, sol: PackingSolution) -> Optional[str]:
    row_sums = sol.distributions.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-9) or np.any(sol.distributions < -1e-9):
        return "distributions left the simplex"
    used = inst.scale * np.einsum("ik,ikd->d", sol.distributions, inst.consumption)
    if np.any(used > inst.caps + _FEAS_TOL):
        return f"capacity violated: used={used}, caps={inst.caps}"
    slack_terms = sol.duals * (inst.caps - used)
    if np.any(slack_terms > _FEAS_TOL):
        return f"complementary slackness residual {np.max(slack_terms):.3g}"
    if sol.duality_gap > _GAP_TOL * (1.0 + abs(sol.value)):
        return f"duality gap {sol.duality_gap:.3g} not certified"
    return None


def solve(instance: PackingInstance) -> PackingSolution:
    """Optimal primal-dual pair for the block packing LP.

    Raises LpNumericsError (with the instance dumped for triage) if the
    solver cannot certify optimality at the fixed tolerances.
    """
    if instance.n_blocks * instance.n_options <= SIMPLEX_VARIABLE_LIMIT:
        sol = _solve_dense(instance)
    else:
        sol = _solve_column_generation(instance)
    problem = _validate(instance, sol)
    if problem is not None:
        path = dump_instance(instance)
        raise LpNumericsError(f"{problem}; instance dumped to {path}")
    return sol


def dump_instance(instance: PackingInstance, path: Optional[str] = None) -> str:
    """Write the documented plain-text form; returns the path.

    Format: header line "T0 K d scale"; one line of d caps; then, block by
    block, one line per option: "reward c_1 ... c_d" (option 0 first).
    """
    if path is None:
        fd, path = tempfile.mkstemp(prefix="packing_", suffix=".txt")
        handle: TextIO = os.fdopen(fd, "w")
    else:
        handle = open(path, "w")
    with handle:
        t0, k1, d = instance.n_blocks, instance.n_options, instance.n_resources
        handle.write(f"{t0} {k1 - 1} {d} {instance.scale:.17g}\n")
        handle.write(" ".join(f"{v:.17g}" for v in instance.caps) + "\n")
        for i in range(t0):
            for a in range(k1):
                row = [f"{instance.rewards[i, a]:.17g}"]
                row += [f"{v:.17g}" for v in instance.consumption[i, a, :]]
                handle.write(" ".join(row) + "\n")
    return path


def load_instance(path: str) -> PackingInstance:
    with open(path) as handle:
        first = handle.readline().split()
        t0, k, d = int(first[0]), int(first[1]), int(first[2])
        scale = float(first[3])
        caps = np.array([float(v) for v in handle.readline().split()])
        rewards = np.zeros((t0, k + 1))
        consumption = np.zeros((t0, k + 1, d))
        for i in range(t0):
            for a in range(k + 1):
                parts = [float(v) for v in handle.readline().split()]
                rewards[i, a] = parts[0]
                consumption[i, a, :] = parts[1:]
    return PackingInstance(rewards=rewards, consumption=consumption, caps=caps, scale=scale)


def instance_from_slates(
    slates: np.ndarray,
    mu: np.ndarray,
    w: np.ndarray,
    caps: np.ndarray,
    scale: float,
) -> PackingInstance:
    """Instance whose block i offers the no-op plus the arms of slates[i],
    valued by the linear parameters (mu, w)."""
    n, _, k = slates.shape
    d = w.shape[1]
    rewards = np.zeros((n, k + 1))
    rewards[:, 1:] = np.einsum("nmk,m->nk", slates, mu)
    consumption = np.zeros((n, k + 1, d))
    consumption[:, 1:, :] = np.einsum("nmk,md->nkd", slates, w)
    return PackingInstance(rewards=rewards, consumption=consumption, caps=caps, scale=scale)


def oracle_solution(
    env: LinearEnvironment,
    budget: float,
    horizon: int,
    n_samples: int,
    seed: int = 0,
) -> PackingSolution:
    """Sample-average LP for the optimal static policy, with duals exposed."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng([int(seed), 0x07AC1E])
    slates = sample_slate_batch(env, rng, n_samples)
    inst = instance_from_slates(
        slates,
        env.mu_star,
        env.w_star,
        caps=np.full(env.d, float(budget)),
        scale=horizon / n_samples,
    )
    return solve(inst)


def opt_oracle(
    env: LinearEnvironment,
    budget: float,
    horizon: int,
    n_samples: int,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of the optimal static policy value.

    Draws n_samples fresh slates, values them with the true parameters and
    solves the packing LP with caps budget and scale horizon/n_samples.
    Evaluation-only: the learner never sees this.
    """
    return oracle_solution(env, budget, horizon, n_samples, seed).value
