"""Sparsity-promoting gain synthesis and the bandwidth accounting metric.

Communication cost in a networked controller is set by which gain entries
are nonzero, so sparsity is promoted directly: split the unconstrained
extraction Pi into K + L, charge K a weighted l1 penalty and L a quadratic
one,

    minimize  gamma * sum W_mn |K_mn|  +  1/2 ||L||_F^2
    subject to  K + L = Pi,

and solve by ADMM: an exact L minimization, an entrywise soft-threshold
K step, a dual ascent on the constraint, with the step weight rho
increased every inner iteration.  The outer loop is plain policy
iteration, with the ADMM result actuated in place of the dense
extraction.  gamma = 0 makes the penalty vanish and the inner loop
collapse to K = Pi, so the dense learner is recovered exactly; large
gamma trades closed-loop cost for zeros until, past a scenario-dependent
ceiling, no stabilizing sparse gain exists and the outer loop stalls
(SparseInfeasibleError).

The bandwidth metric counts the states each communication link must
carry: a state crosses a link when any gain column involving it does,
monomial columns included, since evaluating theta_j * v_j1 in another
boat's feedback needs both factors transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .carleman_lift import CarlemanModel
from .errors import InvalidArgumentError, SparseInfeasibleError
from .plant_sim import CostWeights
from .policy_iteration import (FeedbackGain, FrozenBatch, LearningConfig,
                               initial_gain)
from .riccati import is_hurwitz
from .structured_synthesis import pi_from_p

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class AdmmConfig:
    """Knobs of the inner ADMM solve.

    weight_matrix None means all-ones.  reweight=True refreshes the l1
    weights from the previous outer gain (W = 1/(|K| + 1e-3)), sharpening
    zeros at equal gamma; off by default.
    """

    gamma: float
    rho0: float = 1.0
    alpha: float = 1.1
    weight_matrix: np.ndarray | None = None
    eps_k: float = 1e-6
    eps_l: float = 1e-6
    max_inner: int = 500
    rho_cap: float = 1e8
    reweight: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidArgumentError("gamma must be non-negative")
        if self.rho0 <= 0:
            raise InvalidArgumentError("rho0 must be positive")
        if self.alpha <= 1:
            raise InvalidArgumentError("alpha must exceed 1")
        if self.eps_k <= 0 or self.eps_l <= 0:
            raise InvalidArgumentError("stop tolerances must be positive")
        if self.max_inner < 1:
            raise InvalidArgumentError("max_inner must be at least 1")
        if self.weight_matrix is not None:
            w = np.asarray(self.weight_matrix, dtype=float)
            if np.any(w < 0):
                raise InvalidArgumentError("weights must be non-negative")
            object.__setattr__(self, "weight_matrix", w)


@dataclass
class SparseLog:
    """One outer iteration of the sparse loop."""

    iteration: int
    inner_steps: int
    cardinality: int
    p_delta: float
    residual: float
    cond: float
    rho_final: float


def soft_threshold(omega, mu):
    """Shrink toward zero: omega+mu below -mu, zero inside [-mu, mu],
    omega-mu above."""
    omega = np.asarray(omega, dtype=float)
    out = np.where(omega > mu, omega - mu,
                   np.where(omega < -mu, omega + mu, 0.0))
    return float(out) if out.ndim == 0 else out


def _conform(k, l_mat, lam, pi):
    shapes = {np.shape(k), np.shape(l_mat), np.shape(lam), np.shape(pi)}
    if len(shapes) != 1:
        raise InvalidArgumentError(f"conflicting shapes {sorted(shapes)}")


def admm_step(k, l_mat, lam, rho, gamma, w, pi):
    """One ADMM round: exact L minimization, soft-threshold K step, dual
    ascent on K + L - Pi.

    The K step thresholds Pi - L' - Lam/rho at gamma*W/rho entrywise (the
    proximal map of the weighted l1 term against the augmented quadratic).
    """
    _conform(k, l_mat, lam, pi)
    if rho <= 0:
        raise InvalidArgumentError("rho must be positive")
    l_new = -(lam + rho * (np.asarray(k, dtype=float) - pi)) / (1.0 + rho)
    k_new = soft_threshold(pi - l_new - lam / rho, gamma * np.asarray(w) / rho)
    lam_new = lam + rho * (k_new + l_new - pi)
    return k_new, l_new, lam_new


def augmented_lagrangian(k, l_mat, lam, rho, gamma, w, pi) -> float:
    """Objective the inner steps descend at fixed rho."""
    _conform(k, l_mat, lam, pi)
    gap = np.asarray(k, dtype=float) + l_mat - pi
    return float(0.5 * np.sum(np.asarray(l_mat) ** 2)
                 + gamma * np.sum(np.asarray(w) * np.abs(k))
                 + np.sum(np.asarray(lam) * gap)
                 + 0.5 * rho * np.sum(gap ** 2))


def _admm_inner(pi: np.ndarray, config: AdmmConfig,
                w: np.ndarray) -> tuple[np.ndarray, int, float]:
    """Run the inner loop from the warm start (Pi, 0, 0).

    rho grows by alpha every step (capped); stops when both the K and L
    steps have settled.  The warm start makes gamma = 0 terminate in one
    step at K = Pi exactly.
    """
    k = pi.copy()
    l_mat = np.zeros_like(pi)
    lam = np.zeros_like(pi)
    rho = config.rho0
    for z in range(1, config.max_inner + 1):
        k_new, l_new, lam = admm_step(k, l_mat, lam, rho, config.gamma, w, pi)
        dk = float(np.linalg.norm(k_new - k))
        dl = float(np.linalg.norm(l_new - l_mat))
        k, l_mat = k_new, l_new
        rho = min(rho * config.alpha, config.rho_cap)
        if dk <= config.eps_k and dl <= config.eps_l:
            return k, z, rho
    return k, config.max_inner, rho


def run_sparse(plant, model: CarlemanModel, weights: CostWeights,
               learn_config: LearningConfig, admm_config: AdmmConfig,
               k0: FeedbackGain | None = None,
               behavior: FeedbackGain | None = None,
               batch: FrozenBatch | None = None
               ) -> tuple[FeedbackGain, list[SparseLog]]:
    """Policy iteration with the ADMM-sparsified gain actuated each round.

    Value matrices come from the off-policy data equations on one stored
    excitation batch re-targeted at each candidate (collected open loop,
    or under a stabilizing behavior gain; gamma sweeps pass the batch in
    prebuilt, since the data does not depend on gamma).  Each outer round
    extracts the dense Pi from the solved P and replaces it by the inner
    ADMM result; the outer loop stops when P settles to learn_config.eps.
    Exhausting max_iters, or a final gain whose closed-loop linear block
    is not Hurwitz, raises SparseInfeasibleError carrying the gamma that
    failed: past the scenario's feasibility ceiling sparsity and stability
    cannot be had together.
    """
    if batch is None:
        batch = FrozenBatch(plant, model, weights, learn_config, behavior)
    gain = k0 if k0 is not None else initial_gain(model, weights)
    logs: list[SparseLog] = []
    p_prev = np.zeros((model.dim, model.dim))
    for i in range(1, learn_config.max_iters + 1):
        cert = batch.solve(gain)
        pi = pi_from_p(cert, model, weights.r)
        if admm_config.weight_matrix is not None:
            w = admm_config.weight_matrix
        elif admm_config.reweight and i > 1:
            w = 1.0 / (np.abs(gain.k_matrix) + 1e-3)
        else:
            w = np.ones_like(pi)
        k_new, steps, rho_last = _admm_inner(pi, admm_config, w)
        delta = float(np.linalg.norm(cert.p_matrix - p_prev)
                      / max(1.0, np.linalg.norm(p_prev)))
        logs.append(SparseLog(i, steps, int(np.sum(np.abs(k_new) > ZERO_TOL)),
                              delta, cert.residual, cert.cond, rho_last))
        gain = FeedbackGain(k_new, model.basis, "sparse")
        p_prev = cert.p_matrix
        if i >= 2 and delta <= learn_config.eps:
            n = model.n
            a11 = model.a_matrix[:n, :n]
            b1 = model.b0[:n, :]
            if not is_hurwitz(a11 - b1 @ gain.k_matrix[:, :n]):
                raise SparseInfeasibleError(
                    f"gamma={admm_config.gamma:g} yields an unstable "
                    "closed-loop linear block", gamma=admm_config.gamma)
            return gain, logs
    raise SparseInfeasibleError(
        f"sparse loop did not settle in {learn_config.max_iters} iterations "
        f"at gamma={admm_config.gamma:g}", gamma=admm_config.gamma)


def bandwidth_metric(gain: FeedbackGain, states_per_agent: int,
                     inputs_per_agent: int,
                     per_link_capacity: int | None = None
                     ) -> tuple[int, dict[tuple[int, int], int]]:
    """Count the states each communication link must carry.

    A state crosses link {i, j} when any nonzero gain column in agent i's
    input rows involves a state owned by agent j (or the reverse); a mixed
    monomial ships every foreign state it involves.  Returns the total and
    the per-link table keyed by (i, j) with i < j; a fully dense 4-agent
    gain with 6 states each gives 12 states on each of the 6 links.
    """
    basis = gain.basis
    if basis.n % states_per_agent:
        raise InvalidArgumentError(
            f"{basis.n} states do not split into groups of {states_per_agent}")
    n_agents = basis.n // states_per_agent
    if gain.k != n_agents * inputs_per_agent:
        raise InvalidArgumentError(
            f"gain has {gain.k} rows, expected "
            f"{n_agents} agents x {inputs_per_agent}")
    if per_link_capacity is None:
        per_link_capacity = 2 * states_per_agent
    agent_of_state = np.arange(basis.n) // states_per_agent
    # shipped[(i, j)] = set of states crossing the link in either direction
    shipped: dict[tuple[int, int], set] = {}
    for i in range(n_agents):
        rows = gain.k_matrix[i * inputs_per_agent:(i + 1) * inputs_per_agent]
        used = np.any(np.abs(rows) > ZERO_TOL, axis=0)
        for m in np.flatnonzero(used):
            for s in np.flatnonzero(basis.exponents[m]):
                o = int(agent_of_state[s])
                if o != i:
                    shipped.setdefault((min(o, i), max(o, i)), set()).add(s)
    table = {link: len(states) for link, states in sorted(shipped.items())}
    if any(count > per_link_capacity for count in table.values()):
        raise InvalidArgumentError(
            f"a link exceeds its capacity of {per_link_capacity} states")
    return sum(table.values()), table
