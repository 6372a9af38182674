"""Topology-constrained gain synthesis on the lifted state.

A structure mask Omega (binary, gain-shaped) prescribes which feedback
entries a controller may populate: Omega_ij = 0 pins K_ij to zero.  Zeroing
entries of a dense gain after the fact is neither optimal nor reliably
stabilizing, so the gain is split instead as K = Pi_P - L, where Pi_P is
the unconstrained extraction of a value matrix P and L carries exactly the
forbidden entries, L = Pi_P o Omega^c.  P solves a Riccati-like equation
with an extra L^T R L term, which prices the correction into the cost
rather than into stability.  Alternating

    P  <-  generalized Riccati solution at the current L
    L  <-  mask_complement(Pi_P)

drives (P, L) to a fixed point whose gain meets the mask exactly.  The
value solve runs either on the truncated model (inner Kleinman-type
Lyapunov sweeps) or from stored excitation data (the off-policy frozen
batch), so the model-free variant needs nothing beyond what the dense
learner already measures.

Over-sparsified topologies have no stabilizing fixed point; the loops
detect the resulting stall or loss of stabilizing iterates and raise
StructuredInfeasibleError rather than returning a nonconforming gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .carleman_lift import CarlemanModel, MonomialBasis, closed_loop_matrix
from .errors import InvalidArgumentError, StructuredInfeasibleError
from .plant_sim import CostWeights
from .policy_iteration import (FeedbackGain, FrozenBatch, LearningConfig,
                               _check_weights, extract_gain, initial_gain)
from .riccati import is_hurwitz, lyapunov_cost


@dataclass(frozen=True)
class StructureMask:
    """Binary gain-shaped pattern; a zero pins the matching gain entry."""

    omega: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        if om.ndim != 2:
            raise InvalidArgumentError("mask must be a matrix")
        if not np.all((om == 0.0) | (om == 1.0)):
            raise InvalidArgumentError("mask entries must be 0 or 1")
        object.__setattr__(self, "omega", om)

    @property
    def complement(self) -> np.ndarray:
        return 1.0 - self.omega

    @classmethod
    def from_adjacency(cls, adjacency, basis: MonomialBasis,
                       states_per_agent: int,
                       inputs_per_agent: int) -> "StructureMask":
        """Expand an agent-level communication graph over the monomial basis.

        adjacency[i, j] = 1 means agent i may use agent j's states.  A
        monomial column stays enabled for agent i's input rows only when
        every state it involves belongs to i or one of i's neighbours; a
        mixed monomial needs all its owners' data, so removing a link kills
        every column touching the removed agent.
        """
        adj = np.asarray(adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidArgumentError("adjacency must be square")
        if not np.all((adj == 0.0) | (adj == 1.0)):
            raise InvalidArgumentError("adjacency entries must be 0 or 1")
        if not np.array_equal(adj, adj.T):
            raise InvalidArgumentError("adjacency must be symmetric")
        n_agents = adj.shape[0]
        if basis.n != n_agents * states_per_agent:
            raise InvalidArgumentError(
                f"basis has {basis.n} states, expected "
                f"{n_agents} agents x {states_per_agent}")
        allowed = adj.copy()
        np.fill_diagonal(allowed, 1.0)
        # owners[m, j] = 1 when monomial m involves a state of agent j
        agent_of_state = np.arange(basis.n) // states_per_agent
        owners = np.zeros((basis.dim, n_agents))
        for m, exp in enumerate(basis.exponents):
            owners[m, np.unique(agent_of_state[exp > 0])] = 1.0
        omega = np.zeros((n_agents * inputs_per_agent, basis.dim))
        for i in range(n_agents):
            ok = np.all(owners <= allowed[i][None, :], axis=1)
            omega[i * inputs_per_agent:(i + 1) * inputs_per_agent, ok] = 1.0
        return cls(omega)


def mask_complement(pi: np.ndarray, mask: StructureMask) -> np.ndarray:
    """Forbidden part of a gain: L = Pi o Omega^c."""
    pi = np.asarray(pi, dtype=float)
    if pi.shape != mask.omega.shape:
        raise InvalidArgumentError(
            f"gain shape {pi.shape} does not match mask {mask.omega.shape}")
    return pi * mask.complement


def pi_from_p(p, model: CarlemanModel, r: np.ndarray) -> np.ndarray:
    """Unconstrained gain extraction of a value matrix.

    Same truncated-realization machinery as the learner's gain update, so
    the masked loop and plain policy iteration share one code path.
    """
    return extract_gain(p, model, r, source="structured").k_matrix


def _check_mask(mask: StructureMask, model: CarlemanModel) -> None:
    if mask.omega.shape != (model.k_inputs, model.dim):
        raise InvalidArgumentError(
            f"mask has shape {mask.omega.shape}, expected "
            f"({model.k_inputs}, {model.dim})")


def _lifted_state_cost(model: CarlemanModel, weights: CostWeights) -> np.ndarray:
    q_lift = np.zeros((model.dim, model.dim))
    q_lift[:model.n, :model.n] = weights.q1
    return q_lift


def _certify(k_matrix: np.ndarray, model: CarlemanModel) -> None:
    n = model.n
    a11 = model.a_matrix[:n, :n]
    b1 = model.b0[:n, :]
    if not is_hurwitz(a11 - b1 @ k_matrix[:, :n]):
        raise StructuredInfeasibleError(
            "converged masked gain leaves the closed-loop linear block "
            "unstable; the requested pattern is too sparse")


def _generalized_riccati(model: CarlemanModel, weights: CostWeights,
                         q_lift: np.ndarray, l_matrix: np.ndarray,
                         k_init: np.ndarray, tol: float,
                         max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Value matrix of the generalized equation at fixed L.

    With K = Pi_P - L the generalized equation collapses to the Lyapunov
    equation of the loop closed by K with load Q + K^T R K, so sweeping
    evaluation and the shifted improvement converges like the plain
    Kleinman recursion while L stays frozen.  Returns (P, K) of the fixed
    point; losing a stabilizing iterate or stalling means the current L
    admits no solution.
    """
    k_mat = np.asarray(k_init, dtype=float)
    for _ in range(max_sweeps):
        _, acl = closed_loop_matrix(model, k_mat)
        if not is_hurwitz(acl):
            raise StructuredInfeasibleError(
                "generalized Riccati sweep lost stability; no stabilizing "
                "gain for the current mask correction")
        p = lyapunov_cost(acl, q_lift + k_mat.T @ weights.r @ k_mat)
        k_next = pi_from_p(p, model, weights.r) - l_matrix
        dk = float(np.linalg.norm(k_next - k_mat)
                   / max(1.0, np.linalg.norm(k_mat)))
        k_mat = k_next
        if dk <= tol:
            return p, k_mat
    raise StructuredInfeasibleError(
        f"generalized Riccati sweeps did not settle in {max_sweeps} rounds")


def structured_model_based(model: CarlemanModel, weights: CostWeights,
                           mask: StructureMask, tol: float = 1e-6,
                           max_iters: int = 50) -> FeedbackGain:
    """Masked gain synthesis on a known truncated model.

    Outer loop over the mask correction: solve the generalized Riccati
    equation at the current L, then refresh L from the unconstrained
    extraction.  Stops when both L and the masked gain settle to tol
    (relative Frobenius); an all-ones mask keeps L at zero and reduces to
    the dense lifted Kleinman solve.  Exhausting max_iters without the
    correction settling raises StructuredInfeasibleError, as does losing a
    stabilizing iterate inside the inner sweeps.
    """
    _check_weights(weights, model)
    _check_mask(mask, model)
    q_lift = _lifted_state_cost(model, weights)
    l_mat = np.zeros_like(mask.omega)
    k_warm = initial_gain(model, weights).k_matrix
    k_prev = None
    dl = np.inf
    for i in range(1, max_iters + 1):
        p, k_inner = _generalized_riccati(model, weights, q_lift, l_mat,
                                          k_warm, 0.01 * tol)
        pi = pi_from_p(p, model, weights.r)
        l_next = mask_complement(pi, mask)
        k_next = pi - l_next
        dl = float(np.linalg.norm(l_next - l_mat)
                   / max(1.0, np.linalg.norm(l_mat)))
        if i >= 2 and dl <= tol and np.linalg.norm(k_next - k_prev) <= (
                tol * max(1.0, float(np.linalg.norm(k_prev)))):
            _certify(k_next, model)
            return FeedbackGain(k_next, model.basis, "structured")
        k_prev = k_next
        l_mat = l_next
        k_warm = k_inner
    raise StructuredInfeasibleError(
        f"mask correction did not settle in {max_iters} iterations "
        f"(last relative change {dl:.3e})")


def structured_model_free(plant, model: CarlemanModel, weights: CostWeights,
                          mask: StructureMask, learn_config: LearningConfig,
                          k0: FeedbackGain | None = None,
                          behavior: FeedbackGain | None = None,
                          batch: FrozenBatch | None = None) -> FeedbackGain:
    """Masked gain synthesis from measured data.

    Value matrices come from the off-policy data equations on one stored
    excitation batch, re-targeted at each candidate gain, in place of the
    model-based Lyapunov solve; the mask loop is otherwise the same:
    K_{i+1} = Pi_{P_i} - L_i, then L_{i+1} = mask_complement(Pi_{P_i}).
    Stops when the correction and the actuated-gain sequence both settle
    to learn_config.eps; watching the actuated gain (not the freshly
    masked candidate) matters because the one-step lag between Pi and L
    means the correction's effect shows up one solve later.  Returns the
    exactly-masked gain Pi - L.  An all-ones mask keeps L at zero and
    reproduces the dense off-policy run on the same batch (which may be
    passed in prebuilt; behavior is then unused).
    """
    _check_mask(mask, model)
    if batch is None:
        batch = FrozenBatch(plant, model, weights, learn_config, behavior)
    gain = k0 if k0 is not None else initial_gain(model, weights)
    l_mat = np.zeros_like(mask.omega)
    dl = np.inf
    for i in range(1, learn_config.max_iters + 1):
        cert = batch.solve(gain)
        pi = pi_from_p(cert, model, weights.r)
        l_next = mask_complement(pi, mask)
        k_act = pi - l_mat
        dl = float(np.linalg.norm(l_next - l_mat)
                   / max(1.0, np.linalg.norm(l_mat)))
        dk = float(np.linalg.norm(k_act - gain.k_matrix)
                   / max(1.0, np.linalg.norm(gain.k_matrix)))
        if i >= 2 and dl <= learn_config.eps and dk <= learn_config.eps:
            k_final = pi - l_next
            _certify(k_final, model)
            return FeedbackGain(k_final, model.basis, "structured")
        gain = FeedbackGain(k_act, model.basis, "structured")
        l_mat = l_next
    raise StructuredInfeasibleError(
        f"mask correction did not settle in {learn_config.max_iters} "
        f"iterations (last relative change {dl:.3e})")
