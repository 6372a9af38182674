"""Data-driven policy iteration on the lifted state.

The value candidate is a quadratic form psi^T P psi on the lifted state.
Integrating its derivative along measured trajectory intervals turns each
interval into one linear equation in the vectorized coefficients pbar:

    row:  psibar(t_r) - psibar(t_r + dt)            (psibar: extended lift)
    rhs:  int_{t_r}^{t_r+dt} x^T Q1 x + (K psi)^T R (K psi) dt

which is exact for the ideal truncated closed loop under u = -K psi.  Real
data deviates from that loop through the exploration input (always) and, in
the off-policy variant, through the mismatch between the actuated input and
the candidate gain; both are compensated by correction rows built from the
beta contraction (carleman_lift.quad_contract_batch):

    on-policy:   rows += int 2 beta(psi) B(psi) u_noise dt
    off-policy:  rows += int 2 beta(psi) (B(psi) u_noise + Kcal(K) psi) dt

The exploration signal is applied zero-order-hold per integration step, so
the correction quadrature holds each interval's noise sample at both
endpoints; treating the noise as smooth there leaves an O(dt) bias in P.

Solving the stacked system in least squares recovers P; the next gain comes
from the truncated expansion of R^-1 B(psi)^T P psi (extract_gain).  Both
run_* drivers log every certificate and stop on the relative Frobenius
change of P.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .carleman_lift import (CarlemanModel, QuadBasis, closed_loop_matrix,
                            lift_batch, lift_state, quad_contract_batch,
                            quadrize_row, truncated_pairs, unvectorize_quadratic,
                            vectorize_quadratic)
from .errors import (DivergedError, IllConditionedError, InvalidArgumentError)
from .noise import NoiseConfig, NoiseSignal
from .plant_sim import (CostWeights, Trajectory, concat_trajectories, integrate)
from .riccati import kleinman_are

COND_LIMIT = 1e12

GAIN_SOURCES = ("learned", "structured", "sparse", "initial")


@dataclass
class FeedbackGain:
    """State feedback u = -K psi over a monomial basis.

    Callable on plant states, so it drops into integrate() directly.
    """

    k_matrix: np.ndarray
    basis: object
    source: str = "learned"

    def __post_init__(self):
        self.k_matrix = np.atleast_2d(np.asarray(self.k_matrix, dtype=float))
        if self.source not in GAIN_SOURCES:
            raise InvalidArgumentError(
                f"gain source {self.source!r} not one of {GAIN_SOURCES}")
        if self.k_matrix.shape[1] != self.basis.dim:
            raise InvalidArgumentError(
                f"gain has {self.k_matrix.shape[1]} columns, "
                f"basis dimension is {self.basis.dim}")

    @property
    def k(self) -> int:
        return self.k_matrix.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return -self.k_matrix @ lift_state(np.asarray(x, dtype=float), self.basis)


@dataclass
class PolicyCertificate:
    """One solved value candidate: P, its vectorization, and solve diagnostics."""

    p_matrix: np.ndarray
    p_bar: np.ndarray
    residual: float
    cond: float
    iteration: int = 0

    def __post_init__(self):
        self.p_matrix = np.asarray(self.p_matrix, dtype=float)
        if np.max(np.abs(self.p_matrix - self.p_matrix.T)) > 1e-10 * max(
                1.0, float(np.max(np.abs(self.p_matrix)))):
            raise InvalidArgumentError("certificate P must be symmetric")


@dataclass
class LearningLog:
    """Per-iteration history of a learning run.

    p_history holds iterations + 1 matrices (the zero start included), ditto
    k_history for gains; delta_history[i] is the relative Frobenius change
    ||P_{i+1} - P_i|| / max(1, ||P_i||).
    """

    p_history: list = field(default_factory=list)
    k_history: list = field(default_factory=list)
    delta_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    cond_history: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    traj: Trajectory | None = None

    @property
    def iterations(self) -> int:
        return len(self.delta_history)


@dataclass(frozen=True)
class LearningConfig:
    """Shared knobs of the learning drivers.

    t_window: data-window length T; every window contributes T/dt rows.
    """

    x0: np.ndarray
    t_window: float
    dt: float
    noise: NoiseConfig
    max_iters: int = 20
    eps: float = 1e-4
    ridge: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.dt <= 0 or self.t_window <= 0:
            raise InvalidArgumentError("dt and t_window must be positive")
        ratio = self.t_window / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise InvalidArgumentError(
                f"t_window={self.t_window} is not a multiple of dt={self.dt}")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be at least 1")
        if self.eps <= 0:
            raise InvalidArgumentError("eps must be positive")
        if self.ridge < 0:
            raise InvalidArgumentError("ridge must be non-negative")
        if not isinstance(self.noise, NoiseConfig):
            raise InvalidArgumentError("noise must be a NoiseConfig")

    @property
    def rows_per_window(self) -> int:
        return int(round(self.t_window / self.dt))


def _check_weights(weights: CostWeights, model: CarlemanModel) -> None:
    if weights.q1.shape != (model.n, model.n):
        raise InvalidArgumentError(
            f"Q1 has shape {weights.q1.shape}, expected ({model.n}, {model.n})")
    if weights.r.shape != (model.k_inputs, model.k_inputs):
        raise InvalidArgumentError(
            f"R has shape {weights.r.shape}, expected "
            f"({model.k_inputs}, {model.k_inputs})")


def collect_batch(segment: Trajectory, gain: FeedbackGain, weights: CostWeights,
                  qb: QuadBasis) -> tuple[np.ndarray, np.ndarray]:
    """Data-equation rows of one window: (Psi, Y).

    Psi[r] = psibar(t_r) - psibar(t_{r+1}); Y[r] integrates the running cost
    of the gain's feedback policy (evaluated on measured states, trapezoid
    per interval).  One row per sample interval: len(segment) - 1 rows.
    """
    states = segment.states
    if states.shape[1] != qb.base.n:
        raise InvalidArgumentError(
            f"segment has {states.shape[1]} states, basis expects {qb.base.n}")
    psibar = qb.lift_batch(states)
    psi = lift_batch(states, qb.base)
    u_eval = psi @ gain.k_matrix.T
    f = (np.einsum("ti,ij,tj->t", states, weights.q1, states)
         + np.einsum("ti,ij,tj->t", u_eval, weights.r, u_eval))
    dt = segment.dt
    psi_rows = psibar[:-1] - psibar[1:]
    y_rows = 0.5 * (f[:-1] + f[1:]) * dt
    return psi_rows, y_rows


def _input_image(psi: np.ndarray, model: CarlemanModel,
                 u_rows: np.ndarray) -> np.ndarray:
    """Rows of B(psi_t) u_t for a whole window at once."""
    v = u_rows @ model.b0.T
    for i, s_i in enumerate(model.input_state):
        if s_i.any():
            v += (psi @ s_i.T) * u_rows[:, i:i + 1]
    return v


def _correction_rows(psi_mat: np.ndarray, dt: float, qb: QuadBasis,
                     psi: np.ndarray, v_left: np.ndarray,
                     v_right: np.ndarray) -> np.ndarray:
    """Psi rows plus the trapezoid integral of 2 beta(psi) v per interval.

    v_left/v_right are the integrand's input image at the interval's two
    endpoints; the caller chooses how the noise enters each (held sample).
    """
    h_left = 2.0 * quad_contract_batch(psi[:-1], v_left, qb)
    h_right = 2.0 * quad_contract_batch(psi[1:], v_right, qb)
    corr = 0.5 * (h_left + h_right) * dt
    if psi_mat.shape != corr.shape:
        raise InvalidArgumentError(
            f"Psi has shape {psi_mat.shape}, window implies {corr.shape}")
    return psi_mat + corr


def _basis_lift(segment: Trajectory, qb: QuadBasis) -> np.ndarray:
    return lift_batch(segment.states, qb.base)


def noise_correction_onpolicy(psi_mat: np.ndarray, segment: Trajectory,
                              model: CarlemanModel, qb: QuadBasis) -> np.ndarray:
    """Compensate the exploration input of an on-policy window.

    Adds rows of int 2 beta(psi) B(psi) u_noise dt, turning the data
    equations of the actuated loop (u = -K psi + noise) back into equations
    for the ideal loop of the same gain.  Within each interval the noise is
    the held left sample.
    """
    psi = _basis_lift(segment, qb)
    held = segment.noise[:-1]
    v_left = _input_image(psi[:-1], model, held)
    v_right = _input_image(psi[1:], model, held)
    return _correction_rows(psi_mat, segment.dt, qb, psi, v_left, v_right)


def offpolicy_correction(psi_mat: np.ndarray, segment: Trajectory,
                         model: CarlemanModel, gain: FeedbackGain,
                         qb: QuadBasis) -> np.ndarray:
    """Re-target stored excitation data at a candidate gain's closed loop.

    Adds rows of int 2 beta(psi) (B(psi) u + Kcal psi) dt where u is the
    recorded applied input and Kcal is the candidate's feedback contraction,
    so the same stored batch serves every candidate gain.  The segment may
    have run open loop (u = noise) or under a stabilizing behavior gain;
    either way the recorded inputs are what actually drove the plant.  At
    the right endpoint the noise part of u is swapped for the interval's
    held left sample (any feedback part is smooth and keeps its endpoint
    value); the Kcal psi part uses the endpoint states directly.
    """
    psi = _basis_lift(segment, qb)
    kcal, _ = closed_loop_matrix(model, gain.k_matrix)
    u_right = segment.inputs[1:] - segment.noise[1:] + segment.noise[:-1]
    v_left = _input_image(psi[:-1], model, segment.inputs[:-1]) + psi[:-1] @ kcal.T
    v_right = _input_image(psi[1:], model, u_right) + psi[1:] @ kcal.T
    return _correction_rows(psi_mat, segment.dt, qb, psi, v_left, v_right)


def solve_p(psi_mat: np.ndarray, y: np.ndarray, qb: QuadBasis,
            ridge: float = 1e-10) -> PolicyCertificate:
    """Least-squares solve of the stacked data equations for P.

    Columns are equilibrated to unit norm before solving; raw column norms
    span many orders of magnitude when high-degree features are small, which
    says nothing about how well determined the coefficients are.  The
    condition number is therefore measured on the equilibrated matrix, and a
    value above 1e12 raises IllConditionedError: more or richer excitation
    data is needed, not a bigger solver.  The ridge is dimensionless for the
    same reason (the scaled columns all have unit norm).
    """
    psi_mat = np.asarray(psi_mat, dtype=float)
    y = np.asarray(y, dtype=float)
    if psi_mat.ndim != 2 or psi_mat.shape[1] != qb.ext_dim:
        raise InvalidArgumentError(
            f"Psi has shape {psi_mat.shape}, expected (m, {qb.ext_dim})")
    if y.shape != (psi_mat.shape[0],):
        raise InvalidArgumentError("Y length does not match Psi rows")
    if psi_mat.shape[0] < qb.ext_dim:
        raise InvalidArgumentError(
            f"{psi_mat.shape[0]} rows cannot determine {qb.ext_dim} unknowns; "
            "collect a longer window")
    col_scale = np.linalg.norm(psi_mat, axis=0)
    col_scale[col_scale == 0.0] = 1.0
    scaled = psi_mat / col_scale
    svals = np.linalg.svd(scaled, compute_uv=False)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"data matrix condition number {cond:.3e} exceeds {COND_LIMIT:g}; "
            "collect more or richer excitation data", cond=cond)
    lam = ridge * float(np.mean(svals ** 2))
    if lam > 0:
        a_aug = np.vstack([scaled, np.sqrt(lam) * np.eye(qb.ext_dim)])
        y_aug = np.concatenate([y, np.zeros(qb.ext_dim)])
    else:
        a_aug, y_aug = scaled, y
    p_scaled, *_ = np.linalg.lstsq(a_aug, y_aug, rcond=None)
    p_bar = p_scaled / col_scale
    p_matrix = unvectorize_quadratic(p_bar, qb)
    residual = float(np.linalg.norm(psi_mat @ p_bar - y)
                     / max(1.0, np.linalg.norm(y)))
    return PolicyCertificate(p_matrix, p_bar, residual, cond)


def _p_of(p) -> np.ndarray:
    return p.p_matrix if isinstance(p, PolicyCertificate) else np.asarray(p, float)


def _check_diagonal_r(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    diag = np.diag(r)
    off = r - np.diag(diag)
    if np.max(np.abs(off)) > 1e-12 * max(1.0, float(np.max(np.abs(diag)))):
        raise InvalidArgumentError(
            "gain extraction is implemented for diagonal R only")
    if np.any(diag <= 0):
        raise InvalidArgumentError("R must have positive diagonal")
    return diag


def extract_gain(p, model: CarlemanModel, r: np.ndarray,
                 source: str = "learned") -> FeedbackGain:
    """Truncated gain of a value candidate: the basis-representable part of
    R^-1 B(psi)^T P psi.

    Row z collects (b0^T P)_z plus the re-expansion of (S_z psi)^T P psi
    over basis monomials; pair products leaving the basis belong to the
    truncation term (eval_trunc_term), so K psi + eps_trunc reproduces the
    full product exactly.
    """
    p_matrix = _p_of(p)
    d = model.dim
    if p_matrix.shape != (d, d):
        raise InvalidArgumentError(
            f"P has shape {p_matrix.shape}, expected ({d}, {d})")
    rdiag = _check_diagonal_r(r)
    if rdiag.shape[0] != model.k_inputs:
        raise InvalidArgumentError(
            f"R has {rdiag.shape[0]} channels, model has {model.k_inputs}")
    k_matrix = (model.b0.T @ p_matrix).copy()
    for z, s_z in enumerate(model.input_state):
        if s_z.any():
            k_matrix[z] += quadrize_row(s_z.T @ p_matrix, model.basis)
    k_matrix /= rdiag[:, None]
    return FeedbackGain(k_matrix, model.basis, source)


def eval_trunc_term(p, model: CarlemanModel, x: np.ndarray,
                    r: np.ndarray) -> np.ndarray:
    """Gain truncation residual at a state: the basis-external part of
    R^-1 B(psi)^T P psi, summed by explicit exponent arithmetic.

    extract_gain(p) psi(x) + eval_trunc_term(p, x) equals the untruncated
    product channel for channel.
    """
    p_matrix = _p_of(p)
    rdiag = _check_diagonal_r(r)
    x = np.asarray(x, dtype=float)
    da, db, dexp = truncated_pairs(model.basis)
    out = np.zeros(model.k_inputs)
    if da.size == 0:
        return out
    xmono = np.prod(x[None, :] ** dexp, axis=1)
    for z, s_z in enumerate(model.input_state):
        if s_z.any():
            m = s_z.T @ p_matrix
            out[z] = float(np.dot(m[da, db], xmono)) / rdiag[z]
    return out


def initial_gain(model: CarlemanModel, weights: CostWeights) -> FeedbackGain:
    """Stabilizing seed gain: Kleinman LQR on the linear block, zero-padded
    over the higher-degree monomials."""
    _check_weights(weights, model)
    n = model.n
    a11 = model.a_matrix[:n, :n]
    b1 = model.b0[:n, :]
    _, k_lin, _ = kleinman_are(a11, b1, weights.q1, weights.r)
    k_matrix = np.zeros((model.k_inputs, model.dim))
    k_matrix[:, :n] = k_lin
    return FeedbackGain(k_matrix, model.basis, "initial")


def _rel_delta(p_new: np.ndarray, p_old: np.ndarray) -> float:
    return float(np.linalg.norm(p_new - p_old)
                 / max(1.0, np.linalg.norm(p_old)))


def run_on_policy(plant, model: CarlemanModel, weights: CostWeights,
                  config: LearningConfig, k0: FeedbackGain | None = None
                  ) -> tuple[FeedbackGain, PolicyCertificate, LearningLog]:
    """Interval-wise on-policy learning: actuate the current gain plus
    exploration noise, solve each window for the next certificate.

    The plant state carries over between windows (one continuous run) and
    the exploration signal is continuous in absolute time.  Stops when the
    relative Frobenius change of P drops to config.eps (checked from the
    second solve on); hitting max_iters leaves converged=False in the log,
    which callers map to the infeasible exit path.  DivergedError from a
    window carries the log so far in its .log attribute.
    """
    _check_weights(weights, model)
    if np.asarray(config.x0).ndim != 1:
        raise InvalidArgumentError(
            "on-policy windows form one continuous run; restart stacks of "
            "initial states are an off-policy feature")
    qb = QuadBasis(model.basis)
    gain = k0 if k0 is not None else initial_gain(model, weights)
    signal = NoiseSignal(config.noise, plant.k)
    log = LearningLog()
    d = model.dim
    p_prev = np.zeros((d, d))
    log.p_history.append(p_prev.copy())
    log.k_history.append(gain.k_matrix.copy())
    cert = None
    x = config.x0
    pieces = []
    for i in range(1, config.max_iters + 1):
        t0 = (i - 1) * config.t_window
        try:
            seg = integrate(plant, gain, x, (t0, t0 + config.t_window),
                            config.dt, signal)
        except DivergedError as err:
            if pieces:
                log.traj = concat_trajectories(pieces)
            err.log = log
            raise
        pieces.append(seg)
        x = seg.states[-1]
        psi_rows, y_rows = collect_batch(seg, gain, weights, qb)
        psi_rows = noise_correction_onpolicy(psi_rows, seg, model, qb)
        cert = solve_p(psi_rows, y_rows, qb, config.ridge)
        cert.iteration = i
        delta = _rel_delta(cert.p_matrix, p_prev)
        gain = extract_gain(cert, model, weights.r)
        log.p_history.append(cert.p_matrix.copy())
        log.k_history.append(gain.k_matrix.copy())
        log.delta_history.append(delta)
        log.residual_history.append(cert.residual)
        log.cond_history.append(cert.cond)
        p_prev = cert.p_matrix
        if i >= 2 and delta <= config.eps:
            log.converged = True
            log.stop_reason = f"relative dP {delta:.3e} <= eps after {i} windows"
            break
    if not log.converged:
        log.stop_reason = f"max_iters={config.max_iters} reached"
    log.traj = concat_trajectories(pieces)
    return gain, cert, log


class FrozenBatch:
    """Stored excitation data, re-targetable at any candidate gain.

    Collecting data is the expensive, stateful part of off-policy learning;
    re-targeting it is pure algebra.  The batch runs the excitation phase
    once (open loop by default, or under a stabilizing behavior gain when
    the open loop cannot hold the explored region) and keeps the
    per-segment pieces that do not depend on the candidate: lift
    differences, recorded-input images, and state cost samples.  solve()
    then assembles and solves the data equations for a given gain, so one
    excitation phase serves a whole policy iteration, and the masked
    synthesis loops reuse it unchanged.

    config.x0 may be one state or a stack of restart states; each row
    starts a segment of t_window seconds and the batch is their union,
    which spreads the excitation over many transients instead of one long
    orbit.  A diverging excitation phase raises DivergedError.
    """

    def __init__(self, plant, model: CarlemanModel, weights: CostWeights,
                 config: LearningConfig, behavior: FeedbackGain | None = None):
        _check_weights(weights, model)
        self.model = model
        self.weights = weights
        self.qb = QuadBasis(model.basis)
        self.dt = config.dt
        self.ridge = config.ridge
        signal = NoiseSignal(config.noise, plant.k)
        starts = np.atleast_2d(np.asarray(config.x0, dtype=float))
        self.segments = []
        for j, start in enumerate(starts):
            t0 = j * config.t_window
            self.segments.append(integrate(plant, behavior, start,
                                           (t0, t0 + config.t_window),
                                           config.dt, signal))
        self._base, self._psis, self._vul, self._vur, self._xqx = (
            [], [], [], [], [])
        for seg in self.segments:
            psibar = self.qb.lift_batch(seg.states)
            self._base.append(psibar[:-1] - psibar[1:])
            psi = lift_batch(seg.states, self.qb.base)
            self._psis.append(psi)
            u_right = seg.inputs[1:] - seg.noise[1:] + seg.noise[:-1]
            self._vul.append(_input_image(psi[:-1], model, seg.inputs[:-1]))
            self._vur.append(_input_image(psi[1:], model, u_right))
            self._xqx.append(np.einsum("ti,ij,tj->t", seg.states,
                                       weights.q1, seg.states))

    def solve(self, gain: FeedbackGain) -> PolicyCertificate:
        """Solve the data equations with the closed loop targeted at gain."""
        kcal, _ = closed_loop_matrix(self.model, gain.k_matrix)
        dt = self.dt
        rows, ys = [], []
        for psi, base, vul, vur, f0 in zip(self._psis, self._base, self._vul,
                                           self._vur, self._xqx):
            u_eval = psi @ gain.k_matrix.T
            f = f0 + np.einsum("ti,ij,tj->t", u_eval, self.weights.r, u_eval)
            ys.append(0.5 * (f[:-1] + f[1:]) * dt)
            v_left = vul + psi[:-1] @ kcal.T
            v_right = vur + psi[1:] @ kcal.T
            h_left = 2.0 * quad_contract_batch(psi[:-1], v_left, self.qb)
            h_right = 2.0 * quad_contract_batch(psi[1:], v_right, self.qb)
            rows.append(base + 0.5 * (h_left + h_right) * dt)
        return solve_p(np.vstack(rows), np.concatenate(ys), self.qb,
                       self.ridge)


def run_off_policy(plant, model: CarlemanModel, weights: CostWeights,
                   config: LearningConfig, k0: FeedbackGain | None = None,
                   behavior: FeedbackGain | None = None,
                   batch: FrozenBatch | None = None
                   ) -> tuple[FeedbackGain, PolicyCertificate, LearningLog]:
    """Batch off-policy learning from a stored excitation phase.

    The excitation data is collected once into a FrozenBatch (the data
    equations only need the recorded inputs, not how they were produced),
    then re-targeted at each candidate gain and solved repeatedly,
    starting from the Kleinman seed gain (or k0 when given).  Passing a
    prebuilt batch skips the excitation phase (behavior is then unused).
    """
    if batch is None:
        batch = FrozenBatch(plant, model, weights, config, behavior)
    gain = k0 if k0 is not None else initial_gain(model, weights)
    segments = batch.segments
    log = LearningLog(traj=segments[0] if len(segments) == 1 else None)
    d = model.dim
    p_prev = np.zeros((d, d))
    log.p_history.append(p_prev.copy())
    log.k_history.append(gain.k_matrix.copy())
    cert = None
    for i in range(1, config.max_iters + 1):
        cert = batch.solve(gain)
        cert.iteration = i
        delta = _rel_delta(cert.p_matrix, p_prev)
        gain = extract_gain(cert, model, weights.r)
        log.p_history.append(cert.p_matrix.copy())
        log.k_history.append(gain.k_matrix.copy())
        log.delta_history.append(delta)
        log.residual_history.append(cert.residual)
        log.cond_history.append(cert.cond)
        p_prev = cert.p_matrix
        if i >= 2 and delta <= config.eps:
            log.converged = True
            log.stop_reason = f"relative dP {delta:.3e} <= eps after {i} solves"
            break
    if not log.converged:
        log.stop_reason = f"max_iters={config.max_iters} reached"
    return gain, cert, log
