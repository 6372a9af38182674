"""Plants, trajectories, integration, and benchmark cost functionals.

Plants are input-affine: dx/dt = f(x) + g(x) u with f(0) = 0.  Two concrete
families live here:

  * PolynomialPlant: f and g given by monomial coefficient blocks, the form
    every lifted model is built from.
  * TugboatPlant: several surface vessels in deviation coordinates around a
    formation target.  The simulator integrates the exact rotation
    kinematics; only the design model handed to the lifting machinery uses a
    polynomial truncation of the rotation.  Keeping the simulator exact means
    no learner is ever graded against its own approximation.

Integration is classical RK4.  Feedback controllers are evaluated
continuously (at every RK4 stage); the exploration signal is zero-order-hold,
sampled at the step start and held.  Holding the feedback as well would leave
an O(dt) bias in anything learned from the data, because the recorded inputs
would no longer satisfy u = -K psi(x(t)) along the trajectory.  State
excursions beyond GUARD abort the run with DivergedError carrying the
partial trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .carleman_lift import (CarlemanModel, MonomialBasis, build_input_blocks,
                            build_transition_blocks, count_monomials,
                            lift_state, monomial_basis, selected_basis,
                            _degree_exponents)
from .errors import DivergedError, InvalidArgumentError
from .noise import NoiseConfig, NoiseSignal

GUARD = 1e6


@dataclass
class Trajectory:
    """Uniformly sampled rollout.

    inputs holds the TOTAL applied input (feedback plus exploration); the
    exploration component is recorded separately in noise so costs can score
    the learned policy itself.
    """

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.noise = np.asarray(self.noise, dtype=float)
        m = self.times.shape[0]
        if m < 2:
            raise InvalidArgumentError("a trajectory needs at least two samples")
        for name, arr in (("states", self.states), ("inputs", self.inputs),
                          ("noise", self.noise)):
            if arr.shape[0] != m:
                raise InvalidArgumentError(f"{name} rows do not match times")
        steps = np.diff(self.times)
        if np.max(np.abs(steps - steps[0])) > 1e-12 * max(1.0, abs(steps[0])):
            raise InvalidArgumentError("time grid is not uniform")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def k(self) -> int:
        return self.inputs.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]

    def window(self, t_start: float, t_end: float) -> "Trajectory":
        """Sub-trajectory between two grid-aligned times (inclusive)."""
        dt = self.dt
        i0 = int(round((t_start - self.times[0]) / dt))
        i1 = int(round((t_end - self.times[0]) / dt))
        if not (0 <= i0 < i1 <= len(self) - 1):
            raise InvalidArgumentError(
                f"window [{t_start}, {t_end}] outside trajectory span")
        for t_req, idx in ((t_start, i0), (t_end, i1)):
            if abs(self.times[idx] - t_req) > 1e-9 * max(1.0, abs(t_req)):
                raise InvalidArgumentError(f"window edge {t_req} is off the grid")
        sl = slice(i0, i1 + 1)
        return Trajectory(self.times[sl].copy(), self.states[sl].copy(),
                          self.inputs[sl].copy(), self.noise[sl].copy())


def concat_trajectories(pieces: Sequence[Trajectory]) -> Trajectory:
    """Join contiguous windows (each piece starts where the previous ended)."""
    if not pieces:
        raise InvalidArgumentError("nothing to concatenate")
    times = [pieces[0].times]
    states = [pieces[0].states]
    inputs = [pieces[0].inputs]
    noise = [pieces[0].noise]
    for prev, cur in zip(pieces, pieces[1:]):
        if abs(cur.times[0] - prev.times[-1]) > 1e-9:
            raise InvalidArgumentError("trajectory pieces are not contiguous")
        times.append(cur.times[1:])
        states.append(cur.states[1:])
        inputs.append(cur.inputs[1:])
        noise.append(cur.noise[1:])
    return Trajectory(np.concatenate(times), np.vstack(states),
                      np.vstack(inputs), np.vstack(noise))


@dataclass(frozen=True)
class CostWeights:
    """Quadratic running-cost weights x^T Q1 x + u^T R u."""

    q1: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q1", np.asarray(self.q1, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        if self.q1.ndim != 2 or self.q1.shape[0] != self.q1.shape[1]:
            raise InvalidArgumentError("Q1 must be square")
        if self.r.ndim != 2 or self.r.shape[0] != self.r.shape[1]:
            raise InvalidArgumentError("R must be square")
        if np.max(np.abs(self.q1 - self.q1.T)) > 1e-10 * max(1.0, np.max(np.abs(self.q1))):
            raise InvalidArgumentError("Q1 must be symmetric")
        if np.max(np.abs(self.r - self.r.T)) > 1e-10 * max(1.0, np.max(np.abs(self.r))):
            raise InvalidArgumentError("R must be symmetric")


class PolynomialPlant:
    """Input-affine plant with polynomial drift and input coefficients.

    taylor[j-1] has shape (n, count_monomials(n, j)), columns over the full
    degree-j monomial order, so drift(x) = sum_j taylor[j-1] x^[j]; there is
    no degree-0 block, hence drift(0) = 0 by construction.  input_state
    follows the same layout per channel for the state-dependent part of g.
    """

    kind = "poly"

    def __init__(self, taylor: Sequence[np.ndarray], b0: np.ndarray,
                 input_state: Sequence[Sequence[np.ndarray]] | None = None,
                 name: str = "poly"):
        self.taylor = [np.asarray(a, dtype=float) for a in taylor]
        self.b0 = np.asarray(b0, dtype=float)
        if not self.taylor:
            raise InvalidArgumentError("drift needs at least the linear block")
        self.n = self.taylor[0].shape[0]
        if self.b0.ndim != 2 or self.b0.shape[0] != self.n:
            raise InvalidArgumentError(
                f"b0 has shape {self.b0.shape}, expected ({self.n}, k)")
        self.k = self.b0.shape[1]
        for j, block in enumerate(self.taylor, start=1):
            expected = (self.n, count_monomials(self.n, j))
            if block.shape != expected:
                raise InvalidArgumentError(
                    f"degree-{j} drift block has shape {block.shape}, "
                    f"expected {expected}")
        if input_state is None:
            input_state = [[] for _ in range(self.k)]
        if len(input_state) != self.k:
            raise InvalidArgumentError("one input_state list per channel")
        self.input_state = [[np.asarray(b, dtype=float) for b in chan]
                            for chan in input_state]
        self.name = name
        self._pack = None

    def _packed(self):
        """Flattened coefficient arrays shared by drift/input eval and kernels."""
        if self._pack is not None:
            return self._pack
        n = self.n
        cols = []
        exps = []
        for j, block in enumerate(self.taylor, start=1):
            for exp, col in zip(_degree_exponents(n, j), block.T):
                if np.any(col):
                    cols.append(col)
                    exps.append(exp)
        dc = np.array(cols).T if cols else np.zeros((n, 0))
        de = np.array(exps, dtype=np.int64) if exps else np.zeros((0, n), np.int64)
        gexp_index: dict[tuple[int, ...], int] = {}
        triplets = []  # (channel, exp index, column)
        for i, chan in enumerate(self.input_state):
            for j, block in enumerate(chan, start=1):
                for exp, col in zip(_degree_exponents(n, j), block.T):
                    if np.any(col):
                        e = gexp_index.setdefault(exp, len(gexp_index))
                        triplets.append((i, e, col))
        pg = len(gexp_index)
        ge = np.zeros((pg, n), dtype=np.int64)
        for exp, e in gexp_index.items():
            ge[e] = exp
        gc = np.zeros((self.k, n, pg))
        for i, e, col in triplets:
            gc[i, :, e] += col
        self._pack = (np.ascontiguousarray(dc), de, np.ascontiguousarray(gc), ge)
        return self._pack

    def drift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dc, de, _, _ = self._packed()
        if de.shape[0] == 0:
            return np.zeros(self.n)
        return dc @ np.prod(x[None, :] ** de, axis=1)

    def input_matrix(self, x: np.ndarray) -> np.ndarray:
        """g(x) of shape (n, k)."""
        x = np.asarray(x, dtype=float)
        _, _, gc, ge = self._packed()
        out = self.b0.copy()
        if ge.shape[0]:
            gm = np.prod(x[None, :] ** ge, axis=1)
            out = out + (gc @ gm).T
        return out

    def design_taylor(self, order: int) -> list[np.ndarray]:
        """Drift blocks up to the given degree (zero blocks appended if short)."""
        out = [b.copy() for b in self.taylor[:order]]
        for j in range(len(out) + 1, order + 1):
            out.append(np.zeros((self.n, count_monomials(self.n, j))))
        return out


def drift(plant, x: np.ndarray) -> np.ndarray:
    """Drift field of a plant at state x (module-level convenience)."""
    return plant.drift(x)


# boat hull parameters: mass/inertia matrix and linear damping
TUG_M = np.array([[33.8, 1.0948, 0.0],
                  [1.0948, 2.764, 0.0],
                  [0.0, 0.0, 23.8]])
TUG_D = np.array([[7.0, 0.1, 0.0],
                  [0.1, 0.5, 0.0],
                  [0.0, 0.0, 2.0]])
TUG_TARGETS = np.array([[10.0, 10.0], [10.0, -10.0],
                        [-10.0, -10.0], [-10.0, 10.0]])


class TugboatPlant:
    """Boats maneuvering to a formation, in deviation coordinates.

    Per boat the state is (dx, dy, theta, v1, v2, v3): planar position
    deviation from the boat's target, yaw, and body-frame velocities.  The
    kinematics rotate (v1, v2) by theta exactly; velocities follow
    M vdot + D v = tau with thrust tau as the input.  The zero state is the
    closed formation, so drift(0) = 0.
    """

    kind = "tugboat"

    def __init__(self, boats: int = 4, targets: np.ndarray | None = None):
        if boats < 1:
            raise InvalidArgumentError("need at least one boat")
        self.boats = boats
        self.n = 6 * boats
        self.k = 3 * boats
        self.m_matrix = TUG_M.copy()
        self.d_matrix = TUG_D.copy()
        self.minv = np.linalg.inv(self.m_matrix)
        self.minvd = self.minv @ self.d_matrix
        if targets is None:
            if boats == 4:
                targets = TUG_TARGETS.copy()
            else:
                angles = 2.0 * np.pi * np.arange(boats) / boats
                targets = 10.0 * np.column_stack([np.cos(angles), np.sin(angles)])
        self.targets = np.asarray(targets, dtype=float)
        if self.targets.shape != (boats, 2):
            raise InvalidArgumentError(
                f"targets have shape {self.targets.shape}, expected ({boats}, 2)")
        b0 = np.zeros((self.n, self.k))
        for j in range(boats):
            b0[6 * j + 3:6 * j + 6, 3 * j:3 * j + 3] = self.minv
        self.b0 = b0
        self.name = f"tugboat{boats}"

    def drift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.n)
        for j in range(self.boats):
            o = 6 * j
            th = x[o + 2]
            v1, v2 = x[o + 3], x[o + 4]
            c, s = np.cos(th), np.sin(th)
            out[o + 0] = c * v1 - s * v2
            out[o + 1] = s * v1 + c * v2
            out[o + 2] = x[o + 5]
            out[o + 3:o + 6] = -self.minvd @ x[o + 3:o + 6]
        return out

    def input_matrix(self, x: np.ndarray) -> np.ndarray:
        return self.b0

    def design_taylor(self, order: int) -> list[np.ndarray]:
        """Polynomial drift blocks with the rotation truncated at `order`.

        order 1: rotation replaced by identity.  order 2: sin(theta) ~ theta
        off-diagonal terms.  order 3: additionally cos(theta) ~ 1 - theta^2/2
        on the diagonal.
        """
        if order not in (1, 2, 3):
            raise InvalidArgumentError("design truncation must be 1, 2 or 3")
        n = self.n
        a11 = np.zeros((n, n))
        for j in range(self.boats):
            o = 6 * j
            a11[o + 0, o + 3] = 1.0
            a11[o + 1, o + 4] = 1.0
            a11[o + 2, o + 5] = 1.0
            a11[o + 3:o + 6, o + 3:o + 6] = -self.minvd
        out = [a11]
        if order >= 2:
            col2 = {exp: c for c, exp in enumerate(_degree_exponents(n, 2))}
            a12 = np.zeros((n, count_monomials(n, 2)))
            for j in range(self.boats):
                o = 6 * j
                a12[o + 0, col2[_unit2(n, o + 2, o + 4)]] = -1.0  # -theta v2
                a12[o + 1, col2[_unit2(n, o + 2, o + 3)]] = 1.0   # +theta v1
            out.append(a12)
        if order >= 3:
            col3 = {exp: c for c, exp in enumerate(_degree_exponents(n, 3))}
            a13 = np.zeros((n, count_monomials(n, 3)))
            for j in range(self.boats):
                o = 6 * j
                a13[o + 0, col3[_unit3(n, o + 2, o + 2, o + 3)]] = -0.5  # -theta^2 v1 / 2
                a13[o + 1, col3[_unit3(n, o + 2, o + 2, o + 4)]] = -0.5  # -theta^2 v2 / 2
            out.append(a13)
        return out


def _unit2(n: int, i: int, j: int) -> tuple[int, ...]:
    e = [0] * n
    e[i] += 1
    e[j] += 1
    return tuple(e)


def _unit3(n: int, i: int, j: int, k: int) -> tuple[int, ...]:
    e = [0] * n
    e[i] += 1
    e[j] += 1
    e[k] += 1
    return tuple(e)


def _noise_table(noise, k: int, t0: float, steps: int, dt: float) -> np.ndarray:
    if noise is None:
        return np.zeros((steps + 1, k))
    if isinstance(noise, NoiseConfig):
        noise = NoiseSignal(noise, k)
    if isinstance(noise, NoiseSignal):
        if noise.k != k:
            raise InvalidArgumentError(
                f"noise signal has {noise.k} channels, plant expects {k}")
        return noise.table(t0, steps, dt)
    table = np.asarray(noise, dtype=float)
    if table.shape != (steps + 1, k):
        raise InvalidArgumentError(
            f"noise table has shape {table.shape}, expected ({steps + 1}, {k})")
    return table


def _steps_for_span(t_span: tuple[float, float], dt: float) -> int:
    t0, t1 = float(t_span[0]), float(t_span[1])
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    length = t1 - t0
    if length <= 0:
        raise InvalidArgumentError("time span must have positive length")
    steps = int(round(length / dt))
    if steps < 1 or abs(steps * dt - length) > 1e-9 * max(1.0, length):
        raise InvalidArgumentError(
            f"span length {length} is not a multiple of dt={dt}")
    return steps


def integrate(plant, controller, x0: np.ndarray, t_span: tuple[float, float],
              dt: float, noise=None) -> Trajectory:
    """RK4 rollout of a plant under a controller plus exploration noise.

    controller may be None (open loop), a feedback-gain object (anything with
    k_matrix and basis attributes, e.g. FeedbackGain), or a plain callable
    x -> u evaluated at every RK4 stage.  Gain controllers on the built-in
    plant families dispatch to the compiled kernels.  noise may be None, a
    NoiseConfig, a NoiseSignal, or a precomputed (steps + 1, k) table; it is
    sampled at absolute times, so windows of one experiment see one continuous
    signal.  The recorded inputs are the applied values at the grid points.

    Raises DivergedError (with the partial trajectory attached) when the
    state leaves the guard region.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (plant.n,):
        raise InvalidArgumentError(
            f"x0 has shape {x0.shape}, expected ({plant.n},)")
    t0 = float(t_span[0])
    steps = _steps_for_span(t_span, dt)
    table = _noise_table(noise, plant.k, t0, steps, dt)
    times = t0 + dt * np.arange(steps + 1)

    gain_like = hasattr(controller, "k_matrix") and hasattr(controller, "basis")
    if (controller is None or gain_like) and plant.kind in ("poly", "tugboat"):
        if controller is None:
            kmat = np.zeros((plant.k, 0))
            kexp = np.zeros((0, plant.n), dtype=np.int64)
        else:
            kmat = np.ascontiguousarray(controller.k_matrix, dtype=float)
            kexp = controller.basis.exponents
            if controller.basis.n != plant.n:
                raise InvalidArgumentError(
                    "controller basis dimension does not match the plant")
            if kmat.shape != (plant.k, kexp.shape[0]):
                raise InvalidArgumentError(
                    f"gain has shape {kmat.shape}, expected "
                    f"({plant.k}, {kexp.shape[0]})")
        if plant.kind == "poly":
            dc, de, gc, ge = plant._packed()
            states, inputs, done = _kernels.rk4_poly(
                x0, dt, steps, dc, de, plant.b0, gc, ge, kmat, kexp, table, GUARD)
        else:
            states, inputs, done = _kernels.rk4_tug(
                x0, dt, steps, plant.minvd, plant.b0, kmat, kexp, table, GUARD)
        if done < steps:
            partial = None
            if done >= 1:
                partial = Trajectory(times[:done + 1], states[:done + 1],
                                     inputs[:done + 1], table[:done + 1])
            raise DivergedError(
                f"state norm exceeded {GUARD:g} at t={times[done]:.6g}",
                t_last=float(times[done]), trajectory=partial)
        return Trajectory(times, states, inputs, table)

    # generic controller: python loop
    states = np.zeros((steps + 1, plant.n))
    inputs = np.zeros((steps + 1, plant.k))
    states[0] = x0
    x = x0.copy()

    def eval_u(xc, nrow):
        u = nrow.copy()
        if controller is not None:
            u = u + np.atleast_1d(np.asarray(controller(xc), dtype=float))
        return u

    for s in range(steps):
        nrow = table[s]
        inputs[s] = eval_u(x, nrow)

        def rhs(xc):
            return plant.drift(xc) + plant.input_matrix(xc) @ eval_u(xc, nrow)

        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > GUARD:
            partial = None
            if s >= 1:
                partial = Trajectory(times[:s + 1], states[:s + 1],
                                     inputs[:s + 1], table[:s + 1])
            raise DivergedError(
                f"state norm exceeded {GUARD:g} at t={times[s]:.6g}",
                t_last=float(times[s]), trajectory=partial)
        states[s + 1] = x
    inputs[steps] = eval_u(x, table[steps])
    return Trajectory(times, states, inputs, table)


def cost_functional(traj: Trajectory, weights: CostWeights,
                    horizon: float | None = None,
                    include_noise: bool = False) -> float:
    """Quadratic cost (1/2) int (x^T Q1 x + u^T R u) dt by trapezoid rule.

    By default u is the feedback component only (recorded exploration noise
    subtracted), which is what scoring a learned policy calls for; pass
    include_noise=True to integrate the cost of the applied input instead.
    horizon limits integration to the first `horizon` seconds of the
    trajectory and must not exceed its span.
    """
    q1 = weights.q1
    r = weights.r
    if q1.shape != (traj.n, traj.n):
        raise InvalidArgumentError(
            f"Q1 has shape {q1.shape}, expected ({traj.n}, {traj.n})")
    if r.shape != (traj.k, traj.k):
        raise InvalidArgumentError(
            f"R has shape {r.shape}, expected ({traj.k}, {traj.k})")
    if horizon is None:
        last = len(traj) - 1
    else:
        span = traj.times[-1] - traj.times[0]
        if horizon <= 0:
            raise InvalidArgumentError("horizon must be positive")
        if horizon > span + 1e-9:
            raise InvalidArgumentError(
                f"horizon {horizon} exceeds trajectory span {span:.6g}")
        last = int(round(horizon / traj.dt))
        if abs(last * traj.dt - horizon) > 1e-9 * max(1.0, horizon):
            raise InvalidArgumentError(
                f"horizon {horizon} is not a multiple of dt={traj.dt}")
    x = traj.states[:last + 1]
    u = traj.inputs[:last + 1]
    if not include_noise:
        u = u - traj.noise[:last + 1]
    integrand = (np.einsum("ti,ij,tj->t", x, q1, x)
                 + np.einsum("ti,ij,tj->t", u, r, u))
    return 0.5 * float(np.trapezoid(integrand, dx=traj.dt))


def oscillator_plant() -> PolynomialPlant:
    """Second-order oscillator benchmark.

    dx1/dt = x2
    dx2/dt = -x1 + x1 x2 + (1/2) x1^2 x2 + (1 + x1) u
    """
    a11 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    a12 = np.zeros((2, 3))  # columns x1^2, x1 x2, x2^2
    a12[1, 1] = 1.0
    a13 = np.zeros((2, 4))  # columns x1^3, x1^2 x2, x1 x2^2, x2^3
    a13[1, 1] = 0.5
    b0 = np.array([[0.0], [1.0]])
    b11 = np.zeros((2, 2))  # input gain slope: g = 1 + x1 on channel 1
    b11[1, 0] = 1.0
    return PolynomialPlant([a11, a12, a13], b0, [[b11]], name="oscillator")


def hjb_oscillator_control(x: np.ndarray) -> np.ndarray:
    """Closed-form optimal feedback of the oscillator benchmark.

    The value function V = (x1^2 + x2^2) / 2 solves the HJB equation for
    Q1 = diag(0, 1), R = 1 exactly, giving u = -(1 + x1) x2.
    """
    x = np.asarray(x, dtype=float)
    return np.array([-(1.0 + x[0]) * x[1]])


def oscillator_weights() -> CostWeights:
    return CostWeights(np.diag([0.0, 1.0]), np.eye(1))


def tugboat_plant(boats: int = 4, targets: np.ndarray | None = None) -> TugboatPlant:
    """Boat-formation benchmark plant (4 boats by default)."""
    return TugboatPlant(boats, targets)


def tugboat_basis(boats: int, order: int) -> MonomialBasis:
    """Lift basis for the boat benchmark: linear states plus yaw-velocity
    interaction monomials.

    order 1: the 6*boats linear states only.  order 2 adds theta_j v_j1 and
    theta_j v_j2 per boat.  order 3 adds theta_j^2 v_j1 and theta_j^2 v_j2.
    A full graded basis at this state dimension would be enormous; these are
    exactly the monomials the truncated rotation feeds.
    """
    if order not in (1, 2, 3):
        raise InvalidArgumentError("basis order must be 1, 2 or 3")
    n = 6 * boats
    exps = [tuple(1 if i == s else 0 for i in range(n)) for s in range(n)]
    for j in range(boats):
        o = 6 * j
        if order >= 2:
            exps.append(_unit2(n, o + 2, o + 3))
            exps.append(_unit2(n, o + 2, o + 4))
        if order >= 3:
            exps.append(_unit3(n, o + 2, o + 2, o + 3))
            exps.append(_unit3(n, o + 2, o + 2, o + 4))
    return selected_basis(n, exps)


def tugboat_q1(boats: int = 4, coupling: float = 1.0) -> np.ndarray:
    """State weight of the formation objective as a quadratic form.

    Position deviations carry weight 5 plus the pairwise coupling terms
    (dx_j - dx_k)^2 summed over boat pairs; yaw 5; velocities 1.
    """
    n = 6 * boats
    q1 = np.zeros((n, n))
    for j in range(boats):
        o = 6 * j
        q1[o + 0, o + 0] = 5.0 + coupling * (boats - 1)
        q1[o + 1, o + 1] = 5.0 + coupling * (boats - 1)
        q1[o + 2, o + 2] = 5.0
        for i in range(3, 6):
            q1[o + i, o + i] = 1.0
    for j in range(boats):
        for kk in range(j + 1, boats):
            q1[6 * j + 0, 6 * kk + 0] -= coupling
            q1[6 * kk + 0, 6 * j + 0] -= coupling
            q1[6 * j + 1, 6 * kk + 1] -= coupling
            q1[6 * kk + 1, 6 * j + 1] -= coupling
    return q1


def tugboat_weights(boats: int = 4, coupling: float = 1.0,
                    q_scale: float = 1.0) -> CostWeights:
    return CostWeights(q_scale * tugboat_q1(boats, coupling), np.eye(3 * boats))


def tugboat_cost(traj: Trajectory, coupling: float = 1.0) -> float:
    """Formation objective: int [ sum_j (5 ||deta_j||^2 + ||v_j||^2)
    + coupling * sum_{k<j} ((dx_j - dx_k)^2 + (dy_j - dy_k)^2) ] dt.

    State-only integrand, trapezoid rule, no 1/2 factor.  Defined for the
    4-boat benchmark.
    """
    if traj.n != 24:
        raise InvalidArgumentError(
            f"formation cost is defined for 4 boats (24 states), got {traj.n}")
    q1 = tugboat_q1(4, coupling)
    integrand = np.einsum("ti,ij,tj->t", traj.states, q1, traj.states)
    return float(np.trapezoid(integrand, dx=traj.dt))


def formation_errors(traj: Trajectory) -> np.ndarray:
    """Terminal position deviation norm per boat."""
    boats = traj.n // 6
    x_end = traj.states[-1]
    return np.array([np.hypot(x_end[6 * j], x_end[6 * j + 1])
                     for j in range(boats)])


def build_model(plant, basis: MonomialBasis) -> CarlemanModel:
    """Lift a plant onto a basis (design-model constructor).

    For the boat plant the drift taylor blocks use the rotation truncated at
    the basis degree; the simulator itself stays exact.
    """
    taylor = plant.design_taylor(basis.max_degree)
    a_matrix = build_transition_blocks(taylor, basis)
    if plant.kind == "poly":
        b0_pad, blocks = build_input_blocks(plant.b0, plant.input_state, basis)
    else:
        b0_pad, blocks = build_input_blocks(plant.b0, None, basis)
    return CarlemanModel(basis, a_matrix, b0_pad, blocks)
