"""Pure-Python (numpy) reference implementations of the hot kernels.

The compiled twin in _fast.pyx mirrors these signatures exactly; the package
selects between them at import time (see _kernels.__init__).  Keep both in
lockstep: the test suite cross-checks them whenever the extension is built.

Feedback gains are evaluated continuously (at every RK4 stage); the
exploration table is zero-order-hold per step.  Recorded inputs are the
applied input sampled on the grid.
"""

from __future__ import annotations

import numpy as np


def batch_lift(states: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Evaluate monomials row-wise: out[r, j] = prod_i states[r, i]**e[j, i]."""
    m = states.shape[0]
    q = exponents.shape[0]
    out = np.ones((m, q))
    for j in range(q):
        for i in np.nonzero(exponents[j])[0]:
            e = exponents[j, i]
            col = states[:, i]
            acc = col
            for _ in range(int(e) - 1):
                acc = acc * col
            out[:, j] *= acc
    return out


def _monos(x: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    out = np.ones(exponents.shape[0])
    for j in range(exponents.shape[0]):
        for i in np.nonzero(exponents[j])[0]:
            out[j] *= x[i] ** int(exponents[j, i])
    return out


def _rk4_step(x, dt, rhs):
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_poly(x0, dt, steps, drift_coef, drift_exp, b0, gc, ge, gain, gain_exp,
             noise, guard):
    """RK4 rollout of a polynomial input-affine plant under gain feedback.

    drift(x) = drift_coef @ monos(x, drift_exp); the input matrix is
    b0 + per-channel gc[i] @ monos(x, ge).  The applied input is
    u(x) = noise_row - gain @ monos(x, gain_exp) with the noise row held per
    step and the feedback term evaluated at every stage state (gain may have
    zero columns, meaning open loop).  Integration stops early when any
    |state| exceeds guard.

    Returns (states, inputs, n_done): arrays over the full grid with rows
    beyond n_done unfilled; n_done == steps means the rollout completed.
    """
    n = x0.shape[0]
    k = b0.shape[1]
    states = np.zeros((steps + 1, n))
    inputs = np.zeros((steps + 1, k))
    states[0] = x0
    has_g = gc.shape[2] > 0
    has_gain = gain.shape[1] > 0

    def applied(x, row):
        u = noise[row].copy()
        if has_gain:
            u -= gain @ _monos(x, gain_exp)
        return u

    def rhs_for(row):
        def rhs(x):
            u = applied(x, row)
            f = drift_coef @ _monos(x, drift_exp)
            if has_g:
                gm = _monos(x, ge)
                gmat = b0 + (gc @ gm).T
                return f + gmat @ u
            return f + b0 @ u
        return rhs

    x = x0.astype(float).copy()
    for s in range(steps):
        inputs[s] = applied(x, s)
        x = _rk4_step(x, dt, rhs_for(s))
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > guard:
            return states, inputs, s
        states[s + 1] = x
    inputs[steps] = applied(x, steps)
    return states, inputs, steps


def rk4_tug(x0, dt, steps, minvd, b0, gain, gain_exp, noise, guard):
    """RK4 rollout of the multi-boat plant with exact rotation kinematics.

    State per boat: (dx, dy, theta, v1, v2, v3) stacked; position kinematics
    use the exact rotation of (v1, v2) by theta, velocities follow
    vdot = -minvd @ v plus the constant input map b0 (rows of M^-1 per boat).
    Input semantics as in rk4_poly.
    """
    n = x0.shape[0]
    nb = n // 6
    k = b0.shape[1]
    states = np.zeros((steps + 1, n))
    inputs = np.zeros((steps + 1, k))
    states[0] = x0
    has_gain = gain.shape[1] > 0

    def applied(x, row):
        u = noise[row].copy()
        if has_gain:
            u -= gain @ _monos(x, gain_exp)
        return u

    def rhs_for(row):
        def rhs(x):
            u = applied(x, row)
            f = np.zeros(n)
            for j in range(nb):
                o = 6 * j
                th = x[o + 2]
                v1, v2 = x[o + 3], x[o + 4]
                c, si = np.cos(th), np.sin(th)
                f[o + 0] = c * v1 - si * v2
                f[o + 1] = si * v1 + c * v2
                f[o + 2] = x[o + 5]
                f[o + 3:o + 6] = -minvd @ x[o + 3:o + 6]
            return f + b0 @ u
        return rhs

    x = x0.astype(float).copy()
    for s in range(steps):
        inputs[s] = applied(x, s)
        x = _rk4_step(x, dt, rhs_for(s))
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > guard:
            return states, inputs, s
        states[s + 1] = x
    inputs[steps] = applied(x, steps)
    return states, inputs, steps
