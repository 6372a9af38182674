"""Kleinman iteration for the continuous-time LQR Riccati equation.

Policy iteration in its model-based form: given a stabilizing gain K_j,
solve the Lyapunov equation of the closed loop for its cost matrix P_j and
update K_{j+1} = R^-1 B^T P_j.  The P_j decrease monotonically to the
stabilizing Riccati solution.  Used to seed learning runs with a stabilizing
linear gain and as the model-based reference the data-driven solvers are
tested against.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, NotConvergedError


def is_hurwitz(a: np.ndarray, margin: float = 0.0) -> bool:
    return bool(np.max(np.linalg.eigvals(a).real) < -margin)


def lyapunov_cost(a_cl: np.ndarray, q_total: np.ndarray) -> np.ndarray:
    """Solve A_cl^T P + P A_cl = -Q_total for the closed-loop cost matrix."""
    p = scipy.linalg.solve_continuous_lyapunov(a_cl.T, -q_total)
    return 0.5 * (p + p.T)


def kleinman_are(a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray,
                 k0: np.ndarray | None = None, tol: float = 1e-12,
                 max_iters: int = 200) -> tuple[np.ndarray, np.ndarray, int]:
    """Solve the continuous ARE by Kleinman's Lyapunov recursion.

    Returns (P, K, iterations) with K = R^-1 B^T P.  k0 must be stabilizing
    when given; otherwise K0 = 0 is used for Hurwitz A, and a stabilizing
    seed is taken from scipy's direct ARE solver for unstable A (the
    recursion itself then certifies it).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise InvalidArgumentError("A must be square and B conformable")
    rinv = np.linalg.inv(r)
    if k0 is None:
        if is_hurwitz(a):
            k = np.zeros((b.shape[1], n))
        else:
            p_seed = scipy.linalg.solve_continuous_are(a, b, q, r)
            k = rinv @ b.T @ p_seed
    else:
        k = np.asarray(k0, dtype=float)
    if not is_hurwitz(a - b @ k):
        raise InvalidArgumentError("initial gain is not stabilizing")
    p_prev = None
    for it in range(1, max_iters + 1):
        a_cl = a - b @ k
        p = lyapunov_cost(a_cl, q + k.T @ r @ k)
        k = rinv @ b.T @ p
        if p_prev is not None:
            delta = np.linalg.norm(p - p_prev) / max(1.0, np.linalg.norm(p_prev))
            if delta <= tol:
                return p, k, it
        p_prev = p
    raise NotConvergedError(
        f"Kleinman iteration did not converge in {max_iters} sweeps")
