"""Carleman lifting of polynomial input-affine systems onto a monomial basis.

A plant

    dx/dt = sum_j A_1j x^[j] + sum_i g_i(x) u_i,
    g_i(x) = B_0i + sum_l B_li x^[l],

with x^[j] the vector of degree-j monomials, is lifted onto the vector psi of
basis monomials (degrees 1..N).  Applying the chain rule to each basis
monomial and dropping every product that falls outside the basis yields the
truncated bilinear model

    dpsi/dt = A psi + B(psi) u,      B(psi)[:, i] = B0[:, i] + S_i psi,

which is linear in psi for fixed u.  This module owns the monomial
bookkeeping (full graded bases and explicit selected subsets), the symbolic
construction of A and the input blocks, the quadratic-form vectorization used
by the data-driven solvers, and an empirical consistency check of a lifted
model against simulated trajectories.

Ordering convention: monomials are graded by total degree; within a degree,
exponent tuples are ordered lexicographically descending.  For n = 2, N = 2
the basis reads x1, x2, x1^2, x1*x2, x2^2.  This matches the first-occurrence
order of monomials inside Kronecker powers of x, so reduced matrices can be
compared directly against Kronecker-product constructions.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError


def count_monomials(n: int, degree: int) -> int:
    """Number of distinct monomials of exactly the given degree in n variables."""
    return math.comb(n + degree - 1, degree)


def _degree_exponents(n: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of the given total degree, lexicographically descending."""
    if n == 1:
        return [(degree,)]
    out = []
    for e0 in range(degree, -1, -1):
        for rest in _degree_exponents(n - 1, degree - e0):
            out.append((e0,) + rest)
    return out


def _graded_key(exponent: tuple[int, ...]):
    # graded order, descending lex within a degree
    return (sum(exponent), tuple(-e for e in exponent))


class MonomialBasis:
    """An ordered set of monomials over n state variables.

    Attributes:
        n: number of state variables.
        max_degree: largest total degree present (the truncation order N).
        exponents: (dim, n) integer array, one exponent tuple per row, in
            graded / descending-lex order.
        degrees: (dim,) total degree of each row.
        selected: True when the basis is an explicit subset rather than the
            full graded basis of its max_degree.
    """

    def __init__(self, n: int, exponents: Sequence[Sequence[int]]):
        exps = [tuple(int(e) for e in row) for row in exponents]
        if not exps:
            raise InvalidArgumentError("basis needs at least one monomial")
        for row in exps:
            if len(row) != n:
                raise InvalidArgumentError(
                    f"exponent tuple {row} does not have {n} entries")
            if any(e < 0 for e in row):
                raise InvalidArgumentError(f"negative exponent in {row}")
            if sum(row) < 1:
                raise InvalidArgumentError(
                    "constant monomial (degree 0) is not liftable")
        if len(set(exps)) != len(exps):
            raise InvalidArgumentError("duplicate monomials in basis")
        exps.sort(key=_graded_key)
        self.n = n
        self.exponents = np.array(exps, dtype=np.int64)
        self.degrees = self.exponents.sum(axis=1)
        self.max_degree = int(self.degrees.max())
        self.index = {row: i for i, row in enumerate(exps)}
        full_dim = count_monomials(n + 1, self.max_degree) - 1  # C(n+N, N) - 1
        self.selected = len(exps) != full_dim
        # start of each degree block; degree k spans starts[k-1]:starts[k]
        starts = np.searchsorted(self.degrees, np.arange(1, self.max_degree + 2))
        self.degree_starts = tuple(int(s) for s in starts)
        self._pair_cache = None

    def __len__(self) -> int:
        return self.exponents.shape[0]

    @property
    def dim(self) -> int:
        return self.exponents.shape[0]

    def index_of(self, exponent: Sequence[int]) -> int:
        """Index of an exponent tuple, or -1 when it is not in the basis."""
        return self.index.get(tuple(int(e) for e in exponent), -1)

    def degree_slice(self, degree: int) -> slice:
        """Row slice covering the block of the given total degree."""
        if degree < 1 or degree > self.max_degree:
            raise InvalidArgumentError(f"degree {degree} outside 1..{self.max_degree}")
        lo = self.degree_starts[degree - 1]
        hi = self.degree_starts[degree]
        return slice(lo, hi)

    def _pair_tables(self):
        """Cached pairwise-product bookkeeping.

        Returns (prod_index, kept, dropped) where prod_index[a, b] is the
        basis index of monomial_a * monomial_b or -1, kept/dropped are
        (rows_a, rows_b[, extra]) index arrays over all ordered pairs whose
        product is inside/outside the basis; dropped carries the product
        exponent matrix as its third element.
        """
        if self._pair_cache is not None:
            return self._pair_cache
        d = self.dim
        sums = self.exponents[:, None, :] + self.exponents[None, :, :]
        prod_index = np.full((d, d), -1, dtype=np.int64)
        for a in range(d):
            for b in range(d):
                prod_index[a, b] = self.index.get(tuple(sums[a, b]), -1)
        kept_a, kept_b = np.nonzero(prod_index >= 0)
        kept = (kept_a, kept_b, prod_index[kept_a, kept_b])
        drop_a, drop_b = np.nonzero(prod_index < 0)
        dropped = (drop_a, drop_b, sums[drop_a, drop_b])
        self._pair_cache = (prod_index, kept, dropped)
        return self._pair_cache

    def __repr__(self) -> str:
        kind = "selected" if self.selected else "full"
        return (f"MonomialBasis(n={self.n}, max_degree={self.max_degree}, "
                f"dim={self.dim}, {kind})")


def monomial_basis(n: int, max_degree: int) -> MonomialBasis:
    """Full graded basis of all monomials of degree 1..max_degree.

    Block k holds the count_monomials(n, k) monomials of degree k.
    """
    if n < 1:
        raise InvalidArgumentError("need at least one state variable")
    if max_degree < 1:
        raise InvalidArgumentError("truncation order must be at least 1")
    exps: list[tuple[int, ...]] = []
    for k in range(1, max_degree + 1):
        exps.extend(_degree_exponents(n, k))
    return MonomialBasis(n, exps)


def selected_basis(n: int, exponents: Sequence[Sequence[int]]) -> MonomialBasis:
    """Basis from an explicit monomial list (sorted into canonical order).

    The full degree-1 block must be present: the lifted state has to contain
    x itself for costs and gains over the original state to make sense.
    """
    basis = MonomialBasis(n, exponents)
    for i in range(n):
        unit = tuple(1 if j == i else 0 for j in range(n))
        if unit not in basis.index:
            raise InvalidArgumentError(
                f"degree-1 monomial for state {i + 1} missing from basis")
    return basis


def lift_state(x: np.ndarray, basis: MonomialBasis) -> np.ndarray:
    """Evaluate every basis monomial at the state x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.n,):
        raise InvalidArgumentError(
            f"state has shape {x.shape}, expected ({basis.n},)")
    return np.prod(x[None, :] ** basis.exponents, axis=1)


def lift_batch(states: np.ndarray, basis: MonomialBasis) -> np.ndarray:
    """Row-wise lift of an (m, n) array of states to (m, dim)."""
    from . import _kernels

    states = np.ascontiguousarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != basis.n:
        raise InvalidArgumentError(
            f"states have shape {states.shape}, expected (m, {basis.n})")
    return _kernels.batch_lift(states, basis.exponents)


class QuadBasis:
    """Products of basis-monomial pairs, aggregated over distinct monomials.

    The extended basis holds every distinct product monomial_a * monomial_b
    (degrees 2..2N), again in graded / descending-lex order.  Distinct
    unordered pairs can collide on the same product (for n = 2, N = 2 the
    product x1^2 * x2 arises both as x1 * (x1 x2) and as x2 * x1^2), so each
    extended entry e keeps the list of its unordered source pairs P_e.

    Attributes:
        base: the underlying MonomialBasis.
        exponents: (ext_dim, n) exponent rows of the extended basis.
        pairs: per extended index, the list of (a, b) with a <= b whose
            product is that monomial.
        index_map: dict (a, b) with a <= b -> (extended index, multiplicity),
            multiplicity 2 for a != b and 1 for a == b.
    """

    def __init__(self, base: MonomialBasis):
        self.base = base
        prods: dict[tuple[int, ...], list[tuple[int, int]]] = {}
        d = base.dim
        for a in range(d):
            for b in range(a, d):
                key = tuple(base.exponents[a] + base.exponents[b])
                prods.setdefault(key, []).append((a, b))
        ordered = sorted(prods.keys(), key=_graded_key)
        self.exponents = np.array(ordered, dtype=np.int64)
        self.pairs = [prods[key] for key in ordered]
        self.index_map = {}
        for e, plist in enumerate(self.pairs):
            for (a, b) in plist:
                self.index_map[(a, b)] = (e, 1 if a == b else 2)
        self._beta_cache = None

    @property
    def ext_dim(self) -> int:
        return self.exponents.shape[0]

    def _beta_arrays(self):
        """Scatter-index form of beta_matrix: entries (e, row, col, weight)
        with beta(psi)[e, row] = sum of weight * psi[col] over entries."""
        if self._beta_cache is None:
            ee, rr, cc, ww = [], [], [], []
            for e, plist in enumerate(self.pairs):
                w = 1.0 / len(plist)
                for (a, b) in plist:
                    if a == b:
                        ee.append(e); rr.append(a); cc.append(a); ww.append(w)
                    else:
                        ee.append(e); rr.append(a); cc.append(b); ww.append(0.5 * w)
                        ee.append(e); rr.append(b); cc.append(a); ww.append(0.5 * w)
            self._beta_cache = (np.array(ee), np.array(rr), np.array(cc),
                                np.array(ww))
        return self._beta_cache

    def lift(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the extended monomials at x."""
        x = np.asarray(x, dtype=float)
        return np.prod(x[None, :] ** self.exponents, axis=1)

    def lift_batch(self, states: np.ndarray) -> np.ndarray:
        from . import _kernels

        states = np.ascontiguousarray(states, dtype=float)
        return _kernels.batch_lift(states, self.exponents)

    def __repr__(self) -> str:
        return f"QuadBasis(base_dim={self.base.dim}, ext_dim={self.ext_dim})"


def vectorize_quadratic(p_matrix: np.ndarray, qb: QuadBasis,
                        sym_tol: float = 1e-10) -> np.ndarray:
    """Aggregate a symmetric quadratic form into extended-basis coefficients.

    pbar[e] = sum over unordered pairs {a, b} in P_e of mult_ab * P[a, b],
    with mult 2 off the diagonal and 1 on it, so that
    psi^T P psi = pbar . (extended lift of x) identically in x.
    """
    p_matrix = np.asarray(p_matrix, dtype=float)
    d = qb.base.dim
    if p_matrix.shape != (d, d):
        raise InvalidArgumentError(
            f"quadratic form has shape {p_matrix.shape}, expected ({d}, {d})")
    if np.max(np.abs(p_matrix - p_matrix.T)) > sym_tol:
        raise InvalidArgumentError("quadratic form is not symmetric")
    pbar = np.zeros(qb.ext_dim)
    for e, plist in enumerate(qb.pairs):
        acc = 0.0
        for (a, b) in plist:
            acc += (1.0 if a == b else 2.0) * p_matrix[a, b]
        pbar[e] = acc
    return pbar


def unvectorize_quadratic(pbar: np.ndarray, qb: QuadBasis) -> np.ndarray:
    """Canonical symmetric representative of extended-basis coefficients.

    Colliding pairs share the coefficient equally: each unordered pair in P_e
    receives form mass pbar[e] / |P_e|.  This is a right inverse of
    vectorize_quadratic and the representative that beta_matrix reconstructs.
    """
    pbar = np.asarray(pbar, dtype=float)
    if pbar.shape != (qb.ext_dim,):
        raise InvalidArgumentError(
            f"coefficient vector has shape {pbar.shape}, expected ({qb.ext_dim},)")
    d = qb.base.dim
    p_matrix = np.zeros((d, d))
    for e, plist in enumerate(qb.pairs):
        share = pbar[e] / len(plist)
        for (a, b) in plist:
            if a == b:
                p_matrix[a, a] += share
            else:
                p_matrix[a, b] += share / 2.0
                p_matrix[b, a] += share / 2.0
    return p_matrix


def beta_matrix(psi: np.ndarray, qb: QuadBasis) -> np.ndarray:
    """Contraction matrix pairing extended coefficients with a lifted state.

    Returns B of shape (ext_dim, dim) such that for every coefficient vector
    pbar and every vector v,

        pbar^T B v = psi^T unvectorize_quadratic(pbar) v.

    Used to express psi^T P v terms as linear functions of the unknown pbar
    in the least-squares data equations.
    """
    psi = np.asarray(psi, dtype=float)
    d = qb.base.dim
    if psi.shape != (d,):
        raise InvalidArgumentError(
            f"lifted state has shape {psi.shape}, expected ({d},)")
    ee, rr, cc, ww = qb._beta_arrays()
    out = np.zeros((qb.ext_dim, d))
    np.add.at(out, (ee, rr), ww * psi[cc])
    return out


def quad_contract_batch(psi_rows: np.ndarray, v_rows: np.ndarray,
                        qb: QuadBasis) -> np.ndarray:
    """Row-wise beta contractions: out[t] = beta_matrix(psi_rows[t]) @ v_rows[t].

    The batched form of psi^T P v = pbar . (this contraction), used to turn
    correction integrands into linear functions of the unknown coefficients.
    """
    psi_rows = np.asarray(psi_rows, dtype=float)
    v_rows = np.asarray(v_rows, dtype=float)
    if psi_rows.shape != v_rows.shape or psi_rows.shape[1] != qb.base.dim:
        raise InvalidArgumentError("psi and v rows must both be (m, base_dim)")
    ee, rr, cc, ww = qb._beta_arrays()
    out = np.zeros((psi_rows.shape[0], qb.ext_dim))
    np.add.at(out, (slice(None), ee), ww * psi_rows[:, cc] * v_rows[:, rr])
    return out


class CarlemanModel:
    """Truncated bilinear lift dpsi/dt = A psi + B(psi) u.

    Attributes:
        basis: the monomial basis of the lifted state psi.
        a_matrix: (dim, dim) transition matrix.  Block upper-triangular in
            the degree grading: a degree-k monomial's derivative only
            produces monomials of degree >= k when the drift has no constant
            term.
        b0: (dim, k) constant input matrix, nonzero only in the degree-1
            rows.
        input_state: length-k list of (dim, dim) matrices S_i; column i of
            B(psi) equals b0[:, i] + S_i psi, so B(0) = b0.
    """

    def __init__(self, basis: MonomialBasis, a_matrix: np.ndarray,
                 b0: np.ndarray, input_state: Sequence[np.ndarray]):
        d = basis.dim
        a_matrix = np.asarray(a_matrix, dtype=float)
        b0 = np.asarray(b0, dtype=float)
        if a_matrix.shape != (d, d):
            raise InvalidArgumentError(
                f"transition matrix shape {a_matrix.shape}, expected ({d}, {d})")
        if b0.ndim != 2 or b0.shape[0] != d:
            raise InvalidArgumentError(
                f"constant input matrix shape {b0.shape}, expected ({d}, k)")
        self.basis = basis
        self.a_matrix = a_matrix
        self.b0 = b0
        self.input_state = [np.asarray(s, dtype=float) for s in input_state]
        if len(self.input_state) != b0.shape[1]:
            raise InvalidArgumentError("one state block per input channel required")
        for s in self.input_state:
            if s.shape != (d, d):
                raise InvalidArgumentError(
                    f"input state block shape {s.shape}, expected ({d}, {d})")

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def k_inputs(self) -> int:
        return self.b0.shape[1]

    @property
    def n(self) -> int:
        return self.basis.n

    def validate(self, tol: float = 0.0) -> None:
        """Check structural invariants; raises on violation.

        Verifies block upper-triangularity of the transition matrix in the
        degree grading, zero padding of b0 below the degree-1 block, and
        B(0) = b0 (immediate from the affine layout, checked for shape).
        """
        deg = self.basis.degrees
        lower = deg[None, :] < deg[:, None]  # column degree below row degree
        worst = np.max(np.abs(self.a_matrix[lower])) if lower.any() else 0.0
        if worst > tol:
            raise InvalidArgumentError(
                f"transition matrix has mass {worst:.3e} below the block diagonal")
        if self.dim > self.n:
            pad = np.max(np.abs(self.b0[self.n:, :]))
            if pad > tol:
                raise InvalidArgumentError(
                    f"constant input matrix has mass {pad:.3e} outside degree-1 rows")


def _degree_column_index(n: int, degree: int) -> dict[tuple[int, ...], int]:
    """Column position of each exponent tuple inside a full degree block."""
    return {exp: c for c, exp in enumerate(_degree_exponents(n, degree))}


def build_transition_blocks(taylor: Sequence[np.ndarray],
                            basis: MonomialBasis) -> np.ndarray:
    """Transition matrix of the lifted drift by symbolic chain rule.

    Args:
        taylor: drift coefficient matrices [A_11, A_12, ...]; taylor[j-1] has
            shape (n, count_monomials(n, j)) with columns over the full
            degree-j monomial order (descending lex), so that
            dx/dt = sum_j taylor[j-1] x^[j].
        basis: target monomial basis.

    For each basis monomial alpha and each state p with alpha_p > 0,
    d/dt x^alpha picks up alpha_p x^(alpha - e_p) dx_p/dt; every drift term
    beta contributes alpha_p * coeff to column alpha - e_p + beta.  Products
    outside the basis are dropped (the truncation).
    """
    n = basis.n
    d = basis.dim
    a_matrix = np.zeros((d, d))
    terms = []  # (state p, exponent beta, coefficient) for every drift entry
    for jm1, block in enumerate(taylor):
        degree = jm1 + 1
        block = np.asarray(block, dtype=float)
        expected = (n, count_monomials(n, degree))
        if block.shape != expected:
            raise InvalidArgumentError(
                f"degree-{degree} drift block has shape {block.shape}, "
                f"expected {expected}")
        col_exps = _degree_exponents(n, degree)
        rows, cols = np.nonzero(block)
        for p, c in zip(rows, cols):
            terms.append((int(p), col_exps[c], block[p, c]))
    for r in range(d):
        alpha = basis.exponents[r]
        for p, beta, coeff in terms:
            if alpha[p] == 0:
                continue
            target = alpha.copy()
            target[p] -= 1
            target += np.array(beta, dtype=np.int64)
            idx = basis.index.get(tuple(target), -1)
            if idx >= 0:
                a_matrix[r, idx] += alpha[p] * coeff
    return a_matrix


def build_input_blocks(b0: np.ndarray,
                       state_taylor: Sequence[Sequence[np.ndarray]] | None,
                       basis: MonomialBasis) -> tuple[np.ndarray, list[np.ndarray]]:
    """Constant and state-dependent input blocks of the lifted model.

    Args:
        b0: (n, k) constant input gains, g_i(0) = b0[:, i].
        state_taylor: per channel i, coefficient matrices [B_1i, B_2i, ...]
            of the state-dependent part of g_i (same layout as the drift
            taylor blocks); None or an empty list means g_i is constant.
        basis: target monomial basis.

    Returns (b0_padded, blocks): b0 stacked into the degree-1 rows over zeros,
    and one (dim, dim) matrix S_i per channel such that B(psi)[:, i] =
    b0_padded[:, i] + S_i psi.  Two chain-rule sources feed S_i: the
    state-dependent coefficients of g_i, and the constant gain b0 hitting
    monomials of degree >= 2 (where x^(alpha - e_p) is itself a basis
    monomial rather than the constant 1).
    """
    n = basis.n
    d = basis.dim
    b0 = np.asarray(b0, dtype=float)
    if b0.ndim != 2 or b0.shape[0] != n:
        raise InvalidArgumentError(f"b0 has shape {b0.shape}, expected ({n}, k)")
    k = b0.shape[1]
    if state_taylor is None:
        state_taylor = [[] for _ in range(k)]
    if len(state_taylor) != k:
        raise InvalidArgumentError("one state-taylor list per input channel required")

    b0_pad = np.zeros((d, k))
    b0_pad[:n, :] = b0
    blocks = []
    for i in range(k):
        terms = []
        for lm1, block in enumerate(state_taylor[i] or []):
            degree = lm1 + 1
            block = np.asarray(block, dtype=float)
            expected = (n, count_monomials(n, degree))
            if block.shape != expected:
                raise InvalidArgumentError(
                    f"channel {i} degree-{degree} block has shape {block.shape}, "
                    f"expected {expected}")
            col_exps = _degree_exponents(n, degree)
            rows, cols = np.nonzero(block)
            for p, c in zip(rows, cols):
                terms.append((int(p), col_exps[c], block[p, c]))
        s_i = np.zeros((d, d))
        for r in range(d):
            alpha = basis.exponents[r]
            order = int(basis.degrees[r])
            for p in range(n):
                if alpha[p] == 0:
                    continue
                # constant gain feeding monomials of degree >= 2
                if order >= 2 and b0[p, i] != 0.0:
                    target = alpha.copy()
                    target[p] -= 1
                    idx = basis.index.get(tuple(target), -1)
                    if idx >= 0:
                        s_i[r, idx] += alpha[p] * b0[p, i]
                for q, beta, coeff in terms:
                    if q != p:
                        continue
                    target = alpha.copy()
                    target[p] -= 1
                    target += np.array(beta, dtype=np.int64)
                    idx = basis.index.get(tuple(target), -1)
                    if idx >= 0:
                        s_i[r, idx] += alpha[p] * coeff
        blocks.append(s_i)
    return b0_pad, blocks


def eval_input_matrix(model: CarlemanModel, psi: np.ndarray) -> np.ndarray:
    """B(psi): stack of input columns b0[:, i] + S_i psi."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (model.dim,):
        raise InvalidArgumentError(
            f"lifted state has shape {psi.shape}, expected ({model.dim},)")
    out = model.b0.copy()
    for i, s_i in enumerate(model.input_state):
        out[:, i] += s_i @ psi
    return out


def closed_loop_matrix(model: CarlemanModel,
                       gain: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feedback contraction of the bilinear term under u = -K psi.

    B(psi) K psi is quadratic in psi; re-expanding the products over the
    basis (and dropping products outside it) yields a matrix Kcal with
    B(psi) K psi = Kcal psi identically on lifted states, so the ideal
    truncated closed loop is dpsi/dt = (A - Kcal) psi.

    Returns (Kcal, A - Kcal).
    """
    gain = np.asarray(gain, dtype=float)
    d = model.dim
    if gain.shape != (model.k_inputs, d):
        raise InvalidArgumentError(
            f"gain has shape {gain.shape}, expected ({model.k_inputs}, {d})")
    kcal = model.b0 @ gain
    _, kept, _ = model.basis._pair_tables()
    pa, pb, ptarget = kept
    for i, s_i in enumerate(model.input_state):
        if not s_i.any():
            continue
        # (S_i psi)_r (K_i psi) = sum over pairs (c, c') of S[r,c] K[i,c'] psi_c psi_c'
        contrib = s_i[:, pa] * gain[i, pb][None, :]
        np.add.at(kcal, (slice(None), ptarget), contrib)
    return kcal, model.a_matrix - kcal


def quadrize_row(m_matrix: np.ndarray, basis: MonomialBasis) -> np.ndarray:
    """Collapse a bilinear form on psi onto basis coefficients.

    Given M with psi^T M psi = sum_{c,c'} M_{cc'} x^(alpha_c + alpha_c'),
    returns w over the basis with w[idx(gamma)] = sum of M_{cc'} over pairs
    whose product monomial is gamma.  Pairs whose product leaves the basis
    are dropped; their exact contribution is what truncated_pairs exposes.
    """
    m_matrix = np.asarray(m_matrix, dtype=float)
    d = basis.dim
    if m_matrix.shape != (d, d):
        raise InvalidArgumentError(
            f"bilinear form has shape {m_matrix.shape}, expected ({d}, {d})")
    _, kept, _ = basis._pair_tables()
    pa, pb, ptarget = kept
    w = np.zeros(d)
    np.add.at(w, ptarget, m_matrix[pa, pb])
    return w


def truncated_pairs(basis: MonomialBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ordered pairs whose product monomial falls outside the basis.

    Returns (rows_a, rows_b, product_exponents); product_exponents has one
    exponent row per dropped pair.  These pairs carry the truncation residual
    of any quadratic contraction over the basis.
    """
    _, _, dropped = basis._pair_tables()
    return dropped


def lift_consistency_check(plant, model: CarlemanModel, traj) -> dict[int, float]:
    """Empirical residual of a lifted model along a simulated trajectory.

    Compares central finite differences of the lifted trajectory against the
    model right-hand side A psi + B(psi) u at interior samples, using the
    recorded total input.  Returns {degree: RMS residual over that degree
    block}, one entry per degree present in the basis.  Needs at least three
    samples for one central difference.
    """
    if plant.n != model.n:
        raise InvalidArgumentError(
            f"plant has {plant.n} states, model expects {model.n}")
    states = np.asarray(traj.states, dtype=float)
    inputs = np.asarray(traj.inputs, dtype=float)
    if states.shape[0] < 3:
        raise InvalidArgumentError(
            "need at least 3 samples for a central finite difference")
    dt = float(traj.dt)
    psi = lift_batch(states, model.basis)
    # central difference at samples 1..m-2
    dpsi = (psi[2:] - psi[:-2]) / (2.0 * dt)
    resid = np.empty_like(dpsi)
    for r in range(dpsi.shape[0]):
        k = r + 1
        rhs = model.a_matrix @ psi[k] + eval_input_matrix(model, psi[k]) @ inputs[k]
        resid[r] = dpsi[r] - rhs
    out = {}
    for degree in range(1, model.basis.max_degree + 1):
        sl = model.basis.degree_slice(degree)
        block = resid[:, sl]
        if block.shape[1] == 0:
            continue
        out[degree] = float(np.sqrt(np.mean(block ** 2)))
    return out
