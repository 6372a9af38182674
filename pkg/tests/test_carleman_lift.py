"""Monomial bookkeeping and block construction against independent oracles.

The nontrivial blocks are cross-checked with a full-Kronecker construction
that never touches the reduced-basis chain rule: duplication/selection
matrices translate between x^(kron k) and the unique-monomial blocks.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carlearn.carleman_lift import (
    CarlemanModel,
    QuadBasis,
    beta_matrix,
    build_transition_blocks,
    closed_loop_matrix,
    count_monomials,
    eval_input_matrix,
    lift_batch,
    lift_consistency_check,
    lift_state,
    monomial_basis,
    quadrize_row,
    selected_basis,
    truncated_pairs,
    unvectorize_quadratic,
    vectorize_quadratic,
)
from carlearn.errors import InvalidArgumentError
from carlearn.plant_sim import PolynomialPlant, build_model, integrate, oscillator_plant


def kron_indices(n, k):
    return list(itertools.product(range(n), repeat=k))


def tuple_exponent(n, idx):
    e = np.zeros(n, dtype=int)
    for i in idx:
        e[i] += 1
    return tuple(e)


def duplication_selection(basis, k):
    """D maps unique degree-k monomials to x^(kron k); L is a left inverse."""
    sl = basis.degree_slice(k)
    uniq = [tuple(e) for e in basis.exponents[sl]]
    pos = {e: j for j, e in enumerate(uniq)}
    tuples = kron_indices(basis.n, k)
    d = np.zeros((len(tuples), len(uniq)))
    l = np.zeros((len(uniq), len(tuples)))
    seen = set()
    for row, idx in enumerate(tuples):
        e = tuple_exponent(basis.n, idx)
        d[row, pos[e]] = 1.0
        if e not in seen:
            l[pos[e], row] = 1.0
            seen.add(e)
    return d, l


def kron_block_oracle(taylor, basis, i, j):
    """Reduced block A_ij from the full-Kronecker product rule."""
    n = basis.n
    m = j - i + 1
    if m < 1 or m > len(taylor):
        return np.zeros((count_monomials(n, i), count_monomials(n, j)))
    _, l_m = duplication_selection(basis, m) if m > 1 else (None, np.eye(n))
    if m == 1:
        a_tilde = taylor[0]
    else:
        a_tilde = taylor[m - 1] @ l_m
    full = 0.0
    for pos in range(i):
        left = np.eye(n ** pos)
        right = np.eye(n ** (i - 1 - pos))
        full = full + np.kron(np.kron(left, a_tilde), right)
    d_j, _ = duplication_selection(basis, j)
    _, l_i = duplication_selection(basis, i)
    if i == 1:
        l_i = np.eye(n)
    if j == 1:
        d_j = np.eye(n)
    return l_i @ full @ d_j


class TestMonomialBasis:
    def test_examples(self):
        b = monomial_basis(2, 2)
        assert [tuple(e) for e in b.exponents] == [
            (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        assert b.dim == 5
        b = monomial_basis(1, 3)
        assert [tuple(e) for e in b.exponents] == [(1,), (2,), (3,)]
        assert monomial_basis(3, 2).dim == 9

    def test_block_sizes(self):
        for n, nn in ((2, 3), (3, 3), (4, 2)):
            b = monomial_basis(n, nn)
            total = 0
            for k in range(1, nn + 1):
                sl = b.degree_slice(k)
                assert sl.stop - sl.start == count_monomials(n, k)
                total += sl.stop - sl.start
            assert b.dim == total

    def test_graded_order(self):
        b = monomial_basis(3, 3)
        degrees = [int(sum(e)) for e in b.exponents]
        assert degrees == sorted(degrees)

    def test_index_of_roundtrip(self):
        b = monomial_basis(3, 2)
        for j, e in enumerate(b.exponents):
            assert b.index_of(e) == j
        with pytest.raises(InvalidArgumentError):
            b.index_of((3, 0, 0))

    def test_invalid_args(self):
        with pytest.raises(InvalidArgumentError):
            monomial_basis(0, 2)
        with pytest.raises(InvalidArgumentError):
            monomial_basis(2, 0)

    def test_selected_subset(self):
        b = selected_basis(2, [(1, 0), (0, 1), (1, 1)])
        assert b.dim == 3
        psi = lift_state(np.array([2.0, 3.0]), b)
        np.testing.assert_allclose(psi, [2.0, 3.0, 6.0])


class TestLiftState:
    def test_examples(self):
        b = monomial_basis(2, 2)
        np.testing.assert_allclose(
            lift_state(np.array([2.0, 3.0]), b), [2, 3, 4, 6, 9])
        np.testing.assert_allclose(
            lift_state(np.zeros(2), b), np.zeros(5))
        b1 = monomial_basis(1, 3)
        np.testing.assert_allclose(lift_state(np.array([1.0]), b1), [1, 1, 1])

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            lift_state(np.zeros(3), monomial_basis(2, 2))

    def test_batch_matches_single(self):
        b = monomial_basis(3, 2)
        rng = np.random.default_rng(4)
        states = rng.normal(size=(7, 3))
        rows = lift_batch(states, b)
        for t in range(7):
            np.testing.assert_allclose(rows[t], lift_state(states[t], b))


class TestTransitionBlocks:
    def test_scalar_linear(self):
        b = monomial_basis(1, 2)
        a_n = build_transition_blocks([np.array([[ -0.7]])], b)
        np.testing.assert_allclose(a_n, [[-0.7, 0.0], [0.0, -1.4]])

    def test_scalar_quadratic(self):
        b = monomial_basis(1, 2)
        a_n = build_transition_blocks(
            [np.array([[-1.0]]), np.array([[0.5]])], b)
        np.testing.assert_allclose(a_n, [[-1.0, 0.5], [0.0, -2.0]])

    def test_identity_degree_block(self):
        b = monomial_basis(2, 2)
        a_n = build_transition_blocks([np.eye(2)], b)
        np.testing.assert_allclose(a_n[2:, 2:], 2.0 * np.eye(3))

    def test_graded_triangularity(self):
        rng = np.random.default_rng(11)
        for n, nn in ((2, 3), (3, 2)):
            b = monomial_basis(n, nn)
            taylor = [rng.normal(size=(n, count_monomials(n, j)))
                      for j in range(1, nn + 1)]
            a_n = build_transition_blocks(taylor, b)
            for j in range(1, nn + 1):
                for i in range(j + 1, nn + 1):
                    block = a_n[b.degree_slice(i), b.degree_slice(j)]
                    assert np.all(block == 0.0)

    def test_full_kronecker_oracle(self):
        rng = np.random.default_rng(23)
        for n in (1, 2, 3):
            for nn in (1, 2, 3):
                b = monomial_basis(n, nn)
                taylor = [rng.normal(size=(n, count_monomials(n, j)))
                          for j in range(1, nn + 1)]
                a_n = build_transition_blocks(taylor, b)
                for i in range(1, nn + 1):
                    for j in range(i, nn + 1):
                        block = a_n[b.degree_slice(i), b.degree_slice(j)]
                        oracle = kron_block_oracle(taylor, b, i, j)
                        np.testing.assert_allclose(
                            block, oracle, atol=1e-12,
                            err_msg=f"n={n} N={nn} block ({i},{j})")

    def test_inconsistent_columns(self):
        b = monomial_basis(2, 2)
        with pytest.raises(InvalidArgumentError):
            build_transition_blocks([np.eye(2), np.zeros((2, 4))], b)


class TestInputBlocks:
    def test_constant_input_n1(self):
        plant = PolynomialPlant([np.array([[0.0, 1.0], [-1.0, 0.0]])],
                                np.array([[0.0], [1.0]]))
        model = build_model(plant, monomial_basis(2, 1))
        rng = np.random.default_rng(2)
        for _ in range(3):
            psi = rng.normal(size=2)
            np.testing.assert_allclose(
                eval_input_matrix(model, psi), [[0.0], [1.0]])

    def test_oscillator_hand_expansion(self):
        model = build_model(oscillator_plant(), monomial_basis(2, 2))
        psi = lift_state(np.array([0.8, 0.7]), model.basis)
        col = eval_input_matrix(model, psi).ravel()
        np.testing.assert_allclose(col, [0.0, 1.8, 0.0, 1.44, 2.52],
                                   atol=1e-14)

    def test_zero_state_gives_b0(self):
        model = build_model(oscillator_plant(), monomial_basis(2, 3))
        np.testing.assert_allclose(
            eval_input_matrix(model, np.zeros(model.dim)), model.b0)


class TestClosedLoop:
    def test_lqr_block(self):
        plant = PolynomialPlant([np.array([[0.0, 1.0], [-1.0, 0.0]])],
                                np.array([[0.0], [1.0]]))
        model = build_model(plant, monomial_basis(2, 1))
        k = np.array([[0.3, 1.2]])
        kcal, acl = closed_loop_matrix(model, k)
        np.testing.assert_allclose(kcal, model.b0 @ k)
        np.testing.assert_allclose(acl, model.a_matrix - model.b0 @ k)

    def test_zero_gain(self):
        model = build_model(oscillator_plant(), monomial_basis(2, 2))
        _, acl = closed_loop_matrix(model, np.zeros((1, model.dim)))
        np.testing.assert_allclose(acl, model.a_matrix)

    def test_scalar_derived_example(self):
        plant = PolynomialPlant([np.array([[-1.0]])], np.array([[1.0]]))
        model = build_model(plant, monomial_basis(1, 2))
        _, acl = closed_loop_matrix(model, np.array([[0.5, 0.0]]))
        np.testing.assert_allclose(acl, [[-1.5, 0.0], [0.0, -3.0]])

    def test_dropped_mass_identity(self):
        """B(psi) K psi - Kcal psi equals the truncated-pair monomial mass."""
        model = build_model(oscillator_plant(), monomial_basis(2, 2))
        b = model.basis
        rng = np.random.default_rng(8)
        ta, tb, pe = truncated_pairs(b)
        bs = model.input_state[0]
        for _ in range(10):
            k = rng.normal(size=(1, b.dim))
            kcal, _ = closed_loop_matrix(model, k)
            x = rng.normal(size=2)
            psi = lift_state(x, b)
            lhs = eval_input_matrix(model, psi) @ (k @ psi) - kcal @ psi
            mono = np.prod(x ** pe, axis=1)
            drop = bs[:, ta] @ (k[0, tb] * mono)
            np.testing.assert_allclose(lhs, drop, atol=1e-12)


class TestQuadBasis:
    def test_extended_degrees(self):
        qb = QuadBasis(monomial_basis(2, 2))
        assert qb.ext_dim == count_monomials(2, 2) + count_monomials(2, 3) \
            + count_monomials(2, 4)

    def test_truncated_pairs_scalar(self):
        ta, tb, pe = truncated_pairs(monomial_basis(1, 2))
        assert sorted(zip(ta.tolist(), tb.tolist())) == [(0, 1), (1, 0), (1, 1)]
        assert sorted(pe.ravel().tolist()) == [3, 3, 4]

    def test_quadrize_row_scalar(self):
        b = monomial_basis(1, 2)
        np.testing.assert_allclose(
            quadrize_row(np.array([[1.0, 0.0], [0.0, 0.0]]), b), [0.0, 1.0])
        np.testing.assert_allclose(
            quadrize_row(np.array([[0.0, 1.0], [1.0, 0.0]]), b), [0.0, 0.0])


class TestVectorize:
    def test_examples(self):
        qb1 = QuadBasis(monomial_basis(1, 1))
        np.testing.assert_allclose(
            vectorize_quadratic(np.array([[3.0]]), qb1), [3.0])
        qb2 = QuadBasis(monomial_basis(2, 1))
        np.testing.assert_allclose(
            vectorize_quadratic(np.eye(2), qb2), [1.0, 0.0, 1.0])
        qb3 = QuadBasis(monomial_basis(1, 2))
        p = np.array([[2.0, 0.5], [0.5, 4.0]])
        np.testing.assert_allclose(
            vectorize_quadratic(p, qb3), [2.0, 1.0, 4.0])

    def test_asymmetric_rejected(self):
        qb = QuadBasis(monomial_basis(2, 1))
        with pytest.raises(InvalidArgumentError):
            vectorize_quadratic(np.array([[1.0, 1.0], [0.0, 1.0]]), qb)

    def test_form_identity_random(self):
        rng = np.random.default_rng(31)
        for n, nn in ((2, 2), (3, 2), (2, 3)):
            b = monomial_basis(n, nn)
            qb = QuadBasis(b)
            for _ in range(250):
                m = rng.normal(size=(b.dim, b.dim))
                p = 0.5 * (m + m.T)
                pbar = vectorize_quadratic(p, qb)
                x = rng.normal(size=n)
                psi = lift_state(x, b)
                lhs = psi @ p @ psi
                rhs = pbar @ qb.lift(x)
                assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def test_unvectorize_right_inverse(self):
        rng = np.random.default_rng(5)
        qb = QuadBasis(monomial_basis(2, 2))
        pbar = rng.normal(size=qb.ext_dim)
        p = unvectorize_quadratic(pbar, qb)
        np.testing.assert_allclose(p, p.T)
        np.testing.assert_allclose(vectorize_quadratic(p, qb), pbar,
                                   atol=1e-14)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_roundtrip_form_preserved(self, seed):
        rng = np.random.default_rng(seed)
        qb = QuadBasis(monomial_basis(2, 2))
        m = rng.normal(size=(5, 5))
        p = 0.5 * (m + m.T)
        p2 = unvectorize_quadratic(vectorize_quadratic(p, qb), qb)
        x = rng.normal(size=2)
        psi = lift_state(x, qb.base)
        assert abs(psi @ p @ psi - psi @ p2 @ psi) < 1e-10

    def test_beta_identity(self):
        rng = np.random.default_rng(17)
        qb = QuadBasis(monomial_basis(2, 2))
        for _ in range(20):
            pbar = rng.normal(size=qb.ext_dim)
            x = rng.normal(size=2)
            psi = lift_state(x, qb.base)
            v = rng.normal(size=qb.base.dim)
            lhs = pbar @ beta_matrix(psi, qb) @ v
            rhs = psi @ unvectorize_quadratic(pbar, qb) @ v
            assert abs(lhs - rhs) < 1e-11


class TestModelValidation:
    def test_oscillator_model_validates(self):
        model = build_model(oscillator_plant(), monomial_basis(2, 2))
        model.validate()
        assert model.n == 2
        assert model.k_inputs == 1
        assert model.dim == 5

    def test_shape_mismatch(self):
        b = monomial_basis(2, 1)
        with pytest.raises(InvalidArgumentError):
            CarlemanModel(b, np.zeros((3, 3)), np.zeros((2, 1)), [])


class TestLiftConsistency:
    def test_zero_trajectory(self):
        plant = oscillator_plant()
        model = build_model(plant, monomial_basis(2, 2))
        traj = integrate(plant, None, np.zeros(2), (0.0, 0.1), 0.01)
        res = lift_consistency_check(plant, model, traj)
        assert set(res) == {1, 2}
        assert all(v == 0.0 for v in res.values())

    def test_closed_dynamics_residual_is_discretization(self):
        """Linear plant at N=1 has no truncation error, so the residual
        must shrink like h^2 under step refinement."""
        plant = PolynomialPlant([np.array([[0.0, 1.0], [-2.0, -1.0]])],
                                np.array([[0.0], [1.0]]))
        model = build_model(plant, monomial_basis(2, 1))
        x0 = np.array([1.0, -0.5])
        res = {}
        for h in (0.02, 0.01):
            traj = integrate(plant, None, x0, (0.0, 2.0), h)
            res[h] = lift_consistency_check(plant, model, traj)[1]
        assert res[0.02] / res[0.01] == pytest.approx(4.0, rel=0.15)

    def test_truncation_residual_drops_with_order(self):
        plant = oscillator_plant()
        x0 = np.array([0.05, 0.05])
        traj = integrate(plant, hjb_controller := None, x0, (0.0, 4.0), 0.01)
        r2 = lift_consistency_check(
            plant, build_model(plant, monomial_basis(2, 2)), traj)
        r3 = lift_consistency_check(
            plant, build_model(plant, monomial_basis(2, 3)), traj)
        assert max(r3[d] for d in (1, 2)) <= max(r2[d] for d in (1, 2))

    def test_too_few_samples(self):
        plant = oscillator_plant()
        model = build_model(plant, monomial_basis(2, 2))
        traj = integrate(plant, None, np.zeros(2), (0.0, 0.01), 0.01)
        with pytest.raises(InvalidArgumentError):
            lift_consistency_check(plant, model, traj)
