import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octalab.spaces import lp, norm, random_unit, uniform_l1
from octalab.tensor_norms import Tensor, injective_norm, operator_norm, projective_norm
from octalab.witnesses import (WitnessError, alt_values, coordinate_embedding, exact_l1_norm, interval_witness,
                               oplus1_extension, pad_rows, rank_one_witness_search, shift_witness, sup_alt_witness)

INF = math.inf


def _unit_ops(rng, count, m, dom):
    ops = []
    for _ in range(count):
        A = rng.standard_normal((m, dom.dim))
        ops.append(A / operator_norm(A, dom, lp(1, m)).value)
    return ops


# -- shift


def test_shift_identity_disjoint():
    S, rep = shift_witness([np.eye(2)], lp(1, 2), np.eye(2), 1e-6, k=2)
    assert S.shape == (4, 2)
    assert np.array_equal(S, [[0, 0], [0, 0], [1, 0], [0, 1]])
    assert rep.values == [2.0]


def test_shift_tail_mass_beyond_k():
    eps = 0.05
    T = np.zeros((4, 2))
    T[0, 0], T[2, 0], T[1, 1] = 1 - eps / 2, eps / 2, 1.0
    S, rep = shift_witness([T], lp(1, 2), np.eye(2), eps, k=2)
    # direct enumeration over the vertices of the l_1 ball
    direct = max(norm(lp(1, 4), (pad_rows(T, 4) + S) @ v) for v in np.vstack([np.eye(2), -np.eye(2)]))
    assert rep.values[0] == pytest.approx(direct)
    assert rep.min_value >= 2 - 5 * eps


@pytest.mark.parametrize("seed", range(5))
def test_shift_random_pairs(seed):
    ops = _unit_ops(np.random.default_rng(seed), 2, 4, lp(1, 2))
    S, rep = shift_witness(ops, lp(1, 2), np.eye(2), 0.05)
    assert rep.passed and rep.min_value >= 1.75
    assert rep.values == pytest.approx([exact_l1_norm(pad_rows(T, S.shape[0]) + S, lp(1, 2), lp(1, S.shape[0]))
                                        for T in ops])
    assert operator_norm(S, lp(1, 2), lp(1, S.shape[0])).value == pytest.approx(1.0)


def test_shift_errors():
    with pytest.raises(WitnessError):
        shift_witness([np.eye(2)], lp(1, 2), np.eye(2), 1.5)
    with pytest.raises(WitnessError):
        shift_witness([np.eye(2)], lp(1, 2), np.diag([1.0, 2.0]), 0.05)  # psi not almost isometric
    with pytest.raises(WitnessError, match="codomain budget"):
        shift_witness([np.full((4, 2), 0.25)], lp(1, 2), np.eye(2), 0.05, codomain_budget=5)
    with pytest.raises(WitnessError):
        shift_witness([2 * np.eye(2)], lp(1, 2), np.eye(2), 0.05)


def test_padding_is_isometric():
    r = np.random.default_rng(0)
    A = r.standard_normal((3, 2))
    for dom in (lp(1, 2), lp(2, 2), lp(INF, 2)):
        a = operator_norm(A, dom, lp(1, 3)).value
        b = operator_norm(pad_rows(A, 7), dom, lp(1, 7)).value
        assert a == b


# -- interval


def test_interval_exact_example():
    G, rep = interval_witness([np.array([[4.0], [0], [0], [0]])], lp(1, 1), np.ones((4, 1)), 0.1)
    assert rep.spec.I == (3, 4)
    assert np.allclose(G[:, 0], [0, 0, 2, 2])
    assert rep.values == [pytest.approx(2.0)]


def test_interval_small_tail():
    G, rep = interval_witness([np.array([[3.8], [0.2], [0], [0]])], lp(1, 1), np.ones((4, 1)), 0.1)
    assert rep.min_value >= 1.8


def test_interval_disjoint_heads():
    T1 = np.zeros((8, 2))
    T1[0, 0], T1[1, 1] = 8, 8
    T2 = np.zeros((8, 2))
    T2[0, 0], T2[1, 0], T2[1, 1], T2[2, 1] = 4, 4, 4, 4
    eps = 0.1
    G, rep = interval_witness([T1, T2], lp(1, 2), coordinate_embedding(2, 8), eps)
    assert rep.passed and rep.min_value >= 2 - 2 * eps
    assert operator_norm(G, lp(1, 2), uniform_l1(8)).value == pytest.approx(1.0)


def test_interval_refines_when_blocks_vary():
    T = np.zeros((4, 2))
    T[0, 0], T[0, 1] = 4, 4
    T0 = np.array([[2.0, 0], [0, 2], [2, 0], [0, 2]])  # isometric, not constant on pairs
    G, rep = interval_witness([T], lp(1, 2), T0, 0.1)
    assert rep.spec.refined and G.shape[0] == 8
    assert rep.min_value >= 1.8


def test_interval_errors():
    with pytest.raises(WitnessError):
        interval_witness([np.ones((3, 1)) * 1.0], lp(1, 1), np.ones((3, 1)), 0.1)
    with pytest.raises(WitnessError, match="dyadic"):
        interval_witness([np.ones((4, 1))], lp(1, 1), np.ones((4, 1)), 0.1)


@given(st.integers(0, 2**31))
def test_interval_reports_meet_bound(seed):
    r = np.random.default_rng(seed)
    N, eps = 16, 0.1
    ops = []
    for _ in range(int(r.integers(1, 4))):
        A = np.zeros((N, 2))
        A[:4] = np.abs(r.standard_normal((4, 2)))
        ops.append(A / operator_norm(A, lp(1, 2), uniform_l1(N)).value)
    G, rep = interval_witness(ops, lp(1, 2), coordinate_embedding(2, N), eps)
    assert rep.passed


# -- sup-norm alternative witness


def test_sup_alt_examples():
    F = [[1.0, 0, 0], [-1.0, 0.5, 0]]
    y = sup_alt_witness(F)
    assert np.array_equal(y, [1, 0, 0])
    assert np.all(alt_values(lp(INF, 3), F, y) == 2)
    y = sup_alt_witness([[1.0, 0, 0], [0, 1.0, 0]])
    assert np.array_equal(y, [1, 1, 0])


def test_sup_alt_random():
    F = random_unit(lp(INF, 8), np.random.default_rng(0), 5)
    y = sup_alt_witness(F)
    assert norm(lp(INF, 8), y) == 1
    assert alt_values(lp(INF, 8), F, y).min() >= 2 - 1e-9


# -- rank-one


def test_rank_one_identity_completion():
    X = Y = lp(1, 2)
    T = Tensor(X, Y, np.outer([1, 0], [1, 0]))
    (w, z), rep = rank_one_witness_search([T])
    assert rep.min_value == pytest.approx(2.0)
    assert injective_norm(Tensor(X, Y, np.outer(w, z))).value == pytest.approx(1.0)
    # the completion to the identity also reaches 2 (exhaustive over signed basis pairs)
    best = max(injective_norm(Tensor(X, Y, T.coeffs + s * np.outer(a, b))).value
               for a in np.eye(2) for b in np.eye(2) for s in (1, -1))
    assert best == 2.0
    assert injective_norm(Tensor(X, Y, T.coeffs + np.outer([0, 1], [0, 1]))).value == 2.0


@pytest.mark.parametrize("X,Y", [(lp(2, 2), lp(3, 3)), (lp(INF, 3), lp(1, 2)), (lp(1.5, 2), lp(INF, 2))])
def test_rank_one_of_rank_one(X, Y):
    r = np.random.default_rng(1)
    x, y = r.standard_normal(X.dim), r.standard_normal(Y.dim)
    c = np.outer(x / norm(X, x), y / norm(Y, y))
    (_, _), rep = rank_one_witness_search([Tensor(X, Y, c)], starts=2)
    assert rep.min_value == pytest.approx(2.0, abs=1e-9)


def test_rank_one_sup_type_three_tensors():
    X, Y = lp(INF, 4), lp(1, 4)
    rng = np.random.default_rng(7)
    fam = []
    for _ in range(3):
        c = rng.standard_normal((4, 4))
        fam.append(Tensor(X, Y, c / injective_norm(Tensor(X, Y, c)).value))
    (w, z), rep = rank_one_witness_search(fam, starts=4, seed=7, max_evals=600)
    assert rep.min_value >= 2 - 0.1
    assert rep.passed
    assert norm(X, w) == pytest.approx(1.0) and norm(Y, z) == pytest.approx(1.0)


@given(st.integers(0, 2**31))
def test_rank_one_reports_meet_stage_one_bound(seed):
    X, Y = lp(INF, 3), lp(2, 2)
    rng = np.random.default_rng(seed)
    fam = []
    for _ in range(2):
        c = rng.standard_normal((3, 2))
        fam.append(Tensor(X, Y, c / injective_norm(Tensor(X, Y, c)).value))
    _, rep = rank_one_witness_search(fam, starts=1, seed=seed % 100, max_evals=100)
    assert rep.passed


# -- l_1 extension


def test_oplus1_examples():
    z = Tensor(lp(1, 2), lp(2, 2), np.outer([1, 0], [1, 0]))
    v, rep = oplus1_extension(z, [1.0, 0.0])
    assert rep.norm_sum == pytest.approx(2.0, abs=1e-7)
    assert rep.passed and rep.witness_index == 3
    assert v.X == lp(1, 3)
    z0 = Tensor(lp(1, 2), lp(2, 2), np.zeros((2, 2)))
    v, rep = oplus1_extension(z0, [0.6, 0.8])
    assert projective_norm(v).value == pytest.approx(1.0)
    assert rep.norm_sum == pytest.approx(1.0)


def test_oplus1_errors():
    with pytest.raises(WitnessError):
        oplus1_extension(Tensor(lp(2, 2), lp(2, 2), np.eye(2)), [1.0, 0.0])
    with pytest.raises(WitnessError):
        oplus1_extension(Tensor(lp(1, 2), lp(2, 2), np.eye(2)), [1.0, 1.0])


@given(st.integers(1, 3), st.sampled_from([lp(p, d) for p in (1.0, 2.0, INF) for d in (1, 2, 3)]),
       st.integers(0, 2**31))
def test_oplus1_additivity(m, Y, seed):
    r = np.random.default_rng(seed)
    c = r.standard_normal((m, Y.dim))
    z = Tensor(lp(1, m), Y, c / np.abs(c).sum())
    _, rep = oplus1_extension(z, random_unit(Y, r))
    assert rep.passed
    assert rep.additivity_error <= 1e-5
