import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octalab.spaces import conjugate_exponent, lp, norm, random_unit, uniform_l1
from octalab.tensor_norms import (NormError, Tensor, injective_norm, operator_norm, pairing, projective_norm,
                                  rank_one, zonotope_points)

from conftest import P_VALUES

INF = math.inf


def test_operator_norm_examples():
    c = operator_norm(np.eye(2), lp(INF, 2), lp(1, 2))
    assert c.exact and c.value == pytest.approx(2)
    assert np.allclose(np.abs(c.info["signs"]), 1)
    assert operator_norm(np.outer([1, 0], [1, 0]), lp(2, 2), lp(2, 2)).value == pytest.approx(1)
    c = operator_norm(np.array([[1, 1], [1, -1]]), lp(INF, 2), lp(1, 2))
    assert c.exact and c.value == pytest.approx(2)


def test_operator_norm_witnesses_attain():
    r = np.random.default_rng(4)
    for dom, cod in [(lp(3, 3), lp(1, 5)), (lp(INF, 4), lp(2, 3)), (lp(1, 3), lp(1.5, 3)), (lp(2, 3), lp(2, 4))]:
        A = r.standard_normal((cod.dim, dom.dim))
        c = operator_norm(A, dom, cod)
        x, g = c.witness_primal, c.witness_dual
        assert norm(dom, x) == pytest.approx(1) and norm(cod.dual(), g) == pytest.approx(1)
        assert g @ A @ x == pytest.approx(c.lower, rel=1e-9)
        assert c.lower <= c.value <= c.upper + 1e-12


def test_gray_and_arrangement_agree():
    r = np.random.default_rng(8)
    for m in (5, 9, 12):
        A = r.standard_normal((m, 3))
        dom, cod = lp(1.5, 3), lp(1, m)
        a = operator_norm(A, dom, cod, method="gray").value
        b = operator_norm(A, dom, cod, method="arrangement").value
        assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("p", [1.5, 3.0, INF])
def test_enumeration_dominates_sampling(p):
    r = np.random.default_rng(int(p * 10) if p != INF else 99)
    dom = lp(conjugate_exponent(p), 3)
    for m in (4, 12):
        A = r.standard_normal((m, 3))
        val = operator_norm(A, dom, lp(1, m)).value
        X = random_unit(dom, r, 100_000)
        sampled = np.max(norm(lp(1, m), X @ A.T))
        assert val >= sampled - 1e-12


def test_exact_flag_raises_without_route():
    with pytest.raises(NormError):
        operator_norm(np.ones((30, 30)), lp(3, 30), lp(3, 30), exact=True)


def test_injective_examples():
    assert injective_norm(Tensor(lp(1, 2), lp(1, 2), np.eye(2))).value == pytest.approx(2)
    assert injective_norm(Tensor(lp(2, 2), lp(2, 2), np.eye(2))).value == pytest.approx(1)


def test_projective_examples():
    assert projective_norm(Tensor(lp(2, 2), lp(2, 2), np.eye(2))).value == pytest.approx(2, abs=1e-7)
    assert projective_norm(Tensor(lp(1, 2), lp(1, 2), np.eye(2))).value == pytest.approx(2, abs=1e-7)
    z = projective_norm(Tensor(lp(2, 2), lp(3, 2), np.zeros((2, 2))))
    assert z.value == 0


def test_projective_nuclear_oracle():
    # on Hilbert factors the projective norm is the nuclear norm
    r = np.random.default_rng(5)
    for _ in range(5):
        c = r.standard_normal((3, 3))
        v = projective_norm(Tensor(lp(2, 3), lp(2, 3), c)).value
        assert v == pytest.approx(np.linalg.svd(c, compute_uv=False).sum(), abs=1e-6)


def test_pairing_examples():
    I = np.eye(2)
    assert pairing(I, Tensor(lp(2, 2), lp(2, 2), np.outer([1, 0], [1, 0]))) == 1
    assert pairing(I, Tensor(lp(2, 2), lp(2, 2), np.outer([1, 0], [0, 1]))) == 0
    assert pairing(np.diag([2.0, 3.0]), I) == 5


def test_zonotope_points():
    G = np.array([[1.0, 0.0], [0.0, 1.0]])
    V = {tuple(v) for v in zonotope_points(G)}
    assert V == {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    assert np.allclose(zonotope_points(np.zeros((2, 3))), 0)


spaces = st.sampled_from([lp(p, d) for p in P_VALUES for d in (1, 2, 3, 4)])


@given(spaces, spaces, st.integers(0, 2**31))
def test_rank_one_norms_are_products(X, Y, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal(X.dim), r.standard_normal(Y.dim)
    u = rank_one(X, Y, x, y)
    prod = norm(X, x) * norm(Y, y)
    assert injective_norm(u).value == pytest.approx(prod, abs=1e-7 * max(1, prod))
    assert projective_norm(u).value == pytest.approx(prod, abs=1e-7 * max(1, prod))


# factors with an exact separation oracle (polyhedral or Hilbert)
small = st.sampled_from([lp(p, d) for p in (1.0, 2.0, INF) for d in (2, 3)])


@given(small, small, st.integers(0, 2**31))
def test_ordering_duality_and_decomposition(X, Y, seed):
    r = np.random.default_rng(seed)
    u = Tensor(X, Y, r.standard_normal((X.dim, Y.dim)))
    inj = injective_norm(u)
    pi = projective_norm(u, tol=1e-8)
    assert inj.value <= pi.value + 1e-7
    # a norm-one map X -> Y* pairs with u to at most ||u||_pi
    T = r.standard_normal((X.dim, Y.dim))
    tn = operator_norm(T.T, X, Y.dual()).upper
    assert abs(pairing(T, u)) <= tn * pi.upper + 1e-6
    atoms = pi.witness_primal
    assert all(lam >= -1e-12 for lam, _, _ in atoms)
    rec = sum(lam * np.outer(x, y) for lam, x, y in atoms)
    assert np.allclose(rec, u.coeffs, atol=1e-6)
    for _, x, y in atoms:
        assert abs(norm(X, x) - 1) <= 1e-8 and abs(norm(Y, y) - 1) <= 1e-8
    assert sum(lam for lam, _, _ in atoms) == pytest.approx(pi.value, abs=1e-6)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31))
def test_l1_projective_is_entrywise_sum(m, n, seed):
    c = np.random.default_rng(seed).standard_normal((m, n))
    assert projective_norm(Tensor(lp(1, m), lp(1, n), c)).value == pytest.approx(np.abs(c).sum(), abs=1e-5)


def test_weighted_spaces_in_tensors():
    X = uniform_l1(4)
    c = np.random.default_rng(1).standard_normal((4, 2))
    u = Tensor(X, lp(1, 2), c)
    # l1-type factors: projective norm is the weighted entrywise sum
    assert projective_norm(u).value == pytest.approx(np.abs(c).sum(axis=1) @ X.w, abs=1e-6)
    assert injective_norm(u).value <= projective_norm(u).value + 1e-9


@pytest.mark.parametrize("X,Y", [(lp(1.5, 3), lp(3, 2)), (lp(3, 2), lp(3, 3))])
def test_projective_brackets_without_exact_oracle(X, Y):
    u = Tensor(X, Y, np.random.default_rng(2).standard_normal((X.dim, Y.dim)))
    pi = projective_norm(u, tol=1e-3)
    assert pi.exactness == "bounds"
    assert pi.lower <= pi.value + 1e-12
    assert pi.info["lower_found"] >= pi.value - 1e-3
    assert injective_norm(u).value <= pi.value + 1e-9
    rec = sum(lam * np.outer(x, y) for lam, x, y in pi.witness_primal)
    assert np.allclose(rec, u.coeffs, atol=1e-7)


def test_rank_one_closed_form_dual_witness():
    X, Y = lp(1.5, 3), lp(3, 2)
    u = rank_one(X, Y, [1.0, -2.0, 0.5], [0.3, 1.0])
    pi = projective_norm(u)
    assert pi.info["status"] == "rank-one" and pi.exact
    assert pairing(pi.witness_dual, u) == pytest.approx(pi.value)
    assert operator_norm(pi.witness_dual.T, X, Y.dual()).value <= 1 + 1e-9
