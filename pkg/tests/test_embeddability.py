from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from octalab.embeddability import (
    EmbeddabilityError,
    ObstructionError,
    chain_ok,
    chain_threshold,
    cut_cone_membership,
    distance_matrix,
    k23_metric,
    l1_distortion_bound,
    levy_embedding_2d,
    non_octa_certificate,
    point_config_search,
    quadratic_form,
)
from octalab.spaces import lp, norm

# Least L1 distortion of K_{2,3}; frozen from the distortion LP.
K23_DISTORTION = 4 / 3


def _points(seed, k, n):
    return np.random.default_rng(seed).normal(size=(k, n))


def test_three_points_of_l1_plane():
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    cert = cut_cone_membership(distance_matrix(lp(1, 2), P))
    assert cert.feasible
    assert cert.verify()
    assert cert.weights == pytest.approx({(2,): 1.0, (3,): 1.0})


def test_k23_separator_exact():
    D = k23_metric()
    cert = cut_cone_membership(D)
    assert not cert.feasible
    assert cert.verify()
    assert cert.b == (3, 3, -2, -2, -2)
    assert cert.q_value == Fraction(6)
    assert quadratic_form((3, 3, -2, -2, -2), D) == 6


def test_k23_separator_nonpositive_on_cuts():
    from octalab.embeddability import _cut_matrix

    cert = cut_cone_membership(k23_metric())
    M, _, _ = _cut_matrix(5)
    assert np.all(M.T @ cert.separator <= 1e-9)
    assert cert.separator_value > 0


def test_k23_distortion():
    assert l1_distortion_bound(k23_metric()) == pytest.approx(K23_DISTORTION, abs=1e-8)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_four_point_metrics_embed(seed):
    # every metric on four points is L1-embeddable
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(4, 3))
    p = rng.choice([1.5, 3.0, np.inf])
    D = distance_matrix(lp(p, 3), P)
    cert = cut_cone_membership(D)
    assert cert.feasible and cert.verify()
    assert l1_distortion_bound(D) == pytest.approx(1.0, abs=1e-7)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(3, 7))
def test_l1_points_are_feasible(seed, k):
    D = distance_matrix(lp(1, 3), _points(seed, k, 3))
    cert = cut_cone_membership(D)
    assert cert.feasible and cert.verify()


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_euclidean_points_have_distortion_one(seed):
    # Euclidean space embeds isometrically into L1
    D = distance_matrix(lp(2, 3), _points(seed, 6, 3))
    assert l1_distortion_bound(D) == pytest.approx(1.0, abs=1e-7)


def test_distortion_at_least_one_and_feasibility_agree():
    for seed in range(5):
        D = distance_matrix(lp(np.inf, 3), _points(seed, 7, 3))
        t = l1_distortion_bound(D)
        assert t >= 1.0 - 1e-9
        assert cut_cone_membership(D).feasible == (t <= 1 + 1e-7)


def test_rejects_bad_metrics():
    with pytest.raises(EmbeddabilityError):
        cut_cone_membership(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(EmbeddabilityError):
        cut_cone_membership(np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]]))
    with pytest.raises(EmbeddabilityError):
        cut_cone_membership(np.zeros((11, 11)))


@pytest.mark.parametrize("p", [1, 2])
def test_search_in_embeddable_spaces(p):
    out = point_config_search(lp(p, 3), 6, budget=200, seed=0)
    assert out.distortion == pytest.approx(1.0, abs=1e-7)
    assert not out.conclusive


def test_search_is_deterministic():
    a = point_config_search(lp(np.inf, 2), 5, budget=100, seed=3)
    b = point_config_search(lp(np.inf, 2), 5, budget=100, seed=3)
    assert a.distortion == b.distortion
    np.testing.assert_array_equal(a.points, b.points)


def test_hilbert_certificate_refused():
    with pytest.raises(ObstructionError, match="obstruction not established"):
        non_octa_certificate(2, 3, 8, budget=100, k=6, seed=0)


def test_chain_threshold_consistent():
    for nu in (0.3, 0.1, 0.01):
        t = chain_threshold(nu)
        assert chain_ok(nu, t + 1e-6)
        assert not chain_ok(nu, t - 1e-6)


@pytest.mark.slow
def test_certificate_for_l4():
    cert = non_octa_certificate(4 / 3, 3, 8, budget=2500, k=8, seed=0)
    assert cert.chain_holds()
    assert cert.members_unit()
    assert cert.evidence.verify() and not cert.evidence.feasible
    assert cert.cap < 2.0


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_levy_embedding(p):
    X = lp(p, 2)
    emb = levy_embedding_2d(X)
    assert np.all(emb.weights >= 0)
    assert emb.fit_error <= 1e-3
    assert emb.distortion() <= 1 + 2e-3
    rng = np.random.default_rng(1)
    x = rng.normal(size=(50, 2))
    np.testing.assert_allclose(emb.evaluate(x), norm(X, x), rtol=3e-3)


def test_levy_operator_matches_evaluate():
    emb = levy_embedding_2d(lp(1, 2))
    x = np.array([0.3, -1.2])
    assert np.sum(np.abs(emb.operator() @ x)) / emb.grid == pytest.approx(emb.evaluate(x))


def test_levy_rejects_wrong_dimension():
    with pytest.raises(EmbeddabilityError):
        levy_embedding_2d(lp(1, 3))
