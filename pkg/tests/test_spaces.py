import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octalab.spaces import (SpaceError, attaining_vector, covering_radius, dual_norm, lp, modulus_curve, norm,
                            norming_functional, norming_functionals, parse_space, random_unit, sphere_net,
                            uniform_convexity_modulus, uniform_l1, wl1)

from conftest import P_VALUES

# frozen: budget 1e5, seed 0 (first computation of the search estimate)
DELTA_L4_3 = 0.01600516436728472
DELTA_L3_3 = 0.0435344086138052


def test_norm_examples():
    assert norm(lp(3, 2), [1, 1]) == pytest.approx(2 ** (1 / 3), abs=1e-12)
    assert norm(lp(math.inf, 2), [2, -3]) == 3
    assert norm(wl1([0.25] * 4), [1, 1, 1, 1]) == pytest.approx(1.0)


def test_norm_batched_matches_rows(rng):
    X = rng.standard_normal((7, 3))
    for p in P_VALUES:
        s = lp(p, 3)
        assert np.allclose(norm(s, X), [norm(s, x) for x in X])


def test_norming_functional_examples():
    assert np.allclose(norming_functional(lp(2, 2), [0.6, 0.8]), [0.6, 0.8])
    assert np.allclose(norming_functional(lp(1, 2), [0.5, -0.5]), [1, -1])
    assert np.allclose(norming_functional(lp(math.inf, 2), [1, 1]), [1, 0])


def test_parse_space_roundtrip():
    for text in ["lp:3:2", "lp:inf:4", "lp:1.5:3", "wl1:0.25,0.25,0.5"]:
        assert str(parse_space(text)) == text
    with pytest.raises(SpaceError):
        parse_space("hilbert:3")
    with pytest.raises(SpaceError):
        lp(0.5, 2)


def test_dual_of_weighted():
    s = wl1([0.5, 2.0])
    f = np.array([1.0, -3.0])
    # sup of f.x over ||x|| <= 1 is attained at a scaled basis vector
    assert dual_norm(s, f) == pytest.approx(max(1 / 0.5, 3 / 2.0))


vec = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


@given(vec, vec, st.floats(-5, 5, allow_nan=False), st.sampled_from(P_VALUES))
def test_norm_axioms(x, y, a, p):
    s = lp(p, 3)
    x, y = np.array(x), np.array(y)
    nx, ny = norm(s, x), norm(s, y)
    assert norm(s, x + y) <= (nx + ny) * (1 + 1e-12) + 1e-300
    assert norm(s, a * x) == pytest.approx(abs(a) * nx, rel=1e-12, abs=1e-300)
    assert norm(s, -x) == nx


def test_norm_axioms_bulk():
    r = np.random.default_rng(0)
    for s in [lp(p, 4) for p in P_VALUES] + [uniform_l1(4)]:
        X, Y = r.standard_normal((2, 10_000, 4))
        a = r.standard_normal(10_000)
        nx, ny = norm(s, X), norm(s, Y)
        assert np.all(norm(s, X + Y) <= (nx + ny) * (1 + 1e-12))
        assert np.allclose(norm(s, a[:, None] * X), np.abs(a) * nx, rtol=1e-12)


@given(st.sampled_from(P_VALUES), st.integers(1, 5), st.integers(0, 2**31))
def test_norming_functional_properties(p, n, seed):
    s = lp(p, n)
    x = random_unit(s, np.random.default_rng(seed))
    f = norming_functional(s, x)
    assert abs(f @ x - 1) <= 1e-9
    assert abs(dual_norm(s, f) - 1) <= 1e-9
    assert np.allclose(norming_functionals(s, x[None, :])[0] @ x, 1, atol=1e-9)


@given(st.sampled_from(P_VALUES), st.integers(0, 2**31))
def test_holder(p, seed):
    r = np.random.default_rng(seed)
    s = lp(p, 3)
    x, f = r.standard_normal((2, 3))
    assert abs(f @ x) <= dual_norm(s, f) * norm(s, x) * (1 + 1e-12)


def test_attaining_vector_is_unit_and_attains():
    r = np.random.default_rng(3)
    for p in P_VALUES:
        s = lp(p, 3)
        f = r.standard_normal(3)
        x = attaining_vector(s, f)
        assert norm(s, x) == pytest.approx(1.0)
        assert f @ x == pytest.approx(dual_norm(s, f))


def test_modulus_hilbert_closed_form():
    est = uniform_convexity_modulus(lp(2, 2), 1.0)
    assert est.delta_hat == pytest.approx(1 - math.sqrt(0.75), abs=1e-12)


def test_modulus_hilbert_matches_circle_grid():
    # oracle: grid on the circle; minimise 1 - ||(f+g)/2|| over ||f - g|| >= 1
    t = np.linspace(0, 2 * np.pi, 36001)[:-1]
    P = np.stack([np.cos(t), np.sin(t)], 1)
    f = P[0]
    far = np.linalg.norm(P - f, axis=1) >= 1 - 1e-12
    oracle = np.min(1 - np.linalg.norm((P[far] + f) / 2, axis=1))
    est = uniform_convexity_modulus(lp(2, 2), 1.0)
    assert est.delta_hat == pytest.approx(oracle, abs=1e-4)


def test_modulus_l1_is_zero():
    assert uniform_convexity_modulus(lp(1, 2), 1.0, budget=200).delta_hat == pytest.approx(0.0, abs=1e-12)


def test_modulus_witness_is_feasible():
    est = uniform_convexity_modulus(lp(4, 3), 1.0, budget=2000, method="search")
    f, g = (np.array(v) for v in est.witness)
    s = lp(4, 3)
    assert norm(s, f) <= 1 + 1e-9 and norm(s, g) <= 1 + 1e-9
    assert norm(s, f - g) >= 1 - 1e-9
    assert est.delta_hat == pytest.approx(1 - norm(s, (f + g) / 2), abs=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("p,frozen", [(4, DELTA_L4_3), (3, DELTA_L3_3)])
def test_modulus_search_regression(p, frozen):
    est = uniform_convexity_modulus(lp(p, 3), 1.0, budget=100_000, seed=0, method="search")
    assert est.is_upper_estimate and est.delta_hat > 0
    assert est.delta_hat == pytest.approx(frozen, abs=1e-12)


@pytest.mark.parametrize("p", [1.2, 4 / 3, 1.5, 3.0, 4.0, 6.0])
@pytest.mark.parametrize("eps", [0.0025, 0.3, 1.0, 1.7])
def test_lp_closed_form_below_search(p, eps):
    exact = uniform_convexity_modulus(lp(p, 3), eps)
    assert exact.method == "closed-form-lp" and not exact.is_upper_estimate
    est = uniform_convexity_modulus(lp(p, 3), eps, budget=5000, method="search")
    # the search evaluates 1 - ||mid|| in floating point: absolute resolution ~1e-15
    assert exact.delta_hat <= est.delta_hat * (1 + 1e-9) + 1e-15
    assert est.delta_hat <= exact.delta_hat + 1e-3


def test_lp_closed_form_values():
    # p >= 2: 1 - (1 - (eps/2)^p)^(1/p)
    assert uniform_convexity_modulus(lp(4, 2), 1.0).delta_hat == pytest.approx(1 - (1 - 2 ** -4) ** 0.25, rel=1e-12)
    # small eps for p < 2 behaves like (p - 1) eps^2 / 8
    d = uniform_convexity_modulus(lp(1.5, 2), 1e-3).delta_hat
    assert d == pytest.approx(0.5 * 1e-6 / 8, rel=1e-3)


def test_modulus_curve_monotone_and_flat():
    grid = [round(0.1 + 0.2 * i, 1) for i in range(10)]
    for n in (2, 3):
        for p in (2, 4):
            vals = [e.delta_hat for e in modulus_curve(lp(p, n), grid, budget=300)]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        for p in (1, math.inf):
            vals = [e.delta_hat for e in modulus_curve(lp(p, n), grid, budget=300)]
            assert max(abs(v) for v in vals) <= 1e-12


def test_sphere_net_examples():
    net = sphere_net(lp(2, 2), 2.0)
    assert len(net) == 1 and np.allclose(net.points[0], [1, 0])
    net = sphere_net(lp(2, 2), 1.0)
    assert len(net) <= 7 and net.covered
    net = sphere_net(lp(math.inf, 2), 0.5)
    assert len(net) <= 20
    r = covering_radius(lp(math.inf, 2), net.points, random_unit(lp(math.inf, 2), np.random.default_rng(1), 100_000))
    assert r <= 0.5


def test_grid_net_covers_and_keeps_seeds():
    seeds = np.array([[0.3, -0.2, 0.9]])
    net = sphere_net(lp(3, 3), 0.04, seed_points=seeds)
    assert net.meta["method"] == "grid" and net.covered
    assert np.allclose(net.points[0], seeds[0] / norm(lp(3, 3), seeds[0]))
    assert np.allclose(norm(lp(3, 3), net.points), 1)


@pytest.mark.parametrize("space", [lp(1, 3), lp(1.5, 2), lp(math.inf, 3), uniform_l1(3)])
def test_every_net_is_covered(space):
    assert sphere_net(space, 0.6, budget=300).covered


def test_net_errors():
    with pytest.raises(SpaceError):
        sphere_net(lp(2, 2), 0.0)
    with pytest.raises(SpaceError):
        sphere_net(uniform_l1(3), 0.01, method="grid")
