"""L_1-embeddability of finite metrics and the non-octahedrality certificate.

A finite metric embeds isometrically in L_1 iff it is a nonnegative
combination of cut semimetrics.  Cut cone membership, the least L_1
distortion, and a search for badly embeddable point configurations are all
linear programs over the ``2^(k-1) - 1`` cuts of ``k`` points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .rng import stream
from .spaces import (NormedSpace, conjugate_exponent, lp, norm, norming_functional, norming_functionals,
                     random_unit, sphere_net, uniform_convexity_modulus)
from .tensor_norms import Tensor

__all__ = [
    "EmbeddabilityError",
    "ObstructionError",
    "CutConeCertificate",
    "cut_cone_membership",
    "l1_distortion_bound",
    "distance_matrix",
    "point_config_search",
    "SearchOutcome",
    "NonOctaCertificate",
    "non_octa_certificate",
    "NU_GRID",
    "chain_threshold",
    "l1_representation",
    "levy_embedding_2d",
    "LevyEmbedding",
    "k23_metric",
]

MAX_POINTS = 10
MAX_SEARCH_POINTS = 8
NU_GRID = (0.30, 0.25, 0.20, 0.15, 0.10, 0.05, 0.04, 0.03, 0.02, 0.01)
DELTA_DISCOUNT = 0.9
_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class EmbeddabilityError(ValueError):
    pass


class ObstructionError(EmbeddabilityError):
    pass


# ---------------------------------------------------------------------------
# cuts


def _cuts(k: int) -> list[tuple[int, ...]]:
    """Subsets of ``{1..k-1}`` (0-based); each one and its complement give one cut."""
    out = []
    for r in range(1, k):
        out.extend(itertools.combinations(range(1, k), r))
    return out


def _pairs(k: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(k), 2))


def _cut_matrix(k: int) -> tuple[np.ndarray, list[tuple[int, ...]], list[tuple[int, int]]]:
    cuts, pairs = _cuts(k), _pairs(k)
    M = np.zeros((len(pairs), len(cuts)))
    for c, S in enumerate(cuts):
        ind = np.zeros(k, dtype=bool)
        ind[list(S)] = True
        for r, (i, j) in enumerate(pairs):
            M[r, c] = float(ind[i] != ind[j])
    return M, cuts, pairs


def _check_metric(D, limit=MAX_POINTS) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise EmbeddabilityError("distance matrix must be square")
    k = D.shape[0]
    if k > limit:
        raise EmbeddabilityError(f"at most {limit} points supported, got {k}")
    if not np.all(np.isfinite(D)):
        raise EmbeddabilityError("distance matrix must be finite")
    scale = max(1.0, float(np.max(np.abs(D))))
    if np.max(np.abs(D - D.T)) > 1e-9 * scale or np.max(np.abs(np.diag(D))) > 1e-9 * scale:
        raise EmbeddabilityError("not a metric: matrix must be symmetric with zero diagonal")
    if np.min(D) < -1e-9 * scale:
        raise EmbeddabilityError("not a metric: negative distance")
    viol = D[:, None, :] - D[:, :, None] - D[None, :, :]  # d(i,k) - d(i,j) - d(j,k)
    if np.max(viol) > 1e-9 * scale:
        raise EmbeddabilityError("not a metric: triangle inequality fails")
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def distance_matrix(space: NormedSpace, points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    D = norm(space, P[:, None, :] - P[None, :, :])
    return 0.5 * (D + D.T)


def k23_metric() -> np.ndarray:
    """Shortest-path metric of K_{2,3}: parts {0,1} and {2,3,4}."""
    D = np.full((5, 5), 2.0)
    D[:2, 2:] = 1.0
    D[2:, :2] = 1.0
    np.fill_diagonal(D, 0.0)
    return D


# ---------------------------------------------------------------------------
# membership


def quadratic_form(b, D) -> Fraction:
    """``sum_{i<j} b_i b_j D_ij`` in exact rational arithmetic."""
    k = len(b)
    q = Fraction(0)
    for i in range(k):
        for j in range(i + 1, k):
            q += Fraction(int(b[i])) * Fraction(int(b[j])) * Fraction(float(D[i][j]))
    return q


@dataclass
class CutConeCertificate:
    """Outcome of a cut cone membership test.

    ``feasible``: ``weights`` maps cuts (1-based point labels of the side not
    containing point 1) to nonnegative weights reconstructing ``D``.
    Otherwise ``separator`` is a pair-indexed functional that is ``<= 0`` on
    every cut and ``> 0`` on ``D``; ``b`` (when found) is an integer vector with
    ``sum b = 0`` and ``Q(b) = sum_{i<j} b_i b_j D_ij > 0``.
    """

    D: np.ndarray
    feasible: bool
    weights: dict[tuple[int, ...], float] = field(default_factory=dict)
    separator: np.ndarray | None = None
    separator_value: float = 0.0
    b: tuple[int, ...] | None = None
    q_value: Fraction | None = None
    points: np.ndarray | None = None

    def reconstruct(self) -> np.ndarray:
        k = self.D.shape[0]
        R = np.zeros((k, k))
        for S, w in self.weights.items():
            ind = np.zeros(k, dtype=bool)
            ind[[s - 1 for s in S]] = True
            R += w * (ind[:, None] != ind[None, :])
        return R

    def verify(self, tol: float = 1e-6) -> bool:
        k = self.D.shape[0]
        if self.feasible:
            return all(w >= 0 for w in self.weights.values()) and bool(
                np.max(np.abs(self.reconstruct() - self.D), initial=0.0) <= tol)
        ok = True
        if self.separator is not None:
            M, _, pairs = _cut_matrix(k)
            d = np.array([self.D[i, j] for i, j in pairs])
            ok &= bool(np.all(M.T @ self.separator <= 1e-9)) and float(self.separator @ d) > 0
        if self.b is not None:
            ok &= sum(self.b) == 0 and quadratic_form(self.b, self.D) > 0
        return ok


def _negative_type_vector(D: np.ndarray, max_den: int = 12) -> tuple[tuple[int, ...], Fraction] | None:
    """Integer ``b`` with ``sum b = 0`` and ``Q(b) > 0``, from the top eigen-direction
    of ``D`` on the hyperplane ``sum b = 0``, recovered with denominators ``<= max_den``."""
    k = D.shape[0]
    P = np.eye(k) - np.ones((k, k)) / k
    vals, vecs = np.linalg.eigh(P @ D @ P)
    candidates = []
    for idx in np.argsort(-vals):
        if vals[idx] <= 1e-12:
            break
        v = vecs[:, idx]
        nz = np.abs(v) > 1e-9 * np.max(np.abs(v))
        v = v / np.min(np.abs(v[nz]))
        if v[np.flatnonzero(nz)[0]] < 0:
            v = -v
        for q in range(1, max_den + 1):
            w = q * v
            r = np.round(w)
            if np.max(np.abs(w - r)) < 1e-6 and r.sum() == 0:
                candidates.append(tuple(int(a) for a in r))
                break
        for q in range(1, max_den + 1):
            r = np.round(q * v)
            diff = int(r.sum())
            if diff:
                # push the entries with the largest rounding slack back
                resid = q * v - r
                order = np.argsort(resid if diff > 0 else -resid)
                for i in order[:abs(diff)]:
                    r[i] -= np.sign(diff)
            candidates.append(tuple(int(a) for a in r))
    for b in candidates:
        if any(b) and sum(b) == 0:
            qv = quadratic_form(b, D)
            if qv > 0:
                return b, qv
    return None


def cut_cone_membership(D, points=None) -> CutConeCertificate:
    """Decide whether the finite metric ``D`` lies in the cut cone."""
    D = _check_metric(D)
    k = D.shape[0]
    if k <= 1:
        return CutConeCertificate(D, True, {}, points=points)
    M, cuts, pairs = _cut_matrix(k)
    d = np.array([D[i, j] for i, j in pairs])
    res = linprog(np.ones(len(cuts)), A_eq=M, b_eq=d, bounds=(0, None), method="highs", options=_LP_OPTIONS)
    if res.status == 0:
        weights = {tuple(s + 1 for s in S): float(w) for S, w in zip(cuts, res.x) if w > 1e-12}
        cert = CutConeCertificate(D, True, weights, points=points)
        if cert.verify():
            return cert
    # Farkas: max <y, d>  s.t.  M^T y <= 0,  <y, d> <= 1
    A_ub = np.vstack([M.T, d[None, :]])
    b_ub = np.concatenate([np.zeros(len(cuts)), [1.0]])
    sep = linprog(-d, A_ub=A_ub, b_ub=b_ub, bounds=(None, None), method="highs", options=_LP_OPTIONS)
    y = sep.x if sep.status == 0 else None
    val = float(-sep.fun) if sep.status == 0 else 0.0
    cert = CutConeCertificate(D, False, separator=y, separator_value=val, points=points)
    nt = _negative_type_vector(D)
    if nt is not None:
        cert.b, cert.q_value = nt
    return cert


def _distortion_lp(D: np.ndarray):
    k = D.shape[0]
    M, cuts, pairs = _cut_matrix(k)
    d = np.array([D[i, j] for i, j in pairs])
    nc = len(cuts)
    # variables [w (nc), t];  M w >= d ;  M w - t d <= 0
    A_ub = np.vstack([
        np.hstack([-M, np.zeros((len(d), 1))]),
        np.hstack([M, -d[:, None]]),
    ])
    b_ub = np.concatenate([-d, np.zeros(len(d))])
    c = np.zeros(nc + 1)
    c[-1] = 1.0
    bounds = [(0, None)] * nc + [(1.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        raise EmbeddabilityError(f"distortion LP failed: {res.message}")
    marg = -res.ineqlin.marginals  # >= 0
    alpha, beta = marg[:len(d)], marg[len(d):]
    t = float(res.x[-1])
    # sensitivity of the optimal t to each distance
    grad = alpha - t * beta
    return t, res.x[:nc], grad, pairs


def l1_distortion_bound(D) -> float:
    """Least distortion of an embedding of the finite metric ``D`` into L_1.

    Any embedding of a space containing these points into L_1 has at least
    this distortion.
    """
    D = _check_metric(D)
    if D.shape[0] <= 2:
        return 1.0
    return _distortion_lp(D)[0]


# ---------------------------------------------------------------------------
# configuration search


@dataclass
class SearchOutcome:
    space: NormedSpace
    points: np.ndarray
    distortion: float
    evaluations: int
    seed: int
    label: str = "search outcome"

    @property
    def conclusive(self) -> bool:
        return self.distortion > 1.0 + 1e-9


def _config_distortion(space, P):
    D = distance_matrix(space, P)
    t, _, grad, pairs = _distortion_lp(D)
    return t, grad, pairs


def _config_gradient(space, P, grad, pairs):
    """d t / d P through d_ij = ||p_i - p_j||, projected to the sphere tangent."""
    G = np.zeros_like(P)
    for g, (i, j) in zip(grad, pairs):
        if g == 0:
            continue
        diff = P[i] - P[j]
        nd = norm(space, diff)
        if nd <= 0:
            continue
        f = norming_functional(space, diff / nd, tol=1e-6)
        G[i] += g * f
        G[j] -= g * f
    return G


def point_config_search(space: NormedSpace, k: int, budget: int = 2000, seed: int = 0) -> SearchOutcome:
    """Search unit-sphere configurations of ``k`` points with large L_1 distortion.

    Random configurations (a quarter of the budget, plus signed basis and
    sign-vector configurations) followed by LP-sensitivity ascent with random
    perturbations around the incumbent.  ``budget`` counts distortion LPs.  A
    result of 1.0 is inconclusive, never evidence of embeddability.
    """
    if budget <= 0:
        raise EmbeddabilityError("budget must be positive")
    if k > MAX_SEARCH_POINTS or k < 2:
        raise EmbeddabilityError(f"k must lie in [2, {MAX_SEARCH_POINTS}]")
    if space.dim > 4:
        raise EmbeddabilityError("search is limited to dimension 4")
    rng = stream(seed, 0xC0F)
    evals = 0
    best_t, best_P = -math.inf, None

    def consider(P):
        nonlocal evals, best_t, best_P
        t, grad, pairs = _config_distortion(space, P)
        evals += 1
        if t > best_t:
            best_t, best_P = t, P.copy()
        return t, grad, pairs

    # structured starts
    d = space.dim
    struct = np.vstack([np.eye(d), -np.eye(d),
                        np.array(list(itertools.product((1.0, -1.0), repeat=d)))])
    struct = struct / norm(space, struct)[:, None]
    for r in range(min(4, budget // 8 + 1)):
        if evals >= budget:
            break
        idx = rng.choice(len(struct), size=min(k, len(struct)), replace=False)
        P = struct[idx]
        if len(P) < k:
            P = np.vstack([P, random_unit(space, rng, k - len(P))])
        consider(P)
    n_random = max(1, budget // 4)
    while evals < min(budget, n_random):
        consider(random_unit(space, rng, k))

    # local ascent around the incumbent
    step = 0.05
    P = best_P.copy()
    t, grad, pairs = consider(P) if evals < budget else (best_t, None, None)
    while evals < budget and grad is not None:
        G = _config_gradient(space, P, grad, pairs)
        gn = float(np.linalg.norm(G))
        if gn > 0 and rng.random() < 0.7:
            Q = P + step * G / gn
        else:
            Q = P + step * rng.standard_normal(P.shape) / math.sqrt(P.size)
        Q = Q / norm(space, Q)[:, None]
        tq, gq, pq = consider(Q)
        if tq > t:
            P, t, grad, pairs = Q, tq, gq, pq
            step = min(0.2, step * 1.5)
        else:
            step *= 0.8
            if step < 1e-5:
                step = 0.05
                P = best_P.copy() + 0.1 * rng.standard_normal(best_P.shape)
                P /= norm(space, P)[:, None]
                if evals >= budget:
                    break
                t, grad, pairs = consider(P)
    return SearchOutcome(space, best_P, float(best_t), evals, seed)


# ---------------------------------------------------------------------------
# non-octahedrality certificate


def chain_ok(nu: float, eps0: float) -> bool:
    return 1 - 3 * nu > 0 and (1 + nu) / (1 - 3 * nu) < 1 + eps0 - 1e-9


def chain_threshold(nu: float) -> float:
    """Smallest ``eps0`` for which ``nu`` satisfies ``(1+nu)/(1-3nu) < 1+eps0``."""
    return (1 + nu) / (1 - 3 * nu) - 1


@dataclass
class NonOctaCertificate:
    """Certified cap ``2 - delta0`` on the octahedrality defect of ``family``
    in ``lp(1, m) (x)_eps lp(p, n)``, conditional on the metric distortion
    lower bound ``1 + eps0`` of the configuration ``evidence`` (which is part
    of the net the family is built from)."""

    p: float
    n: int
    m: int
    nu: float
    eta: float
    delta_hat: float
    delta0: float
    eps0: float
    net_points: np.ndarray
    ys: np.ndarray
    x: np.ndarray
    evidence: CutConeCertificate
    search: SearchOutcome

    @property
    def cap(self) -> float:
        return 2.0 - self.delta0

    @property
    def X(self) -> NormedSpace:
        return lp(1, self.m)

    @property
    def Y(self) -> NormedSpace:
        return lp(self.p, self.n)

    def __len__(self) -> int:
        return len(self.ys)

    def member(self, i: int) -> Tensor:
        return Tensor(self.X, self.Y, np.outer(self.x, self.ys[i]))

    @property
    def family(self) -> list[Tensor]:
        return [self.member(i) for i in range(len(self.ys))]

    def members_unit(self, tol: float = 1e-8) -> bool:
        # ||x (x) y||_eps = ||x|| ||y||
        return bool(np.all(np.abs(norm(self.Y, self.ys) * norm(self.X, self.x) - 1.0) <= tol))

    def chain_slack(self) -> dict[str, float]:
        return {
            "nu": (1 + self.eps0) - (1 + self.nu) / (1 - 3 * self.nu),
            "eta": self.nu / 2 - self.eta,
            "delta": self.nu / 2 - self.delta0,
            "delta_positive": self.delta0,
        }

    def chain_holds(self, slack: float = 1e-9) -> bool:
        s = self.chain_slack()
        # delta0 is itself tiny; it only has to be positive
        return s.pop("delta_positive") > 0 and all(v >= slack for v in s.values())


def non_octa_certificate(p: float, n: int, m: int, budget: int = 2000, k: int = 6, seed: int = 0,
                         modulus_budget: int = 20_000, net_budget: int = 2000,
                         search: SearchOutcome | None = None) -> NonOctaCertificate:
    """Build the quantitative obstruction for ``lp(1, m) (x)_eps lp(p, n)``.

    Needs a configuration on the sphere of ``lp(p*, n)`` with L_1 distortion
    ``1 + eps0 > 1`` (searched here unless ``search`` is given).  Picks the
    largest ``nu`` on ``NU_GRID`` with ``(1+nu)/(1-3nu) < 1+eps0``, sets
    ``eta = nu/4`` and ``delta0 = 0.9 * delta_hat(eta)``, builds a ``nu``-net of
    the dual sphere containing the configuration, and returns the family
    ``{x (x) y_i}`` with ``y_i`` norming the net points.
    """
    if not (1.0 < p <= math.inf) or n < 1 or m < 1:
        raise EmbeddabilityError("need p > 1, n >= 1, m >= 1")
    q = conjugate_exponent(p)
    F = lp(q, n)
    if search is None:
        search = point_config_search(F, k, budget, seed)
    if not search.conclusive:
        raise ObstructionError("obstruction not established")
    eps0 = search.distortion - 1.0
    nu = next((v for v in NU_GRID if chain_ok(v, eps0)), None)
    if nu is None:
        need = chain_threshold(NU_GRID[-1])
        raise ObstructionError(
            f"parameter chain infeasible: eps0 = {eps0:.9g}, need eps0 > {need:.9g} for nu = {NU_GRID[-1]}")
    eta = nu / 4.0
    est = uniform_convexity_modulus(F, eta, modulus_budget, seed)
    delta_hat = est.delta_hat
    delta0 = DELTA_DISCOUNT * delta_hat
    if not delta0 > 0:
        raise ObstructionError("modulus estimate vanished; no usable delta0")
    net = sphere_net(F, nu, budget=net_budget, seed=seed, seed_points=search.points)
    if not net.covered:
        raise ObstructionError(f"net check failed: sampled covering radius {net.check_radius!r} > nu")
    ys = norming_functionals(F, net.points)
    x = np.zeros(m)
    x[0] = 1.0
    evidence = cut_cone_membership(distance_matrix(F, search.points), points=search.points)
    cert = NonOctaCertificate(p, n, m, nu, eta, delta_hat, delta0, eps0, net.points, ys, x, evidence, search)
    if not cert.chain_holds():
        raise ObstructionError(f"parameter chain violated: {cert.chain_slack()}")
    return cert


# ---------------------------------------------------------------------------
# L_1 representations of norms:  ||x|| ~ sum_j w_j |<theta_j, x>|


def l1_representation(space: NormedSpace, directions: np.ndarray, test_points: np.ndarray,
                      smooth: float | None = None):
    """Fit ``w >= 0`` minimising ``max_k | sum_j w_j |<theta_j, x_k>| - 1 |`` over unit ``x_k``.

    With ``smooth`` given, a second LP minimises the circular total variation
    of ``w`` among fits with error at most ``best + smooth``.
    Returns ``(w, error)``.
    """
    X = np.asarray(test_points, dtype=float)
    X = X / norm(space, X)[:, None]
    A = np.abs(X @ np.asarray(directions, dtype=float).T)  # (K, J)
    K, J = A.shape
    # variables [w (J), t]
    A_ub = np.vstack([np.hstack([A, -np.ones((K, 1))]), np.hstack([-A, -np.ones((K, 1))])])
    b_ub = np.concatenate([np.ones(K), -np.ones(K)])
    c = np.zeros(J + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * J + [(0, None)], method="highs",
                  options=_LP_OPTIONS)
    if res.status != 0:
        raise EmbeddabilityError(f"representation LP failed: {res.message}")
    w, err = res.x[:J], float(res.x[-1])
    if smooth is not None and J > 2:
        cap = err + smooth
        # variables [w (J), s (J)] with s_j >= |w_j - w_{j+1}|
        Dm = np.eye(J) - np.roll(np.eye(J), 1, axis=1)
        Z = np.zeros((K, J))
        A2 = np.vstack([
            np.hstack([A, Z]), np.hstack([-A, Z]),
            np.hstack([Dm, -np.eye(J)]), np.hstack([-Dm, -np.eye(J)]),
        ])
        b2 = np.concatenate([np.full(K, 1 + cap), np.full(K, -(1 - cap)), np.zeros(2 * J)])
        c2 = np.concatenate([np.zeros(J), np.ones(J)])
        r2 = linprog(c2, A_ub=A2, b_ub=b2, bounds=[(0, None)] * (2 * J), method="highs", options=_LP_OPTIONS)
        if r2.status == 0:
            w = r2.x[:J]
            err = float(np.max(np.abs(A @ w - 1.0)))
    return np.maximum(w, 0.0), err


@dataclass
class LevyEmbedding:
    """``||(a, b)|| ~ sum_j weights_j |a cos(theta_j) + b sin(theta_j)|``."""

    space: NormedSpace
    thetas: np.ndarray
    weights: np.ndarray
    fit_error: float

    @property
    def grid(self) -> int:
        return len(self.thetas)

    def directions(self) -> np.ndarray:
        return np.column_stack([np.cos(self.thetas), np.sin(self.thetas)])

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.abs(x @ self.directions().T) @ self.weights

    def operator(self) -> np.ndarray:
        """Matrix of the map into ``uniform_l1(grid)``: ``x -> grid * w_j <theta_j, x>``."""
        return self.grid * self.weights[:, None] * self.directions()

    def distortion(self, samples: int = 10_000) -> float:
        phi = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        pts = np.column_stack([np.cos(phi), np.sin(phi)])
        r = self.evaluate(pts) / norm(self.space, pts)
        return float(r.max() / r.min())


def levy_embedding_2d(space: NormedSpace, grid: int = 64, tol: float = 1e-3, max_grid: int = 1024,
                      test_directions: int = 360) -> LevyEmbedding:
    """Nonnegative weights on an angle grid representing a 2-dimensional norm in L_1.

    The grid is doubled up to ``max_grid`` until the fit error over
    ``test_directions`` directions is at most ``tol``.
    """
    if space.dim != 2:
        raise EmbeddabilityError("levy_embedding_2d needs a 2-dimensional space")
    if grid < 64:
        raise EmbeddabilityError("grid must be at least 64")
    phi = np.linspace(0.0, 2 * np.pi, test_directions, endpoint=False)
    tests = np.column_stack([np.cos(phi), np.sin(phi)])
    g = grid
    while True:
        thetas = np.pi * np.arange(g) / g
        dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
        w, err = l1_representation(space, dirs, tests, smooth=tol / 10)
        if err <= tol:
            return LevyEmbedding(space, thetas, w, err)
        if g * 2 > max_grid:
            raise EmbeddabilityError("increase grid")
        g *= 2
