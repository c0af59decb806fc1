"""Finite-dimensional normed spaces: norms, duality, convexity modulus, sphere nets.

Three kinds are supported:

* ``lp``    -- the usual l_p^n norm, ``p`` in ``[1, inf]``;
* ``wl1``   -- weighted l_1, ``sum_c w_c |x_c|``.  Uniform weights ``1/N``
  model L_1[0, 1] discretized on ``N`` equal cells;
* ``wlinf`` -- weighted sup norm ``max_c |x_c| / w_c``, the dual of ``wl1``.

All functions accept batches: the last axis is the vector axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .rng import stream

__all__ = [
    "NormedSpace",
    "lp",
    "wl1",
    "uniform_l1",
    "parse_space",
    "norm",
    "dual_norm",
    "norming_functional",
    "attaining_vector",
    "random_unit",
    "ConvexityModulusEstimate",
    "uniform_convexity_modulus",
    "modulus_curve",
    "SphereNet",
    "sphere_net",
    "covering_radius",
    "norming_functionals",
    "NET_DIM_LIMIT",
]

NET_DIM_LIMIT = 6


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class NormedSpace:
    kind: str
    dim: int
    p: float = 1.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise SpaceError("dimension must be positive")
        if self.kind == "lp":
            if not (1.0 <= self.p <= math.inf) or math.isnan(self.p):
                raise SpaceError(f"p must lie in [1, inf], got {self.p}")
        elif self.kind in ("wl1", "wlinf"):
            if self.weights is None or len(self.weights) != self.dim:
                raise SpaceError("weights must have length dim")
            if any(not (w > 0) or not math.isfinite(w) for w in self.weights):
                raise SpaceError("weights must be positive and finite")
        else:
            raise SpaceError(f"unknown space kind {self.kind!r}")

    # -- classification used by the exact operator-norm routes
    @property
    def is_l1_type(self) -> bool:
        return self.kind == "wl1" or (self.kind == "lp" and self.p == 1.0)

    @property
    def is_linf_type(self) -> bool:
        return self.kind == "wlinf" or (self.kind == "lp" and self.p == math.inf)

    @property
    def is_hilbert(self) -> bool:
        return self.kind == "lp" and self.p == 2.0

    @property
    def w(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(self.dim)
        return np.asarray(self.weights, dtype=float)

    def dual(self) -> "NormedSpace":
        if self.kind == "lp":
            return NormedSpace("lp", self.dim, conjugate_exponent(self.p))
        if self.kind == "wl1":
            return NormedSpace("wlinf", self.dim, weights=self.weights)
        return NormedSpace("wl1", self.dim, weights=self.weights)

    def norm(self, x) -> np.ndarray | float:
        return norm(self, x)

    def __str__(self) -> str:
        return format_space(self)


def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


def lp(p: float, n: int) -> NormedSpace:
    return NormedSpace("lp", int(n), float(p))


def wl1(weights: Sequence[float]) -> NormedSpace:
    w = tuple(float(v) for v in weights)
    return NormedSpace("wl1", len(w), weights=w)


def uniform_l1(n_cells: int) -> NormedSpace:
    """L_1[0,1] discretized on ``n_cells`` equal cells."""
    return wl1([1.0 / n_cells] * n_cells)


def _parse_p(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "infinity", "oo"):
        return math.inf
    return float(t)


def parse_space(text: str) -> NormedSpace:
    """Parse ``lp:<p>:<n>`` (``inf`` allowed) or ``wl1:<w1,...,wN>``."""
    parts = text.strip().split(":")
    if parts[0] == "lp" and len(parts) == 3:
        return lp(_parse_p(parts[1]), int(parts[2]))
    if parts[0] in ("wl1", "wlinf") and len(parts) == 2:
        w = tuple(float(v) for v in parts[1].split(",") if v.strip())
        return NormedSpace(parts[0], len(w), weights=w)
    raise SpaceError(f"cannot parse space {text!r}")


def format_space(space: NormedSpace) -> str:
    if space.kind == "lp":
        p = "inf" if space.p == math.inf else f"{space.p:g}"
        return f"lp:{p}:{space.dim}"
    return f"{space.kind}:" + ",".join(f"{w:.17g}" for w in space.weights)


def _check(space: NormedSpace, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (space.dim,):
        raise SpaceError(f"expected vectors of length {space.dim}, got shape {x.shape}")
    return x


def norm(space: NormedSpace, x):
    x = _check(space, x)
    a = np.abs(x)
    if space.kind == "wl1":
        out = a @ space.w
    elif space.kind == "wlinf":
        out = np.max(a / space.w, axis=-1)
    elif space.p == 1.0:
        out = np.sum(a, axis=-1)
    elif space.p == math.inf:
        out = np.max(a, axis=-1)
    else:
        # scale by the max entry: no overflow or underflow
        m = np.max(a, axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        out = (m * np.sum((a / safe) ** space.p, axis=-1, keepdims=True) ** (1.0 / space.p))[..., 0]
    return float(out) if np.ndim(out) == 0 else out


def dual_norm(space: NormedSpace, f):
    return norm(space.dual(), f)


def norming_functional(space: NormedSpace, x, tol: float = 1e-9) -> np.ndarray:
    """Unit functional ``f`` in the dual with ``f(x) = 1`` for a unit vector ``x``.

    Tie-breaks are fixed: zero entries get sign ``+1`` for l_1-type spaces and
    the first coordinate attaining the max is used for sup-type spaces.
    """
    x = _check(space, x)
    if x.ndim != 1:
        raise SpaceError("norming_functional expects a single vector")
    nx = norm(space, x)
    if abs(nx - 1.0) > tol:
        raise SpaceError(f"norming_functional needs a unit vector, got norm {nx!r}")
    if space.is_l1_type:
        s = np.where(x < 0, -1.0, 1.0)
        return s * space.w if space.kind == "wl1" else s
    if space.is_linf_type:
        scaled = np.abs(x) / space.w
        j = int(np.argmax(scaled))
        f = np.zeros(space.dim)
        f[j] = (1.0 if x[j] >= 0 else -1.0) / space.w[j]
        return f
    p = space.p
    return np.sign(x) * np.abs(x) ** (p - 1.0)


def norming_functionals(space: NormedSpace, X) -> np.ndarray:
    """Row-wise ``norming_functional`` for a batch of unit vectors."""
    X = _check(space, X)
    if space.kind == "lp" and 1.0 < space.p < math.inf:
        return np.sign(X) * np.abs(X) ** (space.p - 1.0)
    return np.array([norming_functional(space, x, tol=1e-6) for x in np.atleast_2d(X)])


def attaining_vector(space: NormedSpace, f) -> np.ndarray:
    """Unit ``x`` in ``space`` with ``f(x) = ||f||_*`` (``f`` a nonzero dual vector)."""
    f = np.asarray(f, dtype=float)
    dsp = space.dual()
    nf = norm(dsp, f)
    if nf == 0:
        x = np.zeros(space.dim)
        x[0] = 1.0
        return x / norm(space, x)
    return norming_functional(dsp, f / nf, tol=1e-6)


def random_unit(space: NormedSpace, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    shape = (space.dim,) if size is None else (size, space.dim)
    g = rng.standard_normal(shape)
    n = norm(space, g)
    n = np.where(n > 0, n, 1.0) if size is not None else (n or 1.0)
    return g / (n[..., None] if size is not None else n)


# ---------------------------------------------------------------------------
# modulus of uniform convexity


@dataclass(frozen=True)
class ConvexityModulusEstimate:
    epsilon: float
    delta_hat: float
    method: str  # "closed-form-hilbert", "closed-form-lp" or "optimization"
    budget: int
    witness: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    @property
    def is_upper_estimate(self) -> bool:
        return not self.method.startswith("closed-form")


def _vertex_candidates(space: NormedSpace) -> np.ndarray:
    d = space.dim
    eye = np.eye(d)
    cands = [eye, -eye]
    if d <= NET_DIM_LIMIT:
        signs = np.array(np.meshgrid(*[[1.0, -1.0]] * d, indexing="ij")).reshape(d, -1).T
        cands.append(signs)
    c = np.vstack(cands)
    return c / norm(space, c)[:, None]


def _split_at_distance(space, a, b, eps, iters=60):
    """For rows ``a, b`` with ``||a-b|| >= eps`` find unit ``g`` on the normalized
    segment from ``a`` to ``b`` with ``||a - g|| >= eps`` as close to ``eps`` as
    bisection allows.  Rows whose segment meets the origin are dropped."""
    lo = np.zeros(len(a))
    hi = np.ones(len(a))

    def g_of(lam):
        c = (1.0 - lam)[:, None] * a + lam[:, None] * b
        nc = norm(space, c)
        return c / np.where(nc > 1e-12, nc, np.nan)[:, None]

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        d = norm(space, a - g_of(mid))
        ok = d >= eps
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    g = g_of(hi)
    keep = np.all(np.isfinite(g), axis=1) & (norm(space, np.nan_to_num(a - g)) >= eps)
    return g, keep


def _modulus_values(space, a, b, eps):
    d = norm(space, a - b)
    sel = d >= eps
    a, b = a[sel], b[sel]
    if len(a) == 0:
        return np.empty(0), a, a
    g, keep = _split_at_distance(space, a, b, eps)
    a, g = a[keep], g[keep]
    vals = 1.0 - norm(space, 0.5 * (a + g)) if len(a) else np.empty(0)
    return vals, a, g


def _lp_modulus(p: float, epsilon: float) -> float:
    """Exact modulus of convexity of l_p (dimension >= 2), from the two-point extremal configuration."""
    h = epsilon / 2.0
    if p >= 2.0:
        # 1 - (1 - h^p)^(1/p), written to keep precision for tiny h
        return -math.expm1(math.log1p(-h ** p) / p) if h < 1.0 else 1.0

    def gap(d):
        a = 1.0 - d
        return ((a + h) ** p + abs(a - h) ** p) / 2.0 - 1.0

    if gap(0.0) <= 0.0:
        return 0.0
    return float(brentq(gap, 0.0, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))


def uniform_convexity_modulus(space: NormedSpace, epsilon: float, budget: int = 10_000,
                              seed: int = 0, method: str = "auto") -> ConvexityModulusEstimate:
    """Estimate ``inf {1 - ||(f+g)/2|| : f, g in B, ||f-g|| >= epsilon}``.

    ``auto`` is exact for lp spaces with ``1 < p < inf`` and dimension >= 2
    (closed form).  ``search``, and every other space, gives an *upper*
    estimate of the infimum: every reported value is attained by an explicit
    feasible pair (the witness).  Candidates are vertex pairs of the unit
    ball, ``budget`` random pairs, and a local perturbation phase around the
    best pairs found.
    """
    if not (0.0 < epsilon <= 2.0):
        raise SpaceError("epsilon must lie in (0, 2]")
    if budget < 1:
        raise SpaceError("budget must be positive")
    if method not in ("auto", "search"):
        raise SpaceError(f"unknown modulus method {method!r}")
    if space.dim == 1:
        # only f = -g reaches distance > 0 on the sphere
        return ConvexityModulusEstimate(epsilon, 1.0, "optimization", budget, ((1.0,), (-1.0,)))
    if space.is_hilbert:
        val = 1.0 - math.sqrt(max(0.0, 1.0 - (epsilon / 2.0) ** 2))
        return ConvexityModulusEstimate(epsilon, val, "closed-form-hilbert", budget)
    if method == "auto" and space.kind == "lp" and 1.0 < space.p < math.inf:
        return ConvexityModulusEstimate(epsilon, _lp_modulus(space.p, epsilon), "closed-form-lp", budget)

    rng = stream(seed, 0x5EC0)
    best_val, best_pair = math.inf, None

    def absorb(vals, a, g):
        nonlocal best_val, best_pair
        if len(vals) == 0:
            return
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_pair = float(vals[i]), (a[i].copy(), g[i].copy())

    V = _vertex_candidates(space)
    ia, ib = np.meshgrid(np.arange(len(V)), np.arange(len(V)), indexing="ij")
    mask = ia.ravel() != ib.ravel()
    absorb(*_modulus_values(space, V[ia.ravel()[mask]], V[ib.ravel()[mask]], epsilon))

    n_global = max(1, (4 * budget) // 5)
    chunk = 20_000
    for start in range(0, n_global, chunk):
        size = min(chunk, n_global - start)
        absorb(*_modulus_values(space, random_unit(space, rng, size), random_unit(space, rng, size), epsilon))

    # local refinement around the incumbent
    n_local = budget - n_global
    scale = 0.2
    rounds = max(1, n_local // 256)
    per_round = max(1, n_local // rounds)
    for _ in range(rounds):
        if best_pair is None:
            break
        a0, g0 = best_pair
        a = a0 + scale * rng.standard_normal((per_round, space.dim))
        b = g0 + scale * rng.standard_normal((per_round, space.dim))
        a /= norm(space, a)[:, None]
        b /= norm(space, b)[:, None]
        old = best_val
        absorb(*_modulus_values(space, a, b, epsilon))
        if best_val >= old:
            scale *= 0.7
    if best_pair is None:
        raise SpaceError("no feasible pair found; increase budget")
    val = min(1.0, max(0.0, best_val))
    witness = (tuple(map(float, best_pair[0])), tuple(map(float, best_pair[1])))
    return ConvexityModulusEstimate(epsilon, val, "optimization", budget, witness)


def modulus_curve(space: NormedSpace, eps_grid: Sequence[float], budget: int = 10_000,
                  seed: int = 0) -> list[ConvexityModulusEstimate]:
    """Estimates on a shared grid, made nondecreasing.

    A pair feasible at a larger epsilon is feasible at every smaller one, so a
    suffix minimum keeps each value a valid upper estimate.
    """
    grid = sorted(float(e) for e in eps_grid)
    raw = [uniform_convexity_modulus(space, e, budget, seed) for e in grid]
    out: list[ConvexityModulusEstimate] = [None] * len(raw)  # type: ignore[list-item]
    best = raw[-1]
    for i in range(len(raw) - 1, -1, -1):
        if raw[i].delta_hat < best.delta_hat:
            best = raw[i]
        e = raw[i]
        if best is e:
            out[i] = e
        else:
            out[i] = ConvexityModulusEstimate(e.epsilon, best.delta_hat, e.method, e.budget, best.witness)
    return out


# ---------------------------------------------------------------------------
# sphere nets


@dataclass
class SphereNet:
    space: NormedSpace
    nu: float
    points: np.ndarray
    check_samples: int = 0
    check_radius: float = math.nan
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def covered(self) -> bool:
        return self.check_radius <= self.nu

    def __len__(self) -> int:
        return len(self.points)


def _lp_coordinates(space: NormedSpace, X: np.ndarray) -> tuple[np.ndarray, float]:
    """Rescale so the space's metric becomes a plain Minkowski metric."""
    if space.kind == "wl1":
        return X * space.w, 1.0
    if space.kind == "wlinf":
        return X / space.w, math.inf
    return X, space.p


def covering_radius(space: NormedSpace, points: np.ndarray, samples: np.ndarray) -> float:
    """Largest distance from a sample to its nearest net point."""
    P, q = _lp_coordinates(space, np.asarray(points, dtype=float))
    S, _ = _lp_coordinates(space, np.asarray(samples, dtype=float))
    d, _ = cKDTree(P).query(S, k=1, p=q)
    return float(np.max(d))


def _greedy_extend(space, pts, cand, nu, patience=None):
    """Add candidates farther than ``nu`` from every chosen point, in order.

    Returns the new point list and the number of trailing rejections.
    """
    pts = list(pts)
    P = np.array(pts) if pts else np.empty((0, space.dim))
    mind = norm(space, cand[:, None, :] - P[None, :, :]).min(axis=1) if len(P) else np.full(len(cand), np.inf)
    fails = 0
    for i in range(len(cand)):
        if mind[i] > nu:
            pts.append(cand[i])
            mind = np.minimum(mind, norm(space, cand - cand[i]))
            fails = 0
        else:
            fails += 1
            if patience is not None and fails >= patience:
                break
    return pts, fails


GRID_NET_LIMIT = 5_000_000


def _grid_net(space: NormedSpace, nu: float) -> np.ndarray:
    """Radial projection of a grid on the faces of the cube ``[-1, 1]^n``.

    A sphere point ``s`` lies on the ray through ``s / ||s||_inf``, which is
    within sup-distance ``h / 2`` of a grid point ``g`` on the same face; only
    ``n - 1`` coordinates differ, so ``||s/||s||_inf - g|| <= c h / 2`` with
    ``c = ||(1, .., 1)||`` over ``n - 1`` coordinates, and normalising at
    distance ``>= 1`` from the origin at most doubles this.  Spacing
    ``h = nu / c`` therefore gives a ``nu``-net.
    """
    if space.kind != "lp":
        raise SpaceError("grid nets are implemented for lp spaces only")
    n = space.dim
    if n == 1:
        return np.array([[1.0], [-1.0]])
    c = float(norm(lp(space.p, n - 1), np.ones(n - 1)))
    k = int(math.ceil(2.0 * c / nu))  # h = 2 / k <= nu / c
    count = 2 * n * (k + 1) ** (n - 1)
    if count > GRID_NET_LIMIT:
        raise SpaceError(f"net too large ({count} grid points); increase nu")
    ticks = np.linspace(-1.0, 1.0, k + 1)
    face = np.stack(np.meshgrid(*([ticks] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1)
    G = np.vstack([np.insert(face, axis, sign, axis=1) for axis in range(n) for sign in (1.0, -1.0)])
    return G / norm(space, G)[:, None]


def sphere_net(space: NormedSpace, nu: float, budget: int = 2000, seed: int = 0,
               check_samples: int = 10_000, seed_points: np.ndarray | None = None,
               max_rounds: int = 6, method: str = "auto") -> SphereNet:
    """``nu``-net of the unit sphere.

    ``greedy``: starts from ``seed_points`` (if any) and ``e_1``; keeps adding
    sampled unit vectors farther than ``nu`` from the net until ``budget``
    consecutive samples are rejected.  The net is then checked against
    ``check_samples`` fresh samples; uncovered ones are added and the check is
    repeated.  ``grid``: the seed points plus a projected cube-face grid whose
    spacing guarantees the covering radius (still checked by sampling).
    ``auto`` uses the grid for lp spaces when ``nu < 0.05``.
    """
    if not nu > 0:
        raise SpaceError("nu must be positive")
    if space.dim > NET_DIM_LIMIT:
        raise SpaceError("net dimension limit")
    if budget < 1:
        raise SpaceError("budget must be positive")
    if method == "auto":
        method = "grid" if (nu < 0.05 and space.kind == "lp") else "greedy"
    if method not in ("greedy", "grid"):
        raise SpaceError(f"unknown net method {method!r}")
    rng = stream(seed, 0x4E57)
    init = [] if seed_points is None else [np.asarray(p, float) / norm(space, p) for p in seed_points]
    if method == "grid":
        G = _grid_net(space, nu)
        P = np.vstack([np.array(init).reshape(-1, space.dim), G])
        samples = random_unit(space, rng, check_samples)
        radius = covering_radius(space, P, samples)
        return SphereNet(space, float(nu), P, check_samples, radius, seed, {"method": "grid"})

    e1 = np.zeros(space.dim)
    e1[0] = 1.0
    e1 /= norm(space, e1)
    pts, _ = _greedy_extend(space, [], np.array(init + [e1]), nu)

    fails = 0
    while fails < budget:
        cand = random_unit(space, rng, 4096)
        before = len(pts)
        pts, trailing = _greedy_extend(space, pts, cand, nu, patience=budget - fails)
        fails = trailing if len(pts) > before else fails + trailing

    radius = math.nan
    for _ in range(max_rounds):
        samples = random_unit(space, rng, check_samples)
        P = np.array(pts)
        radius = covering_radius(space, P, samples)
        if radius <= nu:
            break
        pts, _ = _greedy_extend(space, pts, samples, nu)
    P = np.array(pts)
    if len(P) != len(samples) and radius > nu:
        # points were added in the last round: the recorded radius is for the old net
        radius = covering_radius(space, P, random_unit(space, rng, check_samples))
    return SphereNet(space, float(nu), P, check_samples, radius, seed, {"method": "greedy"})
