"""Constructive witnesses for octahedrality, each with a verifier.

Operators are matrices of shape ``(codomain dim, domain dim)``.  Every
verifier recomputes the relevant norms exactly (sign enumeration for
l_1-type codomains, cutting planes for projective norms) and compares them
with the bound the construction is meant to reach.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream
from .search import pattern_ascent
from .spaces import (NormedSpace, attaining_vector, lp, norm, norming_functional, random_unit,
                     uniform_l1, wl1)
from .tensor_norms import NormError, Tensor, injective_norm, operator_norm, pairing, projective_norm

__all__ = [
    "WitnessError",
    "ShiftWitnessSpec",
    "ShiftReport",
    "shift_witness",
    "IntervalWitnessSpec",
    "IntervalReport",
    "interval_witness",
    "coordinate_embedding",
    "sup_alt_witness",
    "alt_values",
    "RankOneReport",
    "rank_one_witness_search",
    "Oplus1Extension",
    "oplus1_extension",
    "pad_rows",
    "exact_l1_norm",
    "psi_distortion",
]

UNIT_TOL = 1e-6


class WitnessError(ValueError):
    pass


def exact_l1_norm(A, dom: NormedSpace, cod: NormedSpace) -> float:
    """Operator norm into an l_1-type codomain by forced sign enumeration."""
    if not cod.is_l1_type:
        raise WitnessError("exact_l1_norm needs an l_1-type codomain")
    return operator_norm(A, dom, cod, exact=True, method="arrangement").value


def pad_rows(A, rows: int) -> np.ndarray:
    """Zero-pad an operator into a larger l_1 codomain (an isometric re-embedding)."""
    A = np.asarray(A, dtype=float)
    if rows < A.shape[0]:
        raise WitnessError("cannot pad to fewer rows")
    out = np.zeros((rows, A.shape[1]))
    out[:A.shape[0]] = A
    return out


def _check_unit_ops(T_list, dom, cod):
    if not T_list:
        raise WitnessError("empty operator family")
    ops = []
    for i, T in enumerate(T_list):
        T = np.asarray(T, dtype=float)
        if T.shape != (cod.dim, dom.dim):
            raise WitnessError(f"operator {i} has shape {T.shape}, expected {(cod.dim, dom.dim)}")
        cert = operator_norm(T, dom, cod, exact=True)
        if abs(cert.value - 1.0) > UNIT_TOL:
            raise WitnessError(f"operator {i} has norm {cert.value!r}, expected 1")
        ops.append((T, cert.witness_primal))
    return ops


def _tail_index(vectors: list[np.ndarray], weights: np.ndarray, eps: float) -> int:
    """Least ``k`` with ``sum_{c >= k} |v_c| w_c < eps`` for every vector."""
    k = 0
    for v in vectors:
        tails = np.concatenate([np.cumsum((np.abs(v) * weights)[::-1])[::-1], [0.0]])
        k = max(k, int(np.flatnonzero(tails < eps)[0]))
    return k


# ---------------------------------------------------------------------------
# shift witness


def psi_distortion(psi, dom: NormedSpace, samples: int = 2000, seed: int = 0) -> tuple[float, float]:
    """Range ``(lo, hi)`` of ``||psi x||_1`` over sampled unit ``x`` (plus signed basis)."""
    psi = np.asarray(psi, dtype=float)
    rng = stream(seed, 0x5A)
    E = np.eye(dom.dim)
    pts = np.vstack([E, -E, random_unit(dom, rng, samples)])
    pts = pts / norm(dom, pts)[:, None]
    r = np.sum(np.abs(pts @ psi.T), axis=1)
    return float(r.min()), float(r.max())


@dataclass
class ShiftWitnessSpec:
    psi: np.ndarray
    distortion: tuple[float, float]
    k: int
    output_dim: int


@dataclass
class ShiftReport:
    spec: ShiftWitnessSpec
    epsilon: float
    values: list[float]
    bound: float
    norms_exact: bool = True

    @property
    def min_value(self) -> float:
        return min(self.values)

    @property
    def passed(self) -> bool:
        return self.min_value >= self.bound - 1e-12


def shift_witness(T_list, dom: NormedSpace, psi, epsilon: float, k: int | None = None,
                  codomain_budget: int | None = None):
    """Shift witness ``S = phi_k o P_k o psi`` for norm-one ``T_i : dom -> l_1^m``.

    ``x_i`` are norming vectors of the ``T_i``.  ``k`` is the least index past
    which every ``T_i x_i`` and every ``psi x_i`` carries mass below
    ``epsilon``; ``psi`` is truncated to its first ``k`` outputs and shifted
    onto coordinates ``k+1, ...``.  All operators live in ``l_1^{max(m, k+d)}``
    (zero-padded).  Returns ``(S, report)``; the report holds the exact norms
    ``||T_i + S||`` and the bound ``2 - 5 epsilon``.
    """
    if not 0 < epsilon < 1:
        raise WitnessError("epsilon must lie in (0, 1)")
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[1] != dom.dim:
        raise WitnessError("psi must be a (d, dim X) matrix")
    m = np.asarray(T_list[0]).shape[0] if T_list else 0
    ops = _check_unit_ops(T_list, dom, lp(1, m))
    lo, hi = psi_distortion(psi, dom)
    if not (lo > 0 and hi / lo <= 1 + epsilon + 1e-12):
        raise WitnessError(f"psi distortion {hi / lo if lo > 0 else math.inf!r} exceeds 1 + epsilon")
    d = psi.shape[0]
    images = [T @ x for T, x in ops]
    need = _tail_index(images, np.ones(m), epsilon)
    need = max(need, _tail_index([psi @ x for _, x in ops], np.ones(d), epsilon), 1)
    if k is None:
        k = need
    elif k < need:
        raise WitnessError(f"k = {k} leaves tail mass >= epsilon (need k >= {need})")
    kept = min(k, d)
    out_dim = max(m, k + kept)
    if codomain_budget is not None and out_dim > codomain_budget:
        raise WitnessError(f"increase codomain budget (need {out_dim}, have {codomain_budget})")
    S = np.zeros((out_dim, dom.dim))
    S[k:k + kept] = psi[:kept]
    cod = lp(1, out_dim)
    values = [exact_l1_norm(pad_rows(T, out_dim) + S, dom, cod) for T, _ in ops]
    spec = ShiftWitnessSpec(psi, (lo, hi), k, out_dim)
    return S, ShiftReport(spec, epsilon, values, 2 - 5 * epsilon)


# ---------------------------------------------------------------------------
# interval witness on the discretised L_1


def coordinate_embedding(d: int, N: int) -> np.ndarray:
    """Isometry ``l_1^d -> uniform_l1(N)``: ``e_j`` spread evenly over the j-th block."""
    if N % d:
        raise WitnessError("N must be a multiple of d")
    b = N // d
    T0 = np.zeros((N, d))
    for j in range(d):
        T0[j * b:(j + 1) * b, j] = N / b
    return T0


@dataclass
class IntervalWitnessSpec:
    grid_N: int
    I: tuple[int, int]
    phi_slope: float
    refined: bool
    output_cells: int


@dataclass
class IntervalReport:
    spec: IntervalWitnessSpec
    epsilon: float
    tail_masses: list[float]
    values: list[float]
    bound: float

    @property
    def min_value(self) -> float:
        return min(self.values)

    @property
    def passed(self) -> bool:
        return self.min_value >= self.bound - 1e-12


def _refine(A: np.ndarray, r: int) -> np.ndarray:
    """Split every cell into ``r`` equal cells (isometric on the uniform grid)."""
    return np.repeat(A, r, axis=0)


def interval_witness(T_list, dom: NormedSpace, T0, epsilon: float, N: int | None = None):
    """Interval witness ``G = S_I o T0`` for norm-one ``T_i : dom -> uniform_l1(N)``.

    ``I`` is the largest dyadic suffix of the grid on which every ``T_i x_i``
    has mass below ``epsilon / 2``.  ``S_I`` compresses the grid affinely onto
    ``I`` with density ``phi' = N / |I|``.  When the columns of ``T0`` are
    constant on blocks of ``phi'`` cells this is block averaging on the
    original grid; otherwise the grid is refined ``phi'`` times (cells copied,
    an isometry) so the compression stays exact.  Returns ``(G, report)``
    with ``G`` and the refined ``T_i`` sharing the output grid.
    """
    if not 0 < epsilon < 1:
        raise WitnessError("epsilon must lie in (0, 1)")
    T0 = np.asarray(T0, dtype=float)
    N = T0.shape[0] if N is None else N
    if N < 2 or N & (N - 1):
        raise WitnessError("N must be a power of two >= 2")
    if T0.shape != (N, dom.dim):
        raise WitnessError(f"T0 must have shape {(N, dom.dim)}")
    cod = uniform_l1(N)
    lo, hi = psi_distortion(T0 / N, dom)
    if abs(lo - 1) > 1e-6 or abs(hi - 1) > 1e-6:
        raise WitnessError(f"T0 is not an isometry (norm range [{lo!r}, {hi!r}])")
    ops = _check_unit_ops(T_list, dom, cod)
    images = [T @ x for T, x in ops]
    size, best = N // 2, None
    while size >= 1:
        masses = [float(np.sum(np.abs(v[N - size:])) / N) for v in images]
        if max(masses) < epsilon / 2:
            best = (size, masses)
            break
        size //= 2
    if best is None:
        raise WitnessError("no dyadic suffix satisfies the tail rule")
    size, masses = best
    r = N // size
    start = N - size
    blocks_const = np.all(T0.reshape(size, r, dom.dim) == T0.reshape(size, r, dom.dim)[:, :1, :])
    if blocks_const:
        G = np.zeros((N, dom.dim))
        G[start:] = r * T0.reshape(size, r, dom.dim).mean(axis=1)
        out = N
        ops_out = [T for T, _ in ops]
    else:
        out = N * r
        G = np.zeros((out, dom.dim))
        G[start * r:] = r * T0
        ops_out = [_refine(T, r) for T, _ in ops]
    out_cod = uniform_l1(out)
    values = [exact_l1_norm(T + G, dom, out_cod) for T in ops_out]
    spec = IntervalWitnessSpec(N, (start + 1, N), float(r), not blocks_const, out)
    return G, IntervalReport(spec, epsilon, masses, values, 2 - 2 * epsilon)


# ---------------------------------------------------------------------------
# sup-norm alternative witness


def alt_values(space: NormedSpace, family, y) -> np.ndarray:
    F = np.atleast_2d(np.asarray(family, dtype=float))
    y = np.asarray(y, dtype=float)
    return np.maximum(norm(space, F + y), norm(space, F - y))


def sup_alt_witness(family) -> np.ndarray:
    """``y = sum_j sigma_j e_{i_j}`` over the coordinates where the family members
    attain their sup norm (first max, sign of the first member using it)."""
    F = np.atleast_2d(np.asarray(family, dtype=float))
    if F.ndim != 2 or F.shape[0] == 0:
        raise WitnessError("family must be a nonempty list of vectors")
    y = np.zeros(F.shape[1])
    for x in F:
        j = int(np.argmax(np.abs(x)))
        if y[j] == 0:
            y[j] = 1.0 if x[j] >= 0 else -1.0
    return y


# ---------------------------------------------------------------------------
# rank-one witness search in X (x)_eps Y


@dataclass
class RankOneReport:
    w: np.ndarray
    z: np.ndarray
    values: list[float]
    stage1: float
    source: str
    evaluations: int
    label: str = "search result"

    @property
    def min_value(self) -> float:
        return min(self.values)

    @property
    def epsilon_equiv(self) -> float:
        """``epsilon`` with ``stage1 = 1 - epsilon``; ``stage1`` is the smaller of
        ``min_i ||v_i + s_i w|| - 1`` and ``min_i |g_i(z)|`` at the returned pair."""
        return 1.0 - self.stage1

    @property
    def bound(self) -> float:
        return 2 - 5 * self.epsilon_equiv

    @property
    def passed(self) -> bool:
        return self.min_value >= self.bound - 1e-9


def _signed_basis(space: NormedSpace) -> np.ndarray:
    E = np.eye(space.dim)
    B = np.vstack([E, -E])
    return B / norm(space, B)[:, None]


def _unit_family(T_list) -> list[Tensor]:
    if not T_list:
        raise WitnessError("empty tensor family")
    X, Y = T_list[0].X, T_list[0].Y
    for i, T in enumerate(T_list):
        if T.X != X or T.Y != Y:
            raise WitnessError("family members live in different tensor spaces")
        v = injective_norm(T).value
        if abs(v - 1) > UNIT_TOL:
            raise WitnessError(f"tensor {i} has injective norm {v!r}, expected 1")
    return list(T_list)


def rank_one_witness_search(T_list, starts: int = 8, seed: int = 0, grid: float = 1e-3,
                            max_evals: int = 4000):
    """Search ``S = w (x) z`` maximising ``min_i ||T_i + S||_eps``.

    Stage 1: with ``(f_i, g_i)`` norming pairs of the ``T_i`` put
    ``v_i = T_i g_i`` (unit in X); for sup-type X take ``w = sup_alt_witness(v_i)``,
    otherwise try the signed basis of X and the ``v_i``.  Stage 2: for each ``w``
    evaluate sphere candidates ``z`` (signed basis of Y, vectors normed by
    ``+-g_i``, seeded random points), then pattern-search ascent from the best.
    Returns ``((w, z), report)``.
    """
    fam = _unit_family(T_list)
    X, Y = fam[0].X, fam[0].Y
    certs = [injective_norm(T) for T in fam]
    vs = []
    for T, c in zip(fam, certs):
        v = T.coeffs @ c.witness_dual
        vs.append(v / norm(X, v))
    ws: list[tuple[np.ndarray, str]] = []
    if X.is_linf_type and X.kind == "lp":
        w = sup_alt_witness(vs)
        ws.append((w / norm(X, w), "sup-alt"))
    else:
        ws.extend((v, "image") for v in vs)
    ws.extend((b, "basis") for b in _signed_basis(X))
    if X.is_linf_type and X.kind == "lp" and X.dim <= 6:
        # extreme points of the sup ball; a sign vector and its negative give the same S family
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=X.dim - 1)))
        ws.extend((np.concatenate([[1.0], s]), "extreme") for s in signs)

    rng = stream(seed, 0x12)
    zc = [*_signed_basis(Y)]
    for c in certs:
        g = c.witness_dual
        zc.extend([attaining_vector(Y, g), attaining_vector(Y, -g)])
    zc.extend(random_unit(Y, rng, starts))
    coeffs = [T.coeffs for T in fam]
    evals = 0

    def objective(w, z):
        nonlocal evals
        evals += 1
        S = np.outer(w, z)
        return min(injective_norm(Tensor(X, Y, c + S)).value for c in coeffs)

    scored = []
    for j, (w, tag) in enumerate(ws):
        for q, z in enumerate(zc):
            scored.append((-objective(w, z), j, q))
    scored.sort()
    val, w, z, tag = -scored[0][0], ws[scored[0][1]][0], zc[scored[0][2]], ws[scored[0][1]][1]
    dx = X.dim

    def joint(v):
        return objective(v[:dx], v[dx:])

    def project(v):
        return np.concatenate([v[:dx] / norm(X, v[:dx]), v[dx:] / norm(Y, v[dx:])])

    # joint ascent over (w, z) from the best few candidate pairs
    for _, j, q in scored[:3]:
        if evals >= max_evals or val >= 2 - 1e-12:
            break
        v, cand, _ = pattern_ascent(joint, np.concatenate([ws[j][0], zc[q]]), project,
                                    grid=grid, max_evals=max_evals - evals)
        if cand > val + 1e-12:
            val, w, z, tag = cand, v[:dx], v[dx:], ws[j][1]
    values = [injective_norm(Tensor(X, Y, c + np.outer(w, z))).value for c in coeffs]
    # ||T_i + w(x)z|| >= ||v_i + g_i(z) w|| >= ||v_i + s_i w|| - (1 - |g_i(z)|),  s_i = sign g_i(z)
    gz = np.array([float(c.witness_dual @ z) for c in certs])
    signed = norm(X, np.array(vs) + np.where(gz < 0, -1.0, 1.0)[:, None] * w)
    stage1 = float(min(np.min(signed) - 1.0, np.min(np.abs(gz))))
    return (w, z), RankOneReport(w, z, values, stage1, tag, evals)


# ---------------------------------------------------------------------------
# adjoining an l_1 coordinate


@dataclass
class Oplus1Extension:
    base_dim: int
    y: np.ndarray
    y_star: np.ndarray
    T_bar: np.ndarray
    norm_z: float
    norm_sum: float
    pairing_lower: float
    triangle_upper: float
    T_bar_norm: float
    exact: bool
    tol: float
    info: dict = field(default_factory=dict)

    @property
    def witness_index(self) -> int:
        return self.base_dim + 1

    @property
    def additivity_error(self) -> float:
        return abs(self.norm_sum - (self.norm_z + 1.0))

    @property
    def passed(self) -> bool:
        return (self.T_bar_norm <= 1 + 1e-9 and self.pairing_lower <= self.norm_sum + self.tol
                and self.norm_sum <= self.triangle_upper + self.tol and self.additivity_error <= 10 * self.tol)


def oplus1_extension(z: Tensor, y, tol: float = 1e-7):
    """Adjoin ``e_{m+1}`` to ``z in l_1^m (x)_pi Y`` and check ``||z + e_{m+1} (x) y|| = ||z|| + 1``.

    The lower bound pairs ``z + v`` with ``T_bar = [T; y*]``, where ``T`` is the
    optimal dual operator for ``z`` and ``y*`` norms ``y``; the upper bound is
    the triangle inequality.  Returns ``(v, report)``.
    """
    X, Y = z.X, z.Y
    if not (X.kind == "lp" and X.p == 1.0):
        raise WitnessError("z must live in lp(1, m) (x) Y")
    y = np.asarray(y, dtype=float)
    if abs(norm(Y, y) - 1) > 1e-8:
        raise WitnessError("y must be a unit vector")
    m = X.dim
    Xp = lp(1, m + 1)
    y_star = norming_functional(Y, y, tol=1e-8)
    cz = projective_norm(z, tol=tol)
    T = cz.witness_dual if cz.witness_dual is not None else np.zeros((m, Y.dim))
    T_bar = np.vstack([T, y_star])
    zc = np.vstack([z.coeffs, np.zeros((1, Y.dim))])
    v = Tensor(Xp, Y, np.vstack([np.zeros((m, Y.dim)), y]))
    total = Tensor(Xp, Y, zc + v.coeffs)
    cs = projective_norm(total, tol=tol)
    # rows of T_bar are functionals on Y; l_1 domain so the norm is the largest row norm
    Tn = float(np.max(norm(Y.dual(), T_bar)))
    low = pairing(T_bar, total) / max(Tn, 1.0)
    up = cz.upper + 1.0
    rep = Oplus1Extension(m, y, y_star, T_bar, cz.value, cs.value, low, up, Tn,
                          cz.exact and cs.exact, tol,
                          {"cuts_z": cz.info.get("cuts", 0), "cuts_sum": cs.info.get("cuts", 0)})
    return v, rep
