"""Octahedrality defects of finite families.

For unit ``x_1..x_k`` the defect is ``sup_{||y|| = 1} min_i ||x_i + y||``
(``mode="octa"``) or ``sup_y min_i max(||x_i + y||, ||x_i - y||)``
(``mode="alt"``).  Both are estimated from below: the best value over a
candidate pool (constructive witnesses, signed basis elements, seeded random
points) refined by pattern-search ascent.  Nothing here certifies an upper
bound; see ``embeddability`` for that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddability import l1_representation
from .rng import stream
from .search import pattern_ascent
from .spaces import NormedSpace, attaining_vector, conjugate_exponent, lp, norm, random_unit
from .tensor_norms import Tensor, injective_norm, projective_norm, zonotope_points
from .witnesses import rank_one_witness_search, sup_alt_witness

__all__ = [
    "DefectError",
    "TensorSpace",
    "DefectConfig",
    "DefectReport",
    "family_defect",
    "alt_family_defect",
    "DichotomyRow",
    "dichotomy_scan",
    "random_tensor_family",
    "witness_kind",
    "certificate_defect",
    "structured_family_values",
]

UNIT_TOL = 1e-8
LABEL = "lower-bound estimate"


class DefectError(ValueError):
    pass


@dataclass(frozen=True)
class TensorSpace:
    """``X (x)_eps Y`` (``kind="eps"``) or ``X (x)_pi Y`` (``kind="pi"``)."""

    X: NormedSpace
    Y: NormedSpace
    kind: str = "eps"

    def __post_init__(self):
        if self.kind not in ("eps", "pi"):
            raise DefectError(f"unknown tensor norm {self.kind!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.X.dim, self.Y.dim)

    def norm(self, c: np.ndarray) -> float:
        u = Tensor(self.X, self.Y, c)
        if self.kind == "eps":
            return injective_norm(u).value
        return projective_norm(u).value

    def __str__(self) -> str:
        return f"{self.X} (x)_{self.kind} {self.Y}"


@dataclass
class DefectConfig:
    starts: int = 8
    grid: float = 1e-3
    seed: int = 0
    refine: int = 1
    max_evals: int = 20_000
    ascent: bool = True
    witnesses: bool = True


@dataclass
class DefectReport:
    family: list
    defect: float
    witness: object
    mode: str
    seed: int
    starts: int
    grid: float
    source: str
    values: list[float]
    evaluations: int
    label: str = LABEL
    provenance: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# objectives


class _Ambient:
    """Uniform interface over vector and tensor spaces (points are flat arrays)."""

    def __init__(self, space, family):
        self.space = space
        self.tensor = isinstance(space, TensorSpace)
        if self.tensor:
            self.shape = space.shape
            mats = []
            for u in family:
                c = u.coeffs if isinstance(u, Tensor) else np.asarray(u, dtype=float)
                if isinstance(u, Tensor) and (u.X != space.X or u.Y != space.Y):
                    raise DefectError("family member lives in a different tensor space")
                if c.shape != self.shape:
                    raise DefectError(f"family member has shape {c.shape}, expected {self.shape}")
                mats.append(c)
            self.F = np.array([c.ravel() for c in mats])
        else:
            self.shape = (space.dim,)
            self.F = np.atleast_2d(np.asarray(family, dtype=float))
            if self.F.shape[1] != space.dim:
                raise DefectError(f"family vectors must have length {space.dim}")
        self.evals = 0

    def norms(self, P: np.ndarray) -> np.ndarray:
        """Norms of the rows of ``P``."""
        if not self.tensor:
            return norm(self.space, P)
        return np.array([self.space.norm(p.reshape(self.shape)) for p in P])

    def project(self, y: np.ndarray) -> np.ndarray:
        n = self.norms(y[None, :])[0]
        if n == 0:
            y = np.zeros_like(y)
            y[0] = 1.0
            n = self.norms(y[None, :])[0]
        return y / n

    def values(self, y: np.ndarray, mode: str) -> np.ndarray:
        self.evals += 1
        plus = self.norms(self.F + y)
        if mode == "octa":
            return plus
        return np.maximum(plus, self.norms(self.F - y))

    def objective(self, y: np.ndarray, mode: str) -> float:
        return float(np.min(self.values(y, mode)))

    def wrap(self, y):
        if self.tensor:
            return Tensor(self.space.X, self.space.Y, y.reshape(self.shape))
        return y


# ---------------------------------------------------------------------------
# candidate pools


def _signed_basis(space: NormedSpace) -> np.ndarray:
    E = np.eye(space.dim)
    B = np.vstack([E, -E])
    return B / norm(space, B)[:, None]


def _vector_candidates(amb: _Ambient, mode: str) -> list[tuple[np.ndarray, str]]:
    space: NormedSpace = amb.space
    F = amb.F
    out: list[tuple[np.ndarray, str]] = []
    if space.is_linf_type and space.kind == "lp":
        y = sup_alt_witness(F)
        out.append((y / norm(space, y), "sup-alt"))
    if space.is_l1_type:
        load = np.abs(F).sum(axis=0) * space.w
        j = int(np.argmin(load))
        y = np.zeros(space.dim)
        y[j] = 1.0 / space.w[j]
        out.append((y, "coordinate"))
    out.extend((b, "basis") for b in _signed_basis(space))
    combos = [F, -F]
    for a in range(len(F)):
        for b in range(a + 1, len(F)):
            combos.extend([(F[a] + F[b])[None], (F[a] - F[b])[None], (-F[a] - F[b])[None], (F[b] - F[a])[None]])
    C = np.vstack(combos)
    nc = norm(space, C)
    out.extend((c / n, "combination") for c, n in zip(C, nc) if n > 1e-12)
    return out


def _shift_rows(Y: NormedSpace, d_max: int, seed: int) -> list[np.ndarray]:
    """Row sets ``psi_j in Y`` with ``sum_j |<psi_j, g>| ~ ||g||_{Y*}``: approximate
    l_1-representations of the dual norm, one per row count up to ``d_max``."""
    n = Y.dim
    Ystar = Y.dual()
    if Ystar.is_l1_type:
        rows = np.eye(n) * (Ystar.w[:, None] if Ystar.kind == "wl1" else 1.0)
        return [rows] if n <= d_max else []
    rng = stream(seed, 0x5F)
    dirs = [np.eye(n)]
    for a in range(n):
        for b in range(a + 1, n):
            for s in (1.0, -1.0):
                v = np.zeros(n)
                v[a], v[b] = 1.0, s
                dirs.append(v[None])
    dirs.append(np.array(_sign_vectors(n)))
    D = np.vstack(dirs)
    D = D / np.linalg.norm(D, axis=1)[:, None]
    tests = np.vstack([np.eye(n), random_unit(Ystar, rng, 300)])
    w, _ = l1_representation(Ystar, D, tests)
    rank = np.argsort(-w, kind="stable")
    out = []
    for d in range(1, min(d_max, len(D)) + 1):
        keep = np.sort(rank[:d])
        wd, _ = l1_representation(Ystar, D[keep], tests)
        if np.any(wd > 1e-9):
            out.append(wd[:, None] * D[keep])
    return out


def _sign_vectors(n: int) -> list[list[float]]:
    out = []
    for k in range(1 << (n - 1)):
        out.append([1.0] + [(-1.0 if (k >> b) & 1 else 1.0) for b in range(n - 1)])
    return out


def _tensor_candidates(amb: _Ambient, family_t: list[Tensor], mode: str, seed: int) -> list[tuple[np.ndarray, str]]:
    ts: TensorSpace = amb.space
    X, Y = ts.X, ts.Y
    m, n = ts.shape
    out: list[tuple[np.ndarray, str]] = []
    if ts.kind == "eps" and X.is_l1_type:
        certs = [injective_norm(u) for u in family_t]
        gs = [c.witness_dual for c in certs]
        vs = [u.coeffs @ g for u, g in zip(family_t, gs)]
        load = np.sum(np.abs(vs), axis=0) * X.w
        order = np.argsort(load, kind="stable")
        # coordinate pick on the least-loaded output coordinate
        j = int(order[0])
        phis = list(_signed_basis(Y))
        for g in gs:
            phis.extend([attaining_vector(Y, g), attaining_vector(Y, -g)])
        for phi in phis:
            c = np.zeros((m, n))
            c[j] = phi / X.w[j]
            out.append((c.ravel(), "rank-one"))
        # shift: an l_1 representation of Y* placed on the least-loaded coordinates
        free = max(1, m // 2)
        for rows in _shift_rows(Y, free, seed):
            c = np.zeros((m, n))
            slots = np.sort(order[:len(rows)])
            c[slots] = rows / X.w[slots, None]
            out.append((c.ravel(), "shift"))
    if ts.kind == "eps" and X.is_linf_type and X.kind == "lp" and m * n <= 16:
        (w, z), _ = rank_one_witness_search(family_t, starts=2, seed=seed, max_evals=200)
        out.append((np.outer(w, z).ravel(), "rank-one"))
    bx, by = _signed_basis(X), _signed_basis(Y)
    for i in range(m):
        for j in range(n):
            for s in (1.0, -1.0):
                out.append((np.outer(s * bx[i], by[j]).ravel(), "basis"))
    return out


def _normalize_family(amb: _Ambient):
    if len(amb.F) == 0:
        raise DefectError("empty family")
    nf = amb.norms(amb.F)
    bad = np.flatnonzero(np.abs(nf - 1.0) > UNIT_TOL)
    if len(bad):
        raise DefectError(f"family member {int(bad[0])} is not a unit vector (norm {nf[bad[0]]!r})")


# ---------------------------------------------------------------------------
# the estimator


def _defect(space, family, mode: str, cfg: DefectConfig | None, candidates) -> DefectReport:
    cfg = cfg or DefectConfig()
    if cfg.starts < 0 or not cfg.grid > 0:
        raise DefectError("starts must be >= 0 and grid > 0")
    family = list(family)
    if not family:
        raise DefectError("empty family")
    amb = _Ambient(space, family)
    _normalize_family(amb)
    pool: list[tuple[np.ndarray, str]] = []
    if cfg.witnesses:
        if amb.tensor:
            fam_t = [Tensor(space.X, space.Y, f.reshape(amb.shape)) for f in amb.F]
            pool.extend(_tensor_candidates(amb, fam_t, mode, cfg.seed))
        else:
            pool.extend(_vector_candidates(amb, mode))
    elif not amb.tensor:
        pool.extend((b, "basis") for b in _signed_basis(space))
    for c in candidates or []:
        y = c.coeffs if isinstance(c, Tensor) else np.asarray(c, dtype=float)
        pool.append((y.ravel(), "supplied"))
    rng = stream(cfg.seed, 0xDEF)
    for _ in range(cfg.starts):
        g = rng.standard_normal(amb.F.shape[1])
        pool.append((g, "random"))

    scored = []
    for y, tag in pool:
        y = amb.project(y)
        scored.append((amb.objective(y, mode), y, tag))

    def key(t):
        return (-t[0], tuple(np.round(t[1], 12)))

    if cfg.ascent:
        scored.sort(key=key)
        seeds = scored[:cfg.refine] + [t for t in scored[cfg.refine:] if t[2] == "random"]
        for val, y, tag in seeds:
            if val >= 2 - 1e-12:
                continue
            y2, v2, _ = pattern_ascent(lambda z: amb.objective(z, mode), y, amb.project, grid=cfg.grid,
                                       max_evals=cfg.max_evals)
            if v2 > val:
                scored.append((v2, y2, tag))
    scored.sort(key=key)
    best_val, best_y, best_tag = scored[0]
    values = [float(v) for v in amb.values(best_y, mode)]
    defect = min(values)
    return DefectReport(
        family=family, defect=defect, witness=amb.wrap(best_y), mode=mode, seed=cfg.seed, starts=cfg.starts,
        grid=cfg.grid, source=best_tag, values=values, evaluations=amb.evals,
        provenance={"pool": len(pool), "space": str(space)})


def family_defect(space, family: Sequence, cfg: DefectConfig | None = None, candidates=None) -> DefectReport:
    """Estimate ``sup_{||y||=1} min_i ||x_i + y||`` from below.

    ``space`` is a ``NormedSpace`` (family of vectors) or a ``TensorSpace``
    (family of ``Tensor`` or coefficient matrices).  ``candidates`` adds
    caller-supplied witnesses to the pool.
    """
    return _defect(space, family, "octa", cfg, candidates)


def alt_family_defect(space, family: Sequence, cfg: DefectConfig | None = None, candidates=None) -> DefectReport:
    """Estimate ``sup_{||y||=1} min_i max(||x_i + y||, ||x_i - y||)`` from below."""
    return _defect(space, family, "alt", cfg, candidates)


# ---------------------------------------------------------------------------
# dichotomy scan


def witness_kind(source: str) -> str:
    if source == "shift":
        return "shift"
    if source in ("rank-one", "basis", "coordinate"):
        return "rank-one"
    return "generic"


ROW_DECAY = 0.8


def random_tensor_family(X: NormedSpace, Y: NormedSpace, k: int, seed: int, index: int = 0,
                         decay: float = ROW_DECAY) -> list[Tensor]:
    """``k`` Gaussian tensors with row ``r`` scaled by ``decay**r``, normalised in
    the injective norm.

    Each member has its own stream, so the unnormalised coefficients for
    ``X.dim = m`` are the first ``m`` rows of those for any larger ``m``: the
    families across a scan are sections of one decaying l_1-valued operator.
    """
    out = []
    scale = decay ** np.arange(X.dim)
    for t in range(k):
        c = stream(seed, 0xD1C, index, t).standard_normal((X.dim, Y.dim)) * scale[:, None]
        out.append(Tensor(X, Y, c / injective_norm(Tensor(X, Y, c)).value))
    return out


@dataclass
class DichotomyRow:
    p: float
    n: int
    m: int
    k: int
    families: int
    mean_defect: float
    max_defect: float
    witness_kind: str
    reports: list[DefectReport] = field(repr=False, default_factory=list)


def _scan_task(args):
    p, n, m, k, seed, index, cfg = args
    X, Y = lp(1, m), lp(p, n)
    fam = random_tensor_family(X, Y, k, seed, index)
    sub = DefectConfig(starts=cfg.starts, grid=cfg.grid, seed=int(stream(seed, 0xD1D, index).integers(2**62)),
                       refine=cfg.refine, max_evals=cfg.max_evals, ascent=cfg.ascent)
    return family_defect(TensorSpace(X, Y, "eps"), fam, sub)


def dichotomy_scan(p: float, n: int, m_list: Sequence[int], k: int, cfg: DefectConfig | None = None,
                   families: int = 3, jobs: int = 1) -> list[DichotomyRow]:
    """Defect estimates for seeded random ``k``-families in ``lp(1,m) (x)_eps lp(p,n)``.

    One row per ``m``: mean and max over ``families`` families, and the kind of
    witness (shift, rank-one or generic) behind the best estimate.  The
    ``j``-th family uses the stream ``(seed, j)`` for every ``m``.
    """
    from .parallel import ordered_map

    cfg = cfg or DefectConfig(starts=2, grid=1e-2, max_evals=400)
    if n < 2 or k < 1 or families < 1:
        raise DefectError("need n >= 2, k >= 1 and at least one family")
    if any(m < 1 or m > 24 for m in m_list):
        raise DefectError("every m must lie in [1, 24]")
    tasks = [(p, n, m, k, cfg.seed, j, cfg) for m in m_list for j in range(families)]
    reports = ordered_map(_scan_task, tasks, jobs)
    rows = []
    for a, m in enumerate(m_list):
        reps = reports[a * families:(a + 1) * families]
        vals = [r.defect for r in reps]
        best = max(range(len(reps)), key=lambda i: (vals[i], -i))
        rows.append(DichotomyRow(p, n, m, k, families, float(np.mean(vals)), float(max(vals)),
                                 witness_kind(reps[best].source), reps))
    return rows


# ---------------------------------------------------------------------------
# large families of the form {x (x) y_i} in lp(1, m) (x)_eps Y


def structured_family_values(Y: NormedSpace, x: np.ndarray, ys: np.ndarray, T: np.ndarray,
                             chunk: int = 2048) -> np.ndarray:
    """Exact ``||x (x) y_i + T||_eps`` in ``lp(1, m) (x)_eps Y`` for every row ``y_i``, ``x = e_1``.

    The norm is ``max_s ||sum_r s_r c_r||_Y`` over sign vectors; with only
    row 0 depending on ``i`` this is the max of ``||t_0 + y_i + v||`` over the
    vertices ``v`` of the zonotope spanned by the other rows of ``T``.
    """
    x = np.asarray(x, dtype=float)
    if not (x[0] == 1.0 and not np.any(x[1:])):
        raise DefectError("structured evaluation needs x = e_1")
    T = np.asarray(T, dtype=float)
    V = zonotope_points(T[1:]) if T.shape[0] > 1 else np.zeros((1, T.shape[1]))
    A = ys + T[0]
    out = np.empty(len(A))
    for start in range(0, len(A), chunk):
        a = A[start:start + chunk]
        out[start:start + chunk] = norm(Y, a[:, None, :] + V[None, :, :]).max(axis=1)
    return out


def certificate_defect(cert, cfg: DefectConfig | None = None, subfamily: int = 12) -> DefectReport:
    """Defect estimate for the family ``{x (x) y_i}`` of a non-octahedrality certificate.

    Witness candidates come from a full search on a subfamily (the
    configuration points plus evenly spaced net points); the best one is then
    evaluated exactly on the whole family.  The result is a lower-bound
    estimate of the family's defect, to be compared with ``cert.cap``.
    """
    cfg = cfg or DefectConfig(starts=2, grid=1e-2, max_evals=400)
    N = len(cert)
    k = len(cert.search.points)
    extra = max(0, subfamily - k)
    idx = list(range(min(k, N)))
    if extra:
        idx += [int(i) for i in np.linspace(k, N - 1, extra).round()]
    idx = sorted(set(idx))
    space = TensorSpace(cert.X, cert.Y, "eps")
    sub = family_defect(space, [cert.member(i) for i in idx], cfg)
    T = sub.witness.coeffs
    vals = structured_family_values(cert.Y, cert.x, cert.ys, T)
    j = int(np.argmin(vals))
    return DefectReport(
        family=[cert.member(i) for i in idx], defect=float(vals[j]), witness=sub.witness, mode="octa",
        seed=cfg.seed, starts=cfg.starts, grid=cfg.grid, source=sub.source, values=[float(vals[j])],
        evaluations=sub.evaluations + 1,
        provenance={"family_size": N, "subfamily": idx, "subfamily_defect": sub.defect, "argmin": j,
                    "witness_norm": injective_norm(sub.witness).value})
