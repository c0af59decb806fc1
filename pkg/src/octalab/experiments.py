"""Batch experiments: flat ``key=value`` configs in, versioned CSV out.

Every experiment expands into an ordered list of independent tasks, each
with its own seed derived from ``(seed, task index)``.  Tasks run through
``ordered_map`` so the CSV is the same for any number of workers.  A task that
raises becomes an ``ERROR`` row; a task whose verifier misses its bound marks
the run as failed (nonzero exit status).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddability import cut_cone_membership, distance_matrix, non_octa_certificate, point_config_search
from .octahedral import DefectConfig, certificate_defect, dichotomy_scan
from .parallel import ordered_map
from .rng import stream
from .spaces import format_space, lp, parse_space, random_unit, uniform_l1
from .tensor_norms import Tensor, injective_norm, operator_norm
from .textio import fmt
from .witnesses import (alt_values, coordinate_embedding, exact_l1_norm, interval_witness, oplus1_extension,
                        pad_rows, rank_one_witness_search, shift_witness, sup_alt_witness)

CSV_VERSION = 1
EXPERIMENTS = ("dichotomy", "witness-suite", "certify", "cutcone-scan")
WITNESS_KINDS = ("shift", "interval", "rankone", "oplus1", "sup-alt")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "dichotomy"
    seed: int = 0
    tol: float = 1e-7
    starts: int = 2
    grid: float = 1e-2
    max_evals: int = 400
    cuts: int = 4000
    families: int = 3
    p: list[float] = field(default_factory=lambda: [1.0, 3.0])
    n: list[int] = field(default_factory=lambda: [3])
    m: list[int] = field(default_factory=lambda: [8, 16])
    k: int = 3
    budget: int = 2000
    epsilon: float = 0.05
    instances: int = 5
    kinds: list[str] = field(default_factory=lambda: list(WITNESS_KINDS))
    spaces: list[str] = field(default_factory=lambda: ["lp:2:3"])
    measure: bool = False
    certify: bool = False
    out: str = ""
    debug_break: str = ""

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for name in ("starts", "max_evals", "cuts", "families", "budget", "instances", "k"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not self.grid > 0 or not self.tol > 0:
            raise ConfigError("grid and tol must be positive")
        if any(not (1.0 <= p <= math.inf) for p in self.p):
            raise ConfigError("p entries must lie in [1, inf]")
        if any(k not in WITNESS_KINDS for k in self.kinds):
            raise ConfigError(f"witness kinds must be among {WITNESS_KINDS}")


def _parse_p(s: str) -> float:
    return math.inf if s.strip().lower() in ("inf", "infinity") else float(s)


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_CONVERT = {
    "experiment": str, "seed": int, "tol": float, "starts": int, "grid": float, "max_evals": int, "cuts": int,
    "families": int, "k": int, "budget": int, "epsilon": float, "instances": int, "out": str,
    "p": lambda s: [_parse_p(t) for t in s.split(",")],
    "n": lambda s: [int(t) for t in s.split(",")],
    "m": lambda s: [int(t) for t in s.split(",")],
    "kinds": lambda s: [t.strip() for t in s.split(",")],
    "spaces": lambda s: [t.strip() for t in s.split(",")],
    "measure": _bool, "certify": _bool,
}
_ALIASES = {"p-list": "p", "n-list": "n", "m-list": "m", "max-evals": "max_evals"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines ('#' comments); unknown keys are errors."""
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in _CONVERT:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            setattr(cfg, key, _CONVERT[key](value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# tasks (module level so worker processes can import them)


def _task_seed(seed: int, index: int) -> int:
    return int(stream(seed, 0xE7, index).integers(2**62))


def _dichotomy_task(args):
    cfg, p, n, m, index = args
    # the config seed, not a task seed: families for different m are sections of the same operators
    dc = DefectConfig(starts=cfg.starts, grid=cfg.grid, seed=cfg.seed, max_evals=cfg.max_evals)
    row = dichotomy_scan(p, n, [m], cfg.k, dc, families=cfg.families)[0]
    return [fmt(p), n, m, cfg.k, fmt(row.max_defect), fmt(row.mean_defect), "NA", row.witness_kind, "OK"], True


def _cap_task(args):
    cfg, p, n, index = args
    cert = non_octa_certificate(p, n, 1, budget=cfg.budget, k=min(8, 2 * n + 2), seed=_task_seed(cfg.seed, index))
    return cert.cap


def _certify_task(args):
    cfg, p, n, m, index = args
    seed = _task_seed(cfg.seed, index)
    cert = non_octa_certificate(p, n, m, budget=cfg.budget, k=min(8, 2 * n + 2), seed=seed)
    ok = cert.chain_holds() and cert.members_unit()
    measured = "NA"
    if cfg.measure:
        rep = certificate_defect(cert, DefectConfig(starts=cfg.starts, grid=cfg.grid, seed=seed,
                                                    max_evals=cfg.max_evals))
        measured = fmt(rep.defect)
        ok &= rep.defect <= cert.cap + 1e-6
    return [fmt(p), n, m, fmt(cert.nu), fmt(cert.eta), fmt(cert.delta0), fmt(cert.eps0), len(cert), measured,
            "OK" if ok else "FAIL"], ok


def _random_unit_op(rng, dom, cod, shape):
    A = rng.standard_normal(shape)
    return A / operator_norm(A, dom, cod, exact=True).value


def _witness_task(args):
    cfg, kind, index = args
    seed = _task_seed(cfg.seed, index)
    rng = stream(seed, 0xAB)
    broken = cfg.debug_break == kind
    eps = cfg.epsilon
    if kind == "shift":
        dom, m = lp(1, 3), 4 + index % 5
        T_list = [_random_unit_op(rng, dom, lp(1, m), (m, 3)) for _ in range(2)]
        S, rep = shift_witness(T_list, dom, np.eye(3), eps)
        values, bound = rep.values, rep.bound
        if broken:
            values = _reverify_shift(T_list, dom, 0.0 * S)
    elif kind == "interval":
        N, dom = 16, lp(1, 2)
        T0 = coordinate_embedding(2, N)
        T_list = [_head_op(rng, N, 2, eps) for _ in range(2)]
        G, rep = interval_witness(T_list, dom, T0, 2 * eps)
        values, bound = rep.values, rep.bound
        if broken:
            values = [operator_norm(T, dom, uniform_l1(N), exact=True).value for T in T_list]
    elif kind == "rankone":
        X, Y = lp(math.inf, 4), lp(1, 4)
        fam = []
        for _ in range(3):
            c = rng.standard_normal((4, 4))
            fam.append(Tensor(X, Y, c / injective_norm(Tensor(X, Y, c)).value))
        (w, z), rep = rank_one_witness_search(fam, starts=4, seed=seed, max_evals=600)
        values, bound = rep.values, rep.bound
        if broken:
            values = [v - 1 for v in values]
    elif kind == "oplus1":
        X, Y = lp(1, 2), lp(2, 2)
        c = rng.standard_normal((2, 2))
        z = Tensor(X, Y, c / np.abs(c).sum())
        y = random_unit(Y, rng)
        _, rep = oplus1_extension(z, y, tol=cfg.tol)
        values, bound = [rep.norm_sum - rep.norm_z], 1 - 10 * cfg.tol
        if broken:
            values = [rep.norm_sum - rep.norm_z - 0.5]
        if not rep.passed:
            values = [min(values[0], -1.0)]
    else:  # sup-alt
        d = 6
        F = random_unit(lp(math.inf, d), rng, 4)
        y = sup_alt_witness(F)
        if broken:
            y = np.zeros(d)
            y[-1] = 1e-3
        values, bound = list(alt_values(lp(math.inf, d), F, y)), 2 - 1e-9
    ok = min(values) >= bound - 1e-12
    return [kind, index, fmt(min(values)), fmt(bound), "PASS" if ok else "FAIL"], ok


def _reverify_shift(T_list, dom, S):
    rows = S.shape[0]
    return [exact_l1_norm(pad_rows(T, rows) + S, dom, lp(1, rows)) for T in T_list]


def _head_op(rng, N, d, eps):
    """Norm-one operator into uniform_l1(N) with most mass on the first half of the grid."""
    A = np.zeros((N, d))
    A[:N // 2] = rng.standard_normal((N // 2, d))
    A[N // 2:] = rng.standard_normal((N - N // 2, d)) * (eps / N)
    return A / operator_norm(A, lp(1, d), uniform_l1(N), exact=True).value


def _cutcone_task(args):
    cfg, space_text, index = args
    space = parse_space(space_text)
    seed = _task_seed(cfg.seed, index)
    out = point_config_search(space, cfg.k, cfg.budget, seed)
    cert = cut_cone_membership(distance_matrix(space, out.points))
    consistent = cert.feasible == (out.distortion <= 1 + 1e-7) and cert.verify()
    outcome = "OK" if consistent else "FAIL"
    return [format_space(space), cfg.k, index, fmt(out.distortion), "feasible" if cert.feasible else "infeasible",
            "conclusive" if out.conclusive else "inconclusive", outcome], consistent


HEADERS = {
    "dichotomy": ["p", "n", "m", "k", "defect_estimate", "mean_defect", "certified_cap", "witness_kind", "outcome"],
    "witness-suite": ["kind", "instance", "min_value", "bound", "outcome"],
    "certify": ["p", "n", "m", "nu", "eta", "delta0", "eps0", "net_size", "measured_defect", "outcome"],
    "cutcone-scan": ["space", "k", "instance", "distortion", "cut_cone", "search", "outcome"],
}


class _Runner:
    """Picklable wrapper turning exceptions into ERROR rows."""

    def __init__(self, fn):
        self.fn = fn

    def __call__(self, args):
        try:
            return self.fn(args)
        except (ValueError, ArithmeticError) as exc:
            msg = (str(exc).splitlines() or [type(exc).__name__])[0].replace(",", ";")
            return "ERROR", msg


def _tasks(cfg: ExperimentConfig):
    if cfg.experiment == "dichotomy":
        grid = [(p, n, m) for p in cfg.p for n in cfg.n for m in cfg.m]
        return _dichotomy_task, [(cfg, p, n, m, i) for i, (p, n, m) in enumerate(grid)], grid
    if cfg.experiment == "certify":
        grid = [(p, n, m) for p in cfg.p for n in cfg.n for m in cfg.m]
        return _certify_task, [(cfg, p, n, m, i) for i, (p, n, m) in enumerate(grid)], grid
    if cfg.experiment == "witness-suite":
        grid = [(kind, j) for kind in cfg.kinds for j in range(cfg.instances)]
        return _witness_task, [(cfg, kind, i) for i, (kind, _) in enumerate(grid)], grid
    grid = [(s, j) for s in cfg.spaces for j in range(cfg.instances)]
    return _cutcone_task, [(cfg, s, i) for i, (s, _) in enumerate(grid)], grid


def _error_row(experiment: str, key, msg: str) -> list:
    header = HEADERS[experiment]
    row = ["NA"] * len(header)
    if experiment in ("dichotomy", "certify"):
        p, n, m = key
        row[:3] = [fmt(p), n, m]
    elif experiment == "witness-suite":
        row[:2] = [key[0], key[1]]
    else:
        row[:1] = [key[0]]
        row[2] = key[1]
    row[-1] = f"ERROR {msg}"
    return row


@dataclass
class ExperimentResult:
    csv: str
    ok: bool
    rows: list[list]


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run all tasks of ``cfg`` and render the CSV (rows in config order)."""
    cfg.validate()
    fn, tasks, keys = _tasks(cfg)
    results = ordered_map(_Runner(fn), tasks, jobs)
    rows, ok = [], True
    for key, (row, good) in zip(keys, results):
        if row == "ERROR":
            row = _error_row(cfg.experiment, key, good)
            good = True
        ok &= bool(good)
        rows.append(row)
    if cfg.experiment == "dichotomy" and cfg.certify:
        rows = _attach_caps(cfg, rows, jobs)
    buf = io.StringIO()
    buf.write(f"# octalab {cfg.experiment} csv v{CSV_VERSION} seed={cfg.seed}\n")
    buf.write(",".join(HEADERS[cfg.experiment]) + "\n")
    for row in rows:
        buf.write(",".join(str(c) for c in row) + "\n")
    return ExperimentResult(buf.getvalue(), ok, rows)


def _attach_caps(cfg, rows, jobs):
    pairs = sorted({(p, n) for p in cfg.p for n in cfg.n if 1 < p < 2}, key=lambda t: (t[0], t[1]))
    caps = ordered_map(_Runner(_cap_task), [(cfg, p, n, 10_000 + i) for i, (p, n) in enumerate(pairs)], jobs)
    lookup = {}
    for (p, n), res in zip(pairs, caps):
        lookup[(fmt(p), n)] = "NA" if isinstance(res, tuple) else fmt(res)
    for row in rows:
        cap = lookup.get((row[0], row[1]))
        if cap is not None and row[-1] == "OK":
            row[6] = cap
    return rows
