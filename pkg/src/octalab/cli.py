"""Command line interface.

Exit status: 0 on success, 1 when a verifier misses its bound, 2 on bad
input.  Output goes to ``--out`` (or stdout) and is deterministic given the
seed, whatever ``--jobs`` is.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .embeddability import (ObstructionError, cut_cone_membership, distance_matrix, l1_distortion_bound,
                            non_octa_certificate, point_config_search)
from .experiments import HEADERS, ExperimentConfig, load_config, run_experiment
from .octahedral import DefectConfig, TensorSpace, alt_family_defect, certificate_defect, family_defect
from .spaces import format_space, norm, norming_functional, parse_space
from .tensor_norms import Tensor, injective_norm, operator_norm, projective_norm
from .textio import block, fmt, format_certificate, format_vector, parse_vector, read_matrices, read_matrix, read_vectors
from .witnesses import (interval_witness, oplus1_extension, rank_one_witness_search, shift_witness,
                        sup_alt_witness, alt_values)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Out:
    def __init__(self, path: str | None):
        self.parts: list[str] = []
        self.path = path

    def write(self, text: str) -> None:
        self.parts.append(text)

    def flush(self) -> None:
        text = "".join(self.parts)
        if self.path:
            Path(self.path).write_text(text)
        else:
            sys.stdout.write(text)


def _space(text: str):
    return parse_space(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_norm(args, out) -> int:
    if args.op:
        dom, cod = _space(args.dom), _space(args.cod)
        cert = operator_norm(read_matrix(args.op), dom, cod, budget=args.budget, seed=args.seed)
        out.write(format_certificate(cert))
        return EXIT_OK
    if args.space is None or args.vector is None:
        raise ValueError("norm needs --space and --vector (or --op with --dom/--cod)")
    space = _space(args.space)
    x = parse_vector(args.vector)
    nx = norm(space, x)
    items = [("space", format_space(space)), ("norm", nx), ("dual_norm", norm(space.dual(), x))]
    if nx > 0:
        items.append(("norming_functional", norming_functional(space, x / nx)))
    out.write(block("norm", items))
    return EXIT_OK


def cmd_tensor_norm(args, out) -> int:
    X, Y = _space(args.x), _space(args.y)
    for k, c in enumerate(read_matrices(args.tensor)):
        u = Tensor(X, Y, c)
        if args.kind in ("eps", "both"):
            cert = injective_norm(u, seed=args.seed)
            out.write(format_certificate(cert).replace("[certificate]", f"[injective {k}]", 1))
        if args.kind in ("pi", "both"):
            cert = projective_norm(u, tol=args.tol, seed=args.seed)
            out.write(format_certificate(cert).replace("[certificate]", f"[projective {k}]", 1))
    return EXIT_OK


def _defect_block(rep) -> str:
    w = rep.witness.coeffs if isinstance(rep.witness, Tensor) else rep.witness
    return block("defect", [
        ("mode", rep.mode), ("defect", rep.defect), ("label", rep.label), ("source", rep.source),
        ("witness", np.asarray(w).ravel()), ("values", np.asarray(rep.values)),
        ("seed", rep.seed), ("starts", rep.starts), ("grid", rep.grid), ("evaluations", rep.evaluations),
    ])


def cmd_defect(args, out) -> int:
    cfg = DefectConfig(starts=args.starts, grid=args.grid, seed=args.seed, max_evals=args.max_evals)
    if args.x and args.y:
        space = TensorSpace(_space(args.x), _space(args.y), args.tensor_norm)
        family = [Tensor(space.X, space.Y, c) for c in read_matrices(args.family)]
    elif args.space:
        space = _space(args.space)
        family = read_vectors(args.family)
    else:
        raise ValueError("defect needs --space, or --x and --y for a tensor space")
    fn = family_defect if args.mode == "octa" else alt_family_defect
    rep = fn(space, family, cfg)
    out.write(_defect_block(rep))
    if args.csv:
        out.write(f"# octalab defect csv v1 seed={args.seed}\nspace,mode,members,defect,source\n")
        out.write(f"{space},{rep.mode},{len(family)},{fmt(rep.defect)},{rep.source}\n")
    return EXIT_OK


def cmd_witness(args, out) -> int:
    ok = True
    if args.kind in ("shift", "interval"):
        dom = _space(args.dom)
        ops = read_matrices(args.ops)
        if args.kind == "shift":
            S, rep = shift_witness(ops, dom, read_matrix(args.psi), args.eps, codomain_budget=args.budget)
            items = [("k", rep.spec.k), ("output_dim", rep.spec.output_dim), ("S", S.ravel())]
        else:
            G, rep = interval_witness(ops, dom, read_matrix(args.t0), args.eps)
            items = [("I", f"{rep.spec.I[0]} {rep.spec.I[1]}"), ("phi_slope", rep.spec.phi_slope),
                     ("refined", rep.spec.refined), ("G", G.ravel())]
        if args.debug_break_witness:
            rep.values = [v - 1.0 for v in rep.values]
        ok = rep.passed
        items += [("values", np.asarray(rep.values)), ("bound", rep.bound), ("passed", ok)]
        out.write(block(f"{args.kind} witness", items))
    elif args.kind == "rankone":
        X, Y = _space(args.x), _space(args.y)
        fam = [Tensor(X, Y, c) for c in read_matrices(args.tensors)]
        (w, z), rep = rank_one_witness_search(fam, starts=args.starts, seed=args.seed)
        out.write(block("rankone witness", [("w", w), ("z", z), ("values", np.asarray(rep.values)),
                                            ("min_value", rep.min_value), ("stage1", rep.stage1),
                                            ("bound", rep.bound), ("label", rep.label)]))
    elif args.kind == "oplus1":
        Y = _space(args.y)
        c = read_matrix(args.tensor)
        from .spaces import lp

        z = Tensor(lp(1, c.shape[0]), Y, c)
        v, rep = oplus1_extension(z, parse_vector(args.vector), tol=args.tol)
        ok = rep.passed and not args.debug_break_witness
        out.write(block("oplus1 extension", [
            ("norm_z", rep.norm_z), ("norm_sum", rep.norm_sum), ("pairing_lower", rep.pairing_lower),
            ("triangle_upper", rep.triangle_upper), ("T_bar_norm", rep.T_bar_norm),
            ("additivity_error", rep.additivity_error), ("passed", ok)]))
    else:  # sup-alt
        from .spaces import lp

        F = np.array(read_vectors(args.family))
        y = sup_alt_witness(F)
        vals = alt_values(lp(math.inf, F.shape[1]), F, y)
        ok = bool(np.min(vals) >= 2 - 1e-9) and not args.debug_break_witness
        out.write(block("sup-alt witness", [("y", y), ("values", vals), ("passed", ok)]))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cutcone(args, out) -> int:
    if args.points:
        if not args.space:
            raise ValueError("--points needs --space")
        space = _space(args.space)
        P = np.array(read_vectors(args.points))
    else:
        space = None
        P = None
    if args.mode == "search":
        if space is None:
            space = _space(args.space)
        res = point_config_search(space, args.k, args.budget, args.seed)
        out.write(block("search", [("space", format_space(space)), ("k", args.k), ("distortion", res.distortion),
                                   ("evaluations", res.evaluations), ("label", res.label),
                                   ("conclusive", res.conclusive)]))
        for i, p in enumerate(res.points):
            out.write(f"point{i}: {format_vector(p)}\n")
        return EXIT_OK
    if P is None:
        raise ValueError("member/distortion modes need --points and --space")
    D = distance_matrix(space, P)
    if args.mode == "distortion":
        out.write(block("distortion", [("value", l1_distortion_bound(D))]))
        return EXIT_OK
    cert = cut_cone_membership(D)
    items = [("feasible", cert.feasible), ("verified", cert.verify())]
    for S, w in sorted(cert.weights.items()):
        items.append(("cut {" + ",".join(str(s) for s in S) + "}", w))
    if cert.b is not None:
        items += [("b", " ".join(str(v) for v in cert.b)), ("Q(b)", str(cert.q_value))]
    if not cert.feasible:
        items.append(("separator_value", cert.separator_value))
    out.write(block("cutcone", items))
    return EXIT_OK


def cmd_certify(args, out) -> int:
    cols = HEADERS["certify"]
    out.write(f"# octalab certify csv v1 seed={args.seed}\n" + ",".join(cols) + "\n")
    try:
        cert = non_octa_certificate(args.p, args.n, args.m, budget=args.budget, k=args.k, seed=args.seed)
    except ObstructionError as exc:
        row = [fmt(args.p), args.n, args.m] + ["NA"] * (len(cols) - 4) + [f"ERROR {exc}".replace(",", ";")]
        out.write(",".join(str(c) for c in row) + "\n")
        return EXIT_OK
    ok = cert.chain_holds() and cert.members_unit()
    measured = "NA"
    if args.measure:
        rep = certificate_defect(cert, DefectConfig(starts=2, grid=1e-2, seed=args.seed, max_evals=400))
        measured = fmt(rep.defect)
        ok &= rep.defect <= cert.cap + 1e-6
    row = [fmt(args.p), args.n, args.m, fmt(cert.nu), fmt(cert.eta), fmt(cert.delta0), fmt(cert.eps0),
           len(cert), measured, "OK" if ok else "FAIL"]
    out.write(",".join(str(c) for c in row) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dichotomy(args, out) -> int:
    cfg = ExperimentConfig(experiment="dichotomy", seed=args.seed, tol=args.tol, starts=args.starts, grid=args.grid,
                           max_evals=args.max_evals, families=args.families, p=args.p_list, n=[args.n],
                           m=args.m_list, k=args.k, budget=args.budget, certify=args.certify)
    res = run_experiment(cfg, jobs=args.jobs)
    out.write(res.csv)
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_run(args, out) -> int:
    cfg = load_config(args.config)
    cfg.seed = args.seed if args.seed_given else cfg.seed
    if args.debug_break_witness:
        cfg.debug_break = args.debug_break_witness
    if cfg.out and not args.out:
        out.path = cfg.out
    res = run_experiment(cfg, jobs=args.jobs)
    out.write(res.csv)
    return EXIT_OK if res.ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def _p_list(text: str) -> list[float]:
    return [math.inf if t.strip() in ("inf", "infinity") else float(t) for t in text.split(",")]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",")]


def _float_p(text: str) -> float:
    return math.inf if text.strip() in ("inf", "infinity") else float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="octalab", description="Octahedral norms in finite tensor products.")
    ap.add_argument("--version", action="version", version=f"octalab {__version__}")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--tol", type=float, default=1e-7)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None)
    ap.add_argument("--debug-break-witness", default="", help=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="vector or operator norms")
    p.add_argument("--space")
    p.add_argument("--vector")
    p.add_argument("--op", help="matrix file of an operator")
    p.add_argument("--dom")
    p.add_argument("--cod")
    p.add_argument("--budget", type=int, default=16)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("tensor-norm", help="injective / projective norms")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--tensor", required=True, help="matrix file (several matrices allowed)")
    p.add_argument("--kind", choices=("eps", "pi", "both"), default="both")
    p.set_defaults(func=cmd_tensor_norm)

    p = sub.add_parser("defect", help="octahedrality defect of a family")
    p.add_argument("--space")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--tensor-norm", choices=("eps", "pi"), default="eps")
    p.add_argument("--family", required=True)
    p.add_argument("--mode", choices=("octa", "alt"), default="octa")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--grid", type=float, default=1e-3)
    p.add_argument("--max-evals", type=int, default=20_000)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("witness", help="constructive witnesses with verifiers")
    p.add_argument("--kind", choices=("shift", "interval", "rankone", "oplus1", "sup-alt"), required=True)
    p.add_argument("--ops")
    p.add_argument("--dom")
    p.add_argument("--psi")
    p.add_argument("--t0")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--budget", type=int, default=None, help="codomain budget for the shift witness")
    p.add_argument("--tensors")
    p.add_argument("--tensor")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--vector")
    p.add_argument("--family")
    p.add_argument("--starts", type=int, default=8)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("cutcone", help="cut cone membership, distortion, configuration search")
    p.add_argument("--points")
    p.add_argument("--space")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--mode", choices=("member", "distortion", "search"), default="member")
    p.set_defaults(func=cmd_cutcone)

    p = sub.add_parser("certify", help="non-octahedrality certificate")
    p.add_argument("--p", type=_float_p, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--measure", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("dichotomy", help="defect scan across m")
    p.add_argument("--p-list", type=_p_list, default=[1.0, 3.0])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m-list", type=_int_list, default=[8, 16])
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--families", type=int, default=3)
    p.add_argument("--starts", type=int, default=2)
    p.add_argument("--grid", type=float, default=1e-2)
    p.add_argument("--max-evals", type=int, default=400)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--certify", action="store_true")
    p.set_defaults(func=cmd_dichotomy)

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    out = _Out(args.out)
    try:
        code = args.func(args, out)
    except (ValueError, OSError) as exc:
        out.flush()
        print(f"octalab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
