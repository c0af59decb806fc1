"""Plain-text formats: vectors, matrix files, key-value report blocks.

* vector: one line of space-separated decimals;
* matrix file: first line ``m n``, then ``m`` lines of ``n`` decimals
  (several matrices may follow each other in one file);
* report blocks: ``key: value`` lines, numbers with 9 significant digits.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable

import numpy as np


class FormatError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if x == 0:
            return "0"  # no negative zero in reports
        return f"{x:.9g}"
    return str(x)


def format_vector(v) -> str:
    return " ".join(fmt(float(a)) for a in np.asarray(v, dtype=float).ravel())


def parse_vector(line: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in line.replace(",", " ").split()], dtype=float)
    except ValueError as exc:
        raise FormatError(f"bad vector line {line!r}") from exc


def format_matrix(A) -> str:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines.extend(format_vector(row) for row in A)
    return "\n".join(lines) + "\n"


def parse_matrices(text: str) -> list[np.ndarray]:
    lines = [ln for ln in (l.strip() for l in text.splitlines()) if ln and not ln.startswith("#")]
    out = []
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if len(head) != 2:
            raise FormatError(f"line {i + 1}: expected 'm n' header, got {lines[i]!r}")
        m, n = int(head[0]), int(head[1])
        rows = [parse_vector(l) for l in lines[i + 1:i + 1 + m]]
        if len(rows) != m or any(len(r) != n for r in rows):
            raise FormatError(f"matrix starting at line {i + 1} does not have shape {m}x{n}")
        out.append(np.array(rows))
        i += 1 + m
    return out


def read_matrices(path: str | Path) -> list[np.ndarray]:
    return parse_matrices(Path(path).read_text())


def read_matrix(path: str | Path) -> np.ndarray:
    mats = read_matrices(path)
    if len(mats) != 1:
        raise FormatError(f"{path}: expected one matrix, found {len(mats)}")
    return mats[0]


def read_vectors(path: str | Path) -> list[np.ndarray]:
    return [parse_vector(l) for l in Path(path).read_text().splitlines()
            if l.strip() and not l.lstrip().startswith("#")]


def block(title: str, items: Iterable[tuple[str, object]]) -> str:
    lines = [f"[{title}]"]
    for k, v in items:
        if isinstance(v, np.ndarray):
            v = format_vector(v)
        lines.append(f"{k}: {fmt(v)}")
    return "\n".join(lines) + "\n"


def format_certificate(cert) -> str:
    items: list[tuple[str, object]] = [
        ("value", cert.value),
        ("exactness", cert.exactness),
        ("lower", cert.lower),
        ("upper", cert.upper),
        ("gap", cert.gap),
    ]
    for key in ("method", "orientation", "patterns", "cuts", "rounds", "status"):
        if key in cert.info:
            items.append((key, cert.info[key]))
    wp = cert.witness_primal
    if isinstance(wp, list):
        for k, (lam, x, y) in enumerate(wp):
            items.append((f"atom{k}", f"{fmt(lam)} | {format_vector(x)} | {format_vector(y)}"))
    elif wp is not None:
        items.append(("witness_primal", np.asarray(wp)))
    if cert.witness_dual is not None:
        items.append(("witness_dual", np.asarray(cert.witness_dual)))
    if "signs" in cert.info:
        items.append(("signs", np.asarray(cert.info["signs"])))
    return block("certificate", items)
