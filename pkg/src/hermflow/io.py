"""Plain-text serialisation: edge lists, label sidecars, clusterings and diagnostics.

Edge lists hold one ``src<TAB>dst<TAB>weight`` line per edge with ``#``
comments. Weights are written with ``repr`` so they read back bit-exactly.
An optional sidecar maps integer ids to string labels (``id<TAB>label``).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .digraph import GraphError, WeightedDigraph, from_arrays


def write_edge_list(g: WeightedDigraph, path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v, w in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist()):
            fh.write(f"{u}\t{v}\t{w!r}\n")


def read_edge_list(path: str | Path, n: int | None = None, merge_policy: str = "net") -> WeightedDigraph:
    """Read an edge list; ``n`` defaults to the ``# n=`` header or ``max id + 1``.

    Raises
    ------
    GraphError
        On a malformed line (reported with its line number).
    """
    src, dst, wts = [], [], []
    header_n = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("n=") and header_n is None:
                        try:
                            header_n = int(tok[2:])
                        except ValueError:
                            pass
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) not in (2, 3):
                raise GraphError(f"{path}:{lineno}: expected 'src dst [weight]', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
            src.append(u)
            dst.append(v)
            wts.append(w)
    if n is None:
        n = header_n if header_n is not None else (max(max(src), max(dst)) + 1 if src else 0)
    return from_arrays(np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                       np.array(wts, dtype=np.float64), n, merge_policy)


def write_sidecar(labels: Sequence[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels):
            fh.write(f"{i}\t{lab}\n")


def read_sidecar(path: str | Path) -> list[str]:
    """Read ``id<TAB>label`` lines into a list indexed by id."""
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            i, _, lab = line.partition("\t")
            try:
                pairs[int(i)] = lab
            except ValueError:
                raise GraphError(f"{path}:{lineno}: bad id {i!r}") from None
    if sorted(pairs) != list(range(len(pairs))):
        raise GraphError(f"{path}: sidecar ids must be 0..{len(pairs) - 1}")
    return [pairs[i] for i in range(len(pairs))]


def write_labels(path: str | Path, raw_labels, ordered_labels, vertex_ids: Sequence | None = None) -> None:
    """Clustering CSV ``vertex_id,label,ordered_label`` (``-1`` for excluded vertices)."""
    raw_labels, ordered_labels = np.asarray(raw_labels), np.asarray(ordered_labels)
    ids = range(raw_labels.size) if vertex_ids is None else vertex_ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_id", "label", "ordered_label"])
        for v, a, b in zip(ids, raw_labels.tolist(), ordered_labels.tolist()):
            w.writerow([v, a, b])


def read_labels(path: str | Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    ids, raw, ordered = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ids.append(row["vertex_id"])
            raw.append(int(row["label"]))
            ordered.append(int(row["ordered_label"]))
    return ids, np.array(raw, dtype=np.int64), np.array(ordered, dtype=np.int64)


def write_ground_truth(path: str | Path, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_id", "label"])
        for v, lab in enumerate(np.asarray(labels).tolist()):
            w.writerow([v, lab])


def read_ground_truth(path: str | Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = np.full(len(rows), -1, dtype=np.int64)
    for row in rows:
        out[int(row["vertex_id"])] = int(row["label"])
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_json(path: str | Path, data: Mapping) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(dict(data)), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def clustering_diagnostics(diag: Mapping) -> dict:
    """The stable diagnostics record: lambda1, lambda2, phi, cost, k, seed."""
    keys = ("lambda1", "lambda2", "phi", "cost", "k", "seed")
    return {key: diag.get(key) for key in keys}


def write_rows(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
