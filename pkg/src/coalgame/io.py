"""Readers and writers for positions, edge lists, partitions and traces.

* positions: CSV with header ``id,x1,...,xd``; ``d == 1`` gives a line
* graphs: first line ``n <count>``, then one ``u v`` pair per line, 0-indexed
* partitions: one group per line, space-separated ids, ``#`` comments
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .equilibrium import Move
from .model import Partition
from .topology import EuclideanD, GraphTopology, Line1D, SamplingConfig, Topology


class FormatError(ValueError):
    pass


def atomic_write(path, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_positions(text: str, sampling: SamplingConfig | None = None) -> Topology:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError("empty positions file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if header[0] != "id" or d < 1 or header[1:] != [f"x{i}" for i in range(1, d + 1)]:
        raise FormatError(f"positions header must be id,x1,...,xd; got {','.join(header)}")
    pos = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != d + 1:
            raise FormatError(f"line {lineno}: expected {d + 1} fields, got {len(row)}")
        try:
            pid = int(row[0])
            coords = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        if pid in pos:
            raise FormatError(f"line {lineno}: duplicate id {pid}")
        pos[pid] = coords
    if sorted(pos) != list(range(len(pos))):
        raise FormatError("player ids must be exactly 0..N-1")
    arr = np.array([pos[i] for i in range(len(pos))], dtype=float)
    if d == 1:
        return Line1D(arr[:, 0])
    return EuclideanD(arr, sampling)


def format_positions(positions) -> str:
    arr = np.asarray(positions, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", *[f"x{i}" for i in range(1, arr.shape[1] + 1)]])
    for i, row in enumerate(arr):
        w.writerow([i, *[repr(float(v)) for v in row]])
    return buf.getvalue()


def parse_edge_list(text: str) -> GraphTopology:
    lines = [(no, _strip(l)) for no, l in enumerate(text.splitlines(), start=1)]
    lines = [(no, l) for no, l in lines if l]
    if not lines or not lines[0][1].startswith("n "):
        raise FormatError("edge list must start with a line 'n <count>'")
    try:
        n = int(lines[0][1].split()[1])
    except (IndexError, ValueError):
        raise FormatError(f"line {lines[0][0]}: bad vertex count") from None
    edges = []
    for no, l in lines[1:]:
        parts = l.split()
        if len(parts) != 2:
            raise FormatError(f"line {no}: expected 'u v', got {l!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise FormatError(f"line {no}: vertex ids must be integers") from None
    try:
        return GraphTopology(n, edges)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_edge_list(graph: GraphTopology) -> str:
    return f"n {graph.n}\n" + "".join(f"{u} {v}\n" for u, v in graph.edges)


def load_instance(path, sampling: SamplingConfig | None = None) -> Topology:
    """Read a positions CSV or an edge list, telling them apart by content."""
    text = Path(path).read_text()
    first = next((_strip(l) for l in text.splitlines() if _strip(l)), "")
    if first.startswith("n "):
        return parse_edge_list(text)
    return parse_positions(text, sampling)


def save_instance(instance: Topology, path) -> None:
    if isinstance(instance, GraphTopology):
        atomic_write(path, format_edge_list(instance))
    else:
        atomic_write(path, format_positions(instance.positions))


def parse_partition(text: str) -> Partition:
    groups = []
    for no, line in enumerate(text.splitlines(), start=1):
        line = _strip(line)
        if not line:
            continue
        try:
            groups.append([int(t) for t in line.split()])
        except ValueError:
            raise FormatError(f"line {no}: player ids must be integers") from None
    try:
        return Partition(groups)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_partition(path) -> Partition:
    return parse_partition(Path(path).read_text())


def trace_to_json(trace: list[Move]) -> str:
    return json.dumps([m.to_dict() for m in trace], indent=2) + "\n"


def trace_from_json(text: str) -> list[Move]:
    return [Move.from_dict(d) for d in json.loads(text)]
