"""Nash verification, best-response dynamics and exhaustive equilibrium search."""
from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .model import (
    Incentive,
    Partition,
    RiskModel,
    _scored,
    _to_utility,
    combine,
    defect_incentivized,
    gain,
    merge_incentivized,
    SIGMA_MARGIN,
)
from .topology import Topology

MERGE = "MERGE"
DEFECT = "DEFECT"
DEFECT_TO_EMPTY = "DEFECT_TO_EMPTY"


@dataclass(frozen=True)
class Move:
    """A candidate change to a partition.

    ``MERGE`` uses ``source < target`` as the two group indices. ``DEFECT``
    moves ``player`` from group ``source`` to group ``target``;
    ``DEFECT_TO_EMPTY`` moves it into a new singleton group.
    """

    kind: str
    source: int
    target: int | None = None
    player: int | None = None

    def __post_init__(self):
        if self.kind == MERGE and not (self.target is not None and self.source < self.target):
            raise ValueError("MERGE needs two group indices i < j")
        if self.kind in (DEFECT, DEFECT_TO_EMPTY) and self.player is None:
            raise ValueError(f"{self.kind} needs a player")
        if self.kind == DEFECT and self.target is None:
            raise ValueError("DEFECT needs a target group")
        if self.kind not in (MERGE, DEFECT, DEFECT_TO_EMPTY):
            raise ValueError(f"unknown move kind {self.kind!r}")

    @classmethod
    def merge(cls, i: int, j: int) -> "Move":
        return cls(MERGE, min(i, j), max(i, j))

    @classmethod
    def defect(cls, x: int, source: int, target: int | None) -> "Move":
        if target is None:
            return cls(DEFECT_TO_EMPTY, source, None, x)
        return cls(DEFECT, source, target, x)

    def to_dict(self) -> dict:
        if self.kind == MERGE:
            return {"kind": MERGE, "i": self.source, "j": self.target}
        if self.kind == DEFECT:
            return {"kind": DEFECT, "x": self.player, "from": self.source, "to": self.target}
        return {"kind": DEFECT_TO_EMPTY, "x": self.player, "from": self.source}

    @classmethod
    def from_dict(cls, d: dict) -> "Move":
        if d["kind"] == MERGE:
            return cls.merge(d["i"], d["j"])
        return cls.defect(d["x"], d["from"], d.get("to"))

    def __str__(self):
        if self.kind == MERGE:
            return f"MERGE({self.source},{self.target})"
        if self.kind == DEFECT:
            return f"DEFECT({self.player},{self.source},{self.target})"
        return f"DEFECT_TO_EMPTY({self.player},{self.source})"


@dataclass(frozen=True)
class EquilibriumReport:
    """Verdict on a partition.

    ``verdict`` is ``"nash"``, ``"not_nash"`` or, on Monte Carlo instances
    where the only candidate moves are within sampling noise,
    ``"indeterminate"``; ``marginal_move`` names the first such move.
    """

    verdict: str
    violating_move: Move | None
    marginal_move: Move | None
    richest_index: int
    richest_fraction: float
    group_utilities: tuple[float, ...]
    confidence: str

    @property
    def is_nash(self) -> bool:
        return self.verdict == "nash"

    def to_dict(self) -> dict:
        return {
            "is_nash": self.is_nash,
            "verdict": self.verdict,
            "violating_move": self.violating_move.to_dict() if self.violating_move else None,
            "marginal_move": self.marginal_move.to_dict() if self.marginal_move else None,
            "richest_index": self.richest_index,
            "richest_fraction": self.richest_fraction,
            "group_utilities": list(self.group_utilities),
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class DynamicsConfig:
    max_steps: int = 10_000
    order: str = "deterministic"
    seed: int = 0
    allow_empty_defect: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be at least 1, got {self.max_steps}")
        if self.order not in ("deterministic", "random"):
            raise ValueError(f"order must be 'deterministic' or 'random', got {self.order!r}")


@dataclass
class DynamicsResult:
    partition: Partition
    converged: bool
    trace: list[Move] = field(default_factory=list)


def candidate_moves(partition: Partition, allow_empty_defect: bool = False) -> Iterator[Move]:
    """All legal moves in scan order: merges by ``(i, j)``, defects by
    ``(x, to)``, then defections to an empty group by ``x``.

    A singleton leaving for an empty group changes nothing and is skipped.
    """
    k = len(partition)
    for i in range(k):
        for j in range(i + 1, k):
            yield Move.merge(i, j)
    labels = partition.labels()
    for x, src in enumerate(labels):
        for to in range(k):
            if to != src:
                yield Move.defect(x, src, to)
    if allow_empty_defect:
        for x, src in enumerate(labels):
            if len(partition[src]) > 1:
                yield Move.defect(x, src, None)


def evaluate_move(move: Move, partition: Partition, instance: Topology, risk: RiskModel) -> Incentive:
    if move.kind == MERGE:
        return merge_incentivized(move.source, move.target, partition, instance, risk)
    return defect_incentivized(
        move.player, move.source, move.target, partition, instance, risk,
        allow_empty=move.kind == DEFECT_TO_EMPTY,
    )


def _scan(partition, instance, risk, allow_empty_defect, stop_at_first=True):
    """Walk candidate moves in scan order with per-group scores computed once.

    Returns ``(certain, marginal)`` where ``certain`` lists incentivized
    moves (only the first when ``stop_at_first``) and ``marginal`` is the
    first move that fires only on the Monte Carlo point estimate.
    """
    r, rtol = risk.r, risk.rtol
    groups = [_scored(g, instance, r) for g in partition]
    certain: list[Move] = []
    marginal = None

    def verdict(after, befores):
        return combine(gain(after.score, b.score, (after.se**2 + b.se**2) ** 0.5, rtol) for b in befores)

    for move in candidate_moves(partition, allow_empty_defect):
        if move.kind == MERGE:
            after = _scored(partition[move.source] | partition[move.target], instance, r)
            v = verdict(after, (groups[move.source], groups[move.target]))
        elif move.kind == DEFECT:
            after = _scored(partition[move.target] | {move.player}, instance, r)
            v = verdict(after, (groups[move.source], groups[move.target]))
        else:
            after = _scored(frozenset([move.player]), instance, r)
            v = verdict(after, (groups[move.source],))
        if v == "yes":
            certain.append(move)
            if stop_at_first:
                break
        elif v == "maybe" and marginal is None:
            marginal = move
    return certain, marginal


def find_incentivized_move(partition: Partition, instance: Topology, risk: RiskModel,
                           allow_empty_defect: bool = False) -> Move | None:
    """First incentivized move in scan order, or ``None``."""
    partition.validate(instance.n_players)
    certain, _ = _scan(partition, instance, risk, allow_empty_defect)
    return certain[0] if certain else None


def incentivized_moves(partition: Partition, instance: Topology, risk: RiskModel,
                       allow_empty_defect: bool = False) -> list[Move]:
    partition.validate(instance.n_players)
    certain, _ = _scan(partition, instance, risk, allow_empty_defect, stop_at_first=False)
    return certain


def richest_groups(partition: Partition, instance: Topology, risk: RiskModel) -> list[int]:
    """Indices of every group no other group strictly out-earns."""
    scores = [_scored(g, instance, risk.r).score for g in partition]
    best = max(scores)
    return [i for i, s in enumerate(scores) if not best > s * (1.0 + risk.rtol)]


def richest_group(partition: Partition, instance: Topology, risk: RiskModel) -> tuple[int, float]:
    """Lowest-indexed richest group and the fraction of ``A`` it covers."""
    partition.validate(instance.n_players)
    idx = richest_groups(partition, instance, risk)[0]
    a_s, _ = instance.measure(partition[idx])
    return idx, a_s / instance.total()[0]


def is_nash(partition: Partition, instance: Topology, risk: RiskModel,
            allow_empty_defect: bool = False) -> EquilibriumReport:
    partition.validate(instance.n_players)
    certain, marginal = _scan(partition, instance, risk, allow_empty_defect)
    if certain:
        verdict, marginal = "not_nash", None
    elif marginal is not None:
        verdict = "indeterminate"
    else:
        verdict = "nash"
    idx, frac = richest_group(partition, instance, risk)
    utilities = tuple(_to_utility(_scored(g, instance, risk.r).score, instance, risk) for g in partition)
    confidence = "EXACT" if instance.exact else f"MONTE_CARLO({SIGMA_MARGIN:g}sigma)"
    return EquilibriumReport(
        verdict=verdict,
        violating_move=certain[0] if certain else None,
        marginal_move=marginal,
        richest_index=idx,
        richest_fraction=frac,
        group_utilities=utilities,
        confidence=confidence,
    )


def apply_move(partition: Partition, move: Move) -> Partition:
    groups = [set(g) for g in partition]
    if move.kind == MERGE:
        groups[move.source] |= groups[move.target]
        del groups[move.target]
        return Partition(groups)
    if move.player not in groups[move.source]:
        raise ValueError(f"player {move.player} is not in group {move.source}")
    groups[move.source].discard(move.player)
    if move.kind == DEFECT:
        groups[move.target].add(move.player)
    else:
        groups.append({move.player})
    return Partition(g for g in groups if g)


def best_response_dynamics(initial: Partition, instance: Topology, risk: RiskModel,
                           config: DynamicsConfig = DynamicsConfig()) -> DynamicsResult:
    """Apply incentivized moves until none is left or ``max_steps`` moves were made.

    With ``order="deterministic"`` the first move in scan order fires; with
    ``order="random"`` a uniformly chosen incentivized move fires.
    """
    initial.validate(instance.n_players)
    rng = random.Random(config.seed)
    partition = initial
    trace: list[Move] = []
    while True:
        if config.order == "deterministic":
            move = find_incentivized_move(partition, instance, risk, config.allow_empty_defect)
        else:
            moves = incentivized_moves(partition, instance, risk, config.allow_empty_defect)
            move = rng.choice(moves) if moves else None
        if move is None:
            return DynamicsResult(partition, True, trace)
        if len(trace) >= config.max_steps:
            return DynamicsResult(partition, False, trace)
        partition = apply_move(partition, move)
        trace.append(move)


@functools.lru_cache(maxsize=None)
def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield ()
        return
    a = [0] * n
    m = [0] * n  # m[i] = max(a[:i+1])
    while True:
        yield tuple(a)
        i = n - 1
        while i > 0 and a[i] > m[i - 1]:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        m[i] = max(m[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            m[j] = m[i]


@functools.lru_cache(maxsize=4)
def rgs_array(n: int) -> np.ndarray:
    """Every restricted growth string of length ``n`` as rows of an int8 array."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows = np.zeros((1, 1), dtype=np.int8)
    maxes = np.zeros(1, dtype=np.int8)
    for _ in range(1, n):
        reps = maxes.astype(np.int64) + 2
        parent = np.repeat(np.arange(rows.shape[0]), reps)
        choice = (np.arange(parent.size) - np.repeat(np.cumsum(reps) - reps, reps)).astype(np.int8)
        rows = np.hstack([rows[parent], choice[:, None]])
        maxes = np.maximum(maxes[parent], choice)
    rows.setflags(write=False)
    return rows


def score_table(instance: Topology, risk: RiskModel) -> np.ndarray:
    """Score of every member bitmask (index 0 unused)."""
    n = instance.n_players
    table = np.zeros(1 << n)
    for mask in range(1, 1 << n):
        members = frozenset(i for i in range(n) if mask >> i & 1)
        table[mask] = _scored(members, instance, risk.r).score
    return table


_PAIR_TABLE_MAX_N = 12


def _blocking_tables(table: np.ndarray, n: int, rtol: float) -> tuple[np.ndarray, np.ndarray]:
    """Which disjoint group pairs, and which single groups, admit a move.

    ``pair[A | B << n]`` is true when merging ``A`` and ``B`` or moving one
    player between them is incentivized; ``alone[A]`` is true when some
    member of ``A`` gains by leaving for an empty group.
    """
    scale = 1.0 + rtol
    digits = np.array(np.unravel_index(np.arange(3**n), (3,) * n)).T[:, ::-1]
    bits = np.int64(1) << np.arange(n, dtype=np.int64)
    A = ((digits == 1) * bits).sum(axis=1)
    B = ((digits == 2) * bits).sum(axis=1)
    ok = (A != 0) & (B != 0)
    A, B = A[ok], B[ok]
    tA, tB = table[A], table[B]
    merged = table[A | B]
    fires = (merged > tA * scale) & (merged > tB * scale)
    for x in range(n):
        bx = np.int64(1) << x
        gain_b = table[B | bx]
        gain_a = table[A | bx]
        fires |= ((A & bx) != 0) & (gain_b > tA * scale) & (gain_b > tB * scale)
        fires |= ((B & bx) != 0) & (gain_a > tA * scale) & (gain_a > tB * scale)
    pair = np.zeros(1 << (2 * n), dtype=bool)
    pair[A[fires] | (B[fires] << n)] = True
    masks = np.arange(1 << n, dtype=np.int64)
    alone = np.zeros(1 << n, dtype=bool)
    for x in range(n):
        bx = np.int64(1) << x
        alone |= ((masks & bx) != 0) & (masks != bx) & (table[bx] > table * scale)
    return pair, alone


def _nash_rows_exact(rgs: np.ndarray, table: np.ndarray, rtol: float, allow_empty: bool,
                     blocking: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    p, n = rgs.shape
    groups = np.zeros((p, n), dtype=np.int64)
    rows = np.arange(p)
    for x in range(n):
        groups[rows, rgs[:, x]] += 1 << x
    alive = rows
    g = groups

    def keep(fires):
        nonlocal alive, g
        if fires.any():
            stay = ~fires
            alive, g = alive[stay], g[stay]

    if blocking is not None:
        pair, alone = blocking
        for a in range(n):
            for b in range(a + 1, n):
                if not alive.size:
                    return alive
                keep(pair[g[:, a] | (g[:, b] << n)])
            if allow_empty and alive.size:
                keep(alone[g[:, a]])
        return alive

    lab = rgs[alive]
    scale = 1.0 + rtol
    for a in range(n):
        for b in range(a + 1, n):
            if not alive.size:
                return alive
            valid = g[:, b] != 0
            merged = table[g[:, a] | g[:, b]]
            fires = valid & (merged > table[g[:, a]] * scale) & (merged > table[g[:, b]] * scale)
            if fires.any():
                lab = lab[~fires]
            keep(fires)
    for x in range(n):
        for b in range(n):
            if not alive.size:
                return alive
            src = table[g[np.arange(alive.size), lab[:, x]]]
            host = g[:, b]
            new = table[host | (1 << x)]
            valid = (host != 0) & (lab[:, x] != b)
            fires = valid & (new > src * scale) & (new > table[host] * scale)
            if fires.any():
                lab = lab[~fires]
            keep(fires)
    if allow_empty:
        for x in range(n):
            if not alive.size:
                return alive
            src = table[g[np.arange(alive.size), lab[:, x]]]
            fires = table[1 << x] > src * scale
            if fires.any():
                lab = lab[~fires]
            keep(fires)
    return alive


def enumerate_nash(instance: Topology, risk: RiskModel, allow_empty_defect: bool = False,
                   n_limit: int = 12) -> list[Partition]:
    """Every Nash partition of the players, by exhaustive enumeration.

    Exact topologies are screened in bulk over the restricted growth strings
    using a per-bitmask score table; Monte Carlo instances fall back to
    checking each partition and keep only certain ``"nash"`` verdicts.
    """
    n = instance.n_players
    if n > n_limit:
        raise ValueError(
            f"refusing to enumerate {n} players: Bell({n}) = {bell_number(n):,} partitions "
            f"exceeds the limit n_limit={n_limit}"
        )
    if not instance.exact:
        out = []
        for labels in set_partitions(n):
            part = Partition.from_labels(labels)
            if is_nash(part, instance, risk, allow_empty_defect).is_nash:
                out.append(part)
        return out
    rgs = rgs_array(n)
    table = score_table(instance, risk)
    blocking = _blocking_tables(table, n, risk.rtol) if n <= _PAIR_TABLE_MAX_N else None
    out = []
    chunk = 1 << 20
    for start in range(0, rgs.shape[0], chunk):
        block = rgs[start:start + chunk]
        for row in _nash_rows_exact(block, table, risk.rtol, allow_empty_defect, blocking):
            out.append(Partition.from_labels(block[row].tolist()))
    return out
