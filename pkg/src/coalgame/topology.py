"""Coverage measures on the line, in d-dimensional space and on graphs.

Each player covers the closed radius-1 neighbourhood of its location: the
interval ``[x-1, x+1]`` on the line, the unit ball in ``R^d`` and the closed
neighbourhood of its vertex on a graph. The total measure ``A`` is the
measure of the union of all players' coverage, so uncovered space never
enters a fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

_CACHE_LIMIT = 1 << 16


@dataclass(frozen=True)
class SamplingConfig:
    samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"samples must be a positive integer, got {self.samples}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")


@dataclass(frozen=True)
class CoverageReport:
    a_s: float
    a_total: float
    fraction: float
    std_error: float = 0.0

    def to_dict(self) -> dict:
        return {
            "a_s": self.a_s,
            "a_total": self.a_total,
            "fraction": self.fraction,
            "std_error": self.std_error,
        }


def _members(members: Iterable[int], n: int) -> frozenset[int]:
    fs = frozenset(int(m) for m in members)
    if not fs:
        raise ValueError("member set must be nonempty")
    bad = sorted(m for m in fs if not 0 <= m < n)
    if bad:
        raise ValueError(f"unknown player ids {bad} (instance has {n} players)")
    return fs


def interval_union_length(centers: Iterable[float], half_width: float = 1.0) -> float:
    """Length of the union of ``[c - w, c + w]`` by sorting and sweeping."""
    pts = sorted(centers)
    if not pts:
        return 0.0
    total = 0.0
    lo, hi = pts[0] - half_width, pts[0] + half_width
    for c in pts[1:]:
        a, b = c - half_width, c + half_width
        if a > hi:
            total += hi - lo
            lo, hi = a, b
        else:
            hi = max(hi, b)
    return total + (hi - lo)


class Topology:
    """Base class: a set of ``n_players`` players and a coverage measure."""

    kind = "abstract"
    exact = True

    @property
    def n_players(self) -> int:
        raise NotImplementedError

    def measure(self, members: frozenset[int]) -> tuple[float, float]:
        """``(A_S, std_error)`` for a validated, nonempty member set."""
        raise NotImplementedError

    def total(self) -> tuple[float, float]:
        return self.measure(frozenset(range(self.n_players)))

    def coverage_unit(self) -> float:
        """Largest measure a single player can cover."""
        raise NotImplementedError


class Line1D(Topology):
    """Players on the real line, each covering a closed interval of length 2."""

    kind = "line"

    def __init__(self, positions):
        pos = np.asarray(positions, dtype=float).reshape(-1)
        if pos.size == 0:
            raise ValueError("an instance needs at least one player")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        self.positions = pos

    @property
    def n_players(self) -> int:
        return int(self.positions.size)

    def measure(self, members):
        return interval_union_length(self.positions[sorted(members)].tolist()), 0.0

    def coverage_unit(self) -> float:
        return 2.0

    def __repr__(self):
        return f"Line1D(n={self.n_players})"


class BallUnionSampler:
    """Stratified Monte Carlo estimator for unions of equal-radius balls.

    Points are drawn uniformly from each ball's axis-aligned bounding box
    (one stratum and one independent seed stream per ball). A point drawn in
    box ``i`` counts towards a member set ``S`` when it lies in some ball of
    ``S`` and ``i`` is the lowest-indexed box of ``S`` containing it, which
    makes the summed estimate unbiased for the union volume.
    """

    def __init__(self, centers, radius: float = 1.0, samples: int = 200_000, seed: int = 0):
        c = np.asarray(centers, dtype=float)
        if c.ndim != 2 or c.shape[0] == 0:
            raise ValueError("centers must be a nonempty (n, d) array")
        n, d = c.shape
        if samples < n:
            raise ValueError(f"need at least one sample per ball ({n}), got {samples}")
        self.centers = c
        self.radius = float(radius)
        self.box_volume = (2.0 * self.radius) ** d
        counts = np.full(n, samples // n)
        counts[: samples % n] += 1
        streams = np.random.SeedSequence(seed).spawn(n)
        r2 = self.radius**2
        self._in_ball = []
        self._in_box = []
        for i in range(n):
            rng = np.random.default_rng(streams[i])
            pts = c[i] + rng.uniform(-self.radius, self.radius, size=(int(counts[i]), d))
            diff = pts[:, None, :] - c[None, :, :]
            self._in_ball.append(np.einsum("kjd,kjd->kj", diff, diff) <= r2)
            self._in_box.append(np.all(np.abs(diff) <= self.radius, axis=2))
        self.counts = counts

    def volume(self, members: Iterable[int]) -> tuple[float, float]:
        idx = np.array(sorted(members), dtype=int)
        vol = 0.0
        var = 0.0
        for pos, i in enumerate(idx):
            hit = self._in_ball[i][:, idx].any(axis=1)
            owner = np.argmax(self._in_box[i][:, idx], axis=1) == pos
            p = float(np.mean(hit & owner))
            vol += self.box_volume * p
            var += self.box_volume**2 * p * (1.0 - p) / self.counts[i]
        return vol, math.sqrt(var)

    def exclusive_volume(self, x: int, members: Iterable[int]) -> tuple[float, float]:
        """Volume of ball ``x`` not covered by ``members``, from stratum ``x``."""
        idx = np.array(sorted(members), dtype=int)
        inside = self._in_ball[x][:, x]
        if idx.size:
            inside = inside & ~self._in_ball[x][:, idx].any(axis=1)
        p = float(np.mean(inside))
        return self.box_volume * p, self.box_volume * math.sqrt(p * (1.0 - p) / self.counts[x])


def union_volume(centers, radius: float = 1.0, samples: int = 200_000, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo ``(volume, std_error)`` of a union of radius-``radius`` balls."""
    s = BallUnionSampler(centers, radius, samples, seed)
    return s.volume(range(len(s.centers)))


class EuclideanD(Topology):
    """Players in ``R^d``, each covering the closed unit ball at its position.

    Measures are Monte Carlo estimates drawn once per instance from
    ``sampling``; ``d == 1`` is computed exactly by the interval sweep.
    """

    kind = "euclid"

    def __init__(self, positions, sampling: SamplingConfig | None = None):
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 1)
        if pos.ndim != 2 or pos.shape[0] == 0 or pos.shape[1] == 0:
            raise ValueError("positions must be a nonempty (n, d) array with d >= 1")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        self.positions = pos
        self.sampling = sampling or SamplingConfig()
        self._sampler: BallUnionSampler | None = None
        self._cache: dict[frozenset[int], tuple[float, float]] = {}

    @property
    def d(self) -> int:
        return int(self.positions.shape[1])

    @property
    def exact(self) -> bool:
        return self.d == 1

    @property
    def n_players(self) -> int:
        return int(self.positions.shape[0])

    @property
    def sampler(self) -> BallUnionSampler:
        if self._sampler is None:
            samples = max(self.sampling.samples, self.n_players)
            self._sampler = BallUnionSampler(self.positions, 1.0, samples, self.sampling.seed)
        return self._sampler

    def measure(self, members):
        if self.d == 1:
            return interval_union_length(self.positions[sorted(members), 0].tolist()), 0.0
        hit = self._cache.get(members)
        if hit is None:
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache.clear()
            hit = self._cache[members] = self.sampler.volume(members)
        return hit

    def coverage_unit(self) -> float:
        return unit_ball_volume(self.d)

    def __repr__(self):
        return f"EuclideanD(n={self.n_players}, d={self.d})"


class GraphTopology(Topology):
    """Players on the vertices of an undirected simple graph.

    Player ``i`` sits on vertex ``i`` and covers its closed neighbourhood.
    Closed neighbourhoods are held as integer bitmasks so a union is an OR.
    """

    kind = "graph"

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise ValueError("an instance needs at least one player")
        self.n = int(n)
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) references a vertex outside 0..{self.n - 1}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            adj[u].add(v)
            adj[v].add(u)
        self.adjacency = [frozenset(a) for a in adj]
        self._nbhd = [(1 << i) | sum(1 << j for j in a) for i, a in enumerate(self.adjacency)]

    @property
    def n_players(self) -> int:
        return self.n

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in sorted(self.adjacency[u]) if u < v]

    @property
    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @property
    def regular_degree(self) -> int | None:
        """Common degree ``f`` if the graph is regular, else ``None``."""
        deg = set(self.degrees)
        return deg.pop() if len(deg) == 1 else None

    def covered_mask(self, members: Iterable[int]) -> int:
        mask = 0
        for m in members:
            mask |= self._nbhd[m]
        return mask

    def covered(self, members: Iterable[int]) -> set[int]:
        mask = self.covered_mask(members)
        return {i for i in range(self.n) if mask >> i & 1}

    def measure(self, members):
        return float(self.covered_mask(members).bit_count()), 0.0

    def total(self):
        return float(self.n), 0.0

    def coverage_unit(self) -> float:
        return float(self.max_degree + 1)

    def __repr__(self):
        return f"GraphTopology(n={self.n}, edges={len(self.edges)})"


def coverage_measure(members: Iterable[int], instance: Topology, sampling: SamplingConfig | None = None) -> CoverageReport:
    """Measure ``A_S`` of the players' union coverage, with ``A`` and ``A_S/A``."""
    instance = _resample(instance, sampling)
    fs = _members(members, instance.n_players)
    a_s, se = instance.measure(fs)
    a_total, _ = instance.total()
    return CoverageReport(a_s, a_total, a_s / a_total, se)


def total_measure(instance: Topology, sampling: SamplingConfig | None = None) -> CoverageReport:
    instance = _resample(instance, sampling)
    if instance.n_players < 1:
        raise ValueError("an instance needs at least one player")
    a_total, se = instance.total()
    return CoverageReport(a_total, a_total, 1.0, se)


def marginal_contribution(x: int, members: Iterable[int], instance: Topology, sampling: SamplingConfig | None = None) -> float:
    """Measure that player ``x`` adds to the coverage of ``members``."""
    instance = _resample(instance, sampling)
    fs = frozenset(int(m) for m in members)
    if x in fs:
        raise ValueError(f"player {x} is already a member")
    _members(fs | {x}, instance.n_players)
    if isinstance(instance, GraphTopology):
        base = instance.covered_mask(fs)
        return float((instance._nbhd[x] & ~base).bit_count())
    if isinstance(instance, EuclideanD) and not instance.exact:
        return instance.sampler.exclusive_volume(x, fs)[0]
    with_x, _ = instance.measure(fs | {x})
    without = instance.measure(fs)[0] if fs else 0.0
    return with_x - without


def _resample(instance: Topology, sampling: SamplingConfig | None) -> Topology:
    if sampling is None or not isinstance(instance, EuclideanD) or sampling == instance.sampling:
        return instance
    return EuclideanD(instance.positions, sampling)


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in ``R^d`` via ``V_d = (2*pi/d) * V_{d-2}``."""
    if d < 0 or int(d) != d:
        raise ValueError(f"dimension must be a non-negative integer, got {d}")
    v = [1.0, 2.0]
    for k in range(2, int(d) + 1):
        v.append(2.0 * math.pi / k * v[k - 2])
    return v[int(d)]


def two_ball_intersection_bound(a: float, d: int) -> float:
    """Cylinder bound on the intersection of two unit balls whose centres are ``2a`` apart."""
    if d < 2:
        raise ValueError(f"the bound needs d >= 2, got {d}")
    if a < 0:
        raise ValueError(f"half centre distance must be non-negative, got {a}")
    if a >= 1.0:
        return 0.0
    return 2.0 * (1.0 - a * a) ** ((d - 1) / 2.0) * unit_ball_volume(d - 1)
