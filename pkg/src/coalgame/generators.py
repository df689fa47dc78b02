"""Counterexample graph families and random test instances."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .model import Partition, RiskModel, merge_incentivized, score
from .topology import EuclideanD, GraphTopology, Line1D, SamplingConfig, Topology

_INT_TOL = 1e-9


class InfeasibleParameters(ValueError):
    """Parameters violate a construction's feasibility condition."""


# --- G_z: clique with a pendant path ---------------------------------------


@dataclass(frozen=True)
class GzSpec:
    z: int
    r: float
    clique_size: int
    path_len: int
    z_power_r: float
    feasibility_rhs: float

    @property
    def n_vertices(self) -> int:
        return self.clique_size + self.path_len

    @property
    def richest_fraction(self) -> float:
        return (self.clique_size + 1) / (self.clique_size + self.path_len)

    def to_dict(self) -> dict:
        return {**asdict(self), "n_vertices": self.n_vertices, "richest_fraction": self.richest_fraction}


class GzInstance(NamedTuple):
    graph: GraphTopology
    spec: GzSpec
    v: int


def gz_feasibility_rhs(r: float) -> float:
    return 1.0 / (3.0 * (2.0 ** (1.0 - r) - 1.0))


def gz_spec(z: int, r: float) -> GzSpec:
    if not 0.0 < r < 1.0:
        raise InfeasibleParameters(f"r must lie in (0, 1), got {r}")
    if int(z) != z or z < 0:
        raise InfeasibleParameters(f"z must be a non-negative integer, got {z}")
    z = int(z)
    zr = z**r
    rhs = gz_feasibility_rhs(r)
    if not zr > rhs:
        raise InfeasibleParameters(f"z^r > 1/(3(2^(1-r)-1)) fails: {zr:.6g} <= {rhs:.6g}")
    clique = 12.0 * zr
    if abs(clique - round(clique)) > _INT_TOL * max(1.0, clique):
        raise InfeasibleParameters(f"clique size 12*z^r = {clique:.9g} is not an integer")
    return GzSpec(z=z, r=r, clique_size=int(round(clique)), path_len=3 * z, z_power_r=zr, feasibility_rhs=rhs)


def valid_z(r: float, limit: int) -> list[int]:
    """Every ``z <= limit`` for which the G_z construction is feasible and integral."""
    out = []
    for z in range(1, limit + 1):
        try:
            gz_spec(z, r)
        except InfeasibleParameters:
            continue
        out.append(z)
    return out


def gen_Gz(z: int, r: float) -> GzInstance:
    """Clique of ``12 z^r`` vertices (``0`` is the attachment vertex ``v``)
    with a path of ``3z`` further vertices hanging off ``v``."""
    spec = gz_spec(z, r)
    k = spec.clique_size
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    prev = 0
    for p in range(k, k + spec.path_len):
        edges.append((prev, p))
        prev = p
    return GzInstance(GraphTopology(spec.n_vertices, edges), spec, 0)


@dataclass(frozen=True)
class GzClaims:
    type1_merges_blocked: bool
    type1_type2_merges_blocked: bool
    type2_below_v: bool
    coverage_chain_holds: bool
    richest_fraction: float

    @property
    def all_hold(self) -> bool:
        return (self.type1_merges_blocked and self.type1_type2_merges_blocked
                and self.type2_below_v and self.coverage_chain_holds)


def gz_claims(gz: GzInstance, risk: RiskModel) -> GzClaims:
    """Evaluate the three structural claims about G_z on the generated graph.

    1. No pair of clique vertices gains by merging (pairs with ``v`` and
       pairs among the interchangeable other clique vertices).
    2. No clique vertex gains by merging with any path vertex.
    3. ``{v}`` out-earns every contiguous block of ``b`` path vertices,
       for every ``b`` up to the path length; blocks starting next to ``v``
       have the largest coverage for their size.

    ``coverage_chain_holds`` records the auxiliary bound ``3 b^r < 12 z^r + 1``
    over the same range of ``b``.
    """
    g, spec, v = gz
    k, n, r, rtol = spec.clique_size, spec.n_vertices, risk.r, risk.rtol
    singles = Partition.singletons(n)
    other = 1 if v != 1 else 2
    pairs = [(v, y) for y in range(k) if y != v]
    pairs += [(other, y) for y in range(k) if y not in (v, other)]
    claim1 = not any(merge_incentivized(a, b, singles, g, risk).incentivized for a, b in pairs)

    claim2 = True
    for p in (v, other):
        alone = score(1, g.measure(frozenset([p]))[0], r)
        for q in range(k, n):
            joint = score(2, g.measure(frozenset([p, q]))[0], r)
            if joint > alone * (1.0 + rtol):
                claim2 = False
                break

    u1 = score(1, g.measure(frozenset([v]))[0], r)
    claim3 = True
    chain = True
    mask = 0
    for b, q in enumerate(range(k, n), start=1):
        mask |= g._nbhd[q]
        u2 = score(b, float(mask.bit_count()), r)
        if not u1 > u2 * (1.0 + rtol):
            claim3 = False
        if not 3.0 * b**r < k + 1:
            chain = False
    frac = g.measure(frozenset([v]))[0] / n
    return GzClaims(claim1, claim2, claim3, chain, frac)


# --- G_{k,l}: clique whose vertices each carry l leaves --------------------


def f_ell(ell: int, r: float) -> float:
    return (1.0 + 1.0 / (ell + 1.0)) ** (1.0 - r)


def gamma(r: float) -> float:
    t = 2.0 ** (1.0 - r)
    return (2.0 - t) / (t - 1.0)


def k_threshold(ell: int, r: float) -> float:
    """``k`` must strictly exceed this for the star partition to be Nash."""
    f = f_ell(ell, r)
    return ell * (2.0 - f) / (f - 1.0)


@dataclass(frozen=True)
class GklSpec:
    k: int
    ell: int
    r: float
    f_ell: float
    gamma: float
    k_threshold: float

    @property
    def n_vertices(self) -> int:
        return self.k + self.k * self.ell

    @property
    def group_fraction(self) -> float:
        return (self.k + self.ell) / (self.k + self.k * self.ell)

    def to_dict(self) -> dict:
        return {**asdict(self), "n_vertices": self.n_vertices, "group_fraction": self.group_fraction}


class GklInstance(NamedTuple):
    graph: GraphTopology
    spec: GklSpec
    partition: Partition


def gkl_spec(k: int, ell: int, r: float) -> GklSpec:
    if not 0.0 < r < 1.0:
        raise InfeasibleParameters(f"r must lie in (0, 1), got {r}")
    if ell < 1 or k < 1:
        raise InfeasibleParameters(f"need k >= 1 and l >= 1, got k={k}, l={ell}")
    thr = k_threshold(ell, r)
    if not k > thr:
        raise InfeasibleParameters(f"k > l(2-f(l))/(f(l)-1) fails: k={k} <= {thr:.6g}")
    return GklSpec(k=k, ell=ell, r=r, f_ell=f_ell(ell, r), gamma=gamma(r), k_threshold=thr)


def gen_Gkl(k: int, ell: int, r: float) -> GklInstance:
    """Primary vertices ``0..k-1`` form a clique; vertex ``i`` owns leaves
    ``k + i*ell .. k + (i+1)*ell - 1``. Returns the star partition too."""
    spec = gkl_spec(k, ell, r)
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    groups = []
    for i in range(k):
        leaves = range(k + i * ell, k + (i + 1) * ell)
        edges.extend((i, leaf) for leaf in leaves)
        groups.append([i, *leaves])
    return GklInstance(GraphTopology(spec.n_vertices, edges), spec, Partition(groups))


def feasible_kl(r: float, c: float) -> tuple[int, int]:
    """Smallest ``(k, ell)`` whose star partition is Nash with every group
    covering strictly less than fraction ``c``."""
    if not 0.0 < c < 1.0:
        raise ValueError(f"target fraction c must lie in (0, 1), got {c}")
    g = gamma(r)
    ell = max(1, math.floor((1.0 + 1.0 / g) / c - 1.0))
    while not (1.0 + 1.0 / g) / (1.0 + ell) < c:
        ell += 1
    while ell > 1 and (1.0 + 1.0 / g) / ell < c:
        ell -= 1
    k = math.floor(k_threshold(ell, r)) + 1
    return k, ell


# --- random instances --------------------------------------------------------


def random_regular_graph(f: int, n: int, seed: int = 0, max_tries: int = 100_000) -> GraphTopology:
    """Uniform pairing of ``n*f`` stubs, rejecting any loop or repeated edge."""
    if (n * f) % 2:
        raise InfeasibleParameters(f"n*f must be even, got n={n}, f={f}")
    if not 0 <= f < n:
        raise InfeasibleParameters(f"need 0 <= f < n, got f={f}, n={n}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), f)
    for _ in range(max_tries):
        pairs = np.sort(rng.permutation(stubs).reshape(-1, 2), axis=1)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        if len({(int(a), int(b)) for a, b in pairs}) != len(pairs):
            continue
        return GraphTopology(n, pairs.tolist())
    raise RuntimeError(f"no simple {f}-regular graph on {n} vertices after {max_tries} pairings")


def gen_random(kind: str, n: int, seed: int = 0, extent: float = 20.0, d: int = 2, f: int = 3,
               sampling: SamplingConfig | None = None) -> Topology:
    """Random instance: ``"line"`` or ``"euclid"`` positions uniform in
    ``[0, extent]^d``, or a random ``f``-regular graph for ``"regular"``."""
    if n < 1:
        raise ValueError(f"need at least one player, got {n}")
    if kind == "regular":
        return random_regular_graph(f, n, seed)
    rng = np.random.default_rng(seed)
    if kind == "line":
        return Line1D(rng.uniform(0.0, extent, size=n))
    if kind == "euclid":
        return EuclideanD(rng.uniform(0.0, extent, size=(n, d)), sampling)
    raise ValueError(f"unknown instance kind {kind!r}")
