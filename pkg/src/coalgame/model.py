"""Risk-averse utility model and the merge/defect incentive predicates.

Per-member expected utility of a group ``S`` is ``(M/|S|)**(1-r) * A_S/A``.
Every incentive comparison is carried out on the *score*
``A_S * |S|**(r-1)``, which drops the positive factors ``M**(1-r)`` and ``1/A``
shared by both sides, so verdicts do not depend on ``M`` at all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

# Monte Carlo gaps smaller than this many combined standard errors are not
# trusted to decide a move.
SIGMA_MARGIN = 3.0
DEFAULT_RTOL = 1e-12


class RejectedMoveError(ValueError):
    """Raised when a move is not part of the game being played."""


@dataclass(frozen=True)
class RiskModel:
    """Risk aversion ``r`` in (0, 1), prize money ``M`` > 0 and the relative
    tolerance used when deciding whether a utility strictly increases."""

    r: float
    M: float = 1.0
    rtol: float = DEFAULT_RTOL

    def __post_init__(self):
        if not (0.0 < self.r < 1.0) or math.isnan(self.r):
            raise ValueError(f"risk aversion r must lie in the open interval (0, 1), got {self.r}")
        if not self.M > 0 or math.isinf(self.M):
            raise ValueError(f"prize money M must be positive and finite, got {self.M}")
        if not self.rtol >= 0:
            raise ValueError(f"rtol must be non-negative, got {self.rtol}")

    def with_money(self, M: float) -> "RiskModel":
        return RiskModel(self.r, M, self.rtol)


@dataclass(frozen=True)
class Partition:
    """An ordered list of disjoint, nonempty groups of player ids."""

    groups: tuple[frozenset[int], ...]

    def __init__(self, groups: Iterable[Iterable[int]]):
        frozen = []
        for g in groups:
            members = list(g)
            fs = frozenset(members)
            if len(fs) != len(members):
                raise ValueError(f"group {sorted(members)} lists a player twice")
            frozen.append(fs)
        object.__setattr__(self, "groups", tuple(frozen))
        seen: set[int] = set()
        for g in self.groups:
            if not g:
                raise ValueError("groups must be nonempty")
            if seen & g:
                raise ValueError(f"players {sorted(seen & g)} appear in more than one group")
            seen |= g

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls([i] for i in range(n))

    @classmethod
    def grand(cls, n: int) -> "Partition":
        return cls([range(n)])

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Groups ordered by first appearance of each label."""
        order: dict[int, list[int]] = {}
        for player, lab in enumerate(labels):
            order.setdefault(int(lab), []).append(player)
        return cls(order.values())

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, i: int) -> frozenset[int]:
        return self.groups[i]

    @property
    def players(self) -> frozenset[int]:
        return frozenset().union(*self.groups)

    def labels(self) -> list[int]:
        out = [0] * len(self.players)
        for idx, g in enumerate(self.groups):
            for p in g:
                out[p] = idx
        return out

    def group_of(self, player: int) -> int:
        for idx, g in enumerate(self.groups):
            if player in g:
                return idx
        raise KeyError(f"player {player} is not in the partition")

    def validate(self, n_players: int) -> None:
        """Check the groups cover exactly ``0..n_players-1``."""
        players = self.players
        unknown = sorted(p for p in players if not 0 <= p < n_players)
        if unknown:
            raise ValueError(f"unknown player ids {unknown} (instance has {n_players} players)")
        missing = sorted(set(range(n_players)) - players)
        if missing:
            raise ValueError(f"players {missing} are not assigned to any group")

    def canonical(self) -> "Partition":
        """Same partition with groups sorted by their smallest member."""
        return Partition(sorted(self.groups, key=min))

    def to_text(self) -> str:
        return "\n".join(" ".join(str(p) for p in sorted(g)) for g in self.groups) + "\n"

    def __str__(self) -> str:
        return " | ".join(" ".join(str(p) for p in sorted(g)) for g in self.groups)


class Incentive(NamedTuple):
    """Outcome of evaluating a move.

    ``before`` holds the current per-member utilities of the consulted
    parties, ``after`` the per-member utility they would share afterwards.
    ``indeterminate`` is set when the move would fire on the point estimate
    but the gap is within the Monte Carlo noise margin.
    """

    incentivized: bool
    before: tuple[float, ...]
    after: float
    indeterminate: bool = False


def utility(x: float, risk: RiskModel) -> float:
    if x < 0:
        raise ValueError(f"utility is defined for non-negative money, got {x}")
    return x ** (1.0 - risk.r)


def group_expected_utility(n: int, p: float, risk: RiskModel) -> float:
    """Per-member expected utility of a group of ``n`` players covering fraction ``p``."""
    if n < 1:
        raise ValueError(f"group size must be at least 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"coverage fraction must lie in [0, 1], got {p}")
    return utility(risk.M / n, risk) * p


def score(n: int, a_s: float, r: float) -> float:
    """Utility up to the common factor ``M**(1-r) / A``."""
    return a_s * n ** (r - 1.0)


def gain(new: float, old: float, se: float, rtol: float) -> str:
    """Classify ``new`` against ``old``: ``"yes"``, ``"no"`` or ``"maybe"``.

    A strict increase means ``new > old * (1 + rtol)``. With a nonzero
    standard error ``se`` of the gap, any gap within ``SIGMA_MARGIN * se``
    of the threshold, on either side, is ``"maybe"``.
    """
    threshold = old * (1.0 + rtol)
    if se > 0 and abs(new - threshold) <= SIGMA_MARGIN * se:
        return "maybe"
    return "yes" if new > threshold else "no"


def combine(verdicts: Iterable[str]) -> str:
    verdicts = list(verdicts)
    if "no" in verdicts:
        return "no"
    if "maybe" in verdicts:
        return "maybe"
    return "yes"


class _Scored(NamedTuple):
    score: float
    se: float
    a_s: float


def _scored(members: frozenset[int], instance, r: float) -> _Scored:
    a_s, se = instance.measure(members)
    factor = len(members) ** (r - 1.0)
    return _Scored(score(len(members), a_s, r), se * factor, a_s)


def _to_utility(s: float, instance, risk: RiskModel) -> float:
    a_total, _ = instance.total()
    return s * risk.M ** (1.0 - risk.r) / a_total


def _decide(after: _Scored, befores: Sequence[_Scored], instance, risk: RiskModel) -> Incentive:
    verdict = combine(
        gain(after.score, b.score, math.hypot(after.se, b.se), risk.rtol) for b in befores
    )
    return Incentive(
        incentivized=verdict == "yes",
        before=tuple(_to_utility(b.score, instance, risk) for b in befores),
        after=_to_utility(after.score, instance, risk),
        indeterminate=verdict == "maybe",
    )


def merge_incentivized(i: int, j: int, partition: Partition, instance, risk: RiskModel) -> Incentive:
    """Would every member of groups ``i`` and ``j`` strictly gain by merging?"""
    k = len(partition)
    if i == j:
        raise ValueError("cannot merge a group with itself")
    if not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"group index out of range for a partition of {k} groups: {i}, {j}")
    gi, gj = partition[i], partition[j]
    before = [_scored(gi, instance, risk.r), _scored(gj, instance, risk.r)]
    after = _scored(gi | gj, instance, risk.r)
    return _decide(after, before, instance, risk)


def defect_incentivized(
    x: int,
    source: int,
    target: int | None,
    partition: Partition,
    instance,
    risk: RiskModel,
    allow_empty: bool = False,
) -> Incentive:
    """Would player ``x`` and everyone in group ``target`` strictly gain if ``x``
    left group ``source`` for it?

    ``target=None`` means founding a new singleton group, which is only a
    legal move when ``allow_empty`` is set. Remaining members of the source
    group are never consulted.
    """
    k = len(partition)
    if not 0 <= source < k:
        raise IndexError(f"source group {source} out of range")
    if x not in partition[source]:
        raise ValueError(f"player {x} is not a member of group {source}")
    current = _scored(partition[source], instance, risk.r)
    if target is None:
        if not allow_empty:
            raise RejectedMoveError("defection to an empty group is not allowed in this game")
        after = _scored(frozenset([x]), instance, risk.r)
        return _decide(after, [current], instance, risk)
    if target == source:
        raise ValueError("target group must differ from the source group")
    if not 0 <= target < k:
        raise IndexError(f"target group {target} out of range")
    host = _scored(partition[target], instance, risk.r)
    after = _scored(partition[target] | {x}, instance, risk.r)
    return _decide(after, [current, host], instance, risk)
