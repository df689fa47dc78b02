"""Closed-form coverage and prize-money bounds, and checks against equilibria."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .equilibrium import is_nash, richest_group
from .model import Partition, RiskModel, _scored
from .topology import EuclideanD, GraphTopology, Line1D, Topology, unit_ball_volume

EXACT_TOL = 1e-9


def _check_r(r: float) -> None:
    if not 0.0 < r < 1.0:
        raise ValueError(f"risk aversion r must lie in (0, 1), got {r}")


def line_richest_bound(r: float) -> float:
    _check_r(r)
    return 1.0 / (1.0 + 2.0 * (1.0 - r))


def euclid_bound_basic(d: int) -> float:
    if d < 1:
        raise ValueError(f"dimension must be at least 1, got {d}")
    return 3.0 ** (-d)


def euclid_delta(d: int, r: float) -> float:
    """Largest half-distance from a richest group at which an outsider can sit."""
    _check_r(r)
    if d < 2:
        raise ValueError("the improved Euclidean bound needs d >= 2; use line_richest_bound for d = 1")
    return math.sqrt(1.0 - (r / (2.0 * d)) ** (2.0 / (d - 1)))


def euclid_bound_improved(d: int, r: float) -> float:
    return (2.0 * euclid_delta(d, r) + 1.0) ** (-d)


def regular_graph_bound(f: int, r: float) -> float:
    _check_r(r)
    if f < 1:
        raise ValueError(f"degree must be at least 1, got {f}")
    return 1.0 / ((f - 1) / (r * (f + 1)) + 1.0)


def min_money_by_area(lam: float, A: float, c: float, r: float) -> float:
    _check_r(r)
    if not (0.0 < lam <= 1.0 and A > 0 and c > 0):
        raise ValueError("need 0 < lam <= 1, A > 0 and c > 0")
    return lam * A * c ** (1.0 / (1.0 - r))


def min_money_by_size(k: int, c: float, A: float, N: int, r: float) -> float:
    _check_r(r)
    if not (k >= 1 and c > 0 and A > 0 and N >= 1):
        raise ValueError("need k >= 1, c > 0, A > 0 and N >= 1")
    return k * (c * A / N) ** (1.0 / (1.0 - r))


def exclusive_contribution_cap(kind: str, r: float, d: int | None = None, max_degree: int | None = None) -> float:
    """Measure no outsider of a richest Nash group may add to it.

    ``kind`` is ``"line"``, ``"euclid"`` (needs ``d``) or ``"graph"``
    (needs ``max_degree``).
    """
    _check_r(r)
    if kind == "line":
        return 2.0 * (1.0 - r)
    if kind == "euclid":
        if d is None:
            raise ValueError("euclid cap needs the dimension d")
        return (1.0 - r) * unit_ball_volume(d)
    if kind == "graph":
        if max_degree is None:
            raise ValueError("graph cap needs max_degree")
        return (1.0 - r) * (max_degree + 1)
    raise ValueError(f"unknown topology kind {kind!r}")


def instance_cap(instance: Topology, r: float) -> float:
    if isinstance(instance, Line1D) or (isinstance(instance, EuclideanD) and instance.d == 1):
        return exclusive_contribution_cap("line", r)
    if isinstance(instance, EuclideanD):
        return exclusive_contribution_cap("euclid", r, d=instance.d)
    return exclusive_contribution_cap("graph", r, max_degree=instance.max_degree)


def applicable_bound(instance: Topology, r: float) -> tuple[float | None, str]:
    """Theorem bound on a richest group's fraction, with a short label.

    Non-regular graphs have no bound and return ``(None, "none")``.
    """
    if isinstance(instance, Line1D) or (isinstance(instance, EuclideanD) and instance.d == 1):
        return line_richest_bound(r), "line"
    if isinstance(instance, EuclideanD):
        return euclid_bound_improved(instance.d, r), "euclid_improved"
    if isinstance(instance, GraphTopology):
        f = instance.regular_degree
        if f is not None and f >= 1:
            return regular_graph_bound(f, r), "regular_graph"
        return None, "none"
    raise TypeError(f"unsupported instance {instance!r}")


@dataclass(frozen=True)
class BoundCheck:
    bound_value: float | None
    observed: float
    satisfied: bool | None
    margin: float | None
    is_nash: bool
    theorem: str

    def to_dict(self) -> dict:
        return {
            "bound_value": self.bound_value,
            "observed": self.observed,
            "satisfied": self.satisfied,
            "margin": self.margin,
            "is_nash": self.is_nash,
            "theorem": self.theorem,
        }


def verify_richest_bound(instance: Topology, partition: Partition, risk: RiskModel,
                         allow_empty_defect: bool = False) -> BoundCheck:
    """Compare the richest group's coverage fraction with the topology's bound.

    A non-Nash partition is still checked; ``is_nash`` reports it.
    Monte Carlo instances get three standard errors of slack.
    """
    nash = is_nash(partition, instance, risk, allow_empty_defect).is_nash
    idx, observed = richest_group(partition, instance, risk)
    bound, theorem = applicable_bound(instance, risk.r)
    if bound is None:
        return BoundCheck(None, observed, None, None, nash, theorem)
    if instance.exact:
        tol = EXACT_TOL
    else:
        _, se = instance.measure(partition[idx])
        tol = 3.0 * se / instance.total()[0]
    margin = observed - bound
    return BoundCheck(bound, observed, margin >= -tol, margin, nash, theorem)


@dataclass(frozen=True)
class MoneyCheck:
    group: int
    lam: float
    c: float
    area_bound: float
    size_bound: float
    M: float

    @property
    def satisfied(self) -> bool:
        slack = EXACT_TOL * max(1.0, self.M)
        return self.M >= self.area_bound - slack and self.M >= self.size_bound - slack


def money_checks(instance: Topology, partition: Partition, risk: RiskModel) -> list[MoneyCheck]:
    """Prize-money lower bounds implied by each group's observed coverage and utility.

    Measures are normalised so one player covers at most one unit.
    """
    unit = instance.coverage_unit()
    a_total = instance.total()[0] / unit
    out = []
    for i, g in enumerate(partition):
        a_s = instance.measure(g)[0] / unit
        lam = a_s / a_total
        c = _scored(g, instance, risk.r).score / instance.total()[0] * risk.M ** (1.0 - risk.r)
        out.append(MoneyCheck(
            group=i,
            lam=lam,
            c=c,
            area_bound=min_money_by_area(min(lam, 1.0), a_total, c, risk.r),
            size_bound=min_money_by_size(len(g), c, a_total, instance.n_players, risk.r),
            M=risk.M,
        ))
    return out
