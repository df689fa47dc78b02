"""Acceptance criteria 1-12, each at its stated tolerance.

Every test appends one ``[PASS]``/``[FAIL]`` line, shown in the terminal
summary under "acceptance criteria".
"""
import functools
import math
import random
from contextlib import contextmanager

import numpy as np
import pytest

from coalgame.bounds import (
    euclid_bound_basic,
    euclid_bound_improved,
    euclid_delta,
    exclusive_contribution_cap,
    line_richest_bound,
    money_checks,
    regular_graph_bound,
)
from coalgame.equilibrium import (
    DynamicsConfig,
    best_response_dynamics,
    candidate_moves,
    enumerate_nash,
    evaluate_move,
    find_incentivized_move,
    is_nash,
    richest_groups,
)
from coalgame.generators import (
    InfeasibleParameters,
    feasible_kl,
    gen_Gkl,
    gen_Gz,
    gen_random,
    gz_claims,
    random_regular_graph,
)
from coalgame.model import Partition, RiskModel, defect_incentivized, group_expected_utility, merge_incentivized
from coalgame.topology import (
    EuclideanD,
    GraphTopology,
    Line1D,
    SamplingConfig,
    coverage_measure,
    union_volume,
    unit_ball_volume,
)
from conftest import ACCEPTANCE_LINES
from oracles import BruteGame, graph_union_size, line_union_length, two_disk_union_area

pytestmark = pytest.mark.acceptance

EXACT_TOL = 1e-9


def _record(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {num}. {name}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


@contextmanager
def criterion(num, name):
    info = {}
    try:
        yield info
    except BaseException as exc:
        _record(num, name, False, f"{type(exc).__name__}: {exc}".splitlines()[0][:160])
        raise
    _record(num, name, True, info.get("detail", ""))


def _measure_cache(instance):
    @functools.lru_cache(maxsize=None)
    def measure(members):
        return instance.measure(members)[0]
    return measure


def _enumerated(instances):
    out = []
    for inst, risk in instances:
        out.append((inst, risk, enumerate_nash(inst, risk)))
    return out


@pytest.fixture(scope="module")
def line_runs():
    rng = np.random.default_rng(20240101)
    rs = [0.25, 0.5, 0.75]
    instances = []
    for i in range(200):
        n = int(rng.integers(1, 11))
        instances.append((Line1D(rng.uniform(0.0, 20.0, size=n)), RiskModel(rs[i % 3])))
    return _enumerated(instances)


@pytest.fixture(scope="module")
def graph_runs():
    instances = []
    for i in range(100):
        n = (6, 8, 10, 12)[i % 4]
        r = (0.25, 0.5)[(i // 4) % 2]
        instances.append((random_regular_graph(3, n, seed=1000 + i), RiskModel(r)))
    return _enumerated(instances)


def _richest_fractions(inst, risk, partitions):
    measure = _measure_cache(inst)
    total = inst.total()[0]
    for p in partitions:
        for idx in richest_groups(p, inst, risk):
            yield p, idx, measure(p[idx]) / total


def test_c01_line_theorem(line_runs):
    with criterion(1, "line richest-group bound over 200 random instances") as info:
        worst, count = math.inf, 0
        for inst, risk, parts in line_runs:
            assert parts, "every line instance should have a Nash partition"
            bound = line_richest_bound(risk.r)
            for _, _, frac in _richest_fractions(inst, risk, parts):
                assert frac >= bound - EXACT_TOL, f"fraction {frac} below bound {bound}"
                worst = min(worst, frac - bound)
                count += 1
        info["detail"] = f"{count} richest groups, min slack {worst:.4f}"


def test_c02_regular_graph_theorem(graph_runs):
    with criterion(2, "3-regular richest-group bound over 100 random graphs") as info:
        worst, count = math.inf, 0
        for inst, risk, parts in graph_runs:
            assert inst.regular_degree == 3
            bound = regular_graph_bound(3, risk.r)
            for _, _, frac in _richest_fractions(inst, risk, parts):
                assert frac >= bound - EXACT_TOL, f"fraction {frac} below bound {bound}"
                worst = min(worst, frac - bound)
                count += 1
        info["detail"] = f"{count} richest groups, min slack {worst:.4f}"


def test_c03_outsider_contributions(line_runs, graph_runs):
    with criterion(3, "outsiders of a richest group add strictly less than the cap") as info:
        worst, checked = math.inf, 0
        for runs, kind in ((line_runs, "line"), (graph_runs, "graph")):
            for inst, risk, parts in runs:
                measure = _measure_cache(inst)
                if kind == "line":
                    cap = exclusive_contribution_cap("line", risk.r)
                else:
                    cap = exclusive_contribution_cap("graph", risk.r, max_degree=inst.max_degree)
                for p in parts:
                    for idx in richest_groups(p, inst, risk):
                        S = p[idx]
                        base = measure(S)
                        for x in range(inst.n_players):
                            if x in S:
                                continue
                            m = measure(S | {x}) - base
                            assert m < cap, f"outsider {x} adds {m} >= {cap}"
                            worst = min(worst, cap - m)
                            checked += 1
        info["detail"] = f"{checked} outsider checks, min gap {worst:.4f}"


def test_c04_gkl_construction():
    with criterion(4, "G_{k,l} star partitions are Nash and cover < c") as info:
        risk = RiskModel(0.5)
        cases = [(0.5, 3), (0.3, 5), (0.16, 10)]
        seen = []
        for c, ell in cases:
            k, got_ell = feasible_kl(0.5, c)
            assert got_ell == ell
            if ell == 3:
                assert k == 23
            g = gen_Gkl(k, ell, 0.5)
            rep = is_nash(g.partition, g.graph, risk, allow_empty_defect=False)
            assert rep.is_nash, f"(k={k}, l={ell}) star partition not Nash: {rep.violating_move}"
            closed = (k + ell) / (k + k * ell)
            total = g.graph.total()[0]
            for grp in g.partition:
                frac = g.graph.measure(grp)[0] / total
                assert abs(frac - closed) <= 1e-12
                assert frac < c
            seen.append(f"({ell},{k})")
        with pytest.raises(InfeasibleParameters):
            gen_Gkl(22, 3, 0.5)
        info["detail"] = "(l,k) = " + ", ".join(seen) + "; k=22 refused"


def test_c05_gz_vanishing():
    with criterion(5, "G_z proof claims hold and richest fraction vanishes") as info:
        risk = RiskModel(0.5)
        expected = {4: 25 / 36, 100: 121 / 420, 10000: 1201 / 31200}
        fracs = []
        for z, want in expected.items():
            claims = gz_claims(gen_Gz(z, 0.5), risk)
            assert claims.type1_merges_blocked and claims.type1_type2_merges_blocked and claims.type2_below_v
            assert abs(claims.richest_fraction - want) <= 1e-12
            fracs.append(claims.richest_fraction)
        assert all(a > b for a, b in zip(fracs, fracs[1:]))
        info["detail"] = "fractions " + ", ".join(f"{f:.6f}" for f in fracs)


def test_c06_two_disk_union():
    with criterion(6, "Monte Carlo two-disk union matches the lens formula") as info:
        exact = two_disk_union_area(1.0)
        assert abs(exact - 5.054816) < 1e-6
        inst = EuclideanD([[0.0, 0.0], [1.0, 0.0]], SamplingConfig(10**6, 0))
        rep = coverage_measure([0, 1], inst)
        assert rep.std_error < 0.01
        assert abs(rep.a_s - exact) <= 3 * rep.std_error
        info["detail"] = f"estimate {rep.a_s:.6f} +- {rep.std_error:.6f} vs {exact:.6f}"


def test_c07_homothecy():
    with criterion(7, "radius-t union volume is at most t^d times the unit union") as info:
        rng = np.random.default_rng(7)
        worst = math.inf
        for s in range(50):
            d = 2 if s < 25 else 3
            n = int(rng.integers(1, 21))
            centers = rng.uniform(0.0, 6.0, size=(n, d))
            v1, se1 = union_volume(centers, 1.0, samples=100_000, seed=2 * s)
            for t in (1.5, 2.0, 3.0):
                vt, set_ = union_volume(centers, t, samples=100_000, seed=2 * s + 1)
                se = math.hypot(set_, t**d * se1)
                assert vt <= t**d * v1 + 3 * se, f"set {s}, t={t}: {vt} > {t**d * v1} + 3*{se}"
                worst = min(worst, (t**d * v1 - vt) / se if se else math.inf)
        info["detail"] = f"150 comparisons, min z-score {worst:.2f}"


def test_c08_ball_volumes():
    with criterion(8, "unit-ball volumes and their ratio") as info:
        for d in range(31):
            closed = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
            assert abs(unit_ball_volume(d) - closed) <= 1e-10 * closed
        for d in range(2, 51):
            assert unit_ball_volume(d) / unit_ball_volume(d - 1) >= 1 / d
        info["detail"] = "d <= 30 closed form, 2 <= d <= 50 ratio"


def test_c09_improved_bound():
    with criterion(9, "improved Euclidean bound beats the basic one") as info:
        count = 0
        for d in range(2, 11):
            for i in range(1, 10):
                r = i / 10
                delta = euclid_delta(d, r)
                assert 0 < delta < 1
                assert euclid_bound_improved(d, r) > euclid_bound_basic(d)
                count += 1
        info["detail"] = f"{count} grid points"


def test_c10_model_laws():
    with criterion(10, "merge ratio 2^r, uniform group utility, prize-money invariance") as info:
        rng = random.Random(10)
        # disjoint merges gain exactly 2^r
        for _ in range(300):
            r = rng.uniform(0.01, 0.99)
            risk = RiskModel(r)
            size = rng.randint(1, 4)
            base = sorted(rng.uniform(0, 10) for _ in range(size))
            shift = base[-1] - base[0] + 2 + rng.uniform(0, 20)
            line = Line1D(base + [b + shift for b in base])
            part = Partition([range(size), range(size, 2 * size)])
            inc = merge_incentivized(0, 1, part, line, risk)
            assert inc.incentivized
            for before in inc.before:
                assert abs(inc.after / before - 2**r) <= 1e-12
        # on a regular graph, vertices with disjoint neighbourhoods cover equally much
        pairs = 0
        for seed in range(30):
            g = random_regular_graph(3, 16, seed=seed)
            r = rng.uniform(0.01, 0.99)
            for a in range(16):
                for b in range(a + 1, 16):
                    if g.covered_mask([a]) & g.covered_mask([b]):
                        continue
                    rest = [v for v in range(16) if v not in (a, b)]
                    inc = merge_incentivized(0, 1, Partition([[a], [b], rest]), g, RiskModel(r))
                    assert inc.incentivized
                    assert abs(inc.after / inc.before[0] - 2**r) <= 1e-12
                    pairs += 1
        assert pairs > 0
        # every member of a group sees the same utility, equal to the group formula
        for _ in range(200):
            n = rng.randint(2, 8)
            centers = [rng.uniform(0, 15) for _ in range(n)]
            line = Line1D(centers)
            r = rng.choice([0.25, 0.5, 0.75])
            risk = RiskModel(r)
            labels = [rng.randrange(n) for _ in range(n)]
            part = Partition.from_labels(labels)
            if len(part) < 2:
                continue
            total = line_union_length(centers)
            for gi, grp in enumerate(part):
                other = 1 if gi == 0 else 0
                seen = {defect_incentivized(x, gi, other, part, line, risk).before[0] for x in grp}
                assert len(seen) == 1
                want = group_expected_utility(len(grp), line_union_length([centers[i] for i in grp]) / total, risk)
                assert abs(seen.pop() - want) <= 1e-12 * want
        # verdicts and equilibria do not depend on the prize money
        checked = 0
        for seed in range(40):
            inst = gen_random("line", rng.randint(2, 8), seed=seed, extent=12) if seed % 2 else \
                random_regular_graph(3, (4, 6, 8)[seed % 3], seed=seed)
            r = (0.25, 0.5, 0.75)[seed % 3]
            small, big = RiskModel(r, 1.0), RiskModel(r, 40000.0)
            assert enumerate_nash(inst, small) == enumerate_nash(inst, big)
            assert enumerate_nash(inst, small, True) == enumerate_nash(inst, big, True)
            for _ in range(20):
                part = Partition.from_labels([rng.randrange(3) for _ in range(inst.n_players)])
                for move in candidate_moves(part, allow_empty_defect=True):
                    a = evaluate_move(move, part, inst, small).incentivized
                    b = evaluate_move(move, part, inst, big).incentivized
                    assert a == b
                    checked += 1
        info["detail"] = f"{checked} move verdicts compared across M"


def test_c11_money_bounds(line_runs, graph_runs):
    with criterion(11, "prize-money lower bounds on every enumerated equilibrium") as info:
        count = 0
        for inst, risk, parts in list(line_runs) + list(graph_runs):
            for M in (risk.M, 40000.0):
                scaled = RiskModel(risk.r, M)
                for p in parts:
                    for chk in money_checks(inst, p, scaled):
                        assert chk.M >= chk.area_bound - EXACT_TOL * max(1.0, M), chk
                        assert chk.M >= chk.size_bound - EXACT_TOL * max(1.0, M), chk
                        count += 1
        info["detail"] = f"{count} group checks at M in {{1, 40000}}"


def _random_instance(rng, seed):
    kind = seed % 3
    if kind == 0:
        n = rng.randint(1, 7)
        centers = [rng.uniform(0, 12) for _ in range(n)]
        return Line1D(centers), BruteGame(lambda g: line_union_length([centers[i] for i in g]),
                                          line_union_length(centers), 0)
    if kind == 1:
        n = rng.choice([4, 6, 8])
        graph = random_regular_graph(3, n, seed=seed)
    else:
        n = rng.randint(2, 8)
        graph = GraphTopology(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3])
    return graph, BruteGame(lambda g: graph_union_size(n, graph.edges, g), n, 0)


def test_c12_engine_self_consistency():
    with criterion(12, "is_nash agrees with the move scan and the oracle; dynamics end Nash") as info:
        rng = random.Random(12)
        partitions, instances, nash_seen = 0, 0, 0
        seed = 0
        while partitions < 10_000:
            inst, oracle = _random_instance(rng, seed)
            seed += 1
            instances += 1
            r = rng.choice([0.25, 0.5, 0.75])
            oracle.r = r
            risk = RiskModel(r)
            n = inst.n_players
            for _ in range(50):
                labels = [rng.randrange(rng.randint(1, n)) for _ in range(n)]
                part = Partition.from_labels(labels)
                allow = rng.random() < 0.5
                rep = is_nash(part, inst, risk, allow)
                move = find_incentivized_move(part, inst, risk, allow)
                assert rep.is_nash == (move is None)
                groups = [sorted(g) for g in part]
                assert rep.is_nash == oracle.is_nash(groups, allow)
                nash_seen += rep.is_nash
                partitions += 1
        runs, converged = 0, 0
        for s in range(300):
            inst, _ = _random_instance(rng, 10_000 + s)
            risk = RiskModel(rng.choice([0.25, 0.5, 0.75]))
            cfg = DynamicsConfig(order=("deterministic", "random")[s % 2], seed=s, allow_empty_defect=s % 3 == 0)
            res = best_response_dynamics(Partition.singletons(inst.n_players), inst, risk, cfg)
            runs += 1
            if res.converged:
                converged += 1
                assert is_nash(res.partition, inst, risk, cfg.allow_empty_defect).is_nash
        assert converged > 0
        info["detail"] = (f"{partitions} partitions on {instances} instances ({nash_seen} Nash); "
                          f"{converged}/{runs} dynamics runs converged, all to Nash")
