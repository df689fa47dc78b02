import math

import numpy as np
import pytest

from coalgame.equilibrium import best_response_dynamics, enumerate_nash, is_nash, richest_group
from coalgame.generators import (
    InfeasibleParameters,
    f_ell,
    feasible_kl,
    gamma,
    gen_Gkl,
    gen_Gz,
    gen_random,
    gz_claims,
    gz_feasibility_rhs,
    gz_spec,
    k_threshold,
    random_regular_graph,
    valid_z,
)
from coalgame.model import Partition, RiskModel
from coalgame.topology import EuclideanD, Line1D

HALF = RiskModel(0.5)


class TestGz:
    def test_z4_shape(self):
        gz = gen_Gz(4, 0.5)
        assert gz.spec.clique_size == 24 and gz.spec.path_len == 12 and gz.graph.n_players == 36
        assert gz.graph.degrees[gz.v] == 24
        assert gz.graph.degrees[35] == 1
        assert len(gz.graph.edges) == 24 * 23 // 2 + 12

    def test_feasibility_rhs(self):
        assert gz_feasibility_rhs(0.5) == pytest.approx(0.8047379, abs=1e-7)
        assert gz_feasibility_rhs(0.5) == pytest.approx(1 / (3 * (math.sqrt(2) - 1)), rel=1e-15)

    def test_rejections(self):
        with pytest.raises(InfeasibleParameters, match="z\\^r"):
            gz_spec(0, 0.5)
        with pytest.raises(InfeasibleParameters, match="integer"):
            gz_spec(5, 0.5)
        with pytest.raises(InfeasibleParameters):
            gz_spec(2.5, 0.5)

    def test_valid_z_are_perfect_squares_at_half(self):
        assert valid_z(0.5, 120) == [k * k for k in range(1, 11)]

    @pytest.mark.parametrize("z,frac", [(4, 25 / 36), (100, 121 / 420), (10000, 1201 / 31200)])
    def test_richest_fraction_closed_form(self, z, frac):
        assert gz_spec(z, 0.5).richest_fraction == pytest.approx(frac, abs=1e-12)

    def test_fraction_vanishes_over_geometric_grid(self):
        fracs = [gz_spec(4**i, 0.5).richest_fraction for i in range(1, 11)]
        assert all(a > b for a, b in zip(fracs, fracs[1:]))
        assert fracs[-1] < 0.01

    @pytest.mark.parametrize("z", [4, 9, 100])
    def test_claims(self, z):
        claims = gz_claims(gen_Gz(z, 0.5), HALF)
        assert claims.all_hold
        assert claims.richest_fraction == pytest.approx(gz_spec(z, 0.5).richest_fraction, rel=1e-12)

    def test_small_z_has_some_nash_partition_by_search(self):
        # no concrete equilibrium is assumed, so look for one by dynamics
        gz = gen_Gz(1, 0.5)
        res = best_response_dynamics(Partition.singletons(gz.graph.n_players), gz.graph, HALF)
        assert res.converged and is_nash(res.partition, gz.graph, HALF).is_nash


class TestGkl:
    def test_threshold_values(self):
        assert f_ell(3, 0.5) == pytest.approx(1.118034, abs=1e-6)
        assert k_threshold(3, 0.5) == pytest.approx(22.416408, abs=1e-6)
        assert gamma(0.5) == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_k23_shape_and_partition(self):
        g = gen_Gkl(23, 3, 0.5)
        assert g.graph.n_players == 92
        assert len(g.partition) == 23 and all(len(s) == 4 for s in g.partition)
        assert g.spec.group_fraction == pytest.approx(26 / 92, abs=1e-12)
        assert 23 / 3 > g.spec.gamma
        g.partition.validate(92)

    def test_k22_rejected(self):
        with pytest.raises(InfeasibleParameters, match="22.41"):
            gen_Gkl(22, 3, 0.5)

    @pytest.mark.parametrize("c,want", [(0.3, (58, 5)), (0.9, (4, 1)), (0.5, (23, 3)), (0.16, (215, 10))])
    def test_feasible_kl(self, c, want):
        k, ell = feasible_kl(0.5, c)
        assert (k, ell) == want
        assert k > k_threshold(ell, 0.5) and k - 1 <= k_threshold(ell, 0.5)
        assert (1 + 1 / gamma(0.5)) / (1 + ell) < c
        if ell > 1:
            assert not (1 + 1 / gamma(0.5)) / ell < c
        assert gen_Gkl(k, ell, 0.5).spec.group_fraction < c

    def test_ell5_and_ell10_thresholds(self):
        assert k_threshold(5, 0.5) == pytest.approx(57.4037, abs=1e-4)
        assert k_threshold(10, 0.5) == pytest.approx(214.891, abs=1e-3)

    @pytest.mark.parametrize("r", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("ell", [1, 2, 4])
    def test_star_partition_is_nash_on_grid(self, r, ell):
        k = math.floor(k_threshold(ell, r)) + 1
        g = gen_Gkl(k, ell, r)
        assert is_nash(g.partition, g.graph, RiskModel(r)).is_nash

    def test_feasible_kl_domain(self):
        with pytest.raises(ValueError):
            feasible_kl(0.5, 1.0)


class TestRandom:
    def test_line_single(self):
        inst = gen_random("line", 1, seed=3)
        assert isinstance(inst, Line1D) and inst.total()[0] == 2.0

    def test_regular_parity(self):
        with pytest.raises(InfeasibleParameters, match="even"):
            gen_random("regular", 5, f=3)
        with pytest.raises(InfeasibleParameters):
            random_regular_graph(4, 4)

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("n", [8, 20, 50])
    def test_degree_audit(self, seed, n):
        g = random_regular_graph(3, n, seed=seed)
        assert g.degrees == [3] * n
        assert len(set(g.edges)) == len(g.edges) == 3 * n // 2
        assert all(u != v for u, v in g.edges)

    def test_deterministic(self):
        assert random_regular_graph(3, 12, seed=4).edges == random_regular_graph(3, 12, seed=4).edges
        a, b = gen_random("euclid", 6, seed=2, d=3), gen_random("euclid", 6, seed=2, d=3)
        assert isinstance(a, EuclideanD) and np.array_equal(a.positions, b.positions)
        assert np.array_equal(gen_random("line", 5, seed=1).positions, gen_random("line", 5, seed=1).positions)

    def test_extent(self):
        inst = gen_random("euclid", 200, seed=0, extent=3.0, d=2)
        assert inst.positions.min() >= 0 and inst.positions.max() <= 3.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            gen_random("torus", 3)
        with pytest.raises(ValueError):
            gen_random("line", 0)

    def test_random_regular_enumeration_respects_bound(self):
        g = random_regular_graph(3, 8, seed=3)
        for p in enumerate_nash(g, HALF):
            assert richest_group(p, g, HALF)[1] >= 0.5 - 1e-9
