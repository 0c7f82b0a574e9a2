import numpy as np
import pytest

from qoverlap.core import ModeLayout, random_state, to_correlation
from qoverlap.graphs import (
    MeasurementGraph,
    connected_components,
    count_matchings,
    dedup_report,
    enumerate_classes,
    enumerate_matchings,
    probability,
    probability_batch,
    probability_exact,
    subsumes,
)
from qoverlap.interferometer import graph_probability


def _rand_R(rng):
    return to_correlation(random_state(4, seed=rng))


class TestEnumeration:
    def test_eight_mode_matching_count(self):
        """Brute enumeration agrees with sum_k C(8,2k)(2k-1)!!."""
        assert len(enumerate_matchings(list(range(8)))) == 764
        assert count_matchings(8) == 764

    def test_small_mode_counts(self):
        # 1 + C(4,2) + 3 = 10 matchings on four modes
        assert len(enumerate_matchings(list(range(4)))) == 10
        assert count_matchings(4) == 10

    def test_matchings_are_disjoint(self):
        for m in enumerate_matchings(list(range(6))):
            flat = [x for e in m for x in e]
            assert len(flat) == len(set(flat))

    def test_class_count_four_copies(self):
        assert len(enumerate_classes(4)) == 237

    def test_classes_have_edges(self):
        assert all(g.n_edges >= 1 for g in enumerate_classes(2))


class TestGraphValidation:
    def test_rejects_loop(self):
        with pytest.raises(ValueError, match="loop"):
            MeasurementGraph(ModeLayout((1, 2)), [(0, 0)])

    def test_rejects_shared_mode(self):
        with pytest.raises(ValueError, match="two edges"):
            MeasurementGraph(ModeLayout((1, 2)), [(0, 2), (0, 3)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            MeasurementGraph(ModeLayout((1, 2)), [(0, 7)])

    def test_edges_normalized(self):
        g = MeasurementGraph(ModeLayout((1, 2)), [(3, 0), (2, 1)])
        assert g.edges == ((0, 3), (1, 2))


class TestProbabilities:
    def test_three_routes_agree(self):
        """Correlation contraction, dense projection, exact rationals."""
        rng = np.random.default_rng(0)
        rho1, rho2 = random_state(4, seed=rng), random_state(4, seed=rng)
        R1, R2 = to_correlation(rho1), to_correlation(rho2)
        for g in enumerate_classes(2)[:12]:
            p_bloch = probability(g, rho1, rho2)
            p_dense = graph_probability(g, rho1, rho2, method="dense")
            assert p_bloch == pytest.approx(p_dense, abs=1e-11)

    def test_exact_matches_float_on_rational_states(self):
        # correlation matrices with small rational entries
        from fractions import Fraction

        R1 = np.zeros((4, 4)); R1[0, 0] = 1.0; R1[1, 1] = 0.5; R1[3, 3] = -0.25
        R2 = np.zeros((4, 4)); R2[0, 0] = 1.0; R2[2, 2] = 0.5; R2[3, 0] = 0.25
        F1 = [[Fraction(0)] * 4 for _ in range(4)]
        F2 = [[Fraction(0)] * 4 for _ in range(4)]
        F1[0][0] = Fraction(1); F1[1][1] = Fraction(1, 2); F1[3][3] = Fraction(-1, 4)
        F2[0][0] = Fraction(1); F2[2][2] = Fraction(1, 2); F2[3][0] = Fraction(1, 4)
        for g in enumerate_classes(2)[:10]:
            exact = probability_exact(g, F1, F2)
            approx = probability_batch(g, R1[None], R2[None])[0]
            assert float(exact) == pytest.approx(approx, abs=1e-13)

    def test_probability_in_unit_interval(self):
        rng = np.random.default_rng(1)
        rhos = [(random_state(4, seed=rng), random_state(4, seed=rng)) for _ in range(5)]
        for g in enumerate_classes(3)[:40]:
            for rho1, rho2 in rhos:
                p = probability(g, rho1, rho2)
                assert -1e-12 <= p <= 1.0 + 1e-12

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(2)
        R1s = np.stack([_rand_R(rng) for _ in range(6)])
        R2s = np.stack([_rand_R(rng) for _ in range(6)])
        g = enumerate_classes(2)[5]
        batch = probability_batch(g, R1s, R2s)
        for i in range(6):
            single = probability_batch(g, R1s[i : i + 1], R2s[i : i + 1])[0]
            assert batch[i] == pytest.approx(single, abs=1e-13)

    def test_factorizes_over_components(self):
        """Disconnected copy components multiply independently."""
        rng = np.random.default_rng(3)
        rho1, rho2 = random_state(4, seed=rng), random_state(4, seed=rng)
        lay = ModeLayout((1, 2, 1, 2))
        g = MeasurementGraph(lay, [(0, 2), (4, 6)])  # two disjoint cross edges
        g_left = MeasurementGraph(ModeLayout((1, 2)), [(0, 2)])
        p = probability(g, rho1, rho2)
        p_left = probability(g_left, rho1, rho2)
        assert p == pytest.approx(p_left * p_left, abs=1e-12)

    def test_singlet_projection_on_singlet(self):
        """An edge across copies of the singlet state antibunches never."""
        psi_minus = np.zeros((4, 4), dtype=complex)
        psi_minus[1, 1] = psi_minus[2, 2] = 0.5
        psi_minus[1, 2] = psi_minus[2, 1] = -0.5
        g = MeasurementGraph(ModeLayout((1, 2)), [(0, 2), (1, 3)])
        # joint singlet projection on Psi- x Psi- has probability 1/4
        p = probability(g, psi_minus, psi_minus)
        assert p == pytest.approx(0.25, abs=1e-12)


class TestComponents:
    def test_connected_components_split(self):
        lay = ModeLayout((1, 2, 1, 2))
        comps = connected_components(lay, [(0, 2), (4, 6)])
        assert sorted(len(c) for c in comps) == [2, 2]

    def test_chain_is_one_component(self):
        lay = ModeLayout((1, 2, 1))
        comps = connected_components(lay, [(0, 2), (3, 4)])
        assert len(comps) == 1


class TestSubsumption:
    def test_subgraph_is_subsumed(self):
        lay = ModeLayout((1, 2))
        big = MeasurementGraph(lay, [(0, 2), (1, 3)])
        small = MeasurementGraph(lay, [(0, 2)])
        assert subsumes(big, small)
        assert not subsumes(small, big)

    def test_needs_matching_state_ids(self):
        big = MeasurementGraph(ModeLayout((1, 1)), [(0, 2)])
        small = MeasurementGraph(ModeLayout((1, 2)), [(0, 2)])
        assert not subsumes(big, small)

    def test_reflexive(self):
        g = MeasurementGraph(ModeLayout((1, 2)), [(0, 2)])
        assert subsumes(g, g)


class TestDedupReport:
    def test_counts_frozen(self):
        r = dedup_report()
        assert r["raw_matchings_8_modes"] == 764
        assert r["raw_matchings_formula"] == 764
        assert r["classes_two_copies_each"] == 117
        assert r["classes_two_copies_each_role_swapped"] == 68
        assert r["classes_four_copies_total"] == 237
        assert r["classes_four_copies_total_role_swapped"] == 128

    def test_reference_comparison_reported(self):
        r = dedup_report()
        assert r["reference_class_count"] == 63
        assert set(r["matches_reference"]) == {
            "classes_two_copies_each",
            "classes_two_copies_each_role_swapped",
            "classes_four_copies_total",
            "classes_four_copies_total_role_swapped",
        }

    def test_per_layout_totals(self):
        r = dedup_report()
        assert sum(r["per_layout"].values()) == 237
        assert r["per_layout"][(1, 1)] == 6
