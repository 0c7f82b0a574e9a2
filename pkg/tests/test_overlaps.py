"""The correlation-matrix route must reproduce the dense-matrix oracle."""
import numpy as np
import pytest

from qoverlap.core import mode_swap_unitary, random_state, random_unitary, to_correlation
from qoverlap.oracle import trace_distance
from qoverlap.overlaps import (
    MomentSet,
    distances_from_overlaps,
    moments,
    moments_from_overlaps,
    overlap_first,
    overlap_operator_residual,
    overlap_second,
    overlap_set,
    product_rule_residual,
    shift_operator,
    shift_operator_check,
    swap_expansion_error,
    trace_distance_via_moments,
    word_overlap_bloch,
    word_overlap_matrix,
)


def pairs(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield random_state(4, seed=rng), random_state(4, seed=rng)


class TestFirstOverlap:
    def test_matches_trace(self):
        for a, b in pairs(100, 0):
            R1, R2 = to_correlation(a), to_correlation(b)
            direct = float(np.trace(a @ b).real)
            assert overlap_first(R1, R2) == pytest.approx(direct, abs=1e-12)

    def test_purity_special_case(self):
        rho = random_state(4, seed=1)
        R = to_correlation(rho)
        assert overlap_first(R, R) == pytest.approx(float(np.trace(rho @ rho).real), abs=1e-12)


class TestSecondOverlap:
    def test_matches_trace_of_squared_product(self):
        for a, b in pairs(100, 2):
            direct = float(np.trace(np.linalg.matrix_power(a @ b, 2)).real)
            assert overlap_second(a, b) == pytest.approx(direct, abs=1e-12)

    def test_symmetric_in_arguments(self):
        a, b = next(pairs(1, 3))
        assert overlap_second(a, b) == pytest.approx(overlap_second(b, a), abs=1e-12)


class TestWordOverlaps:
    @pytest.mark.parametrize("word", ["11", "12", "111", "112", "122", "1122", "1212", "1222"])
    def test_bloch_equals_matrix(self, word):
        a, b = next(pairs(1, 4))
        R1, R2 = to_correlation(a), to_correlation(b)
        assert word_overlap_bloch(word, R1, R2) == pytest.approx(
            word_overlap_matrix(word, a, b), abs=1e-11
        )

    def test_rejects_bad_word(self):
        a, b = next(pairs(1, 5))
        R1, R2 = to_correlation(a), to_correlation(b)
        with pytest.raises(ValueError):
            word_overlap_bloch("103", R1, R2)


class TestShiftOperator:
    def test_composition_of_swaps(self):
        """The four-factor product collapses to the pair swap S_13 S_24."""
        S = shift_operator()
        assert S.shape == (16, 16)
        pair_swap = mode_swap_unitary(4, 0, 2) @ mode_swap_unitary(4, 1, 3)
        assert np.abs(S - pair_swap).max() < 1e-12
        # involution: a permutation of order two
        assert np.abs(S @ S - np.eye(16)).max() < 1e-12

    @pytest.mark.parametrize("construction", ["embedded", "cycle"])
    def test_reproduces_second_overlap(self, construction):
        for a, b in pairs(20, 6):
            direct = float(np.trace(np.linalg.matrix_power(a @ b, 2)).real)
            assert shift_operator_check(a, b, construction) == pytest.approx(direct, abs=1e-10)

    def test_swap_expansion_identity(self):
        assert swap_expansion_error() < 1e-12

    def test_overlap_operator_residual(self):
        a, b = next(pairs(1, 7))
        assert overlap_operator_residual(a, b) < 1e-10


class TestProductRule:
    def test_traceless_product_rule(self):
        for a, b in pairs(25, 8):
            assert product_rule_residual(a, b) < 1e-10

    def test_general_product_rule(self):
        for a, b in pairs(25, 9):
            assert product_rule_residual(a, b, traceless=False) < 1e-10


class TestMoments:
    def test_cross_check_passes_on_random_pairs(self):
        for a, b in pairs(50, 10):
            m = moments(a, b, cross_check=True)
            lam = a - b
            assert m.pi2 == pytest.approx(float(np.trace(lam @ lam).real), abs=1e-11)

    def test_identical_states_give_exact_zeros(self):
        """Bitwise-identical inputs must cancel exactly, not to 1e-16."""
        rho = random_state(4, seed=11)
        m = moments(rho, rho, cross_check=False)
        assert m.pi2 == 0.0
        assert m.pi3 == 0.0
        assert m.pi4 == 0.0

    def test_moment_signs_detect_ordering(self):
        # swapping the states flips pi3 and preserves pi2, pi4
        a, b = next(pairs(1, 12))
        m_ab, m_ba = moments(a, b), moments(b, a)
        assert m_ab.pi3 == pytest.approx(-m_ba.pi3, abs=1e-11)
        assert m_ab.pi2 == pytest.approx(m_ba.pi2, abs=1e-11)
        assert m_ab.pi4 == pytest.approx(m_ba.pi4, abs=1e-11)


class TestTraceDistanceViaMoments:
    def test_all_zero_moments(self):
        assert trace_distance_via_moments(MomentSet(0.0, 0.0, 0.0, 0.0)) == 0.0

    def test_orthogonal_pure_spectrum(self):
        # eigenvalues {1, -1, 0, 0}: Pi2 = 2, Pi3 = 0, Pi4 = 2
        assert trace_distance_via_moments(MomentSet(0.0, 2.0, 0.0, 2.0)) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_matches_oracle_on_random_pairs(self):
        for a, b in pairs(200, 13):
            t = trace_distance_via_moments(moments(a, b))
            assert t == pytest.approx(trace_distance(a, b), abs=1e-9)

    def test_matches_oracle_on_degenerate_spectra(self):
        """Repeated eigenvalues of the difference must not break the roots."""
        rng = np.random.default_rng(14)
        specs = [
            (0.3, 0.3, -0.3, -0.3),
            (0.5, -0.5, 0.0, 0.0),
            (0.6, -0.2, -0.2, -0.2),
            (0.4, 0.4, -0.5, -0.3),
        ]
        done = 0
        while done < 100:
            d = 0.4 * np.array(specs[rng.integers(len(specs))])
            U = random_unitary(4, rng)
            lam = (U * d) @ U.conj().T
            base = 0.7 * np.eye(4) / 4 + 0.3 * random_state(4, seed=rng)
            rho1 = base + lam
            if np.linalg.eigvalsh(rho1).min() < 1e-12:
                continue
            done += 1
            t = trace_distance_via_moments(moments(rho1, base))
            assert t == pytest.approx(trace_distance(rho1, base), abs=1e-7)

    def test_rejects_unphysical_moments(self):
        # no Hermitian difference yields these: forces truly complex roots
        with pytest.raises(ValueError, match="ill-conditioned"):
            trace_distance_via_moments(MomentSet(0.0, -2.0, 0.0, 2.0))


class TestDistancesFromOverlaps:
    def test_matches_oracle(self):
        from qoverlap.oracle import distance_set

        for a, b in pairs(50, 15):
            od = distances_from_overlaps(overlap_set(a, b))
            ds = distance_set(a, b)
            assert od.subfidelity == pytest.approx(ds.subfidelity, abs=1e-9)
            assert od.superfidelity == pytest.approx(ds.superfidelity, abs=1e-9)
            assert od.hilbert_schmidt == pytest.approx(ds.hilbert_schmidt, abs=1e-9)
            assert od.trace_distance == pytest.approx(ds.trace_distance, abs=1e-8)

    def test_moments_reusable(self):
        a, b = next(pairs(1, 16))
        o = overlap_set(a, b)
        m = moments_from_overlaps(o)
        od = distances_from_overlaps(o, m)
        assert od.hilbert_schmidt == pytest.approx(np.sqrt(max(m.pi2, 0.0)), abs=1e-12)
