import numpy as np
import pytest

from qoverlap.core import random_state
from qoverlap.oracle import (
    DistanceSet,
    bures_sq,
    distance_set,
    fidelity,
    hilbert_schmidt,
    linear_entropy,
    overlap,
    sub_super_fidelity,
    trace_distance,
)


def random_pairs(n, seed, dim=4, measure="ginibre"):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield random_state(dim, measure, rng), random_state(dim, measure, rng)


class TestFidelity:
    def test_self_fidelity_is_one(self):
        for rho, _ in random_pairs(10, 0):
            assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)

    def test_symmetric(self):
        for a, b in random_pairs(25, 1):
            assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-11)

    def test_pure_pure_is_squared_overlap(self):
        """For projectors the fidelity reduces to |<psi|phi>|^2 = Tr(rho1 rho2)."""
        for a, b in random_pairs(25, 2, measure="pure"):
            assert fidelity(a, b) == pytest.approx(overlap(a, b), abs=1e-10)

    def test_orthogonal_pure_states(self):
        a = np.diag([1.0, 0, 0, 0]).astype(complex)
        b = np.diag([0, 1.0, 0, 0]).astype(complex)
        assert fidelity(a, b) == pytest.approx(0.0, abs=1e-12)
        assert trace_distance(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_unitary_invariance(self):
        from qoverlap.core import random_unitary

        rng = np.random.default_rng(3)
        a, b = random_state(4, seed=rng), random_state(4, seed=rng)
        U = random_unitary(4, rng)
        assert fidelity(U @ a @ U.conj().T, U @ b @ U.conj().T) == pytest.approx(
            fidelity(a, b), abs=1e-10
        )

    def test_clipped_to_unit_interval(self):
        for a, b in random_pairs(50, 4):
            assert 0.0 <= fidelity(a, b) <= 1.0

    def test_rank_deficient_inputs(self):
        """The Hermitian square root must survive singular states."""
        for a, b in random_pairs(25, 5, measure="pure"):
            f = fidelity(a, b)
            assert 0.0 <= f <= 1.0


class TestWorkedPair:
    def test_bell_vs_mixed(self, bell, mixed):
        assert fidelity(bell, mixed) == pytest.approx(0.25, abs=1e-12)
        assert trace_distance(bell, mixed) == pytest.approx(0.75, abs=1e-12)
        assert hilbert_schmidt(bell, mixed) == pytest.approx(np.sqrt(3) / 2, abs=1e-12)
        e, g = sub_super_fidelity(bell, mixed)
        assert e == pytest.approx(0.25, abs=1e-12)
        assert g == pytest.approx(0.25, abs=1e-12)

    def test_bures(self, bell, mixed):
        assert bures_sq(bell, mixed) == pytest.approx(2 * (1 - 0.5), abs=1e-12)

    def test_linear_entropies(self, bell, mixed):
        assert linear_entropy(bell) == pytest.approx(0.0, abs=1e-12)
        assert linear_entropy(mixed) == pytest.approx(0.75, abs=1e-12)


class TestBoundChain:
    def test_chain_holds_on_random_pairs(self):
        for a, b in random_pairs(300, 6):
            assert distance_set(a, b).chain_violations() == []

    def test_chain_holds_on_rank_deficient_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            a = random_state(4, "rank-constrained", rng, rank=int(rng.integers(1, 4)))
            b = random_state(4, "rank-constrained", rng, rank=int(rng.integers(1, 4)))
            assert distance_set(a, b).chain_violations() == []

    def test_upper_trace_bound_saturates_for_pure_pairs(self):
        for a, b in random_pairs(200, 8, measure="pure"):
            ds = distance_set(a, b)
            assert ds.trace_distance == pytest.approx(
                np.sqrt(1.0 - ds.fidelity), abs=1e-9
            )

    def test_violations_detected_on_forged_set(self):
        ds = DistanceSet(
            fidelity=0.5,
            sqrt_fidelity=np.sqrt(0.5),
            bures_sq=2 * (1 - np.sqrt(0.5)),
            trace_distance=0.01,  # below 1 - sqrt(F)
            hilbert_schmidt=1.0,  # above 2T
            subfidelity=0.9,  # above F
            superfidelity=0.4,  # below F
            linear_entropy_1=0.1,
            linear_entropy_2=0.1,
        )
        names = ds.chain_violations()
        assert "E <= F" in names
        assert "F <= G" in names
        assert "1 - sqrtF <= T" in names
        assert "H <= 2T" in names


class TestSingleQubit:
    """On qubits the super- and ordinary fidelity coincide."""

    def test_superfidelity_equals_fidelity(self):
        for a, b in random_pairs(500, 9, dim=2):
            f = fidelity(a, b)
            _, g = sub_super_fidelity(a, b)
            assert g == pytest.approx(f, abs=1e-10)

    def test_closed_form(self):
        for a, b in random_pairs(200, 10, dim=2):
            expected = overlap(a, b) + np.sqrt(linear_entropy(a) * linear_entropy(b))
            assert fidelity(a, b) == pytest.approx(expected, abs=1e-10)


class TestDistanceSet:
    def test_consistent_with_scalar_functions(self):
        a, b = next(random_pairs(1, 11))
        ds = distance_set(a, b)
        assert ds.fidelity == pytest.approx(fidelity(a, b), abs=1e-12)
        assert ds.trace_distance == pytest.approx(trace_distance(a, b), abs=1e-12)
        assert ds.hilbert_schmidt == pytest.approx(hilbert_schmidt(a, b), abs=1e-12)
        e, g = sub_super_fidelity(a, b)
        assert ds.subfidelity == pytest.approx(e, abs=1e-12)
        assert ds.superfidelity == pytest.approx(g, abs=1e-12)

    def test_identical_states_all_zero(self):
        rho = random_state(4, seed=12)
        ds = distance_set(rho, rho)
        assert ds.fidelity == pytest.approx(1.0, abs=1e-10)
        assert ds.trace_distance == pytest.approx(0.0, abs=1e-10)
        assert ds.hilbert_schmidt == pytest.approx(0.0, abs=1e-10)
        assert ds.bures_sq == pytest.approx(0.0, abs=1e-10)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fidelity(np.eye(4) / 4, np.eye(2) / 2)
