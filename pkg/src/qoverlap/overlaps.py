"""Correlation-matrix overlap algebra.

Everything a singlet-projection experiment can reach lives here:
first/second-order overlaps written as contractions of correlation
matrices against state-independent Pauli tensors, mixed-word overlaps,
moments of the difference matrix, and the trace distance recovered from
those moments via the quartic characteristic polynomial.  The module
also carries the permutation-operator identities (shift operator,
swap expansion, overlap operator, singlet product rule) as executable
checks; each of them was used to pin down sign and normalization
conventions against the spectral oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import PAULI, mode_swap_unitary, to_correlation

__all__ = [
    "P_MINUS",
    "factor_tensor",
    "overlap_tensors",
    "overlap_first",
    "overlap_second",
    "overlap_second_blocks",
    "word_overlap_matrix",
    "word_overlap_bloch",
    "OverlapSet",
    "overlap_set",
    "MomentSet",
    "moments",
    "trace_distance_via_moments",
    "OverlapDistances",
    "distances_from_overlaps",
    "shift_operator",
    "shift_operator_check",
    "swap_expansion_error",
    "overlap_operator",
    "overlap_operator_residual",
    "product_rule_residual",
]

#: Singlet projector |Psi-><Psi-| = (1/4)(I - sum_{i>=1} sigma_i x sigma_i).
P_MINUS = (np.eye(4, dtype=complex) - sum(np.kron(PAULI[i], PAULI[i]) for i in (1, 2, 3))) / 4.0
P_MINUS.setflags(write=False)

# The quartic root-finder tolerates this much imaginary residue before
# declaring the moment set ill-conditioned.  A real spectrum with an
# m-fold eigenvalue perturbs the computed roots by O(eps^(1/m)) — up to
# ~1e-4 for a quadruple root — so residues below this ceiling are root-
# finder artifacts of a legitimate degenerate spectrum, not bad input.
ROOT_IMAG_TOL = 1e-3


def factor_tensor() -> np.ndarray:
    """Triple-product tensor ``f[u, a, b] = Tr(sigma_u sigma_a sigma_b) / 2``.

    Expanding any Pauli product in the Pauli basis uses these factors:
    ``sigma_a sigma_b = sum_u f[u, a, b] sigma_u``.  Entrywise,
    ``f = d3(u,a) d(b,0) + d3(u,b) d(a,0) + d3(a,b) d(u,0)
    + d(u,0) d(a,0) d(b,0) + i eps(a, b, u)`` where ``d3`` is the
    Kronecker delta restricted to indices 1..3.
    """
    f = np.zeros((4, 4, 4), dtype=complex)
    for u in range(4):
        for a in range(4):
            for b in range(4):
                f[u, a, b] = np.trace(PAULI[u] @ PAULI[a] @ PAULI[b]) / 2.0
    return f


_F = factor_tensor()
_F.setflags(write=False)

# Chain kernels: Tr(sigma_a sigma_b sigma_c) = 2 K3[a,b,c] and
# Tr(sigma_a sigma_b sigma_c sigma_d) = 2 K4[a,b,c,d].
_K3 = _F
_K4 = np.einsum("uab,ucd->abcd", _F, _F)
_K4.setflags(write=False)


@lru_cache(maxsize=1)
def overlap_tensors() -> tuple[np.ndarray, ...]:
    """The four rank-8 state-independent tensors behind the second-order overlap.

    ``Tr[(rho1 rho2)^2]`` equals the contraction of
    ``R1[m,n] R2[k,l] R1[x,y] R2[r,s]`` against ``A1 + A2 + A3 + A4``:
    the identity-identity block, the two single-sided traceless blocks,
    and the doubly-traceless block carrying the Levi-Civita terms.  All
    four share the prefactor 2**-6.  (The alternating sign pattern
    ``A1 - A2 - A3 + A4`` with 2**-10 prefactors, tempting as it looks
    from the sub-block traces, does not reproduce the oracle; the
    all-plus combination below does, to machine precision.)
    """
    delta = _F[0].real  # f[0, a, b] = delta_ab
    ffp = np.einsum("uab,ucd->abcd", _F[1:], _F[1:])  # traceless-u part, complex
    dd = np.einsum("mk,xr->mkxr", delta, delta)
    a1 = np.einsum("mkxr,nlys->mkxrnlys", dd, dd) / 64.0
    a2 = np.einsum("mkxr,nlys->mkxrnlys", ffp, dd.astype(complex)) / 64.0
    a3 = np.einsum("mkxr,nlys->mkxrnlys", dd.astype(complex), ffp) / 64.0
    a4 = np.einsum("mkxr,nlys->mkxrnlys", ffp, ffp) / 64.0
    for a in (a1, a2, a3, a4):
        a.setflags(write=False)
    return a1, a2, a3, a4


def _as_correlation(state: np.ndarray) -> np.ndarray:
    """Accept either a 4x4 density matrix or a ready correlation matrix.

    A real-valued matrix whose (0,0) entry is 1 is taken to be a
    correlation matrix (its defining normalization); everything else is
    treated as a density matrix and converted.
    """
    state = np.asarray(state)
    if state.shape != (4, 4):
        raise ValueError(f"expected a 4x4 array, got shape {state.shape}")
    is_real = not np.iscomplexobj(state) or np.abs(state.imag).max() <= 1e-12
    if is_real and abs(state[0, 0].real - 1.0) <= 1e-9 and np.abs(state).max() <= 1.0 + 1e-9:
        return np.asarray(state.real, dtype=float)
    return to_correlation(state)


def overlap_first(R1: np.ndarray, R2: np.ndarray) -> float:
    """``Tr(rho1 rho2) = (1/4) sum_mn R1[m,n] R2[m,n]``.

    Accepts correlation matrices or density matrices.
    """
    R1, R2 = _as_correlation(R1), _as_correlation(R2)
    return float(np.einsum("mn,mn->", R1, R2) / 4.0)


_EINSUM_8 = "mn,kl,xy,rs,mkxrnlys->"
_PATH_8: list | None = None


def _contract_rank8(R1: np.ndarray, R2: np.ndarray, tensor: np.ndarray) -> complex:
    global _PATH_8
    if _PATH_8 is None:
        _PATH_8 = np.einsum_path(_EINSUM_8, R1, R2, R1, R2, tensor, optimize="optimal")[0]
    return complex(np.einsum(_EINSUM_8, R1, R2, R1, R2, tensor, optimize=_PATH_8))


def overlap_second(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Second-order overlap ``Tr[(rho1 rho2)^2]`` from correlation matrices alone.

    Contracts ``R1 R2 R1 R2`` against the precomputed rank-8 tensors of
    :func:`overlap_tensors`.  The Levi-Civita contributions cancel in the
    total; a residual imaginary part above 1e-9 signals a broken tensor
    and raises.
    """
    R1, R2 = _as_correlation(rho1), _as_correlation(rho2)
    a1, a2, a3, a4 = overlap_tensors()
    total = sum(_contract_rank8(R1, R2, a) for a in (a1, a2, a3, a4))
    if abs(total.imag) > 1e-9:
        raise ValueError(f"second-order overlap has imaginary residue {total.imag:.3e}")
    return float(total.real)


def overlap_second_blocks(rho1: np.ndarray, rho2: np.ndarray) -> tuple[complex, ...]:
    """The four per-tensor contraction values (diagnostics for the cancellation)."""
    R1, R2 = _as_correlation(rho1), _as_correlation(rho2)
    return tuple(_contract_rank8(R1, R2, a) for a in overlap_tensors())


def word_overlap_matrix(word: str, rho1: np.ndarray, rho2: np.ndarray) -> float:
    """``Tr(rho_w1 rho_w2 ...)`` by direct matrix products; ``word`` is e.g. ``"1122"``."""
    _check_word(word)
    states = {"1": np.asarray(rho1, dtype=complex), "2": np.asarray(rho2, dtype=complex)}
    out = np.eye(4, dtype=complex)
    for ch in word:
        out = out @ states[ch]
    return float(out.trace().real)


def word_overlap_bloch(word: str, R1: np.ndarray, R2: np.ndarray) -> float:
    """The same word overlap from correlation matrices via chain kernels.

    Degree 2: ``(1/4) sum R R``; degree 3: ``(1/16) sum RRR K3 K3``;
    degree 4: ``2**-6 sum RRRR K4 K4`` — one kernel per qubit slot.
    """
    _check_word(word)
    R = {"1": _as_correlation(R1), "2": _as_correlation(R2)}
    ops = [R[ch] for ch in word]
    c = len(word)
    if c == 2:
        return float(np.einsum("mn,mn->", *ops) / 4.0)
    if c == 3:
        return float(np.einsum("mn,kl,xy,mkx,nly->", *ops, _K3, _K3, optimize=True).real / 16.0)
    if c == 4:
        return float(np.einsum("mn,kl,xy,rs,mkxr,nlys->", *ops, _K4, _K4, optimize=True).real / 64.0)
    raise ValueError(f"no closed kernel for words of length {c}")


def _check_word(word: str) -> None:
    if not 2 <= len(word) <= 4 or any(ch not in "12" for ch in word):
        raise ValueError(f"word must be 2..4 characters over {{1,2}}, got {word!r}")


@dataclass(frozen=True)
class OverlapSet:
    """Every overlap the distance formulas consume.

    ``mixed`` maps exponent words (``"112"`` for ``Tr(rho1^2 rho2)`` and
    so on, in product order) to their values.
    """

    O11: float
    O22: float
    O12: float
    O2_12: float
    mixed: dict[str, float] = field(default_factory=dict)


# Words feeding the third and fourth moments, beyond the first-order
# overlaps and Tr[(rho1 rho2)^2].
_MIXED_WORDS = (
    "111",
    "222",
    "112",
    "122",
    "1111",
    "2222",
    "1112",
    "1222",
    "1122",
    "1212",
)


def overlap_set(rho1: np.ndarray, rho2: np.ndarray) -> OverlapSet:
    """Assemble all overlaps of a pair from its correlation matrices."""
    R1, R2 = _as_correlation(rho1), _as_correlation(rho2)
    return OverlapSet(
        O11=overlap_first(R1, R1),
        O22=overlap_first(R2, R2),
        O12=overlap_first(R1, R2),
        O2_12=overlap_second(R1, R2),
        mixed={w: word_overlap_bloch(w, R1, R2) for w in _MIXED_WORDS},
    )


@dataclass(frozen=True)
class MomentSet:
    """Moments ``Pi_n = Tr[(rho1 - rho2)^n]`` for n = 1..4."""

    pi1: float
    pi2: float
    pi3: float
    pi4: float


def moments_from_overlaps(o: OverlapSet) -> MomentSet:
    """Expand the difference-matrix moments in overlaps.

    ``Pi2 = chi1 + chi2 - 2 O12``;
    ``Pi3 = Tr(rho1^3) - Tr(rho2^3) + 3 [Tr(rho2^2 rho1) - Tr(rho1^2 rho2)]``;
    ``Pi4 = Tr(rho1^4) + Tr(rho2^4) + 2 Tr[(rho1 rho2)^2]
    + 4 Tr(rho1^2 rho2^2) - 4 Tr(rho1^3 rho2) - 4 Tr(rho1 rho2^3)``.
    (The binomial expansion fixes the signs of the ``2 Tr[(rho1 rho2)^2]``
    and the two degree-(3,1) terms; transcribing them with opposite signs
    fails the oracle check by O(1).)

    Every term goes through the same word-contraction kernel — including
    ``Tr[(rho1 rho2)^2]`` as the word 1212 rather than the four-tensor
    route — so that for bitwise-identical inputs the expansions cancel
    exactly and the moments of a zero difference are exact zeros.
    """
    w = o.mixed
    pi2 = o.O11 + o.O22 - 2.0 * o.O12
    pi3 = w["111"] - w["222"] + 3.0 * (w["122"] - w["112"])
    pi4 = (
        w["1111"]
        + w["2222"]
        + 2.0 * w["1212"]
        + 4.0 * w["1122"]
        - 4.0 * w["1112"]
        - 4.0 * w["1222"]
    )
    return MomentSet(pi1=0.0, pi2=pi2, pi3=pi3, pi4=pi4)


def moments(rho1: np.ndarray, rho2: np.ndarray, cross_check: bool = True) -> MomentSet:
    """Moments of ``rho1 - rho2`` from the overlap expansion.

    With ``cross_check`` every term is recomputed by direct matrix
    products and the two routes must agree to 1e-10.
    """
    o = overlap_set(rho1, rho2)
    m = moments_from_overlaps(o)
    if cross_check:
        lam = np.asarray(rho1, dtype=complex) - np.asarray(rho2, dtype=complex)
        p = lam
        direct = []
        for _ in range(3):
            p = p @ lam
            direct.append(float(p.trace().real))
        worst = max(
            abs(m.pi2 - direct[0]), abs(m.pi3 - direct[1]), abs(m.pi4 - direct[2])
        )
        if worst > 1e-10:
            raise ValueError(f"overlap and matrix moment routes disagree by {worst:.3e}")
    return m


def trace_distance_via_moments(m: MomentSet) -> float:
    """Trace distance from moments alone.

    Solves the quartic ``y^4 - (Pi2/2) y^2 - (Pi3/3) y + det = 0`` with
    ``det = (Pi2^2/2 - Pi4)/4`` and returns half the absolute sum of the
    cleaned-up roots.  Cleanup: the true spectrum is real (moments of a
    Hermitian difference), so spurious conjugate pairs — the root
    finder's signature at degenerate eigenvalues — collapse onto their
    shared real part.  Root sums are trace-accurate even where the
    individual roots wobble, so the result keeps machine accuracy at
    double, triple and quadruple degeneracies.  Residues beyond
    ``ROOT_IMAG_TOL`` cannot come from a Hermitian difference; those
    raise instead of being silently flattened.
    """
    det = 0.25 * (0.5 * m.pi2 * m.pi2 - m.pi4)
    roots = np.roots([1.0, 0.0, -0.5 * m.pi2, -m.pi3 / 3.0, det])
    worst_imag = float(np.abs(roots.imag).max()) if roots.size else 0.0
    if worst_imag > ROOT_IMAG_TOL:
        raise ValueError(f"ill-conditioned moments: complex eigenvalue residue {worst_imag:.3e}")
    lam = roots.real
    if abs(lam.sum()) > 1e-8:
        raise ValueError(f"ill-conditioned moments: eigenvalue sum {lam.sum():.3e}")
    return float(0.5 * np.abs(lam).sum())


@dataclass(frozen=True)
class OverlapDistances:
    """Distances reachable from overlaps alone.

    The fidelity itself is not: only its bracket ``[E, G]`` is
    measurable, which is the point of the bounds.
    """

    subfidelity: float
    superfidelity: float
    hilbert_schmidt: float
    trace_distance: float


def distances_from_overlaps(o: OverlapSet, m: MomentSet | None = None) -> OverlapDistances:
    """``E, G, H, T`` from an :class:`OverlapSet` (and optionally its moments)."""
    if m is None:
        m = moments_from_overlaps(o)
    e_rad = 2.0 * (o.O12 * o.O12 - o.O2_12)
    g_rad = (1.0 - o.O11) * (1.0 - o.O22)
    for name, rad in (("subfidelity", e_rad), ("superfidelity", g_rad)):
        if rad < -1e-9:
            raise ValueError(f"negative radicand {rad:.3e} in {name} from overlaps")
    # zero radicands stuck in the noise band: they vanish identically at
    # the pure-state equality cases, where sqrt would blow eps up to 1e-8
    eps = float(np.finfo(float).eps)
    if e_rad < 256.0 * eps * max(o.O12 * o.O12, abs(o.O2_12), eps):
        e_rad = 0.0
    if g_rad < 256.0 * eps * max(1.0 - o.O11, 1.0 - o.O22, eps):
        g_rad = 0.0
    return OverlapDistances(
        subfidelity=o.O12 + float(np.sqrt(max(e_rad, 0.0))),
        superfidelity=o.O12 + float(np.sqrt(max(g_rad, 0.0))),
        hilbert_schmidt=float(np.sqrt(max(m.pi2, 0.0))),
        trace_distance=trace_distance_via_moments(m),
    )


# ---------------------------------------------------------------------------
# Permutation-operator identities
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _swap(n_modes: int, i: int, j: int) -> np.ndarray:
    return mode_swap_unitary(n_modes, i, j)


@lru_cache(maxsize=1)
def shift_operator() -> np.ndarray:
    """The 4-slot cyclic shift ``S = S_23 S_34 S_12 S_23`` (16x16).

    Slot labels are 1-based; the product reads right to left, and the
    result is the pair swap ``S_13 S_24``: under ``Tr[S (X x X)]`` it
    stitches two copies of ``X = rho1 rho2`` into ``Tr[X^2]``.
    """
    return _swap(4, 1, 2) @ _swap(4, 2, 3) @ _swap(4, 0, 1) @ _swap(4, 1, 2)


@lru_cache(maxsize=2)
def _shift_256(construction: str) -> np.ndarray:
    if construction == "embedded":
        return np.kron(shift_operator(), np.eye(16))
    if construction == "cycle":
        # Copy-slot 4-cycle on four two-qubit copies (8 modes): each factor
        # swaps whole copies, i.e. both of their modes.
        def copy_swap(i: int, j: int) -> np.ndarray:
            return _swap(8, 2 * i, 2 * j) @ _swap(8, 2 * i + 1, 2 * j + 1)

        return copy_swap(0, 1) @ copy_swap(1, 2) @ copy_swap(2, 3)
    raise ValueError(f"unknown construction {construction!r}")


def shift_operator_check(rho1: np.ndarray, rho2: np.ndarray, construction: str = "embedded") -> float:
    """Evaluate ``Tr[S (rho1 rho2) x (rho1 rho2)]`` as a 256x256 contraction.

    ``construction='embedded'`` pads the 4-slot shift and its operand
    with normalized identities up to 256x256; ``'cycle'`` instead uses
    the copy-slot 4-cycle acting on ``rho1 x rho2 x rho1 x rho2`` —
    both reproduce ``Tr[(rho1 rho2)^2]``.  The operand is non-Hermitian,
    so only the real part is a physical overlap; an imaginary part above
    1e-10 raises.
    """
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if construction == "embedded":
        x = np.kron(rho1 @ rho2, rho1 @ rho2)
        operand = np.kron(x, np.eye(16) / 16.0)
    elif construction == "cycle":
        operand = np.kron(np.kron(rho1, rho2), np.kron(rho1, rho2))
    else:
        raise ValueError(f"unknown construction {construction!r}")
    s = _shift_256(construction)
    val = complex(np.einsum("ij,ji->", s, operand))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"shift-operator trace has imaginary residue {val.imag:.3e}")
    return val.real


def swap_expansion_error() -> float:
    """Entrywise error of the Pauli expansion of the double swap, at 256x256.

    ``S_34 S_12 = (1/4) sum_{i,j=0..3} sigma_i^(1) sigma_i^(2)
    sigma_j^(3) sigma_j^(4)`` — all four terms of the partial sums enter
    with plus signs once the i, j ranges include 0.  Both sides are
    embedded on the first four of eight modes.
    """
    lhs16 = _swap(4, 2, 3) @ _swap(4, 0, 1)
    rhs16 = np.zeros((16, 16), dtype=complex)
    for i in range(4):
        for j in range(4):
            rhs16 += np.kron(np.kron(PAULI[i], PAULI[i]), np.kron(PAULI[j], PAULI[j]))
    rhs16 /= 4.0
    lhs = np.kron(lhs16, np.eye(16))
    rhs = np.kron(rhs16, np.eye(16))
    return float(np.abs(lhs - rhs).max())


@lru_cache(maxsize=1)
def overlap_operator() -> np.ndarray:
    """Hermitian operator measuring the first-order overlap on ``rho1 x rho2``.

    With modes ordered ``a1 b1 a2 b2``: conjugate ``V x V`` on the
    adjacent pairs by the middle swap ``S_{b1 a2}``, where
    ``V = sum_i sigma_i x sigma_i = 2I - 4 P^-``.  Its expectation is
    ``4 O(rho1, rho2)``: one factor of 4 against the 1/4 of the
    correlation expansion.
    """
    v = sum(np.kron(PAULI[i], PAULI[i]) for i in range(4))
    s_mid = _swap(4, 1, 2)
    return s_mid @ np.kron(v, v) @ s_mid


def overlap_operator_residual(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """``|Tr[O (rho1 x rho2)] - 4 Tr(rho1 rho2)|`` for the overlap operator."""
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    val = np.einsum("ij,ji->", overlap_operator(), np.kron(rho1, rho2))
    direct = np.einsum("ij,ji->", rho1, rho2)
    return float(abs(val - 4.0 * direct))


def product_rule_residual(rho1: np.ndarray, rho2: np.ndarray, traceless: bool = True) -> float:
    """Worst-case error of the singlet product rule over all 16 index pairs.

    The contraction ``sum_n R1[m,n] R2[n,k]`` over n = 1..3 equals
    ``Tr[(rho1 x rho2) sigma_m^(a1) x (1 - 4 P^-)_(b1 a2) x sigma_k^(b2)]``;
    extending the sum to n = 0 replaces the middle factor by
    ``(2 - 4 P^-)``.  ``traceless`` selects which variant to test.
    """
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    R1, R2 = to_correlation(rho1), to_correlation(rho2)
    w = np.kron(rho1, rho2)
    lo = 1 if traceless else 0
    mid = (1.0 if traceless else 2.0) * np.eye(4) - 4.0 * P_MINUS
    worst = 0.0
    for m in range(4):
        for k in range(4):
            lhs = float(R1[m, lo:] @ R2[lo:, k])
            op = np.kron(np.kron(PAULI[m], mid), PAULI[k])
            rhs = complex(np.einsum("ij,ji->", op, w))
            worst = max(worst, abs(lhs - rhs))
    return worst
