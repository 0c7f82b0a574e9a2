"""Rederivation of distance functionals as graph-probability polynomials.

Every quantity the interferometer estimates — purities, overlaps, the
difference-moments Pi_n, the fourth-order cross overlaps — is a linear
combination of products of measurement-graph probabilities.  This module
recovers those combinations numerically: it builds the monomial basis,
fits coefficients by least squares on random state ensembles, snaps them
onto the thirds grid they empirically live on, certifies the result with
exact rational arithmetic, and compares the resulting measurement counts
against the reference workflow counts.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable

import numpy as np

from .core import ModeLayout, PAULI, PAULI2, random_state, to_correlation
from .graphs import (
    MeasurementGraph,
    connected_components,
    enumerate_classes,
    enumerate_matchings,
    probability_batch,
    probability_exact,
)
from . import interferometer

__all__ = [
    "MonomialBasis",
    "CoefficientVector",
    "ResidualError",
    "build_basis",
    "fit_coefficients",
    "derive_all",
    "measurement_forms",
    "overlap_form",
    "pi2_form",
    "Claim",
    "ClaimReport",
    "verify_table_claims",
    "TARGETS",
    "TARGET_WORDS",
]

SNAP_TOL = 1e-7          # distance to the nearest k/3 at which we snap
FIT_TOL = 1e-9           # max residual for a support to count as exact
HOLDOUT_TOL = 1e-8       # contract: held-out residual bound
HOLDOUT_PAIRS = 500
EXACT_CHECK_PAIRS = 24   # rational state pairs used for certification


class ResidualError(RuntimeError):
    """No representation found: held-out residual exceeded the bound."""


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


def _w(*seq):
    def oracle(rho1: np.ndarray, rho2: np.ndarray) -> float:
        acc = np.eye(4, dtype=complex)
        for s in seq:
            acc = acc @ (rho1 if s == 1 else rho2)
        return float(np.trace(acc).real)

    return oracle


def _pi(n: int):
    def oracle(rho1: np.ndarray, rho2: np.ndarray) -> float:
        lam = rho1 - rho2
        return float(np.trace(np.linalg.matrix_power(lam, n)).real)

    return oracle


#: target id -> oracle functional of (rho1, rho2)
TARGETS: dict[str, Callable[[np.ndarray, np.ndarray], float]] = {
    "one": lambda rho1, rho2: 1.0,
    "o11": _w(1, 1),
    "o22": _w(2, 2),
    "o12": _w(1, 2),
    "pi2": _pi(2),
    "pi3": _pi(3),
    "pi4": _pi(4),
    "w1111": _w(1, 1, 1, 1),
    "w1112": _w(1, 1, 1, 2),
    "w1122": _w(1, 1, 2, 2),
    "o2": _w(1, 2, 1, 2),
    "w1222": _w(1, 2, 2, 2),
    "w2222": _w(2, 2, 2, 2),
}


# ---------------------------------------------------------------------------
# Basis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonomialBasis:
    """Graph classes plus the monomials (index multisets) built on them.

    ``monomials[k]`` is a sorted tuple of indices into ``graphs``; the
    empty tuple is the constant 1.  Each monomial's total copy count is
    capped at four — the largest simultaneous experiment considered.
    """

    graphs: tuple[MeasurementGraph, ...]
    monomials: tuple[tuple[int, ...], ...]
    max_copies: int

    @property
    def n_monomials(self) -> int:
        return len(self.monomials)

    def monomial_copies(self, k: int) -> int:
        return sum(self.graphs[i].n_copies for i in self.monomials[k])

    def graph_matrix(self, R1s: np.ndarray, R2s: np.ndarray) -> np.ndarray:
        """(n_graphs, S) matrix of every class probability on the batch."""
        return np.array([probability_batch(g, R1s, R2s) for g in self.graphs])

    def design_matrix(self, R1s: np.ndarray, R2s: np.ndarray) -> np.ndarray:
        """(S, n_monomials) matrix of monomial values on the batch."""
        P = self.graph_matrix(R1s, R2s)
        S = R1s.shape[0]
        cols = np.empty((self.n_monomials, S))
        for k, mono in enumerate(self.monomials):
            col = np.ones(S)
            for i in mono:
                col = col * P[i]
            cols[k] = col
        return cols.T

    def monomial_string(self, k: int) -> str:
        mono = self.monomials[k]
        if not mono:
            return "1"
        parts = []
        for i in sorted(set(mono)):
            power = mono.count(i)
            s = f"g[{self.graphs[i]!s}]"
            parts.append(s if power == 1 else s + f"^{power}")
        return "*".join(parts)

    def index_of_graph(self, graph: MeasurementGraph) -> int:
        key = graph.canonical().key()
        for i, g in enumerate(self.graphs):
            if g.key() == key:
                return i
        raise KeyError(f"graph {graph!s} not in basis")


def _graph_str(self: MeasurementGraph) -> str:
    n1, n2 = self.counts()
    return f"{n1}x{n2}:" + "".join(f"({i}-{j})" for i, j in self.edges)


MeasurementGraph.__str__ = _graph_str  # printable canonical form


def build_basis(max_copies: int) -> MonomialBasis:
    """Monomial basis over the connected graph classes.

    ``max_copies`` is 2 (enough for purities, first-order overlaps and
    Pi_2) or 4 (fourth-order overlaps and the higher moments).  Monomials
    are all multisets of classes whose copy counts sum to at most four.
    """
    if max_copies not in (2, 4):
        raise ValueError("max_copies must be 2 or 4")
    graphs = tuple(g for g in enumerate_classes(4) if g.n_copies <= max_copies)
    copies = [g.n_copies for g in graphs]
    monomials: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], start: int, budget: int) -> None:
        monomials.append(prefix)
        for i in range(start, len(graphs)):
            if copies[i] <= budget:
                extend(prefix + (i,), i, budget - copies[i])

    extend((), 0, 4)
    monomials.sort(key=lambda m: (sum(copies[i] for i in m), len(m), m))
    return MonomialBasis(graphs, tuple(monomials), max_copies)


# ---------------------------------------------------------------------------
# Closed forms (rederived directly from the Bloch expansion)
# ---------------------------------------------------------------------------


def _pair_graphs(n1: int, n2: int) -> tuple[MeasurementGraph, MeasurementGraph, MeasurementGraph]:
    """The a-a edge, b-b edge, and double-edge graphs between two copies."""
    layout = ModeLayout.standard(n1, n2)
    ga = MeasurementGraph(layout, [(0, 2)]).canonical()
    gb = MeasurementGraph(layout, [(1, 3)]).canonical()
    gab = MeasurementGraph(layout, [(0, 2), (1, 3)]).canonical()
    return ga, gb, gab


def overlap_form(s: int, t: int) -> list[tuple[float, tuple[MeasurementGraph, ...]]]:
    """Tr(rho_s rho_t) as 1 - 2 p_a - 2 p_b + 4 p_ab.

    Splitting the Bloch sum (1/4) sum_mn R1[m,n] R2[m,n] by whether each
    index is zero turns it into the three coincidence statistics between
    the copies' a modes, b modes, and both at once.
    """
    n1 = (s == 1) + (t == 1)
    n2 = (s == 2) + (t == 2)
    ga, gb, gab = _pair_graphs(n1, n2)
    return [(1.0, ()), (-2.0, (ga,)), (-2.0, (gb,)), (4.0, (gab,))]


def pi2_form() -> list[tuple[float, tuple[MeasurementGraph, ...]]]:
    """Tr[(rho1-rho2)^2] over nine graphs; the constants cancel."""
    acc: dict[tuple, tuple[float, tuple[MeasurementGraph, ...]]] = {}
    for weight, (s, t) in ((1.0, (1, 1)), (1.0, (2, 2)), (-2.0, (1, 2))):
        for coeff, graphs in overlap_form(s, t):
            key = tuple(g.key() for g in graphs)
            old = acc.get(key, (0.0, graphs))[0]
            acc[key] = (old + weight * coeff, graphs)
    return [(c, gs) for c, gs in acc.values() if abs(c) > 1e-15]


def _closed_form_support(target: str, basis: MonomialBasis) -> list[int] | None:
    """Known-support seed for the search, where the algebra gives one."""
    forms = {
        "one": [(1.0, ())],
        "o11": overlap_form(1, 1),
        "o22": overlap_form(2, 2),
        "o12": overlap_form(1, 2),
        "pi2": pi2_form(),
    }
    if target not in forms:
        return None
    idx = []
    for _, graphs in forms[target]:
        mono = tuple(sorted(basis.index_of_graph(g) for g in graphs))
        idx.append(basis.monomials.index(mono))
    return sorted(set(idx))


# ---------------------------------------------------------------------------
# Systematic supports: Pauli trace kernels expanded over slot matchings
# ---------------------------------------------------------------------------
#
# Any word Tr[rho_{s1} ... rho_{sk}] is a Bloch sum
#     4^-k sum_{m,n} prod_j R_{s_j}[m_j, n_j] * Re(t_k[m] t_k[n])
# where t_k[a1..ak] = Tr[sigma_a1 ... sigma_ak].  The kernel Re(t x t)
# lies in the span of "matching tensors": pick a perfect or partial
# matching of the 2k index slots, require matched slots equal and
# unmatched slots zero.  Expanding each matched pair through the edge
# identity sum_m eta_m R1[m,u] R2[m,v] = 2 - 4 p_edge turns every
# matching into an inclusion-exclusion over measurement graphs, which is
# how the candidate supports below are produced.


def _trace_tensor(k: int) -> np.ndarray:
    """Tr[sigma_{a1} ... sigma_{ak}] over all length-k Pauli words."""
    up = "abcd"[:k]
    lo = "wxyz"[:k]
    spec = ",".join(f"{up[i]}{lo[i]}{lo[(i + 1) % k]}" for i in range(k))
    return np.einsum(f"{spec}->{up}", *([PAULI] * k))


_KERNEL_CACHE: dict[int, tuple[list[tuple[tuple[int, int], ...]], np.ndarray]] = {}


def _matching_kernel(k: int) -> tuple[list[tuple[tuple[int, int], ...]], np.ndarray]:
    """Coefficients c with Re(t_k x t_k) = sum_M c[M] * D_M.

    Slots 0..k-1 are the row word, k..2k-1 the column word.  D_M is 1
    where all matched slot pairs agree and every unmatched slot is 0.
    The Gram system is solved in closed form (inner products of matching
    tensors count the free index groups) and the expansion is verified
    pointwise before being cached; for k = 4 the matching tensors are
    linearly dependent and the minimum-norm solution is used.
    """
    if k in _KERNEL_CACHE:
        return _KERNEL_CACHE[k]
    t = _trace_tensor(k)
    kern = np.multiply.outer(t, t).real
    n = 2 * k
    matchings = enumerate_matchings(list(range(n)))
    m = len(matchings)
    covered = [frozenset(s for e in M for s in e) for M in matchings]

    G = np.empty((m, m))
    for a, Ma in enumerate(matchings):
        for b in range(a, m):
            parent = list(range(n))

            def find(x: int) -> int:
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for u, v in matchings[b] + Ma:
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
            pinned = {find(s) for s in range(n) if s not in covered[a] or s not in covered[b]}
            free = len({find(s) for s in range(n)}) - len(pinned)
            G[a, b] = G[b, a] = 4.0 ** free

    rhs = np.empty(m)
    for a, M in enumerate(matchings):
        total = 0.0
        for values in np.ndindex(*(4,) * len(M)):
            idx = [0] * n
            for (u, v), val in zip(M, values):
                idx[u] = idx[v] = val
            total += kern[tuple(idx)]
        rhs[a] = total

    c, *_ = np.linalg.lstsq(G, rhs, rcond=None)

    approx = np.zeros_like(kern)
    for a, M in enumerate(matchings):
        if abs(c[a]) < 1e-12:
            continue
        for values in np.ndindex(*(4,) * len(M)):
            idx = [0] * n
            for (u, v), val in zip(M, values):
                idx[u] = idx[v] = val
            approx[tuple(idx)] += c[a]
    err = float(np.abs(approx - kern).max())
    if err > 1e-9:
        raise RuntimeError(f"trace kernel expansion failed for k={k}: error {err:.3e}")
    _KERNEL_CACHE[k] = (matchings, c)
    return matchings, c


#: functional id -> signed word expansion; a word (s1..sk) is Tr[rho_s1 ... rho_sk]
TARGET_WORDS: dict[str, tuple[tuple[int, tuple[int, ...]], ...]] = {
    "o11": ((1, (1, 1)),),
    "o22": ((1, (2, 2)),),
    "o12": ((1, (1, 2)),),
    "pi2": ((1, (1, 1)), (-2, (1, 2)), (1, (2, 2))),
    "pi3": ((1, (1, 1, 1)), (-3, (1, 1, 2)), (3, (1, 2, 2)), (-1, (2, 2, 2))),
    "pi4": (
        (1, (1, 1, 1, 1)),
        (-4, (1, 1, 1, 2)),
        (4, (1, 1, 2, 2)),
        (2, (1, 2, 1, 2)),
        (-4, (1, 2, 2, 2)),
        (1, (2, 2, 2, 2)),
    ),
    "w1111": ((1, (1, 1, 1, 1)),),
    "w1112": ((1, (1, 1, 1, 2)),),
    "w1122": ((1, (1, 1, 2, 2)),),
    "o2": ((1, (1, 2, 1, 2)),),
    "w1222": ((1, (1, 2, 2, 2)),),
    "w2222": ((1, (2, 2, 2, 2)),),
}


@lru_cache(maxsize=None)
def _word_monomials(word: tuple[int, ...]) -> dict[tuple[tuple, ...], float]:
    """Graph-probability monomials spanning Tr[rho_{s1} ... rho_{sk}].

    Kernel slot j lifts to the a mode of copy j (j < k) or the b mode of
    copy j-k (j >= k); each matching then is an edge set on the copies of
    the word.  The per-edge identity converts the unweighted Bloch sums
    into graph probabilities by inclusion-exclusion over edge subsets,
    and each subset factorizes over its connected copy components.
    Returned keys are tuples of canonical component keys (empty tuple =
    the constant term); only the support is consumed downstream, the
    values are kept for diagnostics.
    """
    k = len(word)
    matchings, c = _matching_kernel(k)
    layout = ModeLayout(tuple(word))
    acc: dict[tuple[tuple, ...], float] = {}
    for a, M in enumerate(matchings):
        if abs(c[a]) < 1e-9:
            continue
        edges = []
        for u, v in M:
            mu = 2 * u if u < k else 2 * (u - k) + 1
            mv = 2 * v if v < k else 2 * (v - k) + 1
            edges.append((mu, mv))
        n_edges = len(edges)
        prefactor = c[a] * 4.0 ** (n_edges - k)
        for r in range(n_edges + 1):
            for chosen in combinations(range(n_edges), r):
                subset = [edges[i] for i in chosen]
                keys = []
                for comp in connected_components(layout, subset):
                    part = [e for e in subset if e[0] // 2 in comp]
                    keys.append(MeasurementGraph(layout, part).canonical().key())
                mono = tuple(sorted(keys))
                acc[mono] = acc.get(mono, 0.0) + prefactor * (-1.0) ** r * 2.0 ** (r - n_edges)
    return {mono: v for mono, v in acc.items() if abs(v) > 1e-9}


def _symbolic_support(target: str, basis: MonomialBasis) -> list[int] | None:
    """Candidate monomial support assembled from the word expansion."""
    words = TARGET_WORDS.get(target)
    if words is None:
        return None
    if max(len(w) for _, w in words) > basis.max_copies:
        return None
    total: dict[tuple[tuple, ...], float] = {}
    for weight, word in words:
        for mono, v in _word_monomials(word).items():
            total[mono] = total.get(mono, 0.0) + weight * v
    key_to_idx = {g.key(): i for i, g in enumerate(basis.graphs)}
    position = {mono: pos for pos, mono in enumerate(basis.monomials)}
    support = set()
    for mono, v in total.items():
        if abs(v) < 1e-9:
            continue
        idx = tuple(sorted(key_to_idx[key] for key in mono))
        support.add(position[idx])
    return sorted(support)


# ---------------------------------------------------------------------------
# Exact rational arithmetic (certification of snapped coefficients)
# ---------------------------------------------------------------------------

_P2_RE = np.round(PAULI2.real).astype(int)
_P2_IM = np.round(PAULI2.imag).astype(int)


def _rational_state(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random density matrix with exactly rational entries, as (re, im)."""
    while True:
        a = rng.integers(-2, 3, (4, 4))
        b = rng.integers(-2, 3, (4, 4))
        re = a @ a.T + b @ b.T
        im = b @ a.T - a @ b.T
        t = int(np.trace(re))
        if t > 0:
            break
    frac = np.vectorize(lambda v: Fraction(int(v), t), otypes=[object])
    return frac(re), frac(im)


def _rat_mul(x, y):
    return x[0].dot(y[0]) - x[1].dot(y[1]), x[0].dot(y[1]) + x[1].dot(y[0])


def _rat_sub(x, y):
    return x[0] - y[0], x[1] - y[1]


def _rat_trace(x) -> Fraction:
    return Fraction(np.trace(x[0]))


def _rat_correlation(rho) -> np.ndarray:
    re, im = rho
    R = np.empty((4, 4), dtype=object)
    for m in range(4):
        for n in range(4):
            acc = Fraction(0)
            for i in range(4):
                for j in range(4):
                    sr, si = _P2_RE[m, n, j, i], _P2_IM[m, n, j, i]
                    if sr:
                        acc += re[i, j] * sr
                    if si:
                        acc -= im[i, j] * si
            R[m, n] = acc
    return R


def _rat_target(target: str, rho1, rho2) -> Fraction:
    if target == "one":
        return Fraction(1)
    if target.startswith("pi"):
        n = int(target[2])
        lam = _rat_sub(rho1, rho2)
        acc = lam
        for _ in range(n - 1):
            acc = _rat_mul(acc, lam)
        return _rat_trace(acc)
    seq = {"o11": "11", "o22": "22", "o12": "12", "o2": "1212"}.get(target, target[1:])
    acc = None
    for ch in seq:
        rho = rho1 if ch == "1" else rho2
        acc = rho if acc is None else _rat_mul(acc, rho)
    return _rat_trace(acc)


def _rat_monomial(basis: MonomialBasis, k: int, R1, R2) -> Fraction:
    acc = Fraction(1)
    for i in basis.monomials[k]:
        acc *= probability_exact(basis.graphs[i], R1, R2)
    return acc


def _rat_solve(A: list[list[Fraction]], y: list[Fraction]) -> list[Fraction] | None:
    """Exact Gaussian elimination; None when the system is inconsistent."""
    rows = [row[:] + [yi] for row, yi in zip(A, y)]
    n_cols = len(A[0])
    pivots: list[tuple[int, int]] = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        rows[r] = [v / rows[r][c] for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [v - f * p for v, p in zip(rows[i], rows[r])]
        pivots.append((r, c))
        r += 1
        if r == len(rows):
            break
    if any(all(v == 0 for v in row[:-1]) and row[-1] != 0 for row in rows):
        return None
    x = [Fraction(0)] * n_cols
    for r, c in pivots:
        x[c] = rows[r][-1]
    return x


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientVector:
    """Sparse decomposition of a target functional over basis monomials."""

    target: str
    basis: MonomialBasis
    entries: dict[int, Fraction | float]
    residual: float
    non_unique: bool
    all_rational: bool
    exact_certified: bool

    @property
    def denominators_divide_3(self) -> bool:
        return all(
            isinstance(c, Fraction) and c.denominator in (1, 3) for c in self.entries.values()
        )

    def support_graphs(self) -> tuple[int, ...]:
        idx = {i for k in self.entries for i in self.basis.monomials[k]}
        return tuple(sorted(idx))

    def as_form(self) -> list[tuple[float, tuple[MeasurementGraph, ...]]]:
        return [
            (float(c), tuple(self.basis.graphs[i] for i in self.basis.monomials[k]))
            for k, c in sorted(self.entries.items())
        ]

    def evaluate_batch(self, R1s: np.ndarray, R2s: np.ndarray) -> np.ndarray:
        out = np.zeros(np.asarray(R1s).shape[0])
        for k, c in self.entries.items():
            col = np.ones_like(out)
            for i in self.basis.monomials[k]:
                col = col * probability_batch(self.basis.graphs[i], R1s, R2s)
            out += float(c) * col
        return out

    def evaluate(self, rho1: np.ndarray, rho2: np.ndarray) -> float:
        R1 = to_correlation(np.asarray(rho1, dtype=complex))
        R2 = to_correlation(np.asarray(rho2, dtype=complex))
        return float(self.evaluate_batch(R1[None], R2[None])[0])

    def as_table(self) -> str:
        """One line per monomial: coefficient as p/q, then the monomial."""
        lines = [f"# target: {self.target}"]
        for k in sorted(self.entries):
            c = self.entries[k]
            if isinstance(c, Fraction):
                cs = f"{c.numerator}/{c.denominator}" if c.denominator != 1 else str(c.numerator)
            else:
                cs = repr(c)
            lines.append(f"{cs}\t{self.basis.monomial_string(k)}")
        return "\n".join(lines) + "\n"


def _sample_ensemble(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, list, list]:
    rhos1 = [random_state(4, seed=rng) for _ in range(n)]
    rhos2 = [random_state(4, seed=rng) for _ in range(n)]
    R1s = np.array([to_correlation(r) for r in rhos1])
    R2s = np.array([to_correlation(r) for r in rhos2])
    return R1s, R2s, rhos1, rhos2


#: (basis id, samples, seed) -> fit/holdout ensembles, design matrices, rank.
#: The basis objects are module-lifetime singletons in practice, so this
#: cache just spares every fit the same multi-second rebuild.
_DESIGN_CACHE: dict[tuple, tuple] = {}


def _design_context(basis: MonomialBasis, samples: int, seed: int):
    key = (id(basis), basis.max_copies, basis.n_monomials, samples, seed)
    if key not in _DESIGN_CACHE:
        rng = np.random.default_rng(seed)
        R1s, R2s, rhos1, rhos2 = _sample_ensemble(rng, samples)
        A = basis.design_matrix(R1s, R2s)
        rank = int(np.linalg.matrix_rank(A, tol=1e-8))
        H1s, H2s, h1, h2 = _sample_ensemble(rng, HOLDOUT_PAIRS)
        P_hold = basis.graph_matrix(H1s, H2s)
        _DESIGN_CACHE[key] = (A, rhos1, rhos2, rank, P_hold, h1, h2)
    return _DESIGN_CACHE[key]


def _support_solve(A: np.ndarray, y: np.ndarray, support: list[int]) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(A[:, support], y, rcond=None)
    resid = float(np.abs(A[:, support] @ coef - y).max())
    return coef, resid


def _omp(A: np.ndarray, y: np.ndarray, max_support: int = 80) -> list[int]:
    """Orthogonal matching pursuit with deterministic tie-breaking."""
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    support: list[int] = []
    residual = y.copy()
    for _ in range(max_support):
        scores = np.abs(A.T @ residual) / norms
        scores[support] = -1.0
        j = int(np.argmax(scores))
        support.append(j)
        coef, res = _support_solve(A, y, support)
        residual = y - A[:, support] @ coef
        if res < FIT_TOL:
            break
    return support


def _prune(
    A: np.ndarray,
    y: np.ndarray,
    support: list[int],
    basis: MonomialBasis | None = None,
    prefer: frozenset[int] | None = None,
) -> list[int]:
    """Drop columns whose removal keeps the fit exact, until stable.

    With ``prefer`` set, monomials touching graph classes outside that
    set are tried first, steering the surviving support toward reuse of
    an already-required class set.  Scan order is deterministic.
    """
    support = list(support)

    def outside(col: int) -> int:
        if prefer is None or basis is None:
            return 0
        return len(set(basis.monomials[col]) - prefer)

    changed = True
    while changed:
        changed = False
        coef, _ = _support_solve(A, y, support)
        weight = dict(zip(support, np.abs(coef)))
        order = sorted(range(len(support)), key=lambda p: (-outside(support[p]), weight[support[p]], p))
        for pos in order:
            trial = support[:pos] + support[pos + 1 :]
            if not trial:
                continue
            _, res = _support_solve(A, y, trial)
            if res < FIT_TOL:
                support = trial
                changed = True
                break
    return support


def _avoid_classes(
    A: np.ndarray, y: np.ndarray, basis: MonomialBasis, keep: frozenset[int]
) -> list[int]:
    """Columns left after greedily banning graph classes outside ``keep``.

    A class is banned when the target still has an exact representation
    on the monomials that never mention it.  Feasibility is algebraic
    (the residual either stays at solver noise or jumps by orders of
    magnitude), so the rarest-class-first scan is stable across sample
    ensembles.
    """
    usage = Counter(i for mono in basis.monomials for i in set(mono))
    outside = sorted(set(usage) - keep, key=lambda i: (usage[i], i))
    banned: set[int] = set()

    def columns(av: set[int]) -> list[int]:
        return [k for k, mono in enumerate(basis.monomials) if not (set(mono) & av)]

    for cls in outside:
        trial = banned | {cls}
        _, res = _support_solve(A, y, columns(trial))
        if res < FIT_TOL:
            banned = trial
    return columns(banned)


def _distinct_graphs(basis: MonomialBasis, support: list[int]) -> int:
    return len({i for k in support for i in basis.monomials[k]})


def fit_coefficients(
    target: str,
    basis: MonomialBasis,
    samples: int,
    seed: int = 42,
    prefer_classes: frozenset[int] | None = None,
) -> CoefficientVector:
    """Fit ``target`` as a sparse rational combination of basis monomials.

    Random Ginibre state pairs give an overdetermined linear system for
    the monomial coefficients.  Candidate supports come from the closed
    forms (first-order overlaps), from the Pauli-trace-kernel expansion,
    and as a fallback from matching pursuit; each is pruned to a locally
    minimal support.  The monomials are linearly dependent on the
    four-copy basis, so solutions are non-unique and flagged as such; the
    candidate with the fewest distinct graph classes wins.  With
    ``prefer_classes`` the search additionally bans classes outside that
    set whenever a representation survives without them (used to keep
    the moment workflows on a shared class set).  Coefficients within
    1e-7 of a third are snapped, the snapped identity is certified with
    exact rational arithmetic on integer-valued random states, and the
    fit must reproduce the target on 500 held-out pairs to 1e-8, else
    :class:`ResidualError`.
    """
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; known: {sorted(TARGETS)}")
    if samples < 2 * basis.n_monomials:
        raise ValueError(
            f"need at least {2 * basis.n_monomials} samples for {basis.n_monomials} monomials"
        )
    oracle = TARGETS[target]
    A, rhos1, rhos2, rank, P_hold, h1, h2 = _design_context(basis, samples, seed)
    y = np.array([oracle(r1, r2) for r1, r2 in zip(rhos1, rhos2)])
    non_unique = rank < basis.n_monomials

    candidates: list[list[int]] = []
    best_res = np.inf
    seeded = _closed_form_support(target, basis)
    if seeded is not None:
        _, res = _support_solve(A, y, seeded)
        best_res = min(best_res, res)
        if res < FIT_TOL:
            candidates.append(_prune(A, y, seeded, basis, prefer_classes))
    symbolic = _symbolic_support(target, basis)
    if symbolic is not None:
        _, res = _support_solve(A, y, symbolic)
        best_res = min(best_res, res)
        if res < FIT_TOL:
            candidates.append(_prune(A, y, symbolic, basis, prefer_classes))
    if prefer_classes is not None:
        restricted = _avoid_classes(A, y, basis, prefer_classes)
        _, res = _support_solve(A, y, restricted)
        best_res = min(best_res, res)
        if res < FIT_TOL:
            candidates.append(_prune(A, y, restricted, basis, prefer_classes))
    if not candidates:
        omp_support = _prune(A, y, sorted(_omp(A, y)), basis, prefer_classes)
        _, omp_res = _support_solve(A, y, omp_support)
        best_res = min(best_res, omp_res)
        if omp_res < FIT_TOL:
            candidates.append(omp_support)
    if not candidates:
        raise ResidualError(
            f"no representation of {target!r} on this basis: "
            f"best support residual {best_res:.3e} exceeds {FIT_TOL}"
        )

    def classes_outside(s: list[int]) -> int:
        if prefer_classes is None:
            return 0
        return len({i for k in s for i in basis.monomials[k]} - prefer_classes)

    support = min(
        (sorted(s) for s in candidates),
        key=lambda s: (classes_outside(s), _distinct_graphs(basis, s), len(s), s),
    )
    coef, _ = _support_solve(A, y, support)

    # Snap to the thirds grid.
    entries: dict[int, Fraction | float] = {}
    all_rational = True
    for k, c in zip(support, coef):
        if abs(c) < 1e-10:
            continue
        snapped = Fraction(round(3 * c), 3)
        if abs(c - float(snapped)) < SNAP_TOL:
            entries[k] = snapped
        else:
            entries[k] = float(c)
            all_rational = False

    # Certify exactly on rational states; re-solve exactly if that fails.
    exact_certified = False
    if all_rational and entries:
        keys = sorted(entries)
        support_classes = sorted({i for k in keys for i in basis.monomials[k]})
        crng = np.random.default_rng(seed + 1)
        n_pairs = max(EXACT_CHECK_PAIRS, len(keys) + 8)
        rows, rhs = [], []
        ok = True
        for pair_no in range(n_pairs):
            q1, q2 = _rational_state(crng), _rational_state(crng)
            QR1, QR2 = _rat_correlation(q1), _rat_correlation(q2)
            probs = {i: probability_exact(basis.graphs[i], QR1, QR2) for i in support_classes}
            row = []
            for k in keys:
                acc = Fraction(1)
                for i in basis.monomials[k]:
                    acc *= probs[i]
                row.append(acc)
            t = _rat_target(target, q1, q2)
            rows.append(row)
            rhs.append(t)
            if sum(entries[k] * v for k, v in zip(keys, row)) != t:
                ok = False
            if ok and pair_no + 1 == EXACT_CHECK_PAIRS:
                break
        if not ok:
            solved = _rat_solve(rows, rhs)
            if solved is not None and all(
                sum(x * v for x, v in zip(solved, row)) == t for row, t in zip(rows, rhs)
            ):
                entries = {k: x for k, x in zip(keys, solved) if x != 0}
            else:
                all_rational = False
                entries = {k: float(c) for k, c in zip(support, coef) if abs(c) > 1e-10}
        exact_certified = all_rational

    # Held-out validation on fresh pairs (graph probabilities reused
    # across monomials through the precomputed class matrix).
    y_h = np.array([oracle(r1, r2) for r1, r2 in zip(h1, h2)])
    pred = np.zeros(len(h1))
    for k, c in entries.items():
        col = np.ones(len(h1))
        for i in basis.monomials[k]:
            col = col * P_hold[i]
        pred += float(c) * col
    residual = float(np.abs(pred - y_h).max()) if entries else float(np.abs(y_h).max())
    if residual >= HOLDOUT_TOL:
        raise ResidualError(
            f"representation of {target!r} failed held-out validation: "
            f"max residual {residual:.3e} >= {HOLDOUT_TOL}"
        )
    return CoefficientVector(
        target=target,
        basis=basis,
        entries=entries,
        residual=residual,
        non_unique=non_unique,
        all_rational=all_rational,
        exact_certified=exact_certified,
    )


def derive_all(seed: int = 42, samples: int | None = None) -> dict[str, CoefficientVector]:
    """Fit every supported functional and return the fits by target id.

    Purities, first-order overlaps and the quadratic moment live on the
    two-copy basis; the fourth-order words and higher moments on the
    four-copy basis.  The quartic moment is fitted last with a preference
    for the classes the quadratic and cubic fits already require, keeping
    the combined trace-distance workflow on as few distinct projective
    measurements as the representation allows.
    """
    fits: dict[str, CoefficientVector] = {}
    basis2 = build_basis(2)
    basis4 = build_basis(4)
    s2 = samples if samples is not None else max(600, 2 * basis2.n_monomials + 100)
    s4 = samples if samples is not None else max(1400, 2 * basis4.n_monomials + 200)
    for t in ("one", "o11", "o22", "o12", "pi2"):
        fits[t] = fit_coefficients(t, basis2, samples=s2, seed=seed)
    for t in ("w1111", "w1112", "w1122", "o2", "w1222", "w2222", "pi3"):
        fits[t] = fit_coefficients(t, basis4, samples=s4, seed=seed)
    key_to_idx = {g.key(): i for i, g in enumerate(basis4.graphs)}
    prefer = frozenset(
        key_to_idx[fits[t].basis.graphs[i].key()]
        for t in ("pi2", "pi3")
        for i in fits[t].support_graphs()
    )
    fits["pi4"] = fit_coefficients("pi4", basis4, samples=s4, seed=seed, prefer_classes=prefer)
    return fits


def measurement_forms(
    seed: int = 42, samples: int | None = None
) -> dict[str, list[tuple[float, tuple[MeasurementGraph, ...]]]]:
    """Graph decompositions for the six statistics the estimator consumes.

    Trimmed version of :func:`derive_all`: fits only o11, o22, o12, o2,
    pi3 and pi4 (plus pi2, which is needed to steer the quartic moment
    onto shared measurement classes) and returns them in the
    ``target -> [(coefficient, graphs)]`` shape that
    :func:`qoverlap.interferometer.estimate_distances` expects.
    """
    basis2 = build_basis(2)
    basis4 = build_basis(4)
    s2 = samples if samples is not None else max(600, 2 * basis2.n_monomials + 100)
    s4 = samples if samples is not None else max(1400, 2 * basis4.n_monomials + 200)
    fits = {
        t: fit_coefficients(t, basis2, samples=s2, seed=seed)
        for t in ("o11", "o22", "o12", "pi2")
    }
    for t in ("o2", "pi3"):
        fits[t] = fit_coefficients(t, basis4, samples=s4, seed=seed)
    key_to_idx = {g.key(): i for i, g in enumerate(basis4.graphs)}
    prefer = frozenset(
        key_to_idx[fits[t].basis.graphs[i].key()]
        for t in ("pi2", "pi3")
        for i in fits[t].support_graphs()
    )
    fits["pi4"] = fit_coefficients("pi4", basis4, samples=s4, seed=seed, prefer_classes=prefer)
    return {n: fits[n].as_form() for n in ("o11", "o22", "o12", "o2", "pi3", "pi4")}


# ---------------------------------------------------------------------------
# Workflow claim verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Claim:
    workflow: str
    quantity: str
    stated: int
    achieved: int
    note: str = ""

    @property
    def match(self) -> bool:
        return self.stated == self.achieved

    def line(self) -> str:
        status = "match" if self.match else "MISMATCH"
        extra = f"  ({self.note})" if self.note else ""
        return (
            f"{self.workflow:>14s} | {self.quantity:<24s} | stated {self.stated:>3d} "
            f"| achieved {self.achieved:>3d} | {status}{extra}"
        )


@dataclass(frozen=True)
class ClaimReport:
    claims: tuple[Claim, ...]

    @property
    def all_match(self) -> bool:
        return all(c.match for c in self.claims)

    def as_text(self) -> str:
        return "\n".join(c.line() for c in self.claims) + "\n"


def verify_table_claims(fits: dict[str, CoefficientVector]) -> ClaimReport:
    """Compare measurement counts of the fitted workflows to the stated ones.

    Counting conventions (emitted, never silently assumed): a
    "projection" is one distinct graph class appearing in a workflow's
    decompositions; the Hilbert-Schmidt workflow additionally counts the
    one reference intensity measurement every coincidence rate is
    normalized against, reconciling its 9 prime statistics with the
    stated 10; photon pairs are copies summed over the maximal graphs
    the planner actually configures.  Mismatches are reported with the
    achieved number, never suppressed.
    """
    missing = [t for t in ("pi2", "pi3", "pi4", "o2") if t not in fits]
    if missing:
        raise ValueError(f"claim verification needs fits for {missing}")

    def class_map(names: tuple[str, ...]) -> list[MeasurementGraph]:
        out: dict[tuple, MeasurementGraph] = {}
        for name in names:
            fit = fits[name]
            for i in fit.support_graphs():
                g = fit.basis.graphs[i]
                out[g.key()] = g
        return [out[k] for k in sorted(out)]

    claims: list[Claim] = []

    h_graphs = class_map(("pi2",))
    plan_h = interferometer.plan_configurations(h_graphs)
    claims.append(Claim("hilbert-schmidt", "prime statistics", 9, len(h_graphs)))
    claims.append(
        Claim(
            "hilbert-schmidt",
            "projective measurements",
            10,
            len(h_graphs) + 1,
            note="graph statistics plus the reference intensity measurement",
        )
    )
    claims.append(Claim("hilbert-schmidt", "photon pairs", 6, plan_h.photon_pairs))

    o2_graphs = class_map(("o2",))
    plan_o2 = interferometer.plan_configurations(o2_graphs)
    claims.append(Claim("subfidelity", "projections", 41, len(o2_graphs)))
    claims.append(Claim("subfidelity", "configurations", 10, len(plan_o2.configurations)))
    claims.append(
        Claim(
            "subfidelity",
            "photon pairs",
            20,
            plan_o2.photon_pairs,
            note="copies summed over maximal graphs",
        )
    )

    t_graphs = class_map(("pi2", "pi3", "pi4"))
    plan_t = interferometer.plan_configurations(t_graphs)
    claims.append(Claim("trace-distance", "projections", 51, len(t_graphs)))
    claims.append(
        Claim(
            "trace-distance",
            "photon pairs",
            104,
            plan_t.photon_pairs,
            note="copies summed over maximal graphs",
        )
    )

    return ClaimReport(tuple(claims))
