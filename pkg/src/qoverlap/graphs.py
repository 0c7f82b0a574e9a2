"""Singlet-projection measurement graphs.

A graph is a matching (set of disjoint edges) on the modes of a
multi-copy layout; each edge is one two-mode singlet projection and the
graph's statistic is the probability that every edge fires at once.
This module enumerates graphs, reduces them to canonical classes under
copy exchange, and evaluates their probabilities — fast (vectorized
correlation contractions) and exactly (rational arithmetic), plus the
combinatorial counts behind the class bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations, product

import numpy as np

from .core import ModeLayout, to_correlation

__all__ = [
    "ETA",
    "MeasurementGraph",
    "enumerate_matchings",
    "count_matchings",
    "is_connected_spanning",
    "enumerate_classes",
    "probability",
    "probability_batch",
    "probability_exact",
    "subsumes",
    "connected_components",
    "dedup_report",
]

#: Signature of the singlet projector in the Pauli basis:
#: ``P^- = (1/4) sum_i ETA[i] sigma_i x sigma_i``.
ETA = np.array([1.0, -1.0, -1.0, -1.0])

# Seed for the probability-vector fingerprints used to merge classes that
# are distinct as edge sets but identical as functionals.
_FINGERPRINT_SEED = 20240817
_FINGERPRINT_PAIRS = 56


def _normalize_edges(edges) -> tuple[tuple[int, int], ...]:
    out = tuple(sorted(tuple(sorted(map(int, e))) for e in edges))
    return out


@dataclass(frozen=True)
class MeasurementGraph:
    """A matching of singlet projections over a multi-copy layout."""

    layout: ModeLayout
    edges: tuple[tuple[int, int], ...]
    label: str | None = None

    def __post_init__(self) -> None:
        edges = _normalize_edges(self.edges)
        object.__setattr__(self, "edges", edges)
        seen: set[int] = set()
        for i, j in edges:
            if i == j:
                raise ValueError(f"edge ({i},{j}) is a loop")
            for k in (i, j):
                if not 0 <= k < self.layout.n_modes:
                    raise ValueError(f"edge endpoint {k} outside layout with {self.layout.n_modes} modes")
                if k in seen:
                    raise ValueError(f"mode {k} appears in two edges; edges must be disjoint")
                seen.add(k)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_copies(self) -> int:
        return self.layout.n_copies

    def counts(self) -> tuple[int, int]:
        return self.layout.counts()

    def touched_copies(self) -> tuple[int, ...]:
        touched = {m // 2 for e in self.edges for m in e}
        return tuple(sorted(touched))

    def key(self) -> tuple:
        """Hashable identity: state ids plus the edge tuple."""
        return (self.layout.copies, self.edges)

    def relabel(self, perm: dict[int, int], new_layout: ModeLayout) -> "MeasurementGraph":
        """Move copy ``c`` to position ``perm[c]`` (modes follow their copy)."""
        edges = [
            tuple(2 * perm[m // 2] + (m % 2) for m in e)
            for e in self.edges
        ]
        return MeasurementGraph(new_layout, edges, self.label)

    def minimal(self) -> "MeasurementGraph":
        """Drop untouched copies and re-sort into standard layout order."""
        touched = self.touched_copies()
        if not touched:
            raise ValueError("the empty graph has no minimal layout")
        ids = [self.layout.copies[c] for c in touched]
        order = sorted(range(len(touched)), key=lambda k: (ids[k], touched[k]))
        perm = {touched[old]: new for new, old in enumerate(order)}
        new_layout = ModeLayout(tuple(ids[old] for old in order))
        return self.relabel(perm, new_layout)

    def canonical(self) -> "MeasurementGraph":
        """Lexicographically smallest relabeling under same-state copy exchange."""
        g = self.minimal()
        n1, n2 = g.counts()
        best = None
        for p1 in permutations(range(n1)):
            for p2 in permutations(range(n2)):
                perm = {i: p1[i] for i in range(n1)}
                perm.update({n1 + i: n1 + p2[i] for i in range(n2)})
                edges = _normalize_edges(
                    tuple(2 * perm[m // 2] + (m % 2) for m in e) for e in g.edges
                )
                if best is None or edges < best:
                    best = edges
        return MeasurementGraph(g.layout, best, self.label)

    def role_swapped(self) -> "MeasurementGraph":
        """The same graph with the two states' roles exchanged."""
        g = self.minimal()
        n1, n2 = g.counts()
        # State-2 copies become state-1 copies and move to the front.
        perm = {i: n2 + i for i in range(n1)}
        perm.update({n1 + i: i for i in range(n2)})
        return g.relabel(perm, ModeLayout.standard(n2, n1))


def enumerate_matchings(modes: list[int]) -> list[tuple[tuple[int, int], ...]]:
    """All matchings (including the empty one) on the given mode list."""
    modes = list(modes)
    if not modes:
        return [()]
    first, rest = modes[0], modes[1:]
    out = list(enumerate_matchings(rest))  # first left unmatched
    for j, partner in enumerate(rest):
        sub = rest[:j] + rest[j + 1 :]
        edge = (first, partner) if first < partner else (partner, first)
        out.extend(_normalize_edges(m + (edge,)) for m in enumerate_matchings(sub))
    return out


def count_matchings(n_modes: int) -> int:
    """Closed-form matching count: ``sum_k C(n, 2k) (2k-1)!!`` including empty."""
    import math

    total = 0
    for k in range(n_modes // 2 + 1):
        dfact = 1
        for t in range(2 * k - 1, 0, -2):
            dfact *= t
        total += math.comb(n_modes, 2 * k) * dfact
    return total


def connected_components(layout: ModeLayout, edges) -> list[tuple[int, ...]]:
    """Partition the touched copies into connected components of the copy graph."""
    edges = _normalize_edges(edges)
    adj: dict[int, set[int]] = {}
    for i, j in edges:
        ci, cj = i // 2, j // 2
        adj.setdefault(ci, set()).add(cj)
        adj.setdefault(cj, set()).add(ci)
    comps = []
    todo = set(adj)
    while todo:
        seed = min(todo)
        comp, stack = {seed}, [seed]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in comp:
                    comp.add(nb)
                    stack.append(nb)
        todo -= comp
        comps.append(tuple(sorted(comp)))
    return comps


def is_connected_spanning(layout: ModeLayout, edges) -> bool:
    """True when the edges touch every copy and form one connected component."""
    comps = connected_components(layout, edges)
    return len(comps) == 1 and len(comps[0]) == layout.n_copies


def _class_universe(max_copies: int) -> list[MeasurementGraph]:
    classes: dict[tuple, MeasurementGraph] = {}
    for n1 in range(max_copies + 1):
        for n2 in range(max_copies + 1 - n1):
            if n1 + n2 < 1:
                continue
            layout = ModeLayout.standard(n1, n2)
            for edges in enumerate_matchings(list(range(layout.n_modes))):
                if not edges or not is_connected_spanning(layout, edges):
                    continue
                g = MeasurementGraph(layout, edges).canonical()
                classes.setdefault(g.key(), g)
    return sorted(classes.values(), key=lambda g: (g.n_copies, g.counts(), g.n_edges, g.edges))


def _fingerprint_states() -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(_FINGERPRINT_SEED)
    R1s, R2s = [], []
    for _ in range(_FINGERPRINT_PAIRS):
        for acc in (R1s, R2s):
            g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            rho = g @ g.conj().T
            acc.append(to_correlation(rho / rho.trace().real))
    return np.array(R1s), np.array(R2s)


def enumerate_classes(max_copies: int = 4, merge_fingerprints: bool = True) -> list[MeasurementGraph]:
    """Connected graph classes on every layout with at most ``max_copies`` copies.

    Graphs are deduplicated by canonical form under copy exchange; with
    ``merge_fingerprints`` classes whose probability functionals agree on
    a fixed random ensemble (rounded at 1e-10) are merged as well, so no
    two returned classes are equivalent as measurements.  Connected
    classes generate everything else: a disconnected graph's probability
    is the product over its components, and untouched copies are
    dropped.  Deterministic ordering.
    """
    classes = _class_universe(max_copies)
    if not merge_fingerprints:
        return classes
    R1s, R2s = _fingerprint_states()
    seen: dict[tuple, MeasurementGraph] = {}
    for g in classes:
        fp = tuple(np.round(probability_batch(g, R1s, R2s), 10))
        seen.setdefault(fp, g)
    return sorted(seen.values(), key=lambda g: (g.n_copies, g.counts(), g.n_edges, g.edges))


# ---------------------------------------------------------------------------
# Probability evaluation
# ---------------------------------------------------------------------------


def _copy_factors(graph: MeasurementGraph) -> list[tuple[int, int | None, int | None]]:
    """Per touched copy: (copy index, a-mode edge index, b-mode edge index)."""
    a_edge: dict[int, int] = {}
    b_edge: dict[int, int] = {}
    for k, (i, j) in enumerate(graph.edges):
        for m in (i, j):
            (a_edge if m % 2 == 0 else b_edge)[m // 2] = k
    out = []
    for c in sorted(set(a_edge) | set(b_edge)):
        out.append((c, a_edge.get(c), b_edge.get(c)))
    return out


def _einsum_recipe(graph: MeasurementGraph) -> tuple[str, list[tuple[int, str]]]:
    """Subscript string and copy/slice plan for the probability contraction.

    Returns the einsum subscripts (eta operands first, then one operand
    per touched copy with a batch axis) and, per copy, its state id and
    slice spec: ``"ab"`` (full matrix), ``"a"`` (first column), ``"b"``
    (first row), or ``"d"`` (diagonal, within-copy edge).
    """
    letters = "ijklmnop"
    subs = [letters[k] for k in range(graph.n_edges)]
    copy_plan: list[tuple[int, str]] = []
    copy_subs: list[str] = []
    for c, ea, eb in _copy_factors(graph):
        sid = graph.layout.copies[c]
        if ea is not None and eb is not None:
            if ea == eb:
                copy_plan.append((sid, "d"))
                copy_subs.append("s" + subs[ea])
            else:
                copy_plan.append((sid, "ab"))
                copy_subs.append("s" + subs[ea] + subs[eb])
        elif ea is not None:
            copy_plan.append((sid, "a"))
            copy_subs.append("s" + subs[ea])
        else:
            copy_plan.append((sid, "b"))
            copy_subs.append("s" + subs[eb])
    spec = ",".join(subs + copy_subs) + "->s"
    return spec, copy_plan


def probability_batch(graph: MeasurementGraph, R1s: np.ndarray, R2s: np.ndarray) -> np.ndarray:
    """Graph probabilities for a batch of correlation-matrix pairs.

    ``R1s``/``R2s`` have shape (S, 4, 4); the result has shape (S,).
    The contraction is ``4**-|E| sum_idx (prod_e ETA[i_e])
    (prod_c R^(state_c)[row_c, col_c])`` with each copy's row/column
    indices read off the edges touching its two modes.
    """
    R1s = np.asarray(R1s, dtype=float)
    R2s = np.asarray(R2s, dtype=float)
    if not graph.edges:
        return np.ones(R1s.shape[0])
    spec, copy_plan = _einsum_recipe(graph)
    operands: list[np.ndarray] = [ETA] * graph.n_edges
    for sid, kind in copy_plan:
        R = R1s if sid == 1 else R2s
        if kind == "ab":
            operands.append(R)
        elif kind == "a":
            operands.append(R[:, :, 0])
        elif kind == "b":
            operands.append(R[:, 0, :])
        else:  # diagonal: within-copy edge
            operands.append(np.einsum("sii->si", R))
    return np.einsum(spec, *operands, optimize=True) / 4.0**graph.n_edges


def probability(graph: MeasurementGraph, rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Probability that every edge of the graph fires at once (one pair)."""
    R1 = to_correlation(np.asarray(rho1, dtype=complex))
    R2 = to_correlation(np.asarray(rho2, dtype=complex))
    return float(probability_batch(graph, R1[None], R2[None])[0])


def probability_exact(graph: MeasurementGraph, R1, R2) -> Fraction:
    """Exact rational graph probability from rational correlation matrices.

    ``R1``/``R2`` are 4x4 nested sequences of :class:`fractions.Fraction`.
    """
    if not graph.edges:
        return Fraction(1)
    factors = _copy_factors(graph)
    eta = (1, -1, -1, -1)
    total = Fraction(0)
    for idx in product(range(4), repeat=graph.n_edges):
        sign = 1
        for i in idx:
            sign *= eta[i]
        term = Fraction(sign)
        for c, ea, eb in factors:
            R = R1 if graph.layout.copies[c] == 1 else R2
            row = idx[ea] if ea is not None else 0
            col = idx[eb] if eb is not None else 0
            term *= R[row][col]
            if term == 0:
                break
        total += term
    return total / 4**graph.n_edges


# ---------------------------------------------------------------------------
# Structural relations and counting
# ---------------------------------------------------------------------------


def subsumes(big: MeasurementGraph, small: MeasurementGraph) -> bool:
    """True when ``small`` embeds into ``big`` as a sub-measurement.

    An embedding maps the small graph's copies injectively onto copies of
    the same state in ``big`` so every edge lands on an edge of ``big``;
    the remaining edges are then simply ignored readouts, so ``small``
    comes free from ``big``'s joint statistics.
    """
    sg, bg = small.minimal(), big.minimal()
    s1, s2 = sg.counts()
    b1, b2 = bg.counts()
    if s1 > b1 or s2 > b2:
        return False
    big_edges = set(bg.edges)
    for p1 in permutations(range(b1), s1):
        for p2 in permutations(range(b2), s2):
            perm = {i: p1[i] for i in range(s1)}
            perm.update({s1 + i: b1 + p2[i] for i in range(s2)})
            ok = all(
                tuple(sorted(2 * perm[m // 2] + (m % 2) for m in e)) in big_edges
                for e in sg.edges
            )
            if ok:
                return True
    return False


def _orbit_count(classes: list[MeasurementGraph], role_swap: bool) -> int:
    keys = set()
    for g in classes:
        k = g.canonical().key()
        if role_swap:
            k = min(k, g.role_swapped().canonical().key())
        keys.add(k)
    return len(keys)


def dedup_report(reference: int = 63) -> dict:
    """Class counts under each symmetry convention, compared to ``reference``.

    Reported universes: connected classes over layouts with at most two
    copies of each state, and over all layouts with at most four copies
    in total; each counted with copy exchange alone and with an
    additional simultaneous role swap of the two states.  Also includes
    the raw 8-mode matching count (brute force and closed form).
    """
    all_classes = enumerate_classes(4)
    upto22 = [g for g in all_classes if g.counts()[0] <= 2 and g.counts()[1] <= 2]
    brute = len(enumerate_matchings(list(range(8))))
    counts = {
        "raw_matchings_8_modes": brute,
        "raw_matchings_formula": count_matchings(8),
        "classes_two_copies_each": _orbit_count(upto22, role_swap=False),
        "classes_two_copies_each_role_swapped": _orbit_count(upto22, role_swap=True),
        "classes_four_copies_total": _orbit_count(all_classes, role_swap=False),
        "classes_four_copies_total_role_swapped": _orbit_count(all_classes, role_swap=True),
        "per_layout": {},
    }
    for g in all_classes:
        key = g.counts()
        counts["per_layout"][key] = counts["per_layout"].get(key, 0) + 1
    counts["reference_class_count"] = reference
    counts["matches_reference"] = {
        name: counts[name] == reference
        for name in (
            "classes_two_copies_each",
            "classes_two_copies_each_role_swapped",
            "classes_four_copies_total",
            "classes_four_copies_total_role_swapped",
        )
    }
    return counts
