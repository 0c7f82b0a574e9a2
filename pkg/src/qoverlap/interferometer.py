"""Simulated multi-copy singlet-projection interferometry.

A measurement graph is realized by preparing its copies and jointly
measuring the two-outcome observable {P-, 1-P-} on every edge; the
all-singlet coincidence frequency estimates the graph probability.  One
prepared configuration yields the joint outcome pattern of all its
edges, so every sub-graph statistic comes out of the same counts — the
simulation draws those patterns multinomially from the exact joint
distribution and propagates shot noise through the distance formulas.

A "photon pair" is one two-qubit copy; hardware-level boson statistics
are out of scope (the antibunching event is abstracted to the singlet
outcome).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .core import __version__, ModeLayout, assemble, to_correlation
from .graphs import MeasurementGraph, probability_batch, subsumes
from .oracle import distance_set, trace_distance, hilbert_schmidt, sub_super_fidelity
from .overlaps import P_MINUS

__all__ = [
    "GraphOutcome",
    "Configuration",
    "ConfigurationPlan",
    "EstimationReport",
    "PlanError",
    "graph_probability",
    "pattern_distribution",
    "sample_graph",
    "v_observable_sample",
    "find_embedding",
    "plan_configurations",
    "estimate_distances",
]

PATTERN_TOL = 1e-9       # tolerated leakage when normalizing a joint distribution
DEGENERATE_SIGMA = 4.0   # radicand within this many sigma of 0 -> guarded error bar
BOOTSTRAP_DEFAULT = 200


class PlanError(ValueError):
    """A required graph cannot be measured with the given plan."""


# ---------------------------------------------------------------------------
# Single-graph probabilities, dense cross-check, sampling
# ---------------------------------------------------------------------------


def _embed_two_mode(op: np.ndarray, n_modes: int, i: int, j: int) -> np.ndarray:
    """Embed a two-mode operator onto modes (i, j) of an n-mode register."""
    perm = [i, j] + [k for k in range(n_modes) if k not in (i, j)]
    dim = 2**n_modes
    U = np.zeros((dim, dim))
    for src in range(dim):
        bits = [(src >> (n_modes - 1 - k)) & 1 for k in range(n_modes)]
        dst = 0
        for p in range(n_modes):
            dst = (dst << 1) | bits[perm[p]]
        U[dst, src] = 1.0
    full = np.kron(op, np.eye(2 ** (n_modes - 2)))
    return U.T @ full @ U


def graph_probability(
    graph: MeasurementGraph,
    rho1: np.ndarray,
    rho2: np.ndarray,
    method: str = "bloch",
) -> float:
    """Probability that every edge of the graph antibunches at once.

    ``method="bloch"`` contracts correlation matrices; ``method="dense"``
    assembles the full multi-copy state and multiplies embedded singlet
    projectors — the slow route kept as an independent cross-check.
    """
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if method == "bloch":
        R1, R2 = to_correlation(rho1), to_correlation(rho2)
        return float(probability_batch(graph, R1[None], R2[None])[0])
    if method != "dense":
        raise ValueError(f"unknown method {method!r}")
    layout = graph.layout
    W = assemble({1: rho1, 2: rho2}, layout)
    M = np.eye(2**layout.n_modes, dtype=complex)
    for i, j in graph.edges:
        M = M @ _embed_two_mode(P_MINUS, layout.n_modes, i, j)
    val = complex(np.einsum("ij,ji->", W, M))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"graph probability has imaginary residue {val.imag:.3e}")
    return float(val.real)


def pattern_distribution(
    graph: MeasurementGraph, R1: np.ndarray, R2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Joint outcome distribution of the V observables on every edge.

    Returns ``(subset_probs, pattern_probs)``, both indexed by edge
    bitmask: ``subset_probs[m]`` is the probability that at least the
    edges in ``m`` antibunch, ``pattern_probs[m]`` that exactly they do
    (inclusion-exclusion of the former).
    """
    E = graph.n_edges
    subset_probs = np.empty(2**E)
    for mask in range(2**E):
        edges = [graph.edges[k] for k in range(E) if mask >> k & 1]
        sub = MeasurementGraph(graph.layout, edges)
        subset_probs[mask] = probability_batch(sub, R1[None], R2[None])[0]
    pattern = np.zeros(2**E)
    for mask in range(2**E):
        zeros = [k for k in range(E) if not (mask >> k & 1)]
        for sub in range(2 ** len(zeros)):
            extra = 0
            for b, k in enumerate(zeros):
                if sub >> b & 1:
                    extra |= 1 << k
            sign = -1.0 if bin(sub).count("1") % 2 else 1.0
            pattern[mask] += sign * subset_probs[mask | extra]
    if pattern.min() < -PATTERN_TOL or abs(pattern.sum() - 1.0) > PATTERN_TOL:
        raise ValueError(
            f"joint pattern distribution invalid: min {pattern.min():.3e}, "
            f"sum {pattern.sum():.12f}"
        )
    pattern = np.clip(pattern, 0.0, None)
    pattern /= pattern.sum()
    return subset_probs, pattern


@dataclass(frozen=True)
class GraphOutcome:
    """Binomial estimate of one graph probability."""

    probability: float
    shots: int
    successes: int

    @property
    def estimate(self) -> float:
        return self.successes / self.shots

    @property
    def std_err(self) -> float:
        p = self.estimate
        return float(np.sqrt(max(p * (1.0 - p), 1.0 / self.shots) / self.shots))


def sample_graph(
    graph: MeasurementGraph,
    rho1: np.ndarray,
    rho2: np.ndarray,
    shots: int,
    seed: int | np.random.Generator = 42,
) -> GraphOutcome:
    """Draw the all-edges coincidence count for one graph."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = graph_probability(graph, rho1, rho2)
    if not -1e-12 <= p <= 1.0 + 1e-12:
        raise ValueError(f"graph probability {p} outside [0,1]")
    k = int(rng.binomial(shots, min(max(p, 0.0), 1.0)))
    return GraphOutcome(probability=p, shots=shots, successes=k)


def v_observable_sample(
    graph: MeasurementGraph,
    rho1: np.ndarray,
    rho2: np.ndarray,
    shots: int,
    seed: int | np.random.Generator = 42,
) -> np.ndarray:
    """Joint V-outcome counts over all edge patterns (indexed by bitmask)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    R1 = to_correlation(np.asarray(rho1, dtype=complex))
    R2 = to_correlation(np.asarray(rho2, dtype=complex))
    _, pattern = pattern_distribution(graph, R1, R2)
    return rng.multinomial(shots, pattern)


# ---------------------------------------------------------------------------
# Configuration planning
# ---------------------------------------------------------------------------


def find_embedding(
    host: MeasurementGraph, small: MeasurementGraph
) -> tuple[int, ...] | None:
    """Edge indices of ``host`` realizing ``small``, or None.

    Copies of ``small`` are mapped injectively onto same-state copies of
    ``host`` so that every edge of ``small`` lands on an edge of
    ``host``; the first mapping in deterministic order is returned as
    the tuple of host edge indices (one per edge of ``small``).
    """
    sg, hg = small.minimal(), host.minimal()
    s1, s2 = sg.counts()
    h1, h2 = hg.counts()
    if s1 > h1 or s2 > h2:
        return None
    edge_index = {e: k for k, e in enumerate(hg.edges)}
    for p1 in permutations(range(h1), s1):
        for p2 in permutations(range(h2), s2):
            perm = {c: p1[c] for c in range(s1)}
            perm.update({s1 + c: h1 + p2[c] for c in range(s2)})
            mapped = []
            for e in sg.edges:
                m = tuple(sorted(2 * perm[x // 2] + (x % 2) for x in e))
                k = edge_index.get(m)
                if k is None:
                    break
                mapped.append(k)
            else:
                return tuple(mapped)
    return None


@dataclass(frozen=True)
class Configuration:
    """Maximal graphs prepared and measured simultaneously.

    Members occupy disjoint copies, so their outcome patterns are
    independent; correlations exist only within a member.
    """

    members: tuple[MeasurementGraph, ...]

    @property
    def photon_pairs(self) -> int:
        return sum(m.n_copies for m in self.members)


@dataclass(frozen=True)
class ConfigurationPlan:
    graphs: tuple[MeasurementGraph, ...]
    maximal: tuple[MeasurementGraph, ...]
    free: tuple[MeasurementGraph, ...]
    configurations: tuple[Configuration, ...]
    hosts: dict  # canonical key -> (config index, member index, edge-index tuple)

    @property
    def photon_pairs(self) -> int:
        return sum(c.photon_pairs for c in self.configurations)


def plan_configurations(
    graphs, max_copies_per_configuration: int = 6
) -> ConfigurationPlan:
    """Choose what to actually measure for a set of required graphs.

    Graphs subsumed by another required graph come free from the host's
    joint V statistics, so only maximal graphs (under the embedding
    order) are prepared.  Maximal graphs are packed first-fit-decreasing
    into configurations of at most ``max_copies_per_configuration``
    copies; the reported photon-pair total is the sum over maximal
    graphs of their copy counts.
    """
    required: dict[tuple, MeasurementGraph] = {}
    for g in graphs:
        c = g.canonical()
        required.setdefault(c.key(), c)
    req = sorted(required.values(), key=lambda g: (g.n_copies, g.counts(), g.n_edges, g.edges))
    if not req:
        raise ValueError("no graphs to plan for")

    maximal, free = [], []
    for g in req:
        if any(h.key() != g.key() and subsumes(h, g) for h in req):
            free.append(g)
        else:
            maximal.append(g)

    # First-fit decreasing bin packing by copy count.
    bins: list[list[MeasurementGraph]] = []
    for g in sorted(maximal, key=lambda g: (-g.n_copies, g.counts(), g.edges)):
        for b in bins:
            if sum(m.n_copies for m in b) + g.n_copies <= max_copies_per_configuration:
                b.append(g)
                break
        else:
            bins.append([g])
    configurations = tuple(Configuration(tuple(b)) for b in bins)

    hosts: dict = {}
    for g in req:
        placed = False
        for ci, conf in enumerate(configurations):
            for mi, member in enumerate(conf.members):
                emb = find_embedding(member, g)
                if emb is not None:
                    hosts[g.key()] = (ci, mi, emb)
                    placed = True
                    break
            if placed:
                break
        if not placed:  # cannot happen: every graph embeds in its maximal host
            raise PlanError(f"no configuration hosts graph {g!s}")
    return ConfigurationPlan(
        graphs=tuple(req),
        maximal=tuple(maximal),
        free=tuple(free),
        configurations=configurations,
        hosts=hosts,
    )


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatRow:
    name: str
    oracle: float
    estimate: float
    std_err: float


@dataclass(frozen=True)
class MeasureRow:
    name: str
    oracle: float
    formula: float
    estimate: float
    std_err: float


@dataclass(frozen=True)
class EstimationReport:
    seed: int
    shots: int
    version: str
    photon_pairs: int
    n_configurations: int
    statistics: tuple[StatRow, ...]
    measures: tuple[MeasureRow, ...]
    audit: tuple[tuple[str, bool], ...]

    @property
    def audit_ok(self) -> bool:
        return all(ok for _, ok in self.audit)


_STAT_ORDER = ("o11", "o22", "o12", "o2", "pi3", "pi4")


def _sample_plan(plan, R1, R2, shots, seed, threads):
    """Per-member multinomial pattern counts, deterministic under seed."""
    jobs = [
        (ci, mi, member)
        for ci, conf in enumerate(plan.configurations)
        for mi, member in enumerate(conf.members)
    ]
    seeds = np.random.SeedSequence(seed).spawn(len(jobs))

    def run(k):
        ci, mi, member = jobs[k]
        rng = np.random.default_rng(seeds[k])
        _, pattern = pattern_distribution(member, R1, R2)
        return (ci, mi), rng.multinomial(shots, pattern)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, range(len(jobs))))
    else:
        results = [run(k) for k in range(len(jobs))]
    return dict(results)


def _graph_estimates(plan, counts, shots):
    """Estimates and covariance of every planned graph probability.

    Within one member, Cov(p_X, p_Y) = (p_{X union Y} - p_X p_Y)/N with
    the union read off the same counts; across members everything is
    independent by construction.
    """
    keys = [g.key() for g in plan.graphs]
    masks = {}
    for key in keys:
        ci, mi, emb = plan.hosts[key]
        mask = 0
        for k in emb:
            mask |= 1 << k
        masks[key] = (ci, mi, mask)

    def freq(ci, mi, mask):
        c = counts[(ci, mi)]
        total = 0
        for pat in range(c.size):
            if pat & mask == mask:
                total += c[pat]
        return total / shots

    phat = {key: freq(*masks[key]) for key in keys}
    n = len(keys)
    cov = np.zeros((n, n))
    for a in range(n):
        ca, ma, mka = masks[keys[a]]
        for b in range(a, n):
            cb, mb, mkb = masks[keys[b]]
            if (ca, ma) != (cb, mb):
                continue
            p_union = freq(ca, ma, mka | mkb)
            cov[a, b] = cov[b, a] = (p_union - phat[keys[a]] * phat[keys[b]]) / shots
    return keys, phat, cov


def _stat_values(forms, keys, phat, cov):
    """Delta-method values and covariance of the statistics vector.

    Monomial products of graph estimates are used directly; their O(1/N)
    multiplicative bias is accepted and documented.
    """
    index = {key: i for i, key in enumerate(keys)}
    names = [n for n in _STAT_ORDER if n in forms]
    values = np.zeros(len(names))
    J = np.zeros((len(names), len(keys)))
    for si, name in enumerate(names):
        for coeff, graphs in forms[name]:
            gkeys = [g.canonical().key() for g in graphs]
            for key in gkeys:
                if key not in index:
                    raise PlanError(
                        f"form {name!r} needs graph not in the measurement plan: "
                        f"{key}"
                    )
            if not gkeys:
                values[si] += coeff
                continue
            vals = np.array([phat[key] for key in gkeys])
            values[si] += coeff * float(np.prod(vals))
            for pos, key in enumerate(gkeys):
                rest = float(np.prod(np.delete(vals, pos))) if len(vals) > 1 else 1.0
                J[si, index[key]] += coeff * rest
    C = J @ cov @ J.T
    return names, values, C


def _linear_stat(names, values, C, weights: dict[str, float]) -> tuple[float, float, np.ndarray]:
    w = np.array([weights.get(n, 0.0) for n in names])
    return float(w @ values), float(w @ C @ w), w


def _guarded_sqrt_err(u: float, var_u: float) -> tuple[float, float]:
    """Value and std err of sqrt(max(u, 0)) near a degenerate radicand.

    When u is within a few sigma of zero the linearization breaks down;
    the error bar falls back to the scale sqrt(sigma_u), which bounds the
    spread of sqrt(max(u,0)) for u ~ N(0, sigma_u^2).
    """
    su = np.sqrt(max(var_u, 0.0))
    if u <= DEGENERATE_SIGMA * su:
        return float(np.sqrt(max(u, 0.0))), float(np.sqrt(su))
    root = float(np.sqrt(u))
    return root, float(su / (2.0 * root))


def _lenient_trace_distance(pi2: float, pi3: float, pi4: float) -> float:
    """Quartic-root trace distance tolerating noisy (slightly complex) roots."""
    det = 0.25 * (0.5 * pi2 * pi2 - pi4)
    roots = np.roots([1.0, 0.0, -0.5 * pi2, -pi3 / 3.0, det])
    return float(0.5 * np.abs(roots.real).sum())


def estimate_distances(
    rho1: np.ndarray,
    rho2: np.ndarray,
    forms: dict,
    shots: int,
    seed: int = 42,
    threads: int = 1,
    bootstrap: int = BOOTSTRAP_DEFAULT,
    plan: ConfigurationPlan | None = None,
) -> EstimationReport:
    """Simulate the full interferometric workflow and report estimates.

    ``forms`` maps statistic names (o11, o22, o12, o2, pi3, pi4) to
    decompositions: lists of (coefficient, graph tuple) pairs.  All six
    are needed for the complete measure set.  Every graph appearing in a
    form is measured through the configuration plan (built here unless
    one is supplied); statistic errors come from the delta method on the
    joint multinomial counts, and the trace-distance error from a
    parametric bootstrap over the moment estimates.  The chain-inequality
    audit runs on the oracle values, where a violation indicates a bug
    rather than shot noise.
    """
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    missing = [n for n in _STAT_ORDER if n not in forms]
    if missing:
        raise ValueError(f"forms missing statistics {missing}")
    needed = [g for form in forms.values() for _, graphs in form for g in graphs]
    if plan is None:
        plan = plan_configurations(needed)
    R1, R2 = to_correlation(rho1), to_correlation(rho2)

    counts = _sample_plan(plan, R1, R2, shots, seed, threads)
    keys, phat, cov = _graph_estimates(plan, counts, shots)
    names, values, C = _stat_values(forms, keys, phat, cov)
    stat = dict(zip(names, values))

    lam = rho1 - rho2
    stat_oracle = {
        "o11": float(np.trace(rho1 @ rho1).real),
        "o22": float(np.trace(rho2 @ rho2).real),
        "o12": float(np.trace(rho1 @ rho2).real),
        "o2": float(np.trace(np.linalg.matrix_power(rho1 @ rho2, 2)).real),
        "pi3": float(np.trace(np.linalg.matrix_power(lam, 3)).real),
        "pi4": float(np.trace(np.linalg.matrix_power(lam, 4)).real),
    }
    statistics = tuple(
        StatRow(n, stat_oracle[n], float(v), float(np.sqrt(max(C[i, i], 0.0))))
        for i, (n, v) in enumerate(zip(names, values))
    )

    # pi2 is a linear combination of the measured overlaps.  Report it as
    # its own statistic: unlike the clipped square root feeding H, its
    # estimate is unbiased around zero for identical states.
    pi2, var_pi2, w_pi2 = _linear_stat(names, values, C, {"o11": 1.0, "o22": 1.0, "o12": -2.0})
    pi2_oracle = stat_oracle["o11"] + stat_oracle["o22"] - 2.0 * stat_oracle["o12"]
    statistics = statistics + (
        StatRow("pi2", pi2_oracle, float(pi2), float(np.sqrt(max(var_pi2, 0.0)))),
    )

    idx = {n: i for i, n in enumerate(names)}

    def entry(n):
        return values[idx[n]]

    # Subfidelity E = o12 + sqrt(2(o12^2 - o2))
    u = 2.0 * (entry("o12") ** 2 - stat["o2"])
    gu = np.zeros(len(names))
    gu[idx["o12"]] = 4.0 * entry("o12")
    gu[idx["o2"]] = -2.0
    var_u = float(gu @ C @ gu)
    root_u, err_root_u = _guarded_sqrt_err(u, var_u)
    e_est = entry("o12") + root_u
    if u > DEGENERATE_SIGMA * np.sqrt(max(var_u, 0.0)):
        ge = np.zeros(len(names))
        ge[idx["o12"]] = 1.0 + 2.0 * entry("o12") / root_u
        ge[idx["o2"]] = -1.0 / root_u
        e_err = float(np.sqrt(max(ge @ C @ ge, 0.0)))
    else:
        e_err = err_root_u

    # Superfidelity G = o12 + sqrt((1-o11)(1-o22))
    v = (1.0 - entry("o11")) * (1.0 - entry("o22"))
    gv = np.zeros(len(names))
    gv[idx["o11"]] = -(1.0 - entry("o22"))
    gv[idx["o22"]] = -(1.0 - entry("o11"))
    var_v = float(gv @ C @ gv)
    root_v, err_root_v = _guarded_sqrt_err(v, var_v)
    g_est = entry("o12") + root_v
    if v > DEGENERATE_SIGMA * np.sqrt(max(var_v, 0.0)):
        gg = np.zeros(len(names))
        gg[idx["o11"]] = -(1.0 - entry("o22")) / (2.0 * root_v)
        gg[idx["o22"]] = -(1.0 - entry("o11")) / (2.0 * root_v)
        gg[idx["o12"]] = 1.0
        g_err = float(np.sqrt(max(gg @ C @ gg, 0.0)))
    else:
        g_err = err_root_v

    # Hilbert-Schmidt H = sqrt(pi2)
    h_est, h_err = _guarded_sqrt_err(pi2, var_pi2)

    # Trace distance by quartic roots; errors by parametric bootstrap.
    pi3, pi4 = stat["pi3"], stat["pi4"]
    t_est = _lenient_trace_distance(max(pi2, 0.0), pi3, pi4)
    moment_w = np.vstack([w_pi2, np.eye(len(names))[idx["pi3"]], np.eye(len(names))[idx["pi4"]]])
    Cm = moment_w @ C @ moment_w.T
    Cm = 0.5 * (Cm + Cm.T)
    evals, evecs = np.linalg.eigh(Cm)
    Cm = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
    brng = np.random.default_rng(np.random.SeedSequence([seed, 0xB007]))
    draws = brng.multivariate_normal([pi2, pi3, pi4], Cm, size=bootstrap, method="eigh")
    t_samples = [
        _lenient_trace_distance(max(d[0], 0.0), d[1], d[2]) for d in draws
    ]
    t_err = float(np.std(t_samples, ddof=1))

    ds = distance_set(rho1, rho2)
    moments_formula = (
        stat_oracle["o11"] + stat_oracle["o22"] - 2.0 * stat_oracle["o12"],
        stat_oracle["pi3"],
        stat_oracle["pi4"],
    )
    e_formula, g_formula = sub_super_fidelity(rho1, rho2)
    measures = (
        MeasureRow("subfidelity", ds.subfidelity, e_formula, float(e_est), e_err),
        MeasureRow("superfidelity", ds.superfidelity, g_formula, float(g_est), g_err),
        MeasureRow(
            "hilbert-schmidt",
            hilbert_schmidt(rho1, rho2),
            float(np.sqrt(max(moments_formula[0], 0.0))),
            float(h_est),
            h_err,
        ),
        MeasureRow(
            "trace-distance",
            trace_distance(rho1, rho2),
            _lenient_trace_distance(*moments_formula),
            float(t_est),
            t_err,
        ),
    )
    violations = set(ds.chain_violations())
    audit_names = (
        "E <= F",
        "F <= G",
        "1 - sqrtF <= T",
        "T <= sqrt(1 - F)",
        "H >= 0",
        "H <= 2T",
    )
    audit = tuple((name, name not in violations) for name in audit_names)
    return EstimationReport(
        seed=seed,
        shots=shots,
        version=__version__,
        photon_pairs=plan.photon_pairs,
        n_configurations=len(plan.configurations),
        statistics=statistics,
        measures=measures,
        audit=audit,
    )
