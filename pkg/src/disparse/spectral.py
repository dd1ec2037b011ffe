"""Static degree-preserving directed spectral sparsification.

Pipeline: lift the digraph to a bipartite graph, expander-decompose the
lift, sample each piece by endpoint degrees, then *patch* the sampled
reweighting so degrees are preserved exactly — externally (new bipartite
edges from a greedy demand matching), internally (electrical flow plus a
spanning-forest rounding, keeping the sparsifier inside the sampled
support), or with a one-auxiliary-vertex star whose Schur complement onto
the originals realizes the patch.  Contract the lift pairs at the end.

Exact arithmetic: when edge weights are Fractions, sampling probabilities,
scale factors and all patching flows are computed in rational arithmetic,
so preserved degrees are exact equalities, not approximations.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .dense import CUT_ENUM_CAP, conductance_exact_cut, conductance_sweep, laplacian_solve
from .errors import (
    ConditionViolated,
    DemandMismatch,
    NotBipartite,
    NotConverged,
    PatchingFailed,
    PreconditionViolated,
)
from .expanders import static_decompose
from .graphs import (
    DiGraph,
    UndirectedGraph,
    _is_exact,
    blift,
    contract_lift_pairs,
    degree_vectors,
    schur_complement,
    und,
)

EXTERNAL = "external"
INTERNAL = "internal"
STAR = "star"
SCHEMES = (EXTERNAL, INTERNAL, STAR)

C_SS_DEFAULT = 1.0


def eta_factor(scheme: str, phi: float, n: int) -> float:
    """Patching congestion factor: 1 for external/star, the electrical
    routing congestion 200 phi^-2 log(2n) for internal."""
    if scheme == INTERNAL:
        return 200.0 * phi**-2 * math.log(2 * max(n, 2))
    return 1.0


def oversampling(eps: float, delta: float, phi: float, eta: float, n: int, c_ss: float) -> float:
    return 400.0 * c_ss * eps**-2 * phi**-4 * eta**2 * math.log(8 * max(n, 2) / delta)


def degree_tolerance(eps: float, phi: float, eta: float) -> float:
    """Relative degree error the sampler must meet: eps*phi^2/(16*eta)."""
    return eps * phi**2 / (16.0 * eta)


def xi_factor(eps, phi, eta, exact: bool = False):
    """Scale-down factor (1 + eps*phi^2/(16*eta))^-1 applied before patching."""
    if exact:
        one = Fraction(1)
        return one / (one + Fraction(eps) * Fraction(phi) ** 2 / (16 * Fraction(eta)))
    return 1.0 / (1.0 + degree_tolerance(eps, phi, eta))


def _graph_is_exact(g: DiGraph) -> bool:
    return all(_is_exact(w) for w in g.edges.values())


def sample_degrees(g: DiGraph, rho: float, rng) -> dict:
    """Independent per-edge keep with p_e = min(1, rho*w_e*(1/d_out(u) + 1/d_in(v))).

    Returns the reweighting {edge: w_e / p_e} over kept edges.  Unbiased per
    edge.  With Fraction weights the probabilities and kept weights are
    rational, so downstream degree bookkeeping stays exact.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    dout, din = degree_vectors(g)
    exact = _graph_is_exact(g)
    rho_x = Fraction(rho) if exact else rho
    wprime: dict = {}
    for u, v, w in g.sorted_edges():
        if exact:
            p = rho_x * w * (Fraction(1, 1) / dout[u] + Fraction(1, 1) / din[v])
            p = min(Fraction(1), p)
        else:
            p = min(1.0, rho * w * (1.0 / dout[u] + 1.0 / din[v]))
        if p >= 1:
            wprime[(u, v)] = w
        elif rng.random() < float(p):
            wprime[(u, v)] = w / p
    return wprime


# ---------------------------------------------------------------------------
# demands and degree domination


def patch_demands(g: DiGraph, wprime: dict, xi):
    """d1 = out-degree deficit, d2 = in-degree deficit of xi*wprime vs g."""
    d1: dict = {}
    d2: dict = {}
    for (u, v), w in g.edges.items():
        wp = xi * wprime.get((u, v), 0)
        d1[u] = d1.get(u, 0) + (w - wp)
        d2[v] = d2.get(v, 0) + (w - wp)
    # edges present only in wprime (not possible for a reweighting, but guard)
    for (u, v), wp in wprime.items():
        if (u, v) not in g.edges:
            d1[u] = d1.get(u, 0) - xi * wp
            d2[v] = d2.get(v, 0) - xi * wp
    return d1, d2


def _check_domination(d1: dict, d2: dict, scale: float):
    tol = -1e-9 * max(scale, 1.0)
    for d in (d1, d2):
        for v, val in d.items():
            if float(val) < tol:
                raise PreconditionViolated(
                    "domination", f"scaled degree exceeds original at vertex {v}"
                )


def greedy_demand_flow(d1: dict, d2: dict) -> dict:
    """Greedy interval matching of two equal-mass demand vectors.

    Pairs the earliest unsatisfied source with the earliest unsatisfied sink;
    nnz(f) <= nnz(d1) + nnz(d2).  Raises DemandMismatch when the two masses
    differ (impossible for demands computed from one reweighting).
    """
    src = [(u, val) for u, val in sorted(d1.items()) if val > 0]
    snk = [(v, val) for v, val in sorted(d2.items()) if val > 0]
    tot1 = sum(val for _, val in src)
    tot2 = sum(val for _, val in snk)
    scale = max(float(tot1), float(tot2), 1.0)
    if abs(float(tot1 - tot2)) > 1e-9 * scale:
        raise DemandMismatch(f"demand masses differ: {float(tot1)} vs {float(tot2)}")
    flow: dict = {}
    i = j = 0
    rem1 = list(src)
    rem2 = list(snk)
    while i < len(rem1) and j < len(rem2):
        u, a = rem1[i]
        v, b = rem2[j]
        if u == v:
            raise PatchingFailed(f"demand pairing would create a self-loop at {u}")
        x = min(a, b)
        if x > 0:
            flow[(u, v)] = flow.get((u, v), 0) + x
        a = a - x
        b = b - x
        rem1[i] = (u, a)
        rem2[j] = (v, b)
        if not a > 0:
            i += 1
        if not b > 0:
            j += 1
    return flow


# ---------------------------------------------------------------------------
# the three patching schemes


def patching_external(g: DiGraph, wprime: dict, xi) -> DiGraph:
    """Scale the reweighting by xi and restore exact degrees with a greedy
    bipartite demand flow (new edges allowed outside the sampled support)."""
    d1, d2 = patch_demands(g, wprime, xi)
    _check_domination(d1, d2, float(g.total_weight()))
    h = DiGraph(g.n)
    for (u, v), wp in wprime.items():
        h.add_edge(u, v, xi * wp)
    for (u, v), fv in greedy_demand_flow(d1, d2).items():
        h.add_or_combine(u, v, fv)
    return h


def patching_star(g: DiGraph, wprime: dict, xi) -> DiGraph:
    """Route the degree deficits through one auxiliary vertex (index g.n).

    The Schur complement of the result onto the original vertices equals
    xi*wprime plus the product-weighted biclique of the deficits, so degrees
    are preserved exactly after eliminating the star centre.
    """
    d1, d2 = patch_demands(g, wprime, xi)
    _check_domination(d1, d2, float(g.total_weight()))
    aux = g.n
    h = DiGraph(g.n + 1)
    for (u, v), wp in wprime.items():
        h.add_edge(u, v, xi * wp)
    tot1 = sum(val for val in d1.values() if val > 0)
    tot2 = sum(val for val in d2.values() if val > 0)
    if abs(float(tot1 - tot2)) > 1e-9 * max(float(tot1), float(tot2), 1.0):
        raise DemandMismatch(f"demand masses differ: {float(tot1)} vs {float(tot2)}")
    for u, val in sorted(d1.items()):
        if val > 0:
            h.add_edge(u, aux, val)
    for v, val in sorted(d2.items()):
        if val > 0:
            h.add_edge(aux, v, val)
    return h


def max_spanning_forest(u: UndirectedGraph) -> list:
    """Maximum-weight spanning forest as a list of undirected edge keys.

    Kruskal with descending weight, ties broken by edge key (deterministic).
    """
    parent = list(range(u.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    forest = []
    for (a, b), _w in sorted(u.edges.items(), key=lambda kv: (-float(kv[1]), kv[0])):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            forest.append((a, b))
    return forest


def rounding(g: DiGraph, d, forest=None) -> dict:
    """The unique flow supported on a spanning forest with B^T y = d.

    ``d`` maps vertices to demands (net outflow); it must sum to zero on
    every forest component.  Computed leaf-to-root in O(n).  The returned
    flow satisfies ||W^-1 y||_inf <= ||W^-1 z||_1 for every feasible z.
    """
    if forest is None:
        forest = max_spanning_forest(und(g))
    if not isinstance(d, dict):
        d = {v: val for v, val in enumerate(d)}
    adj: dict[int, list] = {}
    for a, b in forest:
        if g.has_edge(a, b):
            e = (a, b)
        elif g.has_edge(b, a):
            e = (b, a)
        else:
            raise ValueError(f"forest edge {{{a},{b}}} has no orientation in g")
        adj.setdefault(a, []).append((b, e))
        adj.setdefault(b, []).append((a, e))

    scale = max((abs(float(x)) for x in d.values()), default=0.0)
    zero = Fraction(0) if all(_is_exact(x) for x in d.values()) else 0.0

    y: dict = {}
    seen: set[int] = set()
    for root in sorted(adj):
        if root in seen:
            continue
        order = [root]
        seen.add(root)
        parent_edge: dict[int, tuple] = {}
        parent_of: dict[int, int] = {}
        qi = 0
        while qi < len(order):
            x = order[qi]
            qi += 1
            for nb, e in adj[x]:
                if nb not in seen:
                    seen.add(nb)
                    parent_of[nb] = x
                    parent_edge[nb] = e
                    order.append(nb)
        carry = {v: d.get(v, zero) for v in order}
        for v in reversed(order[1:]):
            t = carry[v]
            e = parent_edge[v]
            y[e] = t if e[0] == v else -t
            carry[parent_of[v]] = carry[parent_of[v]] + t
        if abs(float(carry[root])) > 1e-9 * max(scale, 1.0):
            raise DemandMismatch(f"demand does not balance on the component of {root}")
    for v, val in d.items():
        if v not in seen and abs(float(val)) > 1e-9 * max(scale, 1.0):
            raise DemandMismatch(f"vertex {v} has demand but no forest edge")
    return {e: val for e, val in y.items() if val != 0}


def patching_internal(
    g: DiGraph,
    wprime: dict,
    xi,
    eps: float,
    phi: float,
    delta: float,
    rng=0,
) -> DiGraph:
    """Degree-exact patching inside the sampled support.

    Checks the four admissibility conditions (reported via
    ConditionViolated), routes the deficits as an approximate electrical
    flow on the sampled graph, rounds the residual demand on a maximum
    spanning forest, and reweights: H = xi*wprime + flow.  Every output
    edge weight stays within (xi +- eps/4) of its sampled weight.
    """
    if not 0.5 <= float(xi) <= 1.0:
        raise ValueError("xi must lie in [1/2, 1]")
    n = g.n
    exact = (
        _graph_is_exact(g) and all(_is_exact(w) for w in wprime.values()) and _is_exact(xi)
    )

    # (a) weight ratio and sampled weights dominating originals
    if g.m and g.weight_ratio() > 2.0 + 1e-9:
        raise ConditionViolated("a", "weight ratio of the piece exceeds 2")
    for e, wp in wprime.items():
        if float(wp) < float(g.edges[e]) * (1 - 1e-12):
            raise ConditionViolated("a", f"sampled weight below original on {e}")

    # (b) the sampled graph is a phi-expander (exact cert when small)
    sampled = DiGraph(n)
    sampled_f = DiGraph(n)
    for (u, v), wp in sorted(wprime.items()):
        sampled.add_edge(u, v, wp)
        sampled_f.add_edge(u, v, float(wp))
    su = und(sampled_f)
    support = su.nonisolated()
    if len(support) >= 2:
        if len(support) <= CUT_ENUM_CAP:
            cert, _side = conductance_exact_cut(su)
            ok = cert >= phi
        else:
            _, _, phi_cut = conductance_sweep(su)
            ok = phi_cut >= phi
        if not ok:
            raise ConditionViolated("b", "sampled graph is not a certified expander")

    dout, din = degree_vectors(g)
    dpo = [0] * n
    dpi = [0] * n
    for (u, v), wp in wprime.items():
        dpo[u] = dpo[u] + wp
        dpi[v] = dpi[v] + wp

    # (c) scaled degree domination
    for v in range(n):
        if float(xi * dpo[v]) > float(dout[v]) * (1 + 1e-12) or float(xi * dpi[v]) > float(
            din[v]
        ) * (1 + 1e-12):
            raise ConditionViolated("c", f"xi-scaled degree exceeds original at {v}")

    # (d) relative imbalance within phi^2 eps / (100 log 2n)
    bound = phi**2 * eps / (100.0 * math.log(2 * max(n, 2)))
    for v in range(n):
        for dv, dpv in ((dout[v], dpo[v]), (din[v], dpi[v])):
            if float(dv) > 0 and abs(float(dv - xi * dpv)) / float(dv) > bound:
                raise ConditionViolated("d", f"degree imbalance at {v} exceeds {bound:.3g}")

    d1, d2 = patch_demands(g, wprime, xi)
    b = np.zeros(n)
    for u, val in d1.items():
        b[u] += float(val)
    for v, val in d2.items():
        b[v] -= float(val)

    if wprime:
        ws = [float(w) for w in wprime.values()]
        big_m = max(ws) / min(ws)
        zeta = 1.0 / (5.0 * n * n)
        zeta_prime = phi * zeta / (2.0 * math.sqrt(max(big_m, 1.0)))
        try:
            x = laplacian_solve(su, b, max(zeta_prime, 1e-14), seed=0)
        except NotConverged as exc:
            raise PatchingFailed("electrical solve did not converge") from exc
    else:
        x = np.zeros(n)

    flow: dict = {}
    for (u, v), wp in sorted(wprime.items()):
        fv = float(wp) * (x[u] - x[v])
        if exact:
            fv = Fraction(fv)
        if fv != 0:
            flow[(u, v)] = fv

    # residual demand, then exact rounding on a max spanning forest of G'
    zero = Fraction(0) if exact else 0.0
    resid: dict = {}
    for u, val in d1.items():
        resid[u] = resid.get(u, zero) + (val if exact else float(val))
    for v, val in d2.items():
        resid[v] = resid.get(v, zero) - (val if exact else float(val))
    for (u, v), fv in flow.items():
        resid[u] = resid.get(u, zero) - fv
        resid[v] = resid.get(v, zero) + fv
    resid = {v: val for v, val in resid.items() if val != 0}
    y = rounding(sampled, resid, max_spanning_forest(su))
    for e, val in y.items():
        flow[e] = flow.get(e, zero) + val

    h = DiGraph(n)
    lo = float(xi) - eps / 4.0 - 1e-9
    hi = float(xi) + eps / 4.0 + 1e-9
    for (u, v), wp in sorted(wprime.items()):
        wh = xi * wp + flow.get((u, v), zero)
        ratio = float(wh) / float(wp)
        if not lo <= ratio <= hi:
            raise PatchingFailed(f"edge ({u},{v}) reweighted outside (xi +- eps/4): {ratio}")
        h.add_edge(u, v, wh)
    return h


# ---------------------------------------------------------------------------
# per-piece driver and the full pipeline


def _is_bipartite_digraph(g: DiGraph) -> bool:
    return all(not (g.out_adj[v] and g.in_adj[v]) for v in range(g.n))


def sparsify_subgraph(
    g: DiGraph,
    eps: float,
    delta: float,
    scheme: str,
    phi: float,
    seed,
    c_ss: float = C_SS_DEFAULT,
    retries: int = 5,
) -> DiGraph:
    """Sample-and-patch one certified-expander bipartite piece.

    Returns a degree-preserving sparsifier of g (with one extra star vertex
    for the star scheme).  When a random draw violates a patching
    admissibility condition the piece is resampled with a fresh substream;
    after ``retries`` failures the piece is passed through unchanged (a
    zero-error, zero-savings fallback).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not (0 < eps < 1 and 0 < delta < 1 and 0 < phi <= 1):
        raise ValueError("eps, delta in (0,1) and phi in (0,1] required")
    if not _is_bipartite_digraph(g):
        raise NotBipartite("some vertex has both in- and out-edges")
    if g.m and g.weight_ratio() > 2.0 + 1e-9:
        raise PreconditionViolated("weight-ratio", "piece weight ratio exceeds 2")
    if g.m == 0:
        return g.copy()

    exact = _graph_is_exact(g)
    eta = eta_factor(scheme, phi, g.n)
    rho = oversampling(eps, delta, phi, eta, g.n, c_ss)
    xi = xi_factor(eps, phi, eta, exact=exact)

    # saturation short-circuit: every p_e = 1 keeps w' = w, and the identity
    # is already a degree-exact zero-error sparsifier
    dout, din = degree_vectors(g)
    if all(
        rho * float(w) * (1.0 / float(dout[u]) + 1.0 / float(din[v])) >= 1.0
        for (u, v), w in g.edges.items()
    ):
        return g.copy()

    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    for attempt in range(retries):
        rng = np.random.default_rng(base + [attempt])
        wprime = sample_degrees(g, rho, rng)
        try:
            if scheme == EXTERNAL:
                return patching_external(g, wprime, xi)
            if scheme == STAR:
                return patching_star(g, wprime, xi)
            return patching_internal(g, wprime, xi, eps, phi, delta / 2.0, rng)
        except (ConditionViolated, PreconditionViolated, DemandMismatch, PatchingFailed):
            continue
    return g.copy()


class SpectralSparsifier:
    """Result of sparsify_directed_spectral.

    ``graph`` lives on the original n vertices followed by ``n_aux`` star
    vertices (empty for external/internal schemes).  ``schur_graph`` folds
    the star vertices back onto the originals.
    """

    __slots__ = ("graph", "n", "n_aux", "scheme", "strict", "eps", "phi")

    def __init__(self, graph, n, n_aux, scheme, strict, eps, phi):
        self.graph = graph
        self.n = n
        self.n_aux = n_aux
        self.scheme = scheme
        self.strict = strict
        self.eps = eps
        self.phi = phi

    def schur_graph(self) -> DiGraph:
        if self.n_aux == 0:
            return self.graph.copy()
        res = schur_complement(self.graph, range(self.n))
        if res.graph is None:
            raise PatchingFailed("Schur complement of the star sparsifier lost sign structure")
        return res.graph

    def __repr__(self):
        return (
            f"SpectralSparsifier(n={self.n}, aux={self.n_aux}, m={self.graph.m}, "
            f"scheme={self.scheme})"
        )


def _bit_label_classes(g: DiGraph) -> list[DiGraph]:
    """Partition edges so no class can couple a vertex with its lift copy.

    Edges are grouped by the highest differing bit of their endpoint labels
    and then sub-split by the value of that bit at the source, so within a
    class every source label disagrees with every destination label at the
    class bit — no patch edge can land on a (v, v-copy) pair.
    """
    classes: dict[tuple[int, int], DiGraph] = {}
    for u, v, w in g.sorted_edges():
        bit = (u ^ v).bit_length() - 1
        key = (bit, (u >> bit) & 1)
        classes.setdefault(key, DiGraph(g.n)).add_edge(u, v, w)
    return [classes[k] for k in sorted(classes)]


def sparsify_directed_spectral(
    g: DiGraph,
    eps: float,
    delta: float,
    scheme: str = EXTERNAL,
    phi: float = 0.1,
    seed: int = 0,
    strict: bool = False,
    c_ss: float = C_SS_DEFAULT,
) -> SpectralSparsifier:
    """Degree-balance-preserving spectral sparsifier of a weighted digraph.

    Lifts g to its bipartite double cover, expander-decomposes the lift
    into factor-2-weight certified pieces, sparsifies each piece with an
    independent seeded substream and failure budget delta/(2m), unions, and
    contracts the lift pairs.  ``strict`` additionally partitions the edges
    into bit-label classes first (external/star schemes), which makes both
    degree vectors — not just their difference — exactly preserved.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    n = g.n
    if g.m == 0:
        return SpectralSparsifier(DiGraph(n), n, 0, scheme, strict, eps, phi)

    if strict and scheme != INTERNAL:
        classes = _bit_label_classes(g)
    else:
        classes = [g]

    delta_piece = delta / (2.0 * g.m)
    union = DiGraph(2 * n)
    aux_edges: list[tuple[int, int, object]] = []  # star edges, aux renumbered later
    n_aux = 0
    for ci, cls in enumerate(classes):
        lifted = blift(cls).lifted
        for pi, piece in enumerate(static_decompose(lifted, phi)):
            h = sparsify_subgraph(
                piece.subgraph, eps, delta_piece, scheme, phi, [seed, ci, pi], c_ss
            )
            if h.n == 2 * n or not (h.out_adj[2 * n] or h.in_adj[2 * n]):
                for u, v, w in h.sorted_edges():
                    if u != 2 * n and v != 2 * n:
                        union.add_or_combine(u, v, w)
            else:  # star scheme: one aux vertex at index 2n
                aux_id = 2 * n + n_aux
                n_aux += 1
                for u, v, w in h.sorted_edges():
                    uu = aux_id if u == 2 * n else u
                    vv = aux_id if v == 2 * n else v
                    if u == 2 * n or v == 2 * n:
                        aux_edges.append((uu, vv, w))
                    else:
                        union.add_or_combine(u, v, w)

    if n_aux:
        big = DiGraph(2 * n + n_aux)
        for u, v, w in union.sorted_edges():
            big.add_edge(u, v, w)
        for u, v, w in aux_edges:
            big.add_or_combine(u, v, w)
        union = big
    contracted = contract_lift_pairs(union, n)
    return SpectralSparsifier(contracted, n, n_aux, scheme, strict, eps, phi)
