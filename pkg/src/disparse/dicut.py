"""Static balanced directed-cut sparsification.

Connectivity sampling: each directed edge is kept independently with
probability proportional to its weight over an underestimate of its
undirected edge connectivity, and survivors are reweighted by 1/p so every
directed cut is preserved in expectation.  On certified expanders the
estimate comes straight from the endpoint degrees; general graphs are
expander-decomposed first and the per-piece sparsifiers unioned.

The MSF route replaces the connectivity estimate by a peeled bundle of
per-weight-bucket spanning forests: edges outside the bundle have t
edge-disjoint same-bucket paths between their endpoints and can be sampled
at an exact 1/4 keep rate, halving the non-bundle part per round while the
bundle itself is always retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dense import normalized_lambda2
from .errors import NotCertified
from .expanders import static_decompose, weight_bucket_index
from .graphs import DiGraph, UndirectedGraph, _is_exact, degree_vectors, und

C_BAL_DEFAULT = 1.0
MSF_ALPHA = 2  # per-bucket forests approximate a max spanning forest to factor 2


def cut_oversampling(beta: float, eps: float, delta: float, n: int, c_bal: float) -> float:
    """Keep-rate multiplier rho = c_bal * eps^-2 * (beta+1) * log(8n/delta)."""
    return c_bal * eps**-2 * (beta + 1.0) * math.log(8.0 * max(n, 2) / delta)


def _check_params(beta, eps, delta):
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")


def _graph_is_exact(g: DiGraph) -> bool:
    return all(_is_exact(w) for w in g.edges.values())


@dataclass(frozen=True)
class ConnectivityEstimate:
    """Per-edge lower bounds on undirected edge connectivity.

    ``values`` maps each directed edge (u, v) of the host graph to a
    positive kappa_e with kappa_e <= k_e(und(g)); ``stretch_bound`` is an
    ell with sum_e w_e/kappa_e <= ell * (n - 1).
    """

    values: dict
    stretch_bound: float


def connectivity_estimate_expander(g: DiGraph, phi: float, check: bool = True) -> ConnectivityEstimate:
    """Degree-based estimate kappa_e = phi / (1/d_out(u) + 1/d_in(v)).

    Sound whenever und(g) is a phi-expander (the connectivity of any edge
    is then at least phi times the smaller endpoint degree).  With
    ``check`` the expansion is certified by the spectral bound
    lambda_2/2 >= phi; NotCertified when the certificate fails.  Pass
    ``check=False`` when the caller already holds a certificate (e.g. a
    piece of an expander decomposition).

    For a graph where every vertex has both in- and out-edges the total
    sum of w_e/kappa_e is exactly 2n/phi.
    """
    if not 0.0 < phi <= 1.0:
        raise ValueError("phi must lie in (0, 1]")
    if check:
        lam2 = normalized_lambda2(und(g))
        if lam2 / 2.0 < phi * (1.0 - 1e-9):
            raise NotCertified(
                f"spectral certificate lambda2/2 = {lam2 / 2.0:.4g} below phi = {phi:.4g}"
            )
    exact = _graph_is_exact(g)
    ph = Fraction(phi) if exact else phi
    one = Fraction(1) if exact else 1.0
    dout, din = degree_vectors(g)
    values: dict = {}
    total = 0.0
    for (u, v), w in g.edges.items():
        k = ph / (one / dout[u] + one / din[v])
        values[(u, v)] = k
        total += float(w) / float(k)
    return ConnectivityEstimate(values, total / max(g.n - 1, 1))


def sparsify_dicut(
    g: DiGraph,
    beta: float,
    eps: float,
    delta: float,
    kest: ConnectivityEstimate,
    seed=0,
    c_bal: float = C_BAL_DEFAULT,
) -> DiGraph:
    """Independent keep with p_e = min(1, rho * w_e / kappa_e), weight w_e/p_e.

    rho = c_bal * eps^-2 * (beta+1) * log(8n/delta); expected edge count is
    at most rho * stretch_bound * n.  Unbiased per cut.  When the weights
    and the estimate are rational the kept weights are exactly w_e/p_e as
    Fractions.  Saturated inputs (all p_e >= 1) return an untouched copy.
    """
    _check_params(beta, eps, delta)
    rho = cut_oversampling(beta, eps, delta, g.n, c_bal)
    values = kest.values
    probs = []
    for u, v, w in g.sorted_edges():
        k = values.get((u, v))
        if k is None:
            raise ValueError(f"connectivity estimate missing edge ({u}, {v})")
        if not float(k) > 0.0:
            raise ValueError(f"non-positive connectivity estimate on ({u}, {v})")
        probs.append(rho * float(w) / float(k))
    if all(p >= 1.0 for p in probs):
        return g.copy()

    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    rng = np.random.default_rng(base)
    exact = _graph_is_exact(g) and all(_is_exact(k) for k in values.values())
    rho_x = Fraction(rho) if exact else rho
    h = DiGraph(g.n)
    for u, v, w in g.sorted_edges():
        if exact:
            p = min(Fraction(1), rho_x * w / values[(u, v)])
        else:
            p = min(1.0, rho * w / values[(u, v)])
        if p >= 1:
            h.add_edge(u, v, w)
        elif rng.random() < float(p):
            h.add_edge(u, v, w / p)
    return h


def sparsify_dicut_full(
    g: DiGraph,
    beta: float,
    eps: float,
    delta: float,
    seed=0,
    phi: float = 0.1,
    c_bal: float = C_BAL_DEFAULT,
) -> DiGraph:
    """Decompose und(g) into certified expander pieces and sample each.

    Every piece is sparsified by sparsify_dicut with failure budget
    delta/(2m) and the degree-based estimate at the decomposition's phi;
    the union of the piece sparsifiers is returned (the cut guarantee
    survives unions).  Piece i draws from the seed stream [seed, i].
    """
    _check_params(beta, eps, delta)
    if g.m == 0:
        return g.copy()
    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    delta_piece = delta / (2.0 * g.m)
    out = DiGraph(g.n)
    for pi, piece in enumerate(static_decompose(g, phi)):
        kest = connectivity_estimate_expander(piece.subgraph, phi, check=False)
        h = sparsify_dicut(piece.subgraph, beta, eps, delta_piece, kest, base + [pi], c_bal)
        for u, v, w in h.sorted_edges():
            out.add_edge(u, v, w)
    return out


# ---------------------------------------------------------------------------
# t-bundle 2-MSF half-sparsification


@dataclass(frozen=True)
class MsfBundle:
    """Peeled forests T_1..T_t, each a frozenset of undirected edge keys.

    T_i is a 2-MSF of the graph minus the earlier forests: the union of one
    spanning forest per dyadic weight bucket.  Forests are pairwise
    disjoint.
    """

    forests: tuple
    alpha: int = MSF_ALPHA

    def edge_set(self) -> frozenset:
        out: set = set()
        for f in self.forests:
            out |= f
        return frozenset(out)

    @property
    def size(self) -> int:
        return sum(len(f) for f in self.forests)


def tbundle_msf(u: UndirectedGraph, t: int) -> MsfBundle:
    """Peel t layers; each layer unions a maximal spanning forest per bucket.

    Buckets follow 2^i <= w < 2^{i+1}.  Within a bucket edges enter the
    forest in descending weight order, ties by key, via union-find.  Every
    edge left outside the bundle closed a same-bucket cycle in all t
    layers, so its endpoints have t edge-disjoint paths of minimum weight
    more than w_e/2: undirected connectivity >= t*w_e/2.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    remaining = dict(u.edges)
    forests = []
    for _ in range(int(t)):
        if not remaining:
            forests.append(frozenset())
            continue
        buckets: dict[int, list] = {}
        for e, w in remaining.items():
            buckets.setdefault(weight_bucket_index(w), []).append(e)
        layer = set()
        for bi in sorted(buckets):
            parent = list(range(u.n))

            def find(x):
                root = x
                while parent[root] != root:
                    root = parent[root]
                while parent[x] != root:
                    parent[x], x = root, parent[x]
                return root

            for a, b in sorted(buckets[bi], key=lambda e: (-float(remaining[e]), e)):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
                    layer.add((a, b))
        for e in layer:
            del remaining[e]
        forests.append(frozenset(layer))
    return MsfBundle(tuple(forests))


def sparsify_dicut_msf_once(
    g: DiGraph,
    beta: float,
    eps: float,
    delta: float,
    seed=0,
    c_bal: float = C_BAL_DEFAULT,
):
    """One half-sparsification round: (H, directed bundle B) with B <= H.

    t = 4 * c_bal * eps^-2 * alpha * (beta+1) * log(16n/delta) forest
    layers are peeled from und(g); directed edges over the bundle get
    kappa_e = w_e (keep probability min(1, rho) = 1), the rest get
    kappa_e = 4*rho*w_e so they survive with probability exactly 1/4 at
    weight 4*w_e.  rho is the keep-rate of the inner sparsify_dicut call
    at failure budget delta/2; c_bal must keep rho >= 1 or bundle edges
    would no longer be certain.
    """
    _check_params(beta, eps, delta)
    rho = cut_oversampling(beta, eps, delta / 2.0, g.n, c_bal)
    if rho < 1.0:
        raise ValueError("c_bal leaves rho < 1: bundle edges would be dropped")
    t = 4.0 * MSF_ALPHA * rho
    bundle = tbundle_msf(und(g), math.ceil(t - 1e-12))
    keys = bundle.edge_set()

    exact = _graph_is_exact(g)
    four_rho = 4 * Fraction(rho) if exact else 4.0 * rho
    bdir = DiGraph(g.n)
    values: dict = {}
    total = 0.0
    for (u, v), w in g.edges.items():
        if ((u, v) if u < v else (v, u)) in keys:
            bdir.add_edge(u, v, w)
            values[(u, v)] = w
            total += 1.0
        else:
            values[(u, v)] = four_rho * w
            total += 1.0 / (4.0 * rho)
    kest = ConnectivityEstimate(values, total / max(g.n - 1, 1))
    h = sparsify_dicut(g, beta, eps, delta / 2.0, kest, seed, c_bal)
    return h, bdir


def sparsify_dicut_msf(
    g: DiGraph,
    beta: float,
    eps: float,
    delta: float,
    gamma: float,
    seed=0,
    c_bal: float = C_BAL_DEFAULT,
):
    """Iterate the half-sparsification: (H, bundles, residual).

    Runs ceil(log2 gamma) rounds with per-round error eps/(3I) and failure
    budget delta/2^(i+1), stopping early once the working graph has at
    most 16*ln(8m/delta) edges (m the initial edge count).  Each round
    keeps its bundle aside and recurses on the reweighted non-bundle
    survivors, so H = union(bundles) + residual with pairwise disjoint
    edge keys; the composition is a balanced dicut approximation.  Round i
    draws from the seed stream [seed, i].
    """
    _check_params(beta, eps, delta)
    if gamma < 1.0:
        raise ValueError("gamma must be >= 1")
    iters = math.ceil(math.log2(gamma)) if gamma > 1.0 else 0
    base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
    m0 = g.m
    guard = 16.0 * math.log(8.0 * m0 / delta) if m0 else 0.0
    bundles: list[DiGraph] = []
    cur = g.copy()
    i = 0
    while i < iters and cur.m > guard:
        h, b = sparsify_dicut_msf_once(
            cur, beta, eps / (3.0 * iters), delta / 2.0 ** (i + 1), base + [i], c_bal
        )
        nxt = DiGraph(g.n)
        for u, v, w in h.sorted_edges():
            if not b.has_edge(u, v):
                nxt.add_edge(u, v, w)
        bundles.append(b)
        cur = nxt
        i += 1
    out = DiGraph(g.n)
    for part in (*bundles, cur):
        for u, v, w in part.sorted_edges():
            out.add_edge(u, v, w)
    return out, bundles, cur
