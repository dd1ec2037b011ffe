"""Directed cut sparsification: connectivity sampling and MSF bundles."""

import math
from fractions import Fraction

import numpy as np
import pytest

from disparse import dense
from disparse.dicut import (
    C_BAL_DEFAULT,
    ConnectivityEstimate,
    connectivity_estimate_expander,
    cut_oversampling,
    sparsify_dicut,
    sparsify_dicut_full,
    sparsify_dicut_msf,
    sparsify_dicut_msf_once,
    tbundle_msf,
)
from disparse.errors import NotCertified
from disparse.expanders import static_decompose, weight_bucket_index
from disparse.graphs import DiGraph, UndirectedGraph, und

from oracles import nx_min_st_cut


def complete_digraph(n, w=1.0):
    g = DiGraph(n)
    for a in range(n):
        for b in range(n):
            if a != b:
                g.add_edge(a, b, w)
    return g


def rand_simple_digraph(n, m, seed, light=0, wlight=0.01):
    rng = np.random.default_rng(seed)
    g = DiGraph(n)
    while g.m < m:
        u, v = rng.integers(0, n, 2)
        if u != v and not g.has_edge(int(u), int(v)):
            g.add_edge(int(u), int(v), 1.0)
    added = 0
    while added < light:
        u, v = rng.integers(0, n, 2)
        if u != v and not g.has_edge(int(u), int(v)):
            g.add_edge(int(u), int(v), wlight)
            added += 1
    return g


def rand_circulant(n, d, seed):
    """Random-offset circulant: every vertex has out- and in-degree d."""
    rng = np.random.default_rng(seed)
    offs = rng.choice(np.arange(1, n), size=d, replace=False)
    g = DiGraph(n)
    for k in offs:
        for u in range(n):
            v = (u + int(k)) % n
            if not g.has_edge(u, v):
                g.add_edge(u, v, 1.0)
    return g


def disjoint_cliques(sizes):
    """One-directional complete graphs (a->b for a<b), disjoint blocks."""
    g = DiGraph(sum(sizes))
    off = 0
    for s in sizes:
        for a in range(s):
            for b in range(a + 1, s):
                g.add_edge(off + a, off + b, 1.0)
        off += s
    return g


def exact_kest(g):
    u = und(g)
    kv = {e: dense.edge_connectivity(u, e[0], e[1]) for e in g.edges}
    total = sum(float(w) / kv[e] for e, w in g.edges.items())
    return ConnectivityEstimate(kv, total / max(g.n - 1, 1))


def tuned_c_bal(beta, eps, delta, n, rho_target):
    return rho_target / cut_oversampling(beta, eps, delta, n, 1.0)


def dicut_matrices(g, masks):
    """(fwd, bwd) 0/1 matrices of shape (len(masks), m) over g's edge list."""
    ge = list(g.edges)
    gu = np.array([a for a, _ in ge], dtype=np.int64)
    gv = np.array([b for _, b in ge], dtype=np.int64)
    inu = ((masks[:, None] >> gu[None, :]) & 1).astype(bool)
    inv = ((masks[:, None] >> gv[None, :]) & 1).astype(bool)
    return inu & ~inv, ~inu & inv


def all_dicuts_pass(g, h, beta, eps, fwd, bwd, wf, wb):
    hw = np.array([float(h.edges.get(e, 0.0)) for e in g.edges])
    hf = fwd @ hw
    hb = bwd @ hw
    denom = math.sqrt(beta + 1.0)
    sf = eps / denom * np.sqrt(wf * (wf + wb))
    sb = eps / denom * np.sqrt(wb * (wf + wb))
    return bool(np.all(np.abs(hf - wf) <= sf + 1e-9) and np.all(np.abs(hb - wb) <= sb + 1e-9))


# ---------------------------------------------------------------------------
# sparsify_dicut


def test_cut_oversampling_formula():
    got = cut_oversampling(3.0, 0.25, 0.2, 50, 2.0)
    assert got == pytest.approx(2.0 * 16.0 * 4.0 * math.log(8 * 50 / 0.2))


def test_sparsify_dicut_validates():
    g = complete_digraph(3)
    kest = exact_kest(g)
    with pytest.raises(ValueError):
        sparsify_dicut(g, -1.0, 0.3, 0.1, kest)
    with pytest.raises(ValueError):
        sparsify_dicut(g, 1.0, 0.6, 0.1, kest)
    with pytest.raises(ValueError):
        sparsify_dicut(g, 1.0, 0.3, 0.0, kest)
    missing = ConnectivityEstimate({e: 1.0 for e in list(g.edges)[:-1]}, 1.0)
    with pytest.raises(ValueError):
        sparsify_dicut(g, 1.0, 0.3, 0.1, missing)
    bad = ConnectivityEstimate({e: 0.0 for e in g.edges}, 1.0)
    with pytest.raises(ValueError):
        sparsify_dicut(g, 1.0, 0.3, 0.1, bad)


def test_sparsify_dicut_saturation_identity():
    g = complete_digraph(6)
    kest = ConnectivityEstimate({e: w for e, w in g.edges.items()}, float(g.n))
    h = sparsify_dicut(g, 1.0, 0.3, 0.1, kest, seed=4)
    assert h == g and h is not g


def test_sparsify_dicut_single_edge_always_kept():
    g = DiGraph(2)
    g.add_edge(0, 1, 5.0)
    kest = ConnectivityEstimate({(0, 1): 5.0}, 1.0)
    assert cut_oversampling(1.0, 0.3, 0.1, 2, C_BAL_DEFAULT) > 1.0
    for s in range(20):
        h = sparsify_dicut(g, 1.0, 0.3, 0.1, kest, seed=s)
        assert h.edges == {(0, 1): 5.0}


def test_sparsify_dicut_exact_rational_weights():
    g = DiGraph(4)
    for (u, v), w in {
        (0, 1): Fraction(3, 2),
        (1, 2): Fraction(5, 2),
        (2, 3): Fraction(2),
        (3, 0): Fraction(7, 3),
        (0, 2): Fraction(1),
    }.items():
        g.add_edge(u, v, w)
    kest = ConnectivityEstimate({e: Fraction(1, 2) * w for e, w in g.edges.items()}, 2.0)
    c_bal = tuned_c_bal(1.0, 0.3, 0.1, 4, 0.175)  # p = 2*rho = 0.35 on every edge
    rho = cut_oversampling(1.0, 0.3, 0.1, 4, c_bal)
    p = Fraction(rho) * 2
    kept_any = False
    for s in range(6):
        h = sparsify_dicut(g, 1.0, 0.3, 0.1, kest, seed=s, c_bal=c_bal)
        for e, w in h.edges.items():
            kept_any = True
            assert isinstance(w, Fraction) and w == g.edges[e] / p
    assert kept_any


def test_sparsify_dicut_unbiased_fixed_cut():
    g = complete_digraph(8)
    kest = connectivity_estimate_expander(g, 0.5)
    kap = float(next(iter(kest.values.values())))
    c_bal = tuned_c_bal(1.0, 0.3, 0.1, 8, 0.5 * kap)  # keep probability 1/2
    cut = [(a, b) for (a, b) in g.edges if a < 4 <= b]
    totals = np.array(
        [
            sum(float(sparsify_dicut(g, 1.0, 0.3, 0.1, kest, seed=s, c_bal=c_bal).edges.get(e, 0.0)) for e in cut)
            for s in range(3000)
        ]
    )
    se = totals.std(ddof=1) / math.sqrt(len(totals))
    assert totals.std(ddof=1) > 0.5  # sampling actually engaged
    assert abs(totals.mean() - float(len(cut))) <= 4.0 * se


def test_sparsify_dicut_n12_all_cuts_enumeration():
    # unit digraph with ten 0.01-weight edges: at the default constants the
    # unit edges saturate while the light ones engage (p ~ 0.11 at beta=1)
    g = rand_simple_digraph(12, 70, seed=42, light=10)
    kest = exact_kest(g)
    masks = np.arange(1, 1 << 11, dtype=np.int64)
    fwd, bwd = dicut_matrices(g, masks)
    gw = np.array([float(w) for w in g.edges.values()])
    wf, wb = fwd @ gw, bwd @ gw
    for beta in (1.0, 4.0):
        ok = engaged = 0
        for s in range(200):
            h = sparsify_dicut(g, beta, 0.3, 0.1, kest, seed=s)
            engaged += h != g
            ok += all_dicuts_pass(g, h, beta, 0.3, fwd, bwd, wf, wb)
        assert ok >= 180  # observed 200/200 for both betas
        assert engaged >= 150  # observed 200/200


def test_sparsify_dicut_support_subset():
    g = rand_simple_digraph(10, 40, seed=1)
    kest = exact_kest(g)
    c_bal = tuned_c_bal(0.0, 0.3, 0.5, 10, 1.0)
    for s in range(10):
        h = sparsify_dicut(g, 0.0, 0.3, 0.5, kest, seed=s, c_bal=c_bal)
        assert set(h.edges) <= set(g.edges)
        assert all(float(w) >= float(g.edges[e]) for e, w in h.edges.items())


# ---------------------------------------------------------------------------
# connectivity_estimate_expander


def test_estimate_k4():
    g = complete_digraph(4)
    est = connectivity_estimate_expander(g, 2.0 / 3.0)
    u4 = und(g)
    for (a, b), k in est.values.items():
        assert k == pytest.approx(1.0)
        assert k <= dense.edge_connectivity(u4, a, b) + 1e-9
    total = sum(float(w) / float(est.values[e]) for e, w in g.edges.items())
    assert total == pytest.approx(2 * 4 / (2.0 / 3.0))


def test_estimate_star_rejects():
    g = DiGraph(8)
    for v in range(1, 8):
        g.add_edge(0, v, 1.0)
    with pytest.raises(NotCertified):
        connectivity_estimate_expander(g, 0.55)  # star has lambda2/2 = 1/2
    est = connectivity_estimate_expander(g, 0.45)
    u8 = und(g)
    for (a, b), k in est.values.items():
        assert k <= dense.edge_connectivity(u8, a, b) + 1e-9


def test_estimate_regular_sum_exact():
    g = rand_circulant(32, 8, seed=3)
    phi = 0.2
    est = connectivity_estimate_expander(g, phi)
    total = sum(float(w) / float(est.values[e]) for e, w in g.edges.items())
    assert total == pytest.approx(2 * 32 / phi, rel=1e-9)
    assert est.stretch_bound == pytest.approx(total / 31.0)


def test_estimate_soundness_random_audit():
    g = rand_simple_digraph(10, 45, seed=9)
    u10 = und(g)
    phi = 0.9 * dense.normalized_lambda2(u10) / 2.0
    est = connectivity_estimate_expander(g, phi)
    for (a, b), k in est.values.items():
        assert float(k) <= nx_min_st_cut(u10, a, b) + 1e-9


def test_estimate_validates():
    g = complete_digraph(3)
    with pytest.raises(ValueError):
        connectivity_estimate_expander(g, 0.0)
    with pytest.raises(ValueError):
        connectivity_estimate_expander(g, 1.5)
    two = DiGraph(4)  # disconnected support: lambda2 = 0, no certificate
    two.add_edge(0, 1, 1.0)
    two.add_edge(2, 3, 1.0)
    with pytest.raises(NotCertified):
        connectivity_estimate_expander(two, 0.3)
    est = connectivity_estimate_expander(two, 0.3, check=False)
    assert len(est.values) == 2


def test_estimate_exact_rational():
    g = DiGraph(4)
    for a in range(4):
        for b in range(4):
            if a != b:
                g.add_edge(a, b, Fraction(1))
    est = connectivity_estimate_expander(g, 0.5, check=False)
    assert all(isinstance(k, Fraction) for k in est.values.values())
    assert est.values[(0, 1)] == Fraction(0.5) * Fraction(3, 2)


# ---------------------------------------------------------------------------
# sparsify_dicut_full


def test_full_empty_graph():
    g = DiGraph(5)
    h = sparsify_dicut_full(g, 1.0, 0.3, 0.1, seed=0)
    assert h == g and h is not g


def test_full_one_piece_equivalence():
    g = complete_digraph(8)
    assert len(static_decompose(g, 0.5)) == 1
    c_bal = tuned_c_bal(1.0, 0.3, 0.1 / (2.0 * g.m), 8, 0.875)
    got = sparsify_dicut_full(g, 1.0, 0.3, 0.1, seed=7, phi=0.5, c_bal=c_bal)
    est = connectivity_estimate_expander(g, 0.5)
    want = sparsify_dicut(g, 1.0, 0.3, 0.1 / (2.0 * g.m), est, [7, 0], c_bal=c_bal)
    assert got == want
    assert got != g  # tuned so sampling engages


def test_full_two_cluster_all_cuts():
    g = DiGraph(14)
    for off in (0, 7):
        for a in range(7):
            for b in range(7):
                if a != b:
                    g.add_edge(off + a, off + b, 1.0)
    g.add_edge(0, 7, 1.0)
    g.add_edge(10, 3, 1.0)
    beta, eps, delta = 1.0, 0.45, 0.1
    # kappa = 1.2 inside a cluster; rho = 1.152 keeps each unit edge w.p. 0.96
    c_bal = tuned_c_bal(beta, eps, delta / (2.0 * g.m), 14, 0.96 * 1.2)
    masks = np.arange(1, 1 << 13, dtype=np.int64)
    fwd, bwd = dicut_matrices(g, masks)
    gw = np.array([float(w) for w in g.edges.values()])
    wf, wb = fwd @ gw, bwd @ gw
    ok = engaged = 0
    for s in range(200):
        h = sparsify_dicut_full(g, beta, eps, delta, seed=s, phi=0.4, c_bal=c_bal)
        engaged += h != g
        ok += all_dicuts_pass(g, h, beta, eps, fwd, bwd, wf, wb)
    assert ok >= 180  # observed 194/200
    assert engaged >= 185  # observed 200/200


def test_full_matches_oracle_checker():
    g = complete_digraph(6)
    c_bal = tuned_c_bal(1.0, 0.3, 0.1 / (2.0 * g.m), 6, 0.8)
    h = sparsify_dicut_full(g, 1.0, 0.3, 0.1, seed=0, phi=0.5, c_bal=c_bal)
    masks = np.arange(1, 1 << 5, dtype=np.int64)
    fwd, bwd = dicut_matrices(g, masks)
    gw = np.array([float(w) for w in g.edges.values()])
    wf, wb = fwd @ gw, bwd @ gw
    worst, _ = dense.cut_check_dicut(g, h, 1.0, 0.3)
    assert all_dicuts_pass(g, h, 1.0, worst + 1e-9, fwd, bwd, wf, wb)
    assert not all_dicuts_pass(g, h, 1.0, worst - 1e-6, fwd, bwd, wf, wb) or worst == 0.0


def test_full_sparsity_constant_reported():
    beta, eps, delta, phi = 1.0, 0.3, 0.1, 0.2
    consts = []
    for n in (64, 128):
        g = rand_circulant(n, 14, seed=100 + n)
        pieces = static_decompose(g, phi)
        coverage = sum(len(p.support()) for p in pieces) / n
        c_bal = tuned_c_bal(beta, eps, delta / (2.0 * g.m), n, 0.7)
        h = sparsify_dicut_full(g, beta, eps, delta, seed=2, phi=phi, c_bal=c_bal)
        const = h.m * phi / (eps**-2 * beta * n * math.log(n) * coverage)
        consts.append(const)
        print(f"n={n}: kept {h.m}/{g.m} pieces={len(pieces)} J={coverage:.2f} C={const:.4f}")
    assert all(c <= 0.5 for c in consts)  # observed ~0.03
    assert max(consts) <= 2.0 * min(consts)


# ---------------------------------------------------------------------------
# t-bundle MSF


def test_tbundle_single_tree():
    u = UndirectedGraph(6)
    for i, (a, b) in enumerate([(0, 1), (1, 2), (1, 3), (3, 4), (0, 5)]):
        u.add_edge(a, b, 1.0 + i)  # weights straddle several buckets
    b = tbundle_msf(u, 3)
    assert b.forests[0] == frozenset(u.edges)
    assert b.forests[1] == frozenset() and b.forests[2] == frozenset()
    assert b.edge_set() == frozenset(u.edges)


def test_tbundle_bucket_rule():
    u = UndirectedGraph(4)
    u.add_edge(0, 1, 1.0)
    u.add_edge(1, 2, 1.0)
    u.add_edge(2, 3, 3.0)
    u.add_edge(0, 3, 3.0)
    assert weight_bucket_index(1.0) == 0 and weight_bucket_index(3.0) == 1
    b = tbundle_msf(u, 2)
    # each bucket's two edges are a forest on their own, so layer 1 takes all
    assert b.forests[0] == frozenset(u.edges)
    assert b.forests[1] == frozenset()


def test_tbundle_nonbundle_connectivity_audit():
    rng = np.random.default_rng(5)
    u = UndirectedGraph(32)
    while u.m < 300:
        a, b = rng.integers(0, 32, 2)
        if a != b and not u.has_edge(int(a), int(b)):
            u.add_edge(int(a), int(b), float(rng.uniform(1.0, 3.0)))
    t = 4
    bundle = tbundle_msf(u, t)
    outside = [e for e in u.edges if e not in bundle.edge_set()]
    assert len(outside) >= 40  # observed 55
    for a, b in outside:
        assert nx_min_st_cut(u, a, b) >= (t / 2.0) * float(u.edges[(a, b)]) - 1e-9


def test_tbundle_peeling_invariants():
    rng = np.random.default_rng(7)
    u = UndirectedGraph(20)
    while u.m < 120:
        a, b = rng.integers(0, 20, 2)
        if a != b and not u.has_edge(int(a), int(b)):
            u.add_edge(int(a), int(b), float(rng.choice([1.0, 1.5, 4.0])))
    t = 3
    bundle = tbundle_msf(u, t)
    seen = set()
    remaining = dict(u.edges)
    for layer in bundle.forests:
        assert not (layer & seen)
        seen |= layer
        by_bucket = {}
        for e in remaining:
            by_bucket.setdefault(weight_bucket_index(remaining[e]), set()).add(e)
        for bucket_edges in by_bucket.values():
            chosen = bucket_edges & layer
            parent = list(range(u.n))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for a, b in chosen:  # acyclic within the bucket
                ra, rb = find(a), find(b)
                assert ra != rb
                parent[ra] = rb
            for a, b in bucket_edges - chosen:  # maximality: skipped = cycle
                assert find(a) == find(b)
        for e in layer:
            del remaining[e]


# ---------------------------------------------------------------------------
# sparsify_dicut_msf_once


def test_msf_once_own_bundle_identity():
    g = DiGraph(7)
    for a, b in [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 6)]:
        g.add_edge(a, b, 2.0)
    h, b = sparsify_dicut_msf_once(g, 1.0, 0.3, 0.1, seed=5)
    assert h == g and b == g


def test_msf_once_quarter_binomial():
    # 1 x K20 + 21 x K19 leaves exactly 1000 edges outside a 9-layer bundle
    g = disjoint_cliques([20] + [19] * 21)
    beta, eps, delta = 1.0, 0.4, 0.5
    c_bal = 8.5 / (8.0 * cut_oversampling(beta, eps, delta / 2.0, g.n, 1.0))
    h0, b0 = sparsify_dicut_msf_once(g, beta, eps, delta, seed=0, c_bal=c_bal)
    k = g.m - b0.m
    assert k == 1000
    inside = 0
    for s in range(120):
        h, b = sparsify_dicut_msf_once(g, beta, eps, delta, seed=s, c_bal=c_bal)
        assert b == b0  # bundle is deterministic
        assert all(h.edges[e] == w for e, w in b.edges.items())  # B <= H
        kept = h.m - b.m
        assert h.m <= b.m + k // 2  # half-sparsification size bound
        inside += 200 <= kept <= 300
        for e, w in h.edges.items():
            if not b.has_edge(*e):
                assert float(w) == 4.0 * float(g.edges[e])  # exact 1/4 keep rate
    assert inside >= 119  # binomial(1000, 1/4) leaves [200, 300] w.p. 99.97%


def test_msf_once_small_graph_saturates():
    g = rand_simple_digraph(12, 70, seed=0)
    h, b = sparsify_dicut_msf_once(g, 1.0, 0.3, 0.1, seed=3)
    assert h == g and b.m == g.m  # n=12 cannot host 9+ peel layers
    worst, _ = dense.cut_check_dicut(g, h, 1.0, 0.3)
    assert worst == 0.0


def test_msf_once_rho_guard():
    g = complete_digraph(4)
    with pytest.raises(ValueError):
        sparsify_dicut_msf_once(g, 1.0, 0.3, 0.1, seed=0, c_bal=1e-6)


# ---------------------------------------------------------------------------
# sparsify_dicut_msf


def test_msf_gamma_one_identity():
    g = complete_digraph(5)
    h, bundles, residual = sparsify_dicut_msf(g, 1.0, 0.3, 0.1, 1.0, seed=0)
    assert h == g and bundles == [] and residual == g


def test_msf_validates_gamma():
    g = complete_digraph(3)
    with pytest.raises(ValueError):
        sparsify_dicut_msf(g, 1.0, 0.3, 0.1, 0.5, seed=0)


def test_msf_residual_bound_and_bookkeeping():
    g = rand_simple_digraph(128, 10000, seed=11)
    beta, eps, delta, gamma = 1.0, 0.45, 0.1, 16.0
    iters = math.ceil(math.log2(gamma))
    c_bal = 8.5 / (8.0 * cut_oversampling(beta, eps / (3 * iters), delta / 4.0, 128, 1.0))
    h, bundles, residual = sparsify_dicut_msf(g, beta, eps, delta, gamma, seed=5, c_bal=c_bal)
    assert residual.m <= max(g.m / gamma, 16.0 * math.log(8.0 * g.m / delta))
    assert h.m == sum(b.m for b in bundles) + residual.m  # disjoint union
    assert h.m < g.m  # halving engaged
    assert set(h.edges) <= set(g.edges)
    for e, w in h.edges.items():
        ratio = float(w) / float(g.edges[e])
        level = round(math.log(ratio, 4.0))
        assert ratio == 4.0**level and 0 <= level <= len(bundles)


def test_msf_faithful_constants_identity():
    # at c_bal = 1 the bundle swallows every desk-scale graph: H == g
    g = rand_simple_digraph(24, 200, seed=2)
    assert g.m > 16.0 * math.log(8.0 * g.m / 0.1)  # guard lets one round run
    h, bundles, residual = sparsify_dicut_msf(g, 1.0, 0.3, 0.1, 8.0, seed=0)
    assert h == g
    assert residual.m == 0 and len(bundles) == 1 and bundles[0] == g


# ---------------------------------------------------------------------------
# invariants


def test_connum_tree_equality_and_general_bound():
    tree = UndirectedGraph(8)
    for i, (a, b) in enumerate([(0, 1), (1, 2), (1, 3), (3, 4), (0, 5), (5, 6), (3, 7)]):
        tree.add_edge(a, b, 1.5 + i)
    s = sum(float(w) / dense.edge_connectivity(tree, a, b) for (a, b), w in tree.edges.items())
    assert s == pytest.approx(7.0)
    g = rand_simple_digraph(10, 45, seed=9)
    u10 = und(g)
    s = sum(float(w) / dense.edge_connectivity(u10, a, b) for (a, b), w in u10.edges.items())
    assert s <= 9.0 + 1e-9
