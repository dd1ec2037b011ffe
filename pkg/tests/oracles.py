"""Independent reference implementations used only by the test suite.

These deliberately avoid the library's own code paths (networkx max-flow,
scipy linear programming, textbook Kruskal) so that agreement is evidence
rather than tautology.
"""

from __future__ import annotations

import numpy as np
import networkx as nx
from scipy.optimize import linprog

from disparse.graphs import DiGraph, UndirectedGraph, directed_laplacian, undirected_laplacian


def random_digraph(rng, n, p, wlo=1, whi=9, exact=False):
    """Random simple digraph; integer weights (exact) in [wlo, whi]."""
    from fractions import Fraction

    g = DiGraph(n)
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p:
                w = int(rng.integers(wlo, whi + 1))
                g.add_edge(u, v, Fraction(w) if exact else float(w))
    return g


def random_eulerian(rng, n, cycles=3, wlo=1, whi=4):
    """Union of random directed cycles: always Eulerian, usually connected."""
    g = DiGraph(n)
    for _ in range(cycles):
        perm = rng.permutation(n)
        k = int(rng.integers(3, n + 1))
        verts = list(perm[:k])
        w = float(rng.integers(wlo, whi + 1))
        for i in range(k):
            u, v = int(verts[i]), int(verts[(i + 1) % k])
            g.add_or_combine(u, v, w)
    return g


def nx_min_st_cut(u: UndirectedGraph, s: int, t: int) -> float:
    g = nx.Graph()
    g.add_nodes_from(range(u.n))
    for (a, b), w in u.edges.items():
        g.add_edge(a, b, capacity=float(w))
    return float(nx.maximum_flow_value(g, s, t))


def min_weighted_l1_flow(edges, n, demand):
    """min sum_e |z_e| / w_e  subject to  B^T z = demand.

    ``edges`` is a list of (u, v, w) giving the orientation of each flow
    variable; net outflow at each vertex must equal demand.  Returns the
    optimal objective, or None if infeasible.
    """
    m = len(edges)
    if m == 0:
        return 0.0 if all(abs(float(d)) < 1e-12 for d in demand) else None
    a_eq = np.zeros((n, 2 * m))
    c = np.zeros(2 * m)
    for i, (u, v, w) in enumerate(edges):
        a_eq[u, i] += 1.0
        a_eq[v, i] -= 1.0
        a_eq[u, m + i] -= 1.0
        a_eq[v, m + i] += 1.0
        c[i] = 1.0 / float(w)
        c[m + i] = 1.0 / float(w)
    res = linprog(c, A_eq=a_eq, b_eq=np.asarray([float(d) for d in demand]), method="highs")
    if not res.success:
        return None
    return float(res.fun)


def kruskal_max_forest(u: UndirectedGraph):
    """Maximum-weight spanning forest as a set of undirected edge keys."""
    parent = list(range(u.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = set()
    for (a, b), w in sorted(u.edges.items(), key=lambda kv: (-float(kv[1]), kv[0])):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.add((a, b))
    return chosen


def conductance_bruteforce(u: UndirectedGraph) -> float:
    """Plain-loop conductance enumeration (independent of the library's
    meet-in-the-middle version); only for small supports."""
    nz = u.nonisolated()
    if len(nz) < 2:
        return float("inf")
    deg = {v: float(u.degree(v)) for v in nz}
    total = sum(deg.values())
    es = [(a, b, float(w)) for (a, b), w in u.edges.items()]
    best = float("inf")
    k = len(nz)
    for mask in range(1, 1 << (k - 1)):
        side = {nz[i] for i in range(k) if (mask >> i) & 1}
        vol = sum(deg[v] for v in side)
        if vol == 0.0 or total - vol == 0.0:
            continue
        cut = sum(w for a, b, w in es if (a in side) != (b in side))
        best = min(best, cut / min(vol, total - vol))
    return best


def quadform_witness(g: DiGraph, h, rng, trials=200) -> float:
    """Best lower bound on the directed spectral error found by random probing.

    Samples x, y and evaluates |x^T (vL_G - vL_H) y| / sqrt(x^T L x * y^T L y);
    by definition this never exceeds the true whitened operator norm.
    """
    vlg = directed_laplacian(g)
    vlh = directed_laplacian(h) if isinstance(h, DiGraph) else np.asarray(h, float)
    diff = vlg - vlh
    from disparse.graphs import und

    lap = undirected_laplacian(und(g))
    best = 0.0
    for _ in range(trials):
        x = rng.standard_normal(g.n)
        y = rng.standard_normal(g.n)
        qx = float(x @ lap @ x)
        qy = float(y @ lap @ y)
        if qx <= 1e-14 or qy <= 1e-14:
            continue
        best = max(best, abs(float(x @ diff @ y)) / np.sqrt(qx * qy))
    return best
