import numpy as np
import pytest

from disparse.connectivity import DynamicConnectivity, DynMsfBundle
from disparse.errors import EdgeNotFound
from disparse.graphs import UndirectedGraph

from oracles import nx_min_st_cut


class UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[ra] = rb

    def ncomp(self, n):
        return len({self.find(v) for v in range(n)})


def path_und(n, w=1.0):
    u = UndirectedGraph(n)
    for i in range(n - 1):
        u.add_edge(i, i + 1, w)
    return u


def cycle_und(n, w=1.0):
    u = path_und(n, w)
    u.add_edge(0, n - 1, w)
    return u


def rand_und(n, m, seed, weights=(1.0,)):
    rng = np.random.default_rng(seed)
    u = UndirectedGraph(n)
    while u.m < m:
        a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
        if a != b and not u.has_edge(a, b):
            u.add_edge(a, b, weights[int(rng.integers(0, len(weights)))])
    return u


# ---------------------------------------------------------------------------
# DynamicConnectivity


def test_connectivity_basics():
    dc = DynamicConnectivity(5)
    assert not dc.connected(0, 1)
    dc.insert(0, 1)
    dc.insert(1, 2)
    assert dc.connected(0, 2)
    assert not dc.connected(0, 3)
    assert dc.tree_edges == {(0, 1), (1, 2)}
    # a cycle edge is non-tree
    dc.insert(0, 2)
    assert dc.tree_edges == {(0, 1), (1, 2)}
    was_tree, repl = dc.delete(0, 1)
    assert was_tree and repl == (0, 2)
    assert dc.connected(0, 1)
    was_tree, repl = dc.delete(0, 2)
    assert was_tree and repl is None
    assert not dc.connected(0, 2)


def test_connectivity_validation():
    dc = DynamicConnectivity(4)
    dc.insert(0, 1)
    with pytest.raises(ValueError):
        dc.insert(1, 0)  # duplicate, either orientation
    with pytest.raises(ValueError):
        dc.insert(2, 2)
    with pytest.raises(EdgeNotFound):
        dc.delete(2, 3)


def test_connectivity_nontree_delete_keeps_forest():
    dc = DynamicConnectivity(4)
    for a, b in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        dc.insert(a, b)
    te = dc.tree_edges
    nontree = ({(0, 1), (1, 2), (2, 3), (0, 3)} - te).pop()
    was_tree, repl = dc.delete(*nontree)
    assert not was_tree and repl is None
    assert dc.tree_edges == te


def test_connectivity_differential_vs_union_find():
    rng = np.random.default_rng(23)
    n = 40
    dc = DynamicConnectivity(n)
    edges = set()
    for step in range(1, 4001):
        if edges and (len(edges) > 240 or rng.random() < 0.45):
            e = sorted(edges)[int(rng.integers(0, len(edges)))]
            edges.discard(e)
            dc.delete(*e)
        else:
            while True:
                a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
                if a != b and (min(a, b), max(a, b)) not in edges:
                    break
            e = (min(a, b), max(a, b))
            edges.add(e)
            dc.insert(*e)
        if step % 50 == 0:
            uf = UF(n)
            for a, b in edges:
                uf.union(a, b)
            te = dc.tree_edges
            assert te <= edges
            uf2 = UF(n)
            for a, b in te:
                assert uf2.find(a) != uf2.find(b), "cycle in maintained forest"
                uf2.union(a, b)
            assert uf2.ncomp(n) == uf.ncomp(n)  # spanning
            for a in range(n):
                for b in range(a + 1, n):
                    assert dc.connected(a, b) == (uf.find(a) == uf.find(b))


# ---------------------------------------------------------------------------
# DynMsfBundle


def test_bundle_tree_input():
    u = path_und(8)
    dmb = DynMsfBundle(u, 3)
    assert dmb.nonbundle_edges() == frozenset()
    layers = dmb.current_bundle().forests
    assert set(layers[0]) == set(u.edges)
    assert all(not lay for lay in layers[1:])
    dmb.delete(3, 4)
    assert dmb.nonbundle_edges() == frozenset()
    assert dmb.nonbundle_recourse() == ()
    assert set(dmb.current_bundle().forests[0]) == set(u.edges) - {(3, 4)}


def test_bundle_cycle_hand_trace():
    u = cycle_und(5)
    dmb = DynMsfBundle(u, 1)
    nb = dmb.nonbundle_edges()
    assert len(nb) == 1
    spare = next(iter(nb))
    # deleting the non-forest edge: no replacement, residue shrinks
    dmb.delete(*spare)
    assert dmb.nonbundle_edges() == frozenset()
    assert dmb.nonbundle_recourse() == (("-", spare),)
    # now a path; deleting a forest edge disconnects, no spare available
    dmb.delete(*sorted(dmb.current_bundle().forests[0])[0])
    assert dmb.nonbundle_edges() == frozenset()

    # again, but delete a forest edge while the spare is present
    dmb2 = DynMsfBundle(cycle_und(5), 1)
    spare = next(iter(dmb2.nonbundle_edges()))
    victim = sorted(dmb2.current_bundle().forests[0])[0]
    dmb2.delete(*victim)
    assert dmb2.nonbundle_edges() == frozenset()  # the spare entered the forest
    assert dmb2.nonbundle_recourse() == (("-", spare),)
    assert spare in dmb2.current_bundle().forests[0]


def test_bundle_insert_layering():
    # t = 2: first n-1 edges fill layer 1, next batch layer 2, rest non-bundle
    u = UndirectedGraph(4)
    dmb = DynMsfBundle(u, 2)
    for a, b in [(0, 1), (1, 2), (2, 3)]:
        dmb.insert(a, b, 1.0)
    assert dmb.home_layer(0, 1) == 1
    dmb.insert(0, 2, 1.0)
    assert dmb.home_layer(0, 2) == 2
    dmb.insert(0, 3, 1.0)
    dmb.insert(1, 3, 1.0)
    assert dmb.home_layer(1, 3) == 2
    full = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert sum(1 for a, b in full if dmb.home_layer(a, b) is None) == 0
    # K4 has 6 edges, two spanning trees use 6: nothing left over
    assert dmb.nonbundle_edges() == frozenset()


def test_bundle_weight_buckets_are_independent():
    u = UndirectedGraph(3)
    dmb = DynMsfBundle(u, 1)
    dmb.insert(0, 1, 1.0)
    dmb.insert(1, 2, 8.0)
    dmb.insert(0, 2, 8.5)
    # all three fit in layer 1: buckets (w in [1,2) and w in [8,16)) are separate forests
    assert dmb.nonbundle_edges() == frozenset()
    assert dmb.home_layer(0, 1) == 1 and dmb.home_layer(1, 2) == 1 and dmb.home_layer(0, 2) == 1


def test_bundle_validation():
    u = path_und(3)
    dmb = DynMsfBundle(u, 2)
    with pytest.raises(ValueError):
        dmb.insert(0, 1, 1.0)
    with pytest.raises(ValueError):
        dmb.insert(1, 1, 1.0)
    with pytest.raises(EdgeNotFound):
        dmb.delete(0, 2)
    with pytest.raises(ValueError):
        DynMsfBundle(u, -1)


def test_bundle_layered_forest_invariants():
    rng = np.random.default_rng(31)
    n = 24
    weights = (1.0, 1.5, 3.0, 6.0)
    u = rand_und(n, 60, 31, weights)
    dmb = DynMsfBundle(u, 3)
    cur = u.copy()
    max_residue_delta = 0
    for step in range(1, 601):
        # capacity is 3 buckets x 3 layers x (n-1) = 207 tree slots; the cap
        # of 250 pushes past it so the residue genuinely engages
        ins = cur.m < 120 or (rng.random() < 0.5 and cur.m < 250)
        if ins:
            while True:
                a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
                if a != b and not cur.has_edge(a, b):
                    break
            w = weights[int(rng.integers(0, len(weights)))]
            cur.add_edge(a, b, w)
            dmb.insert(a, b, w)
        else:
            keys = sorted(cur.edges)
            a, b = keys[int(rng.integers(0, len(keys)))]
            cur.remove_edge(a, b)
            dmb.delete(a, b)
        delta = dmb.nonbundle_recourse()
        max_residue_delta = max(max_residue_delta, len(delta))
        assert len(delta) <= 1
        repaired = [lay for kind, lay, _ in dmb.last_report() if kind == "forest-"]
        assert len(repaired) == len(set(repaired)), "layer repaired twice in one update"
        if step % 40 == 0:
            layers = dmb.current_bundle().forests
            nb = dmb.nonbundle_edges()
            # partition of the edge set
            everything = set(nb)
            for lay in layers:
                assert not (set(lay) & everything)
                everything |= set(lay)
            assert everything == set(cur.edges)
            # each (layer, bucket) restriction is a spanning forest of what is
            # left of that bucket after removing shallower layers
            from disparse.expanders import weight_bucket_index

            buckets = {weight_bucket_index(w) for w in cur.edges.values()}
            for bi in buckets:
                remaining = {
                    e for e, w in cur.edges.items() if weight_bucket_index(w) == bi
                }
                for lay in layers:
                    forest = {e for e in lay if weight_bucket_index(cur.edges[e]) == bi}
                    uf = UF(n)
                    for a, b in forest:
                        assert uf.find(a) != uf.find(b), "cycle in layer forest"
                        uf.union(a, b)
                    uf2 = UF(n)
                    for a, b in remaining:
                        uf2.union(a, b)
                    assert uf.ncomp(n) == uf2.ncomp(n), "layer forest not spanning"
                    remaining -= forest
    assert max_residue_delta == 1  # residue actually moved at least once


def test_bundle_dynamic_nonbundle_connectivity_recert():
    # after bursts of updates, every non-bundle edge still has weighted
    # local connectivity >= (t/2) * w in the current graph
    rng = np.random.default_rng(17)
    n = 64
    t = 4
    weights = (1.0, 1.5, 3.0, 4.0)
    u = rand_und(n, 500, 17, weights)
    dmb = DynMsfBundle(u, t)
    cur = u.copy()
    rec_viol = 0
    audited = 0
    for step in range(1, 1001):
        ins = cur.m < 300 or (rng.random() < 0.5 and cur.m < 620)
        if ins:
            while True:
                a, b = int(rng.integers(0, n)), int(rng.integers(0, n))
                if a != b and not cur.has_edge(a, b):
                    break
            w = weights[int(rng.integers(0, len(weights)))]
            cur.add_edge(a, b, w)
            dmb.insert(a, b, w)
        else:
            keys = sorted(cur.edges)
            a, b = keys[int(rng.integers(0, len(keys)))]
            cur.remove_edge(a, b)
            dmb.delete(a, b)
        if len(dmb.nonbundle_recourse()) > 1:
            rec_viol += 1
        if step % 100 == 0:
            for a, b in dmb.nonbundle_edges():
                w = cur.edges[(a, b)]
                assert nx_min_st_cut(cur, a, b) >= (t / 2.0) * w - 1e-9
                audited += 1
    assert rec_viol == 0
    assert audited > 100  # the residue was genuinely populated
