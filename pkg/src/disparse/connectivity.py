"""Fully dynamic connectivity and the dynamic bundle of spanning forests.

The connectivity structure keeps one Euler-tour forest per level and promotes
edges to deeper levels during replacement searches (amortized, not
worst-case).  Tours live in splay trees, so every operation is O(log n)
amortized and the whole structure is deterministic: no randomized priorities,
and candidate scans always pick the smallest edge key first.

``DynMsfBundle`` stacks one connectivity instance per (layer, weight bucket)
to maintain the layered spanning forests used by the half-sparsification
routines: an edge lives as a forest edge in exactly one layer or in the
non-bundle residue, and any single insert/delete changes the residue by at
most one edge, cascading through at most one forest repair per deeper layer.
"""

from .dicut import MsfBundle
from .errors import EdgeNotFound
from .expanders import weight_bucket_index
from .graphs import UndirectedGraph

_ACTIVE = 1  # loop node: vertex has non-tree edges at this level
_EXACT = 2  # edge node: tree edge whose level is exactly this one


class _Node:
    __slots__ = ("a", "b", "l", "r", "p", "flag", "agg", "loops")

    def __init__(self, a, b):
        self.a = a
        self.b = b
        self.l = self.r = self.p = None
        self.flag = 0
        self.agg = 0
        self.loops = 1 if a == b else 0


def _upd(x):
    loops = 1 if x.a == x.b else 0
    agg = x.flag
    if x.l is not None:
        loops += x.l.loops
        agg |= x.l.agg
    if x.r is not None:
        loops += x.r.loops
        agg |= x.r.agg
    x.loops = loops
    x.agg = agg


def _rotate(x):
    p = x.p
    g = p.p
    if p.l is x:
        p.l = x.r
        if x.r is not None:
            x.r.p = p
        x.r = p
    else:
        p.r = x.l
        if x.l is not None:
            x.l.p = p
        x.l = p
    p.p = x
    x.p = g
    if g is not None:
        if g.l is p:
            g.l = x
        else:
            g.r = x
    _upd(p)
    _upd(x)


def _splay(x):
    while x.p is not None:
        p = x.p
        g = p.p
        if g is not None:
            _rotate(p if (g.l is p) == (p.l is x) else x)
        _rotate(x)
    return x


def _merge(a, b):
    if a is None:
        return b
    if b is None:
        return a
    while a.r is not None:
        a = a.r
    _splay(a)
    a.r = b
    b.p = a
    _upd(a)
    return a


def _split_after(x):
    """(tour up to and including x, rest)."""
    _splay(x)
    r = x.r
    if r is not None:
        r.p = None
        x.r = None
        _upd(x)
    return x, r


def _split_before(x):
    """(tour strictly before x, tour starting at x)."""
    _splay(x)
    l = x.l
    if l is not None:
        l.p = None
        x.l = None
        _upd(x)
    return l, x


def _find_flag(root, bit):
    x = root
    while True:
        if x.l is not None and x.l.agg & bit:
            x = x.l
        elif x.flag & bit:
            return x
        else:
            x = x.r


class _EulerForest:
    """Euler-tour forest for one level: loop node per vertex, two nodes per
    tree edge, subtree aggregates for vertex counts and search flags."""

    def __init__(self):
        self._loops = {}
        self._enode = {}

    def loop(self, v):
        x = self._loops.get(v)
        if x is None:
            x = _Node(v, v)
            self._loops[v] = x
        return x

    def root(self, v):
        return _splay(self.loop(v))

    def connected(self, u, v):
        if u == v:
            return True
        a = self.loop(u)
        b = self.loop(v)
        _splay(a)
        _splay(b)
        return a.p is not None

    def reroot(self, v):
        before, after = _split_before(self.loop(v))
        return _merge(after, before)

    def link(self, u, v):
        ru = self.reroot(u)
        rv = self.reroot(v)
        xuv = _Node(u, v)
        xvu = _Node(v, u)
        self._enode[(u, v)] = xuv
        self._enode[(v, u)] = xvu
        _merge(_merge(_merge(ru, xuv), rv), xvu)

    def cut(self, u, v):
        xuv = self._enode.pop((u, v))
        xvu = self._enode.pop((v, u))
        left, right = _split_after(xuv)
        _splay(xvu)
        if xuv.p is not None:
            # tour was A xvu B xuv | C; the v-side is B
            _split_after(xvu)
            outer, _ = _split_before(xvu)
            _split_before(xuv)  # detaches B from the discarded xuv
            _merge(outer, right)
        else:
            # tour was A xuv | B xvu C; the v-side is B
            outer, _ = _split_before(xuv)
            _, tail = _split_after(xvu)
            _split_before(xvu)
            _merge(outer, tail)

    def set_flag(self, node, bit, on):
        _splay(node)
        node.flag = (node.flag | bit) if on else (node.flag & ~bit)
        _upd(node)

    def edge_node(self, u, v):
        return self._enode[(u, v)]


class DynamicConnectivity:
    """Fully dynamic connectivity with level-based edge promotion.

    insert/delete are O(log^2 n) amortized; deleting a tree edge either finds
    a replacement non-tree edge (returned, now a tree edge) or splits the
    component.  Edge keys are normalized (min, max) vertex pairs.
    """

    def __init__(self, n: int):
        self._n = n
        self._forests = [_EulerForest()]
        self._nt = [{}]  # per level: vertex -> set of non-tree neighbors
        self._level = {}
        self._tree = set()

    def _grow(self, level):
        while len(self._forests) <= level:
            self._forests.append(_EulerForest())
            self._nt.append({})

    @property
    def tree_edges(self):
        return frozenset(self._tree)

    @property
    def m(self):
        return len(self._level)

    def has_edge(self, u, v):
        return (min(u, v), max(u, v)) in self._level

    def connected(self, u, v):
        return self._forests[0].connected(u, v)

    def _nt_add(self, level, key):
        u, v = key
        for x, y in ((u, v), (v, u)):
            s = self._nt[level].setdefault(x, set())
            s.add(y)
            if len(s) == 1:
                f = self._forests[level]
                f.set_flag(f.loop(x), _ACTIVE, True)

    def _nt_remove(self, level, key):
        u, v = key
        for x, y in ((u, v), (v, u)):
            s = self._nt[level][x]
            s.remove(y)
            if not s:
                del self._nt[level][x]
                f = self._forests[level]
                f.set_flag(f.loop(x), _ACTIVE, False)

    def insert(self, u, v):
        """Add edge; returns True when it joins the spanning forest."""
        key = (min(u, v), max(u, v))
        if key in self._level or u == v:
            raise ValueError(f"edge {key} already present or degenerate")
        self._level[key] = 0
        f0 = self._forests[0]
        if not f0.connected(u, v):
            self._tree.add(key)
            f0.link(u, v)
            f0.set_flag(f0.edge_node(*key), _EXACT, True)
            return True
        self._nt_add(0, key)
        return False

    def delete(self, u, v):
        """Remove edge; returns (was_tree, replacement_key_or_None)."""
        key = (min(u, v), max(u, v))
        lvl = self._level.pop(key, None)
        if lvl is None:
            raise EdgeNotFound(f"edge {key} not present")
        if key not in self._tree:
            self._nt_remove(lvl, key)
            return False, None
        self._tree.remove(key)
        for l in range(lvl + 1):
            self._forests[l].cut(*key)
        for l in range(lvl, -1, -1):
            repl = self._replace(l, *key)
            if repl is not None:
                return True, repl
        return True, None

    def _replace(self, l, u, v):
        f = self._forests[l]
        side = u if f.root(u).loops <= f.root(v).loops else v
        self._grow(l + 1)
        fup = self._forests[l + 1]
        # push the smaller side's level-l tree edges one level down
        while True:
            root = f.root(side)
            if not root.agg & _EXACT:
                break
            node = _find_flag(root, _EXACT)
            a, b = node.a, node.b
            f.set_flag(node, _EXACT, False)
            self._level[(a, b)] = l + 1
            fup.link(a, b)
            fup.set_flag(fup.edge_node(a, b), _EXACT, True)
        # scan the smaller side's level-l non-tree edges for a reconnection
        while True:
            root = f.root(side)
            if not root.agg & _ACTIVE:
                break
            x = _find_flag(root, _ACTIVE).a
            nbrs = self._nt[l].get(x, ())
            while nbrs:
                y = min(nbrs)
                key2 = (min(x, y), max(x, y))
                self._nt_remove(l, key2)
                if f.connected(x, y):
                    self._nt_add(l + 1, key2)
                    self._level[key2] = l + 1
                else:
                    self._tree.add(key2)
                    for j in range(l + 1):
                        self._forests[j].link(*key2)
                    f.set_flag(f.edge_node(*key2), _EXACT, True)
                    return key2
                nbrs = self._nt[l].get(x, ())
        return None


_NONBUNDLE = -1


class DynMsfBundle:
    """Dynamic layered spanning forests bucketed by edge weight.

    Layer i holds, per factor-2 weight bucket, a spanning forest of the
    bucket's edges minus the shallower layers' forests.  Every edge has one
    home: the layer whose forest contains it, or the non-bundle residue.
    ``last_report()`` exposes the cascade of the most recent update;
    ``nonbundle_recourse()`` the residue delta, which has at most one edge.
    """

    def __init__(self, u: UndirectedGraph, t: int):
        if t < 0:
            raise ValueError("layer count must be nonnegative")
        self._n = u.n
        self._t = t
        self._weights = {}
        self._home = {}
        self._nonbundle = set()
        self._inst = {}
        self._report = []
        self._nb_delta = ()
        for a, b, w in u.sorted_edges():
            self.insert(a, b, w)

    def _instance(self, layer, bucket):
        inst = self._inst.get((layer, bucket))
        if inst is None:
            inst = DynamicConnectivity(self._n)
            self._inst[(layer, bucket)] = inst
        return inst

    @property
    def m(self):
        return len(self._weights)

    @property
    def t(self):
        return self._t

    def weight(self, a, b):
        return self._weights[UndirectedGraph.key(a, b)]

    def edges(self):
        return dict(self._weights)

    def home_layer(self, a, b):
        """1-based forest layer of the edge, or None when non-bundle."""
        h = self._home[UndirectedGraph.key(a, b)]
        return None if h == _NONBUNDLE else h

    def nonbundle_edges(self):
        return frozenset(self._nonbundle)

    def current_bundle(self) -> MsfBundle:
        layers = [set() for _ in range(self._t)]
        for key, h in self._home.items():
            if h != _NONBUNDLE:
                layers[h - 1].add(key)
        return MsfBundle(tuple(frozenset(s) for s in layers))

    def nonbundle_recourse(self):
        """Residue delta of the last update: () or (('+'|'-', edge),)."""
        return self._nb_delta

    def last_report(self):
        """Per-layer forest changes of the last update."""
        return tuple(self._report)

    def insert(self, a, b, w):
        if a == b:
            raise ValueError("self-loops not supported")
        key = UndirectedGraph.key(a, b)
        if key in self._weights:
            raise ValueError(f"edge {key} already present")
        self._weights[key] = w
        bucket = weight_bucket_index(w)
        self._report = []
        self._nb_delta = ()
        for layer in range(1, self._t + 1):
            if self._instance(layer, bucket).insert(a, b):
                self._home[key] = layer
                self._report.append(("forest+", layer, key))
                return self.last_report()
        self._home[key] = _NONBUNDLE
        self._nonbundle.add(key)
        self._nb_delta = (("+", key),)
        return self.last_report()

    def delete(self, a, b):
        key = UndirectedGraph.key(a, b)
        w = self._weights.pop(key, None)
        if w is None:
            raise EdgeNotFound(f"edge {key} not present")
        self._report = []
        self._nb_delta = ()
        home = self._home.pop(key)
        if home != _NONBUNDLE:
            self._report.append(("forest-", home, key))
        self._pull_out(key, weight_bucket_index(w), 1, home)
        return self.last_report()

    def _pull_out(self, key, bucket, start, home):
        """Remove an edge living at `home` from instances start..home; repair
        the forest at its home layer by pulling at most one deeper edge."""
        if home == _NONBUNDLE:
            for layer in range(start, self._t + 1):
                self._instance(layer, bucket).delete(*key)
            self._nonbundle.discard(key)
            self._nb_delta = (("-", key),)
            return
        for layer in range(start, home):
            self._instance(layer, bucket).delete(*key)
        _, repl = self._instance(home, bucket).delete(*key)
        if repl is None:
            return
        old = self._home[repl]
        self._home[repl] = home
        self._report.append(("forest+", home, repl))
        if old != _NONBUNDLE:
            self._report.append(("forest-", old, repl))
        self._pull_out(repl, bucket, home + 1, old)
