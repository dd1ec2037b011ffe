"""Dynamic demand patchers and decremental degree-preserving reweighting.

The pieces here are the low-level machinery used by the dynamic
sparsifiers: an array-backed segment tree over demand vectors, implicit
bipartite demand flows read off from interval overlaps (with and without a
degree-preservation constraint), a deterministic Bernoulli subset sampler,
and a decremental per-vertex incidence sampler that keeps weighted degrees
approximated under edge deletions with local recourse.

All demand flows are *implicit*: updates cost O(log n), and the dense
flow is only ever materialised on demand (``query_all``), in time
proportional to its support.
"""

import heapq
import math

import numpy as np

from .dense import whitened_opnorm
from .errors import EdgeNotFound, PreconditionViolated
from .graphs import DiGraph, degree_vectors

C_DS_DEFAULT = 1.0


# ---------------------------------------------------------------------------
# segment tree


class SegTree:
    """Fixed-size array tree with subtree sums and nonzero-leaf counts.

    Supports point assignment, half-open prefix sums, first-index search by
    cumulative mass, and next-nonzero-index scans, all O(log n).  Leaf
    values may be int, float or Fraction; sums start from int 0 so exact
    types stay exact.
    """

    __slots__ = ("_n", "_size", "_sum", "_nnz")

    def __init__(self, values):
        values = list(values)
        self._n = len(values)
        size = 1
        while size < max(self._n, 1):
            size *= 2
        self._size = size
        self._sum = [0] * (2 * size)
        self._nnz = [0] * (2 * size)
        for i, v in enumerate(values):
            self._sum[size + i] = v
            self._nnz[size + i] = 1 if v != 0 else 0
        for node in range(size - 1, 0, -1):
            self._sum[node] = self._sum[2 * node] + self._sum[2 * node + 1]
            self._nnz[node] = self._nnz[2 * node] + self._nnz[2 * node + 1]

    @property
    def n(self):
        return self._n

    @property
    def nnz(self):
        return self._nnz[1]

    def get(self, i):
        if not 0 <= i < self._n:
            raise IndexError(i)
        return self._sum[self._size + i]

    def total(self):
        return self._sum[1]

    def update(self, i, value):
        if not 0 <= i < self._n:
            raise IndexError(i)
        node = self._size + i
        self._sum[node] = value
        self._nnz[node] = 1 if value != 0 else 0
        node //= 2
        while node:
            self._sum[node] = self._sum[2 * node] + self._sum[2 * node + 1]
            self._nnz[node] = self._nnz[2 * node] + self._nnz[2 * node + 1]
            node //= 2

    def prefix_sum(self, k):
        """Sum of leaves [0, k)."""
        if k <= 0:
            return 0
        k = min(k, self._n)
        res = 0
        lo, hi = self._size, self._size + k
        while lo < hi:
            if lo & 1:
                res = res + self._sum[lo]
                lo += 1
            if hi & 1:
                hi -= 1
                res = res + self._sum[hi]
            lo //= 2
            hi //= 2
        return res

    def search_prefix(self, target):
        """Smallest i with prefix_sum(i + 1) >= target; None if total falls short."""
        if self._n == 0 or self._sum[1] < target:
            return None
        node = 1
        while node < self._size:
            node *= 2
            if self._sum[node] < target:
                target = target - self._sum[node]
                node += 1
        return min(node - self._size, self._n - 1)

    def next_nonzero(self, i):
        """Smallest j >= i with a nonzero leaf; None if there is none."""
        if i < 0:
            i = 0
        if i >= self._n or self._nnz[1] == 0:
            return None
        node = self._size + i
        # climb while the current node's subtree has no nonzero leaf
        while self._nnz[node] == 0:
            # move to the next subtree to the right
            while node & 1:
                node //= 2
                if node == 0:
                    return None
            node += 1
        while node < self._size:
            node *= 2
            if self._nnz[node] == 0:
                node += 1
        j = node - self._size
        return j if j < self._n else None


def _overlap_flow(t1, t2):
    """Interval-overlap flow between two demand trees, by slot index.

    Both demands are laid out on [0, total) by prefix sums; the flow on
    (i, j) is the overlap length of leaf i's interval with leaf j's.
    Runs a two-pointer merge over nonzero leaves only.
    """
    flow = {}
    i = t1.next_nonzero(0)
    j = t2.next_nonzero(0)
    if i is None or j is None:
        return flow
    lo1 = t1.prefix_sum(i)
    hi1 = lo1 + t1.get(i)
    lo2 = t2.prefix_sum(j)
    hi2 = lo2 + t2.get(j)
    while True:
        amt = min(hi1, hi2) - max(lo1, lo2)
        if amt > 0:
            flow[(i, j)] = amt
        if hi1 <= hi2:
            i = t1.next_nonzero(i + 1)
            if i is None:
                break
            lo1 = t1.prefix_sum(i)
            hi1 = lo1 + t1.get(i)
        else:
            j = t2.next_nonzero(j + 1)
            if j is None:
                break
            lo2 = t2.prefix_sum(j)
            hi2 = lo2 + t2.get(j)
    return flow


# ---------------------------------------------------------------------------
# deterministic Bernoulli subset sampling


def subset_sample(k, p, seed):
    """Indices of {0..k-1} kept independently with probability p.

    Geometric gap skipping, so the cost is O(1 + p*k) draws.  ``seed`` is
    anything ``np.random.default_rng`` accepts.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if k <= 0 or p == 0.0:
        return []
    if p >= 1.0:
        return list(range(k))
    rng = np.random.default_rng(seed)
    out = []
    i = -1
    while True:
        i += int(rng.geometric(p))
        if i >= k:
            return out
        out.append(i)


# ---------------------------------------------------------------------------
# interval patcher


class IntervalPatcher:
    """Implicit bipartite demand routing by sorted interval overlap.

    Sources d1 and sinks d2 are laid out consecutively on the line; the
    flow f(u, v) is the overlap of u's interval with v's.  When the two
    totals agree this routes every unit, the flow support has at most
    nnz(d1) + nnz(d2) - 1 edges, and the whitened flow matrix
    D1^{-1/2} F D2^{-1/2} has operator norm at most 1.
    """

    def __init__(self, d1, d2):
        d1 = list(d1)
        d2 = list(d2)
        for d in (d1, d2):
            for x in d:
                if x < 0:
                    raise ValueError("demands must be nonnegative")
        self._t1 = SegTree(d1)
        self._t2 = SegTree(d2)

    def _tree(self, side):
        if side == 1:
            return self._t1
        if side == 2:
            return self._t2
        raise ValueError(f"side must be 1 or 2, got {side}")

    def demand(self, side, index):
        return self._tree(side).get(index)

    def total(self, side):
        return self._tree(side).total()

    def set(self, side, index, value):
        if value < 0:
            raise ValueError("demands must be nonnegative")
        self._tree(side).update(index, value)

    def query_edge(self, u, v):
        lo1 = self._t1.prefix_sum(u)
        hi1 = lo1 + self._t1.get(u)
        lo2 = self._t2.prefix_sum(v)
        hi2 = lo2 + self._t2.get(v)
        amt = min(hi1, hi2) - max(lo1, lo2)
        return amt if amt > 0 else 0

    def query_all(self):
        """The full flow {(u, v): f} over its support."""
        return _overlap_flow(self._t1, self._t2)


# ---------------------------------------------------------------------------
# degree-preserving patcher


class _MaxTracker:
    """Lazy max-heap over a mutable index -> value map (deterministic ties)."""

    __slots__ = ("_heap", "_val")

    def __init__(self, items):
        self._val = dict(items)
        self._heap = [(_neg(v), k) for k, v in self._val.items()]
        heapq.heapify(self._heap)

    def assign(self, k, v):
        self._val[k] = v
        heapq.heappush(self._heap, (_neg(v), k))

    def argmax(self):
        while self._heap:
            nv, k = self._heap[0]
            if k in self._val and _neg(self._val[k]) == nv:
                return k, self._val[k]
            heapq.heappop(self._heap)
        return None, 0

    def maxval(self):
        return self.argmax()[1]


def _neg(v):
    return -v


class DegPreservingPatcher:
    """Interval patcher with forbidden pairs: f(u, g(u)) = 0 on a matching.

    ``pairing`` maps sources U1 injectively to sinks; the returned flow
    routes all demand exactly (row sums d1, column sums d2) while putting
    zero flow on every pair (u, g(u)).  Internally the demand splits into a
    residual part and a capped part ``a``, each routed by interval overlap
    under its own vertex order; the orders place a pointer vertex w (the
    pair of maximum joint demand) first on one side and its image last on
    the other, and pairing images are shifted by one slot so that paired
    intervals can never meet.  Updates adjust demands in pairs, keep both
    totals equal, and move the pointer by O(1) leaf swaps.

    Preconditions (checked on every update, and on init):

    - 'equal-mass': sum(d1) == sum(d2);
    - 'max-entry':  2 * max(d) <= sum(d) on each side;
    - 'pair-cap':   d1[u] + d2[g(u)] <= sum(d1) for every pair.

    A violating ``set`` raises PreconditionViolated and leaves the
    structure unchanged.
    """

    def __init__(self, d1, d2, pairing):
        d1 = list(d1)
        d2 = list(d2)
        n1, n2 = len(d1), len(d2)
        for d in (d1, d2):
            for x in d:
                if x < 0:
                    raise ValueError("demands must be nonnegative")
        g = dict(pairing)
        for u, v in g.items():
            if not (0 <= u < n1 and 0 <= v < n2):
                raise ValueError(f"pair ({u},{v}) out of range")
        if len(set(g.values())) != len(g):
            raise ValueError("pairing must be injective")
        self._d1 = d1
        self._d2 = d2
        self._g = g
        self._ginv = {v: u for u, v in g.items()}
        self._tot1 = sum(d1)
        self._tot2 = sum(d2)
        self._max1 = _MaxTracker(enumerate(d1))
        self._max2 = _MaxTracker(enumerate(d2))
        self._b = {u: min(d1[u], d2[v]) for u, v in g.items()}
        self._totb = sum(self._b.values())
        self._btr = _MaxTracker(self._b)
        self._str = _MaxTracker({u: d1[u] + d2[v] for u, v in g.items()})
        which = self._violation()
        if which:
            raise PreconditionViolated(which)
        self._w = self._btr.argmax()[0]
        self._build_orders()
        self._build_trees()

    # -- layout ------------------------------------------------------------

    def _build_orders(self):
        n1, n2 = len(self._d1), len(self._d2)
        w = self._w
        paired = sorted(self._g)
        if w is None:
            order1 = list(range(n1))
            order2 = list(range(n2))
            order4 = list(range(n2))
        else:
            order1 = [w] + [u for u in paired if u != w]
            order1 += [u for u in range(n1) if u not in self._g]
            gw = self._g[w]
            order2 = [v for v in range(n2) if v != gw] + [gw]
            # images shifted one slot: slot s-1 holds g(order1[s]), pointer image last
            order4 = [self._g[u] for u in order1[1 : len(paired)]] + [gw]
            order4 += sorted(v for v in range(n2) if v not in self._ginv)
        self._inv1 = order1
        self._inv2 = order2
        self._inv4 = order4
        self._pos1 = [0] * n1
        self._pos2 = [0] * n2
        self._pos4 = [0] * n2
        for s, u in enumerate(order1):
            self._pos1[u] = s
        for s, v in enumerate(order2):
            self._pos2[v] = s
        for s, v in enumerate(order4):
            self._pos4[v] = s

    def _a_of(self, u):
        if u is None or u not in self._b:
            return 0
        bu = self._b[u]
        if u != self._w:
            return bu
        return bu if 2 * bu <= self._totb else self._totb - bu

    def _build_trees(self):
        n1, n2 = len(self._d1), len(self._d2)
        r1 = [0] * n1
        a1 = [0] * n1
        for u in range(n1):
            au = self._a_of(u)
            r1[self._pos1[u]] = self._d1[u] - au
            a1[self._pos1[u]] = au
        r2 = [0] * n2
        a2 = [0] * n2
        for v in range(n2):
            au = self._a_of(self._ginv.get(v))
            r2[self._pos2[v]] = self._d2[v] - au
            a2[self._pos4[v]] = au
        self._t_r1 = SegTree(r1)
        self._t_r2 = SegTree(r2)
        self._t_a1 = SegTree(a1)
        self._t_a2 = SegTree(a2)

    # -- validation ---------------------------------------------------------

    def _violation(self):
        if self._tot1 != self._tot2:
            return "equal-mass"
        if 2 * self._max1.maxval() > self._tot1:
            return "max-entry"
        if 2 * self._max2.maxval() > self._tot2:
            return "max-entry"
        if self._g and self._str.maxval() > self._tot1:
            return "pair-cap"
        return None

    # -- updates -------------------------------------------------------------

    def set(self, u, val1, v, val2):
        """Assign d1[u] = val1 and d2[v] = val2 as one paired update."""
        if val1 < 0 or val2 < 0:
            raise ValueError("demands must be nonnegative")
        old1, old2 = self._d1[u], self._d2[v]
        affected = set()
        if u in self._g:
            affected.add(u)
        if v in self._ginv:
            affected.add(self._ginv[v])
        self._tot1 = self._tot1 + (val1 - old1)
        self._tot2 = self._tot2 + (val2 - old2)
        self._d1[u] = val1
        self._d2[v] = val2
        self._max1.assign(u, val1)
        self._max2.assign(v, val2)
        for x in affected:
            self._str.assign(x, self._d1[x] + self._d2[self._g[x]])
        which = self._violation()
        if which:
            self._tot1 = self._tot1 - (val1 - old1)
            self._tot2 = self._tot2 - (val2 - old2)
            self._d1[u] = old1
            self._d2[v] = old2
            self._max1.assign(u, old1)
            self._max2.assign(v, old2)
            for x in affected:
                self._str.assign(x, self._d1[x] + self._d2[self._g[x]])
            raise PreconditionViolated(which)
        for x in affected:
            nb = min(self._d1[x], self._d2[self._g[x]])
            self._totb += nb - self._b[x]
            self._b[x] = nb
            self._btr.assign(x, nb)
        touched = set(affected)
        w_new = self._btr.argmax()[0]
        if w_new != self._w:
            touched.update(self._swap_pointer(w_new))
        if self._w is not None:
            touched.add(self._w)
        self._rewrite(touched | {u}, {v})

    def _swap_pointer(self, w_new):
        """Move the pointer; two leaf swaps per tree, done via slot swaps."""
        w_old = self._w
        self._w = w_new
        for pos, inv, x, y in (
            (self._pos1, self._inv1, w_old, w_new),
            (self._pos2, self._inv2, self._g[w_old], self._g[w_new]),
            (self._pos4, self._inv4, self._g[w_old], self._g[w_new]),
        ):
            sx, sy = pos[x], pos[y]
            pos[x], pos[y] = sy, sx
            inv[sx], inv[sy] = y, x
        return {w_old, w_new}

    def _rewrite(self, us, extra_vs):
        vs = set(extra_vs)
        for x in us:
            ax = self._a_of(x)
            self._t_r1.update(self._pos1[x], self._d1[x] - ax)
            self._t_a1.update(self._pos1[x], ax)
            if x in self._g:
                vs.add(self._g[x])
        for y in vs:
            ay = self._a_of(self._ginv.get(y))
            self._t_r2.update(self._pos2[y], self._d2[y] - ay)
            self._t_a2.update(self._pos4[y], ay)

    # -- queries --------------------------------------------------------------

    def demand(self, side, index):
        return (self._d1 if side == 1 else self._d2)[index]

    def query_edge(self, u, v):
        out = 0
        for ta, tb, pa, pb in (
            (self._t_r1, self._t_r2, self._pos1, self._pos2),
            (self._t_a1, self._t_a2, self._pos1, self._pos4),
        ):
            i, j = pa[u], pb[v]
            lo1 = ta.prefix_sum(i)
            hi1 = lo1 + ta.get(i)
            lo2 = tb.prefix_sum(j)
            hi2 = lo2 + tb.get(j)
            amt = min(hi1, hi2) - max(lo1, lo2)
            if amt > 0:
                out = out + amt
        return out

    def query_all(self):
        flow = {}
        for ta, tb, inva, invb in (
            (self._t_r1, self._t_r2, self._inv1, self._inv2),
            (self._t_a1, self._t_a2, self._inv1, self._inv4),
        ):
            for (i, j), val in _overlap_flow(ta, tb).items():
                key = (inva[i], invb[j])
                flow[key] = flow.get(key, 0) + val
        return flow


# ---------------------------------------------------------------------------
# decremental degree sparsifier


class DegreeSparsifier:
    """Decremental reweighting that preserves weighted degrees approximately.

    Every vertex samples each incident edge with probability 2*L*rho/d_v
    (L the minimum initial weight, d_v the weighted total degree); an edge
    survives if either endpoint sampled it and is reweighted by the
    inverse of its inclusion probability, so expected weights are exact.
    Deletions resample only the two endpoints and reweigh their incident
    edges, so recourse stays local.

    Requires the initial max/min weight ratio to be at most 2.
    """

    def __init__(self, g: DiGraph, eps, seed=0, c_ds=C_DS_DEFAULT):
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must be in (0,1), got {eps}")
        if g.m and g.weight_ratio() > 2.0 + 1e-9:
            raise ValueError("weight ratio above 2; rescale or bucket first")
        self._g = g.copy()
        self._eps = float(eps)
        self._rho = c_ds * eps ** -2.0 * math.log(8.0 * max(g.n, 2))
        self._L = min(g.edges.values(), key=float) if g.m else 1
        self._base = list(seed) if isinstance(seed, (list, tuple)) else [seed]
        self._ctr = [0] * g.n
        self._F = [frozenset() for _ in range(g.n)]
        self._w = {}
        for v in range(g.n):
            self._resample(v)
        for e in self._g.edges:
            self._reweigh(e)

    @property
    def rho(self):
        return self._rho

    @property
    def m(self):
        return self._g.m

    def _p_vertex(self, v):
        d = float(self._g.total_degree(v))
        if d <= 0.0:
            return 1.0
        return min(1.0, 2.0 * float(self._L) * self._rho / d)

    def p_edge(self, e):
        """Inclusion probability of e under the current degrees."""
        pu = self._p_vertex(e[0])
        pv = self._p_vertex(e[1])
        return 1.0 - (1.0 - pu) * (1.0 - pv)

    def _resample(self, v):
        keys = self._g.incident_edges(v)
        keys.sort()
        p = self._p_vertex(v)
        idx = subset_sample(len(keys), p, self._base + [v, self._ctr[v]])
        self._ctr[v] += 1
        self._F[v] = frozenset(keys[i] for i in idx)

    def _reweigh(self, e):
        if e in self._F[e[0]] or e in self._F[e[1]]:
            p = self.p_edge(e)
            self._w[e] = self._g.edges[e] if p >= 1.0 else self._g.edges[e] / p
        else:
            self._w.pop(e, None)

    @property
    def current(self):
        return dict(self._w)

    @property
    def sample_count(self):
        return len(self._w)

    def weight(self, e, default=0):
        """Current reweighting of e, or ``default`` when not sampled."""
        return self._w.get(e, default)

    def graph(self) -> DiGraph:
        """Copy of the maintained input graph (post-deletions)."""
        return self._g.copy()

    def current_graph(self) -> DiGraph:
        h = DiGraph(self._g.n)
        for (u, v), w in sorted(self._w.items()):
            h.add_edge(u, v, w)
        return h

    def sampled(self, v):
        return self._F[v]

    def delete(self, u, v):
        """Remove edge (u, v); returns the set of edges whose output weight changed.

        Only edges incident to u or v can change (locality), so the
        recourse computation touches nothing else.
        """
        e = (u, v)
        affected = set(self._g.incident_edges(u)) | set(self._g.incident_edges(v))
        old = {e2: self._w.get(e2) for e2 in affected}
        self._g.remove_edge(u, v)
        self._w.pop(e, None)
        for x in (u, v):
            if self._g.out_adj[x] or self._g.in_adj[x]:
                self._resample(x)
            else:
                self._F[x] = frozenset()
        for e2 in affected:
            if e2 != e:
                self._reweigh(e2)
        changed = set()
        for e2 in affected:
            if self._w.get(e2) != old[e2]:
                changed.add(e2)
        return changed


def degree_approx_error(g: DiGraph, wprime):
    """Degree-approximation errors of a reweighting wprime against g.

    Returns (opnorm, row, col): the whitened adjacency-difference operator
    norm || Dout^{-1/2} (A' - A) Din^{-1/2} ||, and the largest relative
    out-/in-degree errors.
    """
    n = g.n
    diff = np.zeros((n, n))
    for (u, v), w in g.edges.items():
        diff[u, v] -= float(w)
    for (u, v), w in wprime.items():
        diff[u, v] += float(w)
    dout, din = degree_vectors(g)
    op = whitened_opnorm(dout, diff, din)
    do = np.asarray([float(x) for x in dout])
    di = np.asarray([float(x) for x in din])
    rowerr = np.abs(diff.sum(axis=1))
    colerr = np.abs(diff.sum(axis=0))
    row = float(np.max(np.where(do > 0, rowerr / np.maximum(do, 1e-300), 0.0))) if n else 0.0
    col = float(np.max(np.where(di > 0, colerr / np.maximum(di, 1e-300), 0.0))) if n else 0.0
    return op, row, col
