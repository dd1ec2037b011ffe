"""Weighted directed/undirected graphs and their matrix constructions.

Conventions used throughout the package: for a directed edge e = (u, v),
u is the head h(e) (the source, where the edge leaves) and v is the tail
t(e) (the destination).  The directed Laplacian is

    vL = B^T W H,   B = H - T,

so vL[a, a] is the weighted out-degree of a, vL[a, b] = -w(b -> a) for
a != b, column sums are zero, and row sums equal the per-vertex degree
balance d_out - d_in.  The undirected counterpart und(g) assigns each
unordered pair the *sum* w(u->v) + w(v->u), so L_und = vL_g + vL_rev(g).

Weights may be floats or ``fractions.Fraction``; all graph arithmetic is
generic over the weight type so exact (rational) verification runs reuse
the same code paths.  Matrix builders always produce float arrays.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import DimensionMismatch, EdgeNotFound, SingularBlock

# Relative tolerance used by float-mode exactness checks (degree equality,
# Eulerian-ness). Rational mode compares exactly.
REL_TOL = 1e-12


def _is_exact(w) -> bool:
    return isinstance(w, (Fraction, int))


class DiGraph:
    """Simple weighted directed graph on vertices 0..n-1.

    Edges are stored in a dict keyed by (head, tail) plus per-vertex
    incidence maps, so deletions and degree resampling touch only the
    incident edges.
    """

    __slots__ = ("n", "edges", "out_adj", "in_adj")

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = n
        self.edges: dict[tuple[int, int], object] = {}
        self.out_adj: list[dict[int, object]] = [dict() for _ in range(n)]
        self.in_adj: list[dict[int, object]] = [dict() for _ in range(n)]

    @classmethod
    def from_edges(cls, n, edge_iter):
        g = cls(n)
        for u, v, w in edge_iter:
            g.add_edge(u, v, w)
        return g

    @property
    def m(self) -> int:
        return len(self.edges)

    def copy(self) -> "DiGraph":
        g = DiGraph(self.n)
        g.edges = dict(self.edges)
        g.out_adj = [dict(d) for d in self.out_adj]
        g.in_adj = [dict(d) for d in self.in_adj]
        return g

    def add_edge(self, u: int, v: int, w) -> None:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise DimensionMismatch(f"vertex out of range: ({u},{v}) with n={self.n}")
        if u == v:
            raise ValueError("self-loops are not allowed")
        if (u, v) in self.edges:
            raise ValueError(f"parallel edge ({u},{v})")
        if not w > 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        self.edges[(u, v)] = w
        self.out_adj[u][v] = w
        self.in_adj[v][u] = w

    def add_or_combine(self, u: int, v: int, w) -> None:
        """Insert an edge, summing weights if it already exists."""
        if (u, v) in self.edges:
            w = self.edges[(u, v)] + w
            self.remove_edge(u, v)
        self.add_edge(u, v, w)

    def remove_edge(self, u: int, v: int):
        try:
            w = self.edges.pop((u, v))
        except KeyError:
            raise EdgeNotFound(f"edge ({u},{v}) not present") from None
        del self.out_adj[u][v]
        del self.in_adj[v][u]
        return w

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def weight(self, u: int, v: int, default=0):
        return self.edges.get((u, v), default)

    def sorted_edges(self):
        """Edges as (u, v, w) in lexicographic key order (deterministic)."""
        return [(u, v, self.edges[(u, v)]) for (u, v) in sorted(self.edges)]

    def incident_edges(self, v: int):
        """All edges touching v, sorted: out-edges then in-edges."""
        out = [(v, x) for x in sorted(self.out_adj[v])]
        inc = [(x, v) for x in sorted(self.in_adj[v])]
        return out + inc

    def total_degree(self, v: int):
        """Weighted degree d_v = d_out(v) + d_in(v)."""
        zero = 0
        for w in self.out_adj[v].values():
            zero = zero + w
        for w in self.in_adj[v].values():
            zero = zero + w
        return zero

    def total_weight(self):
        return sum(self.edges.values())

    def weight_ratio(self):
        """max/min edge weight (the metadata bound W); 1.0 when edgeless."""
        if not self.edges:
            return 1.0
        ws = list(self.edges.values())
        return float(max(ws)) / float(min(ws))

    def nonisolated(self) -> list[int]:
        return [v for v in range(self.n) if self.out_adj[v] or self.in_adj[v]]

    def __eq__(self, other):
        return isinstance(other, DiGraph) and self.n == other.n and self.edges == other.edges

    def __repr__(self):
        return f"DiGraph(n={self.n}, m={self.m})"


class UndirectedGraph:
    """Simple weighted undirected graph; edges keyed (min(u,v), max(u,v))."""

    __slots__ = ("n", "edges", "adj")

    def __init__(self, n: int):
        self.n = n
        self.edges: dict[tuple[int, int], object] = {}
        self.adj: list[dict[int, object]] = [dict() for _ in range(n)]

    @classmethod
    def from_edges(cls, n, edge_iter):
        g = cls(n)
        for u, v, w in edge_iter:
            g.add_edge(u, v, w)
        return g

    @property
    def m(self) -> int:
        return len(self.edges)

    @staticmethod
    def key(u: int, v: int) -> tuple[int, int]:
        return (u, v) if u < v else (v, u)

    def copy(self) -> "UndirectedGraph":
        g = UndirectedGraph(self.n)
        g.edges = dict(self.edges)
        g.adj = [dict(d) for d in self.adj]
        return g

    def add_edge(self, u: int, v: int, w) -> None:
        if u == v:
            raise ValueError("self-loops are not allowed")
        k = self.key(u, v)
        if k in self.edges:
            raise ValueError(f"parallel edge {k}")
        if not w > 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        self.edges[k] = w
        self.adj[u][v] = w
        self.adj[v][u] = w

    def add_or_combine(self, u: int, v: int, w) -> None:
        k = self.key(u, v)
        if k in self.edges:
            w = self.edges[k] + w
            self.remove_edge(u, v)
        self.add_edge(u, v, w)

    def remove_edge(self, u: int, v: int):
        k = self.key(u, v)
        try:
            w = self.edges.pop(k)
        except KeyError:
            raise EdgeNotFound(f"edge {k} not present") from None
        del self.adj[u][v]
        del self.adj[v][u]
        return w

    def has_edge(self, u: int, v: int) -> bool:
        return self.key(u, v) in self.edges

    def weight(self, u: int, v: int, default=0):
        return self.edges.get(self.key(u, v), default)

    def sorted_edges(self):
        return [(u, v, self.edges[(u, v)]) for (u, v) in sorted(self.edges)]

    def degree(self, v: int):
        d = 0
        for w in self.adj[v].values():
            d = d + w
        return d

    def degree_list(self) -> list:
        return [self.degree(v) for v in range(self.n)]

    def volume(self, vertices) -> float:
        return sum(self.degree(v) for v in vertices)

    def total_weight(self):
        return sum(self.edges.values())

    def weight_ratio(self):
        if not self.edges:
            return 1.0
        ws = list(self.edges.values())
        return float(max(ws)) / float(min(ws))

    def nonisolated(self) -> list[int]:
        return [v for v in range(self.n) if self.adj[v]]

    def components(self) -> list[list[int]]:
        """Connected components restricted to non-isolated vertices.

        Isolated vertices are returned as singleton components at the end,
        so the components always partition [0, n).
        """
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            comp = [s]
            stack = [s]
            while stack:
                x = stack.pop()
                for y in self.adj[x]:
                    if not seen[y]:
                        seen[y] = True
                        comp.append(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def is_connected_on_support(self) -> bool:
        nz = [v for v in range(self.n) if self.adj[v]]
        if not nz:
            return True
        comps = self.components()
        return sum(1 for c in comps if len(c) > 1 or self.adj[c[0]]) == 1

    def __eq__(self, other):
        return (
            isinstance(other, UndirectedGraph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __repr__(self):
        return f"UndirectedGraph(n={self.n}, m={self.m})"


INSERT = "insert"
DELETE = "delete"


class UpdateEvent:
    """One edge update: insert (with a positive weight) or delete.

    A weight change is expressed as delete + insert with the new weight;
    inserting a present edge or deleting an absent one is an error at the
    consumer.
    """

    __slots__ = ("kind", "head", "tail", "weight")

    def __init__(self, kind: str, head: int, tail: int, weight=None):
        if kind not in (INSERT, DELETE):
            raise ValueError(f"kind must be {INSERT!r} or {DELETE!r}, got {kind!r}")
        if kind == INSERT and not (weight is not None and weight > 0):
            raise ValueError("insert needs a positive weight")
        if kind == DELETE and weight is not None:
            raise ValueError("delete carries no weight")
        self.kind = kind
        self.head = head
        self.tail = tail
        self.weight = weight

    @classmethod
    def insert(cls, u: int, v: int, w) -> "UpdateEvent":
        return cls(INSERT, u, v, w)

    @classmethod
    def delete(cls, u: int, v: int) -> "UpdateEvent":
        return cls(DELETE, u, v)

    def __eq__(self, other):
        return isinstance(other, UpdateEvent) and (
            self.kind,
            self.head,
            self.tail,
            self.weight,
        ) == (other.kind, other.head, other.tail, other.weight)

    def __repr__(self):
        if self.kind == INSERT:
            return f"UpdateEvent(insert, {self.head}->{self.tail}, w={self.weight})"
        return f"UpdateEvent(delete, {self.head}->{self.tail})"


# ---------------------------------------------------------------------------
# basic constructions


def rev(g: DiGraph) -> DiGraph:
    out = DiGraph(g.n)
    for (u, v), w in g.edges.items():
        out.add_edge(v, u, w)
    return out


def und(g: DiGraph) -> UndirectedGraph:
    """Orientation removal: w_{u,v} = w_(u,v) + w_(v,u)."""
    out = UndirectedGraph(g.n)
    for (u, v), w in g.edges.items():
        out.add_or_combine(u, v, w)
    return out


def degree_vectors(g: DiGraph):
    """Weighted (out, in) degree lists in the native weight type."""
    out = [0] * g.n
    in_ = [0] * g.n
    for (u, v), w in g.edges.items():
        out[u] = out[u] + w
        in_[v] = in_[v] + w
    return out, in_


def degree_balance(g: DiGraph):
    out, in_ = degree_vectors(g)
    return [o - i for o, i in zip(out, in_)]


def is_eulerian(g: DiGraph, rel_tol: float = REL_TOL) -> bool:
    bal = degree_balance(g)
    if all(_is_exact(b) for b in bal):
        return all(b == 0 for b in bal)
    out, in_ = degree_vectors(g)
    scale = max((float(o) + float(i) for o, i in zip(out, in_)), default=0.0)
    if scale == 0.0:
        return True
    return max(abs(float(b)) for b in bal) <= rel_tol * scale


class BipartiteLift:
    """Bipartite lift of a directed graph.

    Vertices 0..n-1 are the originals ("head side"); n..2n-1 are the
    copies ("tail side").  Edge (u, v, w) lifts to (u, n+v, w); the
    bijection back to original edges is implicit in the index shift.
    """

    __slots__ = ("n", "lifted")

    def __init__(self, g: DiGraph):
        self.n = g.n
        lifted = DiGraph(2 * g.n)
        for (u, v), w in g.edges.items():
            lifted.add_edge(u, g.n + v, w)
        self.lifted = lifted

    def original_edge(self, u: int, vbar: int) -> tuple[int, int]:
        if not (0 <= u < self.n and self.n <= vbar < 2 * self.n):
            raise DimensionMismatch(f"({u},{vbar}) is not a lifted edge index pair")
        return (u, vbar - self.n)

    def unlift(self, h: DiGraph | None = None) -> DiGraph:
        """Contract every (v, v-bar) pair of `h` (default: the lift itself).

        `h` may carry auxiliary vertices with indices >= 2n; they are kept,
        renumbered to n, n+1, ... after the originals.  Self-loops created
        by the contraction are dropped.
        """
        if h is None:
            h = self.lifted
        return contract_lift_pairs(h, self.n)


def blift(g: DiGraph) -> BipartiteLift:
    return BipartiteLift(g)


def contract_lift_pairs(h: DiGraph, n: int) -> DiGraph:
    """Contract {v, n+v} for v in [0, n); aux vertices (id >= 2n) shift to n+."""
    if h.n < 2 * n:
        raise DimensionMismatch(f"graph on {h.n} vertices cannot hold a lift of n={n}")
    n_aux = h.n - 2 * n

    def down(x: int) -> int:
        if x < n:
            return x
        if x < 2 * n:
            return x - n
        return x - n  # aux block shifts left by n

    out = DiGraph(n + n_aux)
    for (u, v), w in h.edges.items():
        a, b = down(u), down(v)
        if a == b:
            continue  # self-loop from a (v, v-bar) edge; dropped
        out.add_or_combine(a, b, w)
    return out


def contract(g: DiGraph, groups) -> DiGraph:
    """Contract each group of vertices into one; multi-edges summed,
    self-loops dropped.  `groups` must partition [0, n); output vertex i
    corresponds to groups[i].
    """
    seen = set()
    for grp in groups:
        for v in grp:
            if v in seen:
                raise ValueError(f"vertex {v} in two groups")
            seen.add(v)
    if seen != set(range(g.n)):
        raise ValueError("groups do not partition the vertex set")
    label = [0] * g.n
    for i, grp in enumerate(groups):
        for v in grp:
            label[v] = i
    out = DiGraph(len(groups))
    for (u, v), w in g.edges.items():
        a, b = label[u], label[v]
        if a == b:
            continue
        out.add_or_combine(a, b, w)
    return out


# ---------------------------------------------------------------------------
# dense matrix builders (always float)


def directed_laplacian(g: DiGraph) -> np.ndarray:
    """vL = B^T W H: diagonal out-degrees, vL[a,b] = -w(b->a)."""
    vl = np.zeros((g.n, g.n))
    for (u, v), w in g.edges.items():
        fw = float(w)
        vl[u, u] += fw
        vl[v, u] -= fw
    return vl


def undirected_laplacian(u: UndirectedGraph) -> np.ndarray:
    lap = np.zeros((u.n, u.n))
    for (a, b), w in u.edges.items():
        fw = float(w)
        lap[a, a] += fw
        lap[b, b] += fw
        lap[a, b] -= fw
        lap[b, a] -= fw
    return lap


def incidence_matrices(g: DiGraph):
    """(H, T, W, edge_list) over sorted edge order; B = H - T."""
    edge_list = sorted(g.edges)
    m = len(edge_list)
    H = np.zeros((m, g.n))
    T = np.zeros((m, g.n))
    W = np.zeros(m)
    for i, (u, v) in enumerate(edge_list):
        H[i, u] = 1.0
        T[i, v] = 1.0
        W[i] = float(g.edges[(u, v)])
    return H, T, W, edge_list


def digraph_from_directed_laplacian(vl, n: int | None = None, tol: float = 1e-9) -> DiGraph:
    """Recover a DiGraph from a dense directed Laplacian.

    Requires off-diagonal entries <= tol (M-matrix sign pattern); entries in
    (-tol, 0] are treated as absent.  vl[a, b] = -w(b->a).
    """
    vl = np.asarray(vl, dtype=float)
    if n is None:
        n = vl.shape[0]
    scale = max(1.0, float(np.abs(vl).max()) if vl.size else 1.0)
    g = DiGraph(n)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            x = vl[a, b]
            if x > tol * scale:
                raise ValueError(f"positive off-diagonal at ({a},{b}): {x}")
            if x < -tol * scale:
                g.add_edge(b, a, -x)
    return g


# ---------------------------------------------------------------------------
# Schur complement


def _schur_eliminate(mat: list[list], order: list[int], keep_idx: list[int], zero_tol):
    """Sequential pivot elimination of `order` indices from a dense matrix
    stored as nested lists (generic over float/Fraction arithmetic)."""
    for x in order:
        piv = mat[x][x]
        row_has = any(mat[x][j] != 0 for j in keep_idx + [y for y in order if y != x])
        col_has = any(mat[i][x] != 0 for i in keep_idx + [y for y in order if y != x])
        if piv == 0 or (not _is_exact(piv) and abs(piv) <= zero_tol):
            if row_has or col_has:
                raise SingularBlock(f"zero pivot at eliminated vertex {x}")
            continue  # fully isolated inside the eliminated block; drop
        live = [i for i in keep_idx + order if i != x and (mat[i][x] != 0)]
        row = [(j, mat[x][j]) for j in keep_idx + order if j != x and mat[x][j] != 0]
        for i in live:
            ci = mat[i][x]
            f = ci / piv
            for j, rxj in row:
                mat[i][j] = mat[i][j] - f * rxj
            mat[i][x] = 0 * ci
        for j, _ in row:
            mat[x][j] = 0 * mat[x][j]
    return mat


class SchurResult:
    __slots__ = ("matrix", "graph", "keep")

    def __init__(self, matrix, graph, keep):
        self.matrix = matrix  # dense float directed Laplacian on keep-order
        self.graph = graph  # DiGraph on keep vertices (renumbered), or None
        self.keep = keep  # sorted kept vertex ids (original numbering)


def schur_complement(g: DiGraph, keep) -> SchurResult:
    """Schur complement of the directed Laplacian onto `keep`.

    Eliminates V \\ keep one pivot at a time (equivalent to block LU when all
    pivots are nonsingular), raising SingularBlock otherwise.  Works exactly
    on Fraction weights.  The result graph drops self-loop terms (they do not
    enter the Laplacian) and is None only if sign extraction fails.
    """
    keep = sorted(set(keep))
    if any(not (0 <= v < g.n) for v in keep):
        raise DimensionMismatch("keep set outside vertex range")
    elim = sorted(set(range(g.n)) - set(keep))

    exact = all(_is_exact(w) for w in g.edges.values())
    zero = Fraction(0) if exact else 0.0
    mat = [[zero for _ in range(g.n)] for _ in range(g.n)]
    for (u, v), w in g.edges.items():
        ww = w if exact else float(w)
        mat[u][u] = mat[u][u] + ww
        mat[v][u] = mat[v][u] - ww
    scale = max((abs(float(w)) for w in g.edges.values()), default=1.0)
    _schur_eliminate(mat, elim, keep, zero_tol=1e-13 * scale)

    k = len(keep)
    dense = np.zeros((k, k))
    for i, a in enumerate(keep):
        for j, b in enumerate(keep):
            dense[i, j] = float(mat[a][b])

    graph = DiGraph(k)
    tol = 1e-9 * max(1.0, scale)
    ok = True
    for i, a in enumerate(keep):
        for j, b in enumerate(keep):
            if i == j:
                continue
            x = mat[a][b]
            fx = float(x)
            if fx > tol:
                ok = False
                break
            if exact:
                if x != 0:
                    graph.add_edge(j, i, -x)
            elif fx < -tol:
                graph.add_edge(j, i, -fx)
        if not ok:
            break
    return SchurResult(dense, graph if ok else None, keep)
