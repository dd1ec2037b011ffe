"""Expander decompositions: static, pruned, and fully dynamic.

The static decomposition buckets edges into factor-2 weight classes and
recursively bisects each class with certified cuts: exact enumeration up to
24 support vertices, spectral sweep above.  A piece is emitted when no cut
below the conductance target is found.  Pruning is by threshold-dissolve: a
piece absorbs deletions up to a budget of phi*m/10 (re-certifying as it
goes), then dissolves and ejects its remaining edges.  The dynamic wrapper
keeps tiers of capacity 2^i and cascades like a binary counter, reporting
every change as piece removals/additions plus in-piece deletions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dense import CUT_ENUM_CAP, conductance_exact_cut, conductance_sweep
from .errors import EdgeNotFound
from .graphs import DiGraph, UndirectedGraph, und


def weight_bucket_index(w) -> int:
    """i with 2^i <= w < 2^{i+1}."""
    _, e = math.frexp(float(w))
    return e - 1


class Piece:
    """An edge-owned subgraph certified to be an expander.

    ``subgraph`` lives on the host vertex numbering; ``phi_cert`` is the
    certified conductance lower bound of und(subgraph) at creation
    (``cert_method`` says whether by enumeration or by sweep audit).
    """

    __slots__ = (
        "subgraph",
        "phi_cert",
        "weight_bucket",
        "deletions_seen",
        "budget",
        "phi_target",
        "cert_method",
        "piece_id",
        "tier",
    )

    def __init__(self, subgraph, phi_cert, weight_bucket, phi_target, cert_method):
        self.subgraph = subgraph
        self.phi_cert = phi_cert
        self.weight_bucket = weight_bucket
        self.phi_target = phi_target
        self.cert_method = cert_method
        self.deletions_seen = 0
        self.budget = phi_target * subgraph.m / 10.0
        self.piece_id = -1
        self.tier = 0

    def support(self):
        return self.subgraph.nonisolated()

    def __repr__(self):
        return (
            f"Piece(id={self.piece_id}, m={self.subgraph.m}, "
            f"phi_cert={self.phi_cert:.3g}, bucket={self.weight_bucket})"
        )


@dataclass
class PruneOutcome:
    kept: bool
    ejected_edges: list = field(default_factory=list)


def _und_on_support(edge_list):
    """Renumbered undirected view of an edge triple list, plus the vertex map."""
    verts = sorted({u for u, _, _ in edge_list} | {v for _, v, _ in edge_list})
    idx = {v: i for i, v in enumerate(verts)}
    small = UndirectedGraph(len(verts))
    for u, v, w in edge_list:
        small.add_or_combine(idx[u], idx[v], float(w))
    return small, verts


def _split_edges(edge_list, side):
    """Partition edges by a vertex side-set: (inside, outside, crossing)."""
    inside, outside, crossing = [], [], []
    for u, v, w in edge_list:
        iu, iv = u in side, v in side
        if iu and iv:
            inside.append((u, v, w))
        elif not iu and not iv:
            outside.append((u, v, w))
        else:
            crossing.append((u, v, w))
    return inside, outside, crossing


def static_decompose(g, phi_target: float, seed: int = 0) -> list[Piece]:
    """Edge-disjoint expander pieces covering every edge of g.

    Each piece's und graph has certified conductance >= phi_target, with
    weight ratio < 2 inside a piece (factor-2 bucketing happens first).
    Accepts a DiGraph or an UndirectedGraph (edges oriented low->high).
    Deterministic; the seed argument is kept for interface stability.
    """
    del seed
    if not 0.0 < phi_target <= 1.0:
        raise ValueError("phi_target must lie in (0, 1]")
    if isinstance(g, UndirectedGraph):
        di = DiGraph(g.n)
        for (a, b), w in g.edges.items():
            di.add_edge(a, b, w)
        g = di
    n = g.n

    buckets: dict[int, list] = {}
    for u, v, w in g.sorted_edges():
        buckets.setdefault(weight_bucket_index(w), []).append((u, v, w))

    pieces: list[Piece] = []

    def emit(edge_list, bucket, phi_cert, method):
        sub = DiGraph(n)
        for u, v, w in edge_list:
            sub.add_edge(u, v, w)
        pieces.append(Piece(sub, phi_cert, bucket, phi_target, method))

    for bucket in sorted(buckets):
        stack = [buckets[bucket]]
        while stack:
            edges = stack.pop()
            if not edges:
                continue
            small, verts = _und_on_support(edges)
            comps = [c for c in small.components() if len(c) > 1]
            if len(comps) > 1:
                for comp in comps:
                    comp_set = {verts[i] for i in comp}
                    stack.append([e for e in edges if e[0] in comp_set])
                continue
            if small.n <= CUT_ENUM_CAP:
                phi, side_small = conductance_exact_cut(small)
                if phi >= phi_target:
                    emit(edges, bucket, phi, "exact")
                    continue
                side = {verts[i] for i in side_small}
            else:
                lower, cut, phi_cut = conductance_sweep(small)
                if phi_cut >= phi_target:
                    emit(edges, bucket, max(phi_target, lower), "sweep")
                    continue
                side = {verts[i] for i in cut}
            inside, outside, crossing = _split_edges(edges, side)
            # a cut of conductance < 1 leaves internal edges on both sides,
            # so all three parts are strictly smaller and recursion halts
            stack.extend(part for part in (inside, outside, crossing) if part)
    return pieces


def _certify(piece: Piece, threshold: float) -> bool:
    """Cheap re-certification after a deletion: exact when small, sweep above."""
    edges = piece.subgraph.sorted_edges()
    if not edges:
        return True
    small, _ = _und_on_support(edges)
    if not small.is_connected_on_support():
        return False
    if small.n <= CUT_ENUM_CAP:
        phi, _side = conductance_exact_cut(small)
        piece.phi_cert = phi
        return phi >= threshold
    _, _, phi_cut = conductance_sweep(small)
    return phi_cut >= threshold


def prune_on_delete(piece: Piece, u: int, v: int) -> PruneOutcome:
    """Apply the deletion of (u, v) to a piece and decide its fate.

    Kept while the deletion count stays within budget and the piece still
    certifies conductance >= phi_target/12; otherwise the piece dissolves
    and every remaining edge is ejected for reinsertion.
    """
    if not piece.subgraph.has_edge(u, v):
        raise EdgeNotFound(f"edge ({u},{v}) not in piece {piece.piece_id}")
    piece.subgraph.remove_edge(u, v)
    piece.deletions_seen += 1
    if piece.subgraph.m == 0:
        return PruneOutcome(kept=False)
    if piece.deletions_seen > piece.budget or not _certify(piece, piece.phi_target / 12.0):
        return PruneOutcome(kept=False, ejected_edges=piece.subgraph.sorted_edges())
    return PruneOutcome(kept=True)


# ---------------------------------------------------------------------------
# fully dynamic tiers


@dataclass
class ChangeLog:
    """What one update did to the decomposition."""

    edge_deletions_in_pieces: list = field(default_factory=list)  # (piece_id, (u,v,w))
    pieces_removed: list = field(default_factory=list)  # piece ids
    pieces_added: list = field(default_factory=list)  # piece ids


class DynamicDecomposition:
    """Tiered dynamic expander decomposition with binary-counter merging.

    Tier i holds at most 2^i edges.  Inserts batch into tier 1 and cascade
    upward; each receiving tier is re-decomposed from scratch.  Deletions
    route through prune_on_delete; dissolved pieces eject their edges back
    into the cascade.  All structural changes are reported in a ChangeLog so
    downstream samplers can resample exactly the affected pieces.
    """

    def __init__(self, g: DiGraph, phi_target: float, seed: int = 0):
        self.n = g.n
        self.phi_target = phi_target
        self.seed = seed
        self.pieces: dict[int, Piece] = {}
        self.owner: dict[tuple[int, int], int] = {}
        self.tiers: dict[int, set[int]] = {}
        self._next_id = 0
        self.ejected_total = 0  # recourse audit counter
        log = ChangeLog()
        edges = g.sorted_edges()
        if edges:
            top = max(1, (len(edges) - 1).bit_length())
            self._place(top, edges, log)
        self.init_log = log

    # -- bookkeeping

    def _tier_size(self, i: int) -> int:
        return sum(self.pieces[pid].subgraph.m for pid in self.tiers.get(i, ()))

    def _place(self, i: int, edges, log: ChangeLog):
        if not edges:
            return
        sub = DiGraph(self.n)
        for u, v, w in edges:
            sub.add_edge(u, v, w)
        for piece in static_decompose(sub, self.phi_target, self.seed):
            piece.piece_id = self._next_id
            self._next_id += 1
            piece.tier = i
            self.pieces[piece.piece_id] = piece
            self.tiers.setdefault(i, set()).add(piece.piece_id)
            for u, v, _w in piece.subgraph.sorted_edges():
                self.owner[(u, v)] = piece.piece_id
            log.pieces_added.append(piece.piece_id)

    def _dissolve_tier(self, i: int, log: ChangeLog):
        edges = []
        for pid in sorted(self.tiers.get(i, set())):
            piece = self.pieces.pop(pid)
            log.pieces_removed.append(pid)
            for u, v, w in piece.subgraph.sorted_edges():
                edges.append((u, v, w))
                del self.owner[(u, v)]
        self.tiers[i] = set()
        return edges

    def _cascade(self, batch, log: ChangeLog):
        i = 1
        pending = list(batch)
        while True:
            if self._tier_size(i) + len(pending) <= (1 << i):
                pending.extend(self._dissolve_tier(i, log))
                self._place(i, pending, log)
                return
            pending.extend(self._dissolve_tier(i, log))
            i += 1

    # -- updates

    def insert(self, u: int, v: int, w) -> ChangeLog:
        if (u, v) in self.owner:
            raise ValueError(f"edge ({u},{v}) already present")
        log = ChangeLog()
        self._cascade([(u, v, w)], log)
        return log

    def delete(self, u: int, v: int) -> ChangeLog:
        pid = self.owner.get((u, v))
        if pid is None:
            raise EdgeNotFound(f"edge ({u},{v}) not in the current graph")
        log = ChangeLog()
        piece = self.pieces[pid]
        w = piece.subgraph.weight(u, v)
        outcome = prune_on_delete(piece, u, v)
        del self.owner[(u, v)]
        log.edge_deletions_in_pieces.append((pid, (u, v, w)))
        if not outcome.kept:
            self.tiers[piece.tier].discard(pid)
            del self.pieces[pid]
            log.pieces_removed.append(pid)
            for eu, ev, _ew in outcome.ejected_edges:
                del self.owner[(eu, ev)]
            self.ejected_total += len(outcome.ejected_edges)
            if outcome.ejected_edges:
                self._cascade(outcome.ejected_edges, log)
        return log

    # -- queries

    def current_graph(self) -> DiGraph:
        g = DiGraph(self.n)
        for pid in sorted(self.pieces):
            for u, v, w in self.pieces[pid].subgraph.sorted_edges():
                g.add_edge(u, v, w)
        return g

    def coverage(self) -> int:
        """Max number of pieces any single vertex appears in (observed J)."""
        count = [0] * self.n
        for piece in self.pieces.values():
            for v in piece.support():
                count[v] += 1
        return max(count, default=0)

    @property
    def m(self) -> int:
        return len(self.owner)


def union_of_pieces(pieces, n: int) -> DiGraph:
    g = DiGraph(n)
    for piece in pieces:
        for u, v, w in piece.subgraph.sorted_edges():
            g.add_edge(u, v, w)
    return g
