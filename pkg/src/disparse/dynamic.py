"""Fully dynamic sparsifiers driven by the tiered expander decomposition.

The maintained graph is kept as a union of certified expander pieces (on
the bipartite lift for the spectral modes, directly for the dicut modes).
Each piece carries its own decremental degree sampler, and every update is
routed through the decomposition's change log into exactly the affected
pieces: deletions inside surviving pieces hit that piece's sampler,
dissolved pieces drop their state, and re-placed edges arrive as freshly
seeded pieces.  Pieces small enough that the one-shot sampler would keep
every edge are passed through verbatim, so with no updates the maintained
output coincides with the one-shot pipeline for the same seed.

Patching of the sampled pieces comes in the same three flavours as the
static path: ``star`` keeps one auxiliary vertex per piece and is explicit
(each demand change moves O(1) output edges), ``external`` keeps the
deficits in interval patchers and answers edge queries implicitly, and
``internal`` reroutes inside the sampled support lazily at graph-query
time, falling back to external-style patching (and saying so) when a
mid-stream state fails the internal admissibility checks.

The worst-case dicut variant is decomposition-free: it chains
half-sparsification levels, each holding a dynamic bundle of layered
spanning forests whose non-bundle edges survive to the next level with
probability 1/4 at four times the weight, plus a pair of epoch-swapped
instances so insertions always land in a freshly seeded copy.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .connectivity import DynMsfBundle
from .dicut import C_BAL_DEFAULT, MSF_ALPHA, cut_oversampling
from .dynstruct import C_DS_DEFAULT, DegreeSparsifier, IntervalPatcher
from .errors import (
    ConditionViolated,
    DemandMismatch,
    EdgeNotFound,
    PatchingFailed,
    PreconditionViolated,
    QueryUnsupported,
)
from .expanders import DynamicDecomposition
from .graphs import (
    DELETE,
    INSERT,
    DiGraph,
    UndirectedGraph,
    UpdateEvent,
    contract_lift_pairs,
    degree_vectors,
)
from .spectral import (
    C_SS_DEFAULT,
    EXTERNAL,
    INTERNAL,
    SCHEMES,
    STAR,
    SpectralSparsifier,
    _graph_is_exact,
    degree_tolerance,
    eta_factor,
    oversampling,
    patching_internal,
    xi_factor,
)

_PATCH_ERRORS = (ConditionViolated, PreconditionViolated, DemandMismatch, PatchingFailed)


@dataclass
class Metrics:
    """Append-only log: one record per update, swap, or audit snapshot."""

    records: list = field(default_factory=list)

    def log(self, **entry) -> None:
        self.records.append(entry)

    def total(self, key: str):
        return sum(r.get(key, 0) for r in self.records)

    def __len__(self) -> int:
        return len(self.records)


def _seed_list(seed) -> list:
    return list(seed) if isinstance(seed, (list, tuple)) else [seed]


def _clamp0(x):
    # x*0 keeps the weight type (Fraction stays Fraction)
    return x if x >= 0 else x * 0


def _class_rank(key):
    return (-1, -1) if key is None else key


# ---------------------------------------------------------------------------
# dynamic spectral sparsifier


class _SpectralPiece:
    __slots__ = (
        "pid",
        "sub",
        "passthrough",
        "sparser",
        "xi",
        "eta",
        "seed",
        "c_sup",
        "r_sup",
        "cidx",
        "ridx",
        "d1",
        "d2",
        "patcher",
        "clamped",
    )


class DynSpectral:
    """Fully dynamic degree-balance-preserving spectral sparsifier.

    Maintains, per bit-label class when ``strict``, a dynamic expander
    decomposition of the bipartite lift; every piece carries a decremental
    degree sampler plus the patching state of the chosen scheme.  The
    ``star`` scheme is explicit; ``external`` additionally answers
    ``query_edge``; ``internal`` answers graph queries only.
    """

    def __init__(
        self,
        g: DiGraph,
        eps: float,
        delta: float = 0.1,
        scheme: str = EXTERNAL,
        phi: float = 0.1,
        seed=0,
        strict: bool = False,
        c_ss: float = C_SS_DEFAULT,
        c_ds: float = C_DS_DEFAULT,
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if not (0 < eps < 1 and 0 < delta < 1 and 0 < phi <= 1):
            raise ValueError("eps, delta in (0,1) and phi in (0,1] required")
        self._n = g.n
        self._graph = g.copy()
        self._eps = float(eps)
        self._phi = float(phi)
        self._scheme = scheme
        self._c_ss = c_ss
        self._c_ds = c_ds
        self._base = _seed_list(seed)
        self._epoch = 0
        self._delta_piece = delta / (2.0 * g.m) if g.m else delta
        self.mode = f"spectral-{scheme}"
        self.strict_degree = bool(strict) and scheme != INTERNAL
        self.metrics = Metrics()
        self.piece_states: dict = {}  # (class key, piece id) -> _SpectralPiece
        self.aux_registry: dict = {}  # set by the last assembly (star scheme)
        self.internal_fallbacks = 0
        self._classes: dict = {}  # class key -> DynamicDecomposition of the lift
        self._vert_c: dict = {}  # class key -> {source vertex: piece ids}
        self._vert_r: dict = {}

        parts: dict = {}
        for u, v, w in g.sorted_edges():
            parts.setdefault(self._class_key(u, v), []).append((u, v, w))
        for key in sorted(parts, key=_class_rank):
            lifted = DiGraph(2 * self._n)
            for u, v, w in parts[key]:
                lifted.add_edge(u, self._n + v, w)
            dec = DynamicDecomposition(lifted, self._phi)
            self._classes[key] = dec
            self._vert_c[key] = {}
            self._vert_r[key] = {}
            for pid in sorted(dec.pieces):
                self._add_state(key, dec.pieces[pid])

    # -- piece bookkeeping ---------------------------------------------------

    def _class_key(self, u: int, v: int):
        if not self.strict_degree:
            return None
        bit = (u ^ v).bit_length() - 1
        return (bit, (u >> bit) & 1)

    def _new_class(self, key) -> DynamicDecomposition:
        dec = self._classes.get(key)
        if dec is None:
            dec = DynamicDecomposition(DiGraph(2 * self._n), self._phi)
            self._classes[key] = dec
            self._vert_c[key] = {}
            self._vert_r[key] = {}
        return dec

    def _add_state(self, key, piece) -> "_SpectralPiece":
        sub = piece.subgraph
        exact = _graph_is_exact(sub)
        eta = eta_factor(self._scheme, self._phi, sub.n)
        rho = oversampling(self._eps, self._delta_piece, self._phi, eta, sub.n, self._c_ss)
        dout, din = degree_vectors(sub)
        ps = _SpectralPiece()
        ps.pid = piece.piece_id
        ps.sub = sub
        ps.eta = eta
        ps.xi = xi_factor(self._eps, self._phi, eta, exact=exact)
        ps.clamped = False
        ps.passthrough = all(
            rho * float(w) * (1.0 / float(dout[u]) + 1.0 / float(din[v])) >= 1.0
            for (u, v), w in sub.edges.items()
        )
        self.piece_states[(key, ps.pid)] = ps
        if ps.passthrough:
            ps.sparser = None
            ps.patcher = None
            return ps
        code = 0 if key is None else 1 + 2 * key[0] + key[1]
        ps.seed = self._base + [self._epoch, code, ps.pid]
        ps.sparser = DegreeSparsifier(
            sub, degree_tolerance(self._eps, self._phi, eta), ps.seed, self._c_ds
        )
        ps.c_sup = sorted(v for v in range(sub.n) if sub.out_adj[v])
        ps.r_sup = sorted(v for v in range(sub.n) if sub.in_adj[v])
        ps.cidx = {v: i for i, v in enumerate(ps.c_sup)}
        ps.ridx = {v: i for i, v in enumerate(ps.r_sup)}
        ps.d1 = {a: self._deficit(ps, a, out=True) for a in ps.c_sup}
        ps.d2 = {b: self._deficit(ps, b, out=False) for b in ps.r_sup}
        if self._scheme == EXTERNAL:
            ps.patcher = IntervalPatcher(
                [ps.d1[a] for a in ps.c_sup], [ps.d2[b] for b in ps.r_sup]
            )
        else:
            ps.patcher = None
        for a in ps.c_sup:
            self._vert_c[key].setdefault(a, set()).add(ps.pid)
        for b in ps.r_sup:
            self._vert_r[key].setdefault(b, set()).add(ps.pid)
        return ps

    def _drop_state(self, key, pid) -> int:
        ps = self.piece_states.pop((key, pid))
        size = self._piece_out_size(ps)
        if not ps.passthrough:
            for a in ps.c_sup:
                self._vert_c[key].get(a, set()).discard(pid)
            for b in ps.r_sup:
                self._vert_r[key].get(b, set()).discard(pid)
        return size

    def _piece_out_size(self, ps) -> int:
        if ps.passthrough:
            return ps.sub.m
        size = ps.sparser.sample_count
        size += sum(1 for val in ps.d1.values() if val > 0)
        size += sum(1 for val in ps.d2.values() if val > 0)
        return size

    def _deficit(self, ps, v: int, out: bool):
        """Current degree deficit of xi * w' against the piece at v (>= 0)."""
        adj = ps.sub.out_adj[v] if out else ps.sub.in_adj[v]
        tot = 0
        for w in adj.values():
            tot = tot + w
        hw = 0
        for x in adj:
            e = (v, x) if out else (x, v)
            hw = hw + ps.sparser.weight(e, 0)
        val = tot - ps.xi * hw
        if val < 0:
            ps.clamped = True
            val = val * 0
        return val

    def _apply_piece_delete(self, ps, u: int, v: int) -> int:
        if ps.passthrough:
            return 1  # the output loses exactly the deleted edge
        changed = ps.sparser.delete(u, v)
        rec = len(changed)
        affc = {u}
        affr = {v}
        for a, b in changed:
            affc.add(a)
            affr.add(b)
        for a in sorted(affc):
            nv = self._deficit(ps, a, out=True)
            if nv != ps.d1[a]:
                rec += 1
            ps.d1[a] = nv
            if ps.patcher is not None:
                ps.patcher.set(1, ps.cidx[a], nv)
        for b in sorted(affr):
            nv = self._deficit(ps, b, out=False)
            if nv != ps.d2[b]:
                rec += 1
            ps.d2[b] = nv
            if ps.patcher is not None:
                ps.patcher.set(2, ps.ridx[b], nv)
        return rec

    def _route(self, key, log) -> int:
        rec = 0
        dec = self._classes[key]
        for pid in log.pieces_removed:
            if (key, pid) in self.piece_states:
                rec += self._drop_state(key, pid)
        for pid, (u, v, _w) in log.edge_deletions_in_pieces:
            ps = self.piece_states.get((key, pid))
            if ps is None:
                continue  # the piece dissolved under this very update
            rec += self._apply_piece_delete(ps, u, v)
        for pid in log.pieces_added:
            ps = self._add_state(key, dec.pieces[pid])
            rec += self._piece_out_size(ps)
        return rec

    # -- updates ---------------------------------------------------------------

    def update(self, ev: UpdateEvent) -> int:
        if ev.kind == INSERT:
            return self.insert(ev.head, ev.tail, ev.weight)
        return self.delete(ev.head, ev.tail)

    def insert(self, u: int, v: int, w) -> int:
        t0 = time.perf_counter()
        self._graph.add_edge(u, v, w)
        key = self._class_key(u, v)
        dec = self._new_class(key)
        self._epoch += 1
        rec = self._route(key, dec.insert(u, self._n + v, w))
        self.metrics.log(
            op="insert",
            edge=(u, v),
            recourse=rec,
            pieces=self.piece_count(),
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        return rec

    def delete(self, u: int, v: int) -> int:
        t0 = time.perf_counter()
        self._graph.remove_edge(u, v)
        key = self._class_key(u, v)
        self._epoch += 1
        rec = self._route(key, self._classes[key].delete(u, self._n + v))
        self.metrics.log(
            op="delete",
            edge=(u, v),
            recourse=rec,
            pieces=self.piece_count(),
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        return rec

    # -- queries -----------------------------------------------------------------

    @property
    def n(self) -> int:
        return self._n

    def piece_count(self) -> int:
        return sum(len(dec.pieces) for dec in self._classes.values())

    def current_graph(self) -> DiGraph:
        """The maintained input graph (mirror of the update stream)."""
        return self._graph.copy()

    def query_edge(self, u: int, v: int):
        if self._scheme == INTERNAL:
            raise QueryUnsupported("internal scheme answers graph queries only")
        if not (0 <= u < self._n and 0 <= v < self._n) or u == v:
            raise ValueError(f"invalid edge query ({u},{v})")
        vbar = self._n + v
        out = 0
        for key in sorted(self._classes, key=_class_rank):
            dec = self._classes[key]
            pid = dec.owner.get((u, vbar))
            if pid is not None:
                ps = self.piece_states[(key, pid)]
                if ps.passthrough:
                    out = out + ps.sub.weight(u, vbar)
                else:
                    out = out + ps.xi * ps.sparser.weight((u, vbar), 0)
            if self._scheme == EXTERNAL:
                pids = self._vert_c[key].get(u, set()) & self._vert_r[key].get(vbar, set())
                for pid2 in sorted(pids):
                    ps = self.piece_states[(key, pid2)]
                    out = out + ps.patcher.query_edge(ps.cidx[u], ps.ridx[vbar])
        return out

    def query_graph(self) -> DiGraph:
        """The maintained sparsifier on n + n_aux vertices."""
        graph, n_aux, registry, fell_back = self._assemble(fresh=False)
        self.aux_registry = registry
        if fell_back:
            self.internal_fallbacks += 1
        return graph

    def sparsifier(self) -> SpectralSparsifier:
        graph, n_aux, registry, fell_back = self._assemble(fresh=False)
        self.aux_registry = registry
        if fell_back:
            self.internal_fallbacks += 1
        return SpectralSparsifier(
            graph, self._n, n_aux, self._scheme, self.strict_degree, self._eps, self._phi
        )

    def _piece_patch_state(self, ps, fresh: bool):
        """(d1, d2, flow-or-None) used by assembly; fresh recomputes from raw state."""
        if not fresh:
            d1, d2 = ps.d1, ps.d2
            flow = ps.patcher.query_all() if ps.patcher is not None else None
            return d1, d2, flow
        d1 = {a: self._deficit(ps, a, out=True) for a in ps.c_sup}
        d2 = {b: self._deficit(ps, b, out=False) for b in ps.r_sup}
        flow = None
        if self._scheme == EXTERNAL:
            flow = IntervalPatcher(
                [d1[a] for a in ps.c_sup], [d2[b] for b in ps.r_sup]
            ).query_all()
        return d1, d2, flow

    def _internal_piece_graph(self, ps):
        wprime = ps.sparser.current
        rng = np.random.default_rng(ps.seed + [ps.sparser.m])
        try:
            h = patching_internal(
                ps.sub, wprime, ps.xi, self._eps, self._phi, self._delta_piece, rng
            )
            return h, False
        except _PATCH_ERRORS:
            pass
        h = DiGraph(ps.sub.n)
        for (u, v), wp in sorted(wprime.items()):
            h.add_edge(u, v, ps.xi * wp)
        flow = IntervalPatcher(
            [ps.d1[a] for a in ps.c_sup], [ps.d2[b] for b in ps.r_sup]
        ).query_all()
        for (i, j), val in sorted(flow.items()):
            h.add_or_combine(ps.c_sup[i], ps.r_sup[j], val)
        return h, True

    def _assemble(self, fresh: bool):
        n2 = 2 * self._n
        union = DiGraph(n2)
        aux_edges = []
        n_aux = 0
        registry = {}
        fell_back = False
        for key in sorted(self._classes, key=_class_rank):
            dec = self._classes[key]
            for pid in sorted(dec.pieces):
                ps = self.piece_states[(key, pid)]
                if ps.passthrough:
                    for u, v, w in ps.sub.sorted_edges():
                        union.add_or_combine(u, v, w)
                    continue
                if self._scheme == INTERNAL:
                    h, fb = self._internal_piece_graph(ps)
                    fell_back = fell_back or fb
                    for u, v, w in h.sorted_edges():
                        union.add_or_combine(u, v, w)
                    continue
                d1, d2, flow = self._piece_patch_state(ps, fresh)
                for (u, v), wp in sorted(ps.sparser.current.items()):
                    union.add_or_combine(u, v, ps.xi * wp)
                if self._scheme == STAR:
                    pos1 = [(a, val) for a, val in sorted(d1.items()) if val > 0]
                    pos2 = [(b, val) for b, val in sorted(d2.items()) if val > 0]
                    if pos1 or pos2:
                        aux = n2 + n_aux
                        n_aux += 1
                        registry[(key, pid)] = aux - self._n  # index after contraction
                        for a, val in pos1:
                            aux_edges.append((a, aux, val))
                        for b, val in pos2:
                            aux_edges.append((aux, b, val))
                else:
                    for (i, j), val in sorted(flow.items()):
                        union.add_or_combine(ps.c_sup[i], ps.r_sup[j], val)
        if n_aux:
            big = DiGraph(n2 + n_aux)
            for u, v, w in union.sorted_edges():
                big.add_edge(u, v, w)
            for u, v, w in aux_edges:
                big.add_or_combine(u, v, w)
            union = big
        return contract_lift_pairs(union, self._n), n_aux, registry, fell_back

    # -- audit ---------------------------------------------------------------------

    def audit(self) -> dict:
        """Recompute every maintained quantity from scratch and compare.

        Per piece: sampler graph vs the decomposition's subgraph, maintained
        deficits vs recomputed ones, and (external) maintained patch flow vs
        a fresh patcher.  Whole graph: decomposition coverage vs the update
        mirror, and the maintained assembly vs a from-scratch assembly.
        """
        pieces = []
        piece_ok = True
        for key in sorted(self._classes, key=_class_rank):
            dec = self._classes[key]
            for pid in sorted(dec.pieces):
                ps = self.piece_states[(key, pid)]
                entry = {"piece": (key, pid), "passthrough": ps.passthrough, "ok": True}
                if not ps.passthrough:
                    ok = ps.sparser.graph() == ps.sub
                    d1f = {a: self._deficit(ps, a, out=True) for a in ps.c_sup}
                    d2f = {b: self._deficit(ps, b, out=False) for b in ps.r_sup}
                    ok = ok and d1f == ps.d1 and d2f == ps.d2
                    if ps.patcher is not None:
                        fresh = IntervalPatcher(
                            [d1f[a] for a in ps.c_sup], [d2f[b] for b in ps.r_sup]
                        )
                        ok = ok and fresh.query_all() == ps.patcher.query_all()
                    entry["ok"] = ok
                pieces.append(entry)
                piece_ok = piece_ok and entry["ok"]
        expect = DiGraph(2 * self._n)
        for (u, v), w in self._graph.edges.items():
            expect.add_edge(u, self._n + v, w)
        got = DiGraph(2 * self._n)
        for key in sorted(self._classes, key=_class_rank):
            for u, v, w in self._classes[key].current_graph().sorted_edges():
                got.add_edge(u, v, w)
        coverage_ok = got == expect
        whole_ok = self._assemble(fresh=False)[0] == self._assemble(fresh=True)[0]
        report = {
            "pieces": pieces,
            "piece_ok": piece_ok,
            "coverage_ok": coverage_ok,
            "whole_ok": whole_ok,
            "clamped": any(
                not ps.passthrough and ps.clamped for ps in self.piece_states.values()
            ),
            "ok": piece_ok and coverage_ok and whole_ok,
        }
        self.metrics.log(op="audit", ok=report["ok"], pieces=self.piece_count())
        return report


# ---------------------------------------------------------------------------
# dynamic dicut sparsifier, amortized variant


class _DicutPiece:
    __slots__ = ("pid", "sub", "sparser")


class DynDicutAmortized:
    """Fully dynamic dicut sparsifier with amortized recourse.

    Same decomposition routing as the spectral handle, but directly on the
    graph (no lift) and with no patching: each certified piece keeps a
    decremental degree sampler at keep-rate ~ eps^-2 * (beta+1)/phi * log n,
    and the sparsifier is the explicit union of the per-piece samples.
    """

    def __init__(
        self,
        g: DiGraph,
        beta: float,
        eps: float,
        delta: float = 0.1,
        phi: float = 0.1,
        seed=0,
        c_ds: float = C_DS_DEFAULT,
    ):
        if beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if not (0 < delta < 1 and 0 < phi <= 1):
            raise ValueError("delta in (0,1) and phi in (0,1] required")
        self._n = g.n
        self._graph = g.copy()
        self._phi = float(phi)
        self._eps_ds = eps * math.sqrt(phi / (beta + 1.0))
        self._c_ds = c_ds
        self._base = _seed_list(seed)
        self._epoch = 0
        self.mode = "dicut-amortized"
        self.strict_degree = False
        self.aux_registry: dict = {}
        self.metrics = Metrics()
        self.piece_states: dict = {}
        self._decomp = DynamicDecomposition(g, self._phi)
        for pid in sorted(self._decomp.pieces):
            self._add_state(self._decomp.pieces[pid])

    def _add_state(self, piece) -> "_DicutPiece":
        ps = _DicutPiece()
        ps.pid = piece.piece_id
        ps.sub = piece.subgraph
        ps.sparser = DegreeSparsifier(
            piece.subgraph, self._eps_ds, self._base + [self._epoch, ps.pid], self._c_ds
        )
        self.piece_states[ps.pid] = ps
        return ps

    def _route(self, log) -> int:
        rec = 0
        for pid in log.pieces_removed:
            ps = self.piece_states.pop(pid, None)
            if ps is not None:
                rec += ps.sparser.sample_count
        for pid, (u, v, _w) in log.edge_deletions_in_pieces:
            ps = self.piece_states.get(pid)
            if ps is None:
                continue
            rec += len(ps.sparser.delete(u, v))
        for pid in log.pieces_added:
            ps = self._add_state(self._decomp.pieces[pid])
            rec += ps.sparser.sample_count
        return rec

    def update(self, ev: UpdateEvent) -> int:
        if ev.kind == INSERT:
            return self.insert(ev.head, ev.tail, ev.weight)
        return self.delete(ev.head, ev.tail)

    def insert(self, u: int, v: int, w) -> int:
        t0 = time.perf_counter()
        self._graph.add_edge(u, v, w)
        self._epoch += 1
        rec = self._route(self._decomp.insert(u, v, w))
        self.metrics.log(
            op="insert",
            edge=(u, v),
            recourse=rec,
            pieces=len(self._decomp.pieces),
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        return rec

    def delete(self, u: int, v: int) -> int:
        t0 = time.perf_counter()
        self._graph.remove_edge(u, v)
        self._epoch += 1
        rec = self._route(self._decomp.delete(u, v))
        self.metrics.log(
            op="delete",
            edge=(u, v),
            recourse=rec,
            pieces=len(self._decomp.pieces),
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        return rec

    @property
    def n(self) -> int:
        return self._n

    def current_graph(self) -> DiGraph:
        return self._graph.copy()

    def current(self) -> DiGraph:
        """The explicit sparsifier: union of the per-piece samples."""
        out = DiGraph(self._n)
        for pid in sorted(self.piece_states):
            for (u, v), w in sorted(self.piece_states[pid].sparser.current.items()):
                out.add_edge(u, v, w)
        return out

    query_graph = current

    def audit(self) -> dict:
        pieces = []
        piece_ok = True
        for pid in sorted(self.piece_states):
            ps = self.piece_states[pid]
            entry = {"piece": pid, "ok": ps.sparser.graph() == ps.sub}
            pieces.append(entry)
            piece_ok = piece_ok and entry["ok"]
        coverage_ok = self._decomp.current_graph() == self._graph
        report = {
            "pieces": pieces,
            "piece_ok": piece_ok,
            "coverage_ok": coverage_ok,
            "ok": piece_ok and coverage_ok,
        }
        self.metrics.log(op="audit", ok=report["ok"], pieces=len(self.piece_states))
        return report


# ---------------------------------------------------------------------------
# dynamic dicut sparsifier, worst-case variant


class _WcLevel:
    __slots__ = ("fwd", "bwd", "edges", "resid", "rng")

    def __init__(self, n: int, t: int, seed):
        self.fwd = DynMsfBundle(UndirectedGraph(n), t)
        self.bwd = DynMsfBundle(UndirectedGraph(n), t)
        self.edges: dict = {}
        self.resid: dict = {}
        self.rng = np.random.default_rng(seed)

    def bundle_for(self, u: int, v: int) -> DynMsfBundle:
        return self.fwd if u < v else self.bwd


class _HalfChain:
    """One epoch instance: chained half-sparsification levels.

    Level i holds the edges surviving to it (at 4^i times their original
    weight), two orientation-split dynamic forest bundles, and the sampled
    residue feeding level i+1.  Deleting a forest edge promotes at most one
    non-bundle edge per level, so the set of output edges whose weight
    changes has size at most (#levels + 1) per update.
    """

    def __init__(self, n: int, tees, seed):
        self._n = n
        base = _seed_list(seed)
        self.levels = [_WcLevel(n, t, base + [i]) for i, t in enumerate(tees)]
        self.plain: dict = {}  # passthrough graph when there are no levels

    @property
    def m(self) -> int:
        return len(self.levels[0].edges) if self.levels else len(self.plain)

    def insert(self, u: int, v: int, w, changed: set) -> None:
        if not self.levels:
            self.plain[(u, v)] = w
            changed.add((u, v))
            return
        self._apply(0, INSERT, u, v, w, changed)

    def delete(self, u: int, v: int, changed: set) -> None:
        if not self.levels:
            del self.plain[(u, v)]
            changed.add((u, v))
            return
        self._apply(0, DELETE, u, v, None, changed)

    def _apply(self, i: int, op: str, u: int, v: int, w, changed: set) -> None:
        lvl = self.levels[i]
        last = i + 1 == len(self.levels)
        bundle = lvl.bundle_for(u, v)
        key = UndirectedGraph.key(u, v)
        if op == INSERT:
            lvl.edges[(u, v)] = w
            bundle.insert(u, v, w)
            if not bundle.nonbundle_recourse():
                changed.add((u, v))  # joined a forest: appears in the output
                return
            if lvl.rng.random() < 0.25:
                wn = 4 * w
                lvl.resid[(u, v)] = wn
                if last:
                    changed.add((u, v))
                else:
                    self._apply(i + 1, INSERT, u, v, wn, changed)
            return
        del lvl.edges[(u, v)]
        was_forest = bundle.home_layer(u, v) is not None
        bundle.delete(u, v)
        if was_forest:
            changed.add((u, v))
        elif (u, v) in lvl.resid:
            del lvl.resid[(u, v)]
            if last:
                changed.add((u, v))
            else:
                self._apply(i + 1, DELETE, u, v, None, changed)
        for _sign, fkey in bundle.nonbundle_recourse():
            if fkey == key:
                continue  # the deleted edge itself; handled above
            f = fkey if bundle is lvl.fwd else (fkey[1], fkey[0])
            changed.add(f)  # promoted into this level's forest
            if f in lvl.resid:
                del lvl.resid[f]
                if not last:
                    self._apply(i + 1, DELETE, f[0], f[1], None, changed)

    def output_edges(self):
        if not self.levels:
            for (u, v), w in sorted(self.plain.items()):
                yield u, v, w
            return
        for lvl in self.levels:
            for (u, v), w in sorted(lvl.edges.items()):
                if lvl.bundle_for(u, v).home_layer(u, v) is not None:
                    yield u, v, w
        for (u, v), w in sorted(self.levels[-1].resid.items()):
            yield u, v, w

    def check(self) -> bool:
        """Structural invariants: residues chain into the next level."""
        for i in range(len(self.levels) - 1):
            if self.levels[i].resid != self.levels[i + 1].edges:
                return False
        for lvl in self.levels:
            merged = dict(lvl.fwd.edges())
            merged.update((k[::-1], w) for k, w in lvl.bwd.edges().items())
            if merged != lvl.edges:
                return False
            if not set(lvl.resid) <= set(lvl.edges):
                return False
        return True


class DynDicutWorstCase:
    """Fully dynamic balanced dicut sparsifier with worst-case recourse.

    ceil(log2 gamma) chained half-sparsification levels; each level keeps a
    dynamic t-bundle of layered spanning forests and samples its non-bundle
    edges with probability 1/4 at four times the weight into the next
    level.  Two instances are kept: insertions fill one while the other
    drains, and whichever empties is reseeded and becomes the filling copy.
    Per update at most one edge per level changes its output weight, plus
    the update itself: recourse <= ceil(log2 gamma) + 1.
    """

    def __init__(
        self,
        g: DiGraph,
        beta: float,
        eps: float,
        gamma: float,
        delta: float = 0.1,
        seed=0,
        c_bal: float = C_BAL_DEFAULT,
    ):
        if beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0.0 < eps < 0.5:
            raise ValueError("eps must lie in (0, 1/2)")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if gamma < 1.0:
            raise ValueError("gamma must be >= 1")
        self._n = g.n
        self._graph = g.copy()
        self.levels = math.ceil(math.log2(gamma)) if gamma > 1.0 else 0
        tees = []
        for i in range(self.levels):
            eps_i = eps / (3.0 * self.levels)
            delta_i = delta / 2.0 ** (i + 1) / (5.0 * max(g.n, 2) ** 2)
            rho = cut_oversampling(beta, eps_i, delta_i / 2.0, g.n, c_bal)
            if rho < 1.0:
                raise ValueError("c_bal leaves rho < 1: bundle edges would be dropped")
            tees.append(math.ceil(4.0 * MSF_ALPHA * rho - 1e-12))
        self._tees = tees
        self._base = _seed_list(seed)
        self._chains = [
            _HalfChain(g.n, tees, self._base + [0]),
            _HalfChain(g.n, tees, self._base + [1]),
        ]
        self._next_epoch = 2
        self._owner: dict = {}
        self._active = 1  # insertions fill chain 1; chain 0 drains
        self.mode = "dicut-worstcase"
        self.strict_degree = False
        self.piece_states: dict = {}
        self.aux_registry: dict = {}
        self.metrics = Metrics()
        sink = set()
        for u, v, w in g.sorted_edges():
            self._chains[0].insert(u, v, w, sink)
            self._owner[(u, v)] = 0

    @property
    def n(self) -> int:
        return self._n

    @property
    def recourse_bound(self) -> int:
        return self.levels + 1

    def _maybe_swap(self) -> None:
        drain = 1 - self._active
        if self._chains[drain].m == 0 and self._chains[self._active].m > 0:
            self._chains[drain] = _HalfChain(self._n, self._tees, self._base + [self._next_epoch])
            self._next_epoch += 1
            self._active = drain
            self.metrics.log(op="swap", epoch=self._next_epoch - 1)

    def update(self, ev: UpdateEvent) -> int:
        if ev.kind == INSERT:
            return self.insert(ev.head, ev.tail, ev.weight)
        return self.delete(ev.head, ev.tail)

    def insert(self, u: int, v: int, w) -> int:
        t0 = time.perf_counter()
        self._graph.add_edge(u, v, w)
        changed: set = set()
        self._chains[self._active].insert(u, v, w, changed)
        self._owner[(u, v)] = self._active
        self._maybe_swap()
        self.metrics.log(
            op="insert",
            edge=(u, v),
            recourse=len(changed),
            chain=self._owner[(u, v)],
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        return len(changed)

    def delete(self, u: int, v: int) -> int:
        t0 = time.perf_counter()
        self._graph.remove_edge(u, v)
        side = self._owner.pop((u, v))
        changed: set = set()
        self._chains[side].delete(u, v, changed)
        self._maybe_swap()
        self.metrics.log(
            op="delete",
            edge=(u, v),
            recourse=len(changed),
            chain=side,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        return len(changed)

    def current_graph(self) -> DiGraph:
        return self._graph.copy()

    def current(self) -> DiGraph:
        """The explicit sparsifier: bundles of every level plus the last residue."""
        out = DiGraph(self._n)
        for chain in self._chains:
            for u, v, w in chain.output_edges():
                out.add_edge(u, v, w)
        return out

    query_graph = current

    def audit(self) -> dict:
        chains_ok = all(chain.check() for chain in self._chains)
        split = DiGraph(self._n)
        for chain in self._chains:
            src = chain.levels[0].edges if chain.levels else chain.plain
            for (u, v), w in sorted(src.items()):
                split.add_edge(u, v, w)
        coverage_ok = split == self._graph
        report = {"chains_ok": chains_ok, "coverage_ok": coverage_ok, "ok": chains_ok and coverage_ok}
        self.metrics.log(op="audit", ok=report["ok"])
        return report
