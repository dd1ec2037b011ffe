"""Dense/brute-force ground truth at desk scale.

Everything here is a verification oracle: eigendecomposition-based
pseudoinverses and whitened operator norms, exhaustive cut enumeration,
max-flow edge connectivity, and a preconditioned-CG Laplacian solver.
Inputs are small by contract; the point is trustworthiness, not speed.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, KernelMismatch, NotConverged, TooLarge
from .graphs import (
    DiGraph,
    UndirectedGraph,
    directed_laplacian,
    und,
    undirected_laplacian,
)

# eigenvalues below EIG_CUTOFF * lambda_max are treated as kernel
EIG_CUTOFF = 1e-10

CUT_ENUM_CAP = 24
MAXFLOW_CAP = 256


def _check_symmetric(a: np.ndarray, tol: float = 1e-10):
    scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    if np.abs(a - a.T).max() > tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")


def _eig_transform(a: np.ndarray, func, cutoff: float) -> np.ndarray:
    """Apply ``func`` to the eigenvalues above the kernel cutoff (0 below)."""
    a = np.asarray(a, dtype=float)
    _check_symmetric(a)
    vals, vecs = np.linalg.eigh(a)
    lmax = max(vals.max(initial=0.0), 0.0)
    keep = vals > cutoff * max(lmax, 1e-300)
    out = np.zeros_like(vals)
    out[keep] = func(vals[keep])
    return (vecs * out) @ vecs.T


def pinv_psd(a: np.ndarray, cutoff: float = EIG_CUTOFF) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric PSD matrix via eigh."""
    return _eig_transform(a, lambda v: 1.0 / v, cutoff)


def psd_half_pinv(a: np.ndarray, cutoff: float = EIG_CUTOFF) -> np.ndarray:
    """A^{dagger/2} for symmetric PSD A."""
    return _eig_transform(a, lambda v: 1.0 / np.sqrt(v), cutoff)


def psd_half(a: np.ndarray, cutoff: float = EIG_CUTOFF) -> np.ndarray:
    return _eig_transform(a, np.sqrt, cutoff)


def opnorm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def whitened_opnorm(d_left, mat: np.ndarray, d_right) -> float:
    """|| D_left^{dagger/2} M D_right^{dagger/2} ||_op for diagonal D's (vectors)."""
    dl = np.asarray([float(x) for x in d_left])
    dr = np.asarray([float(x) for x in d_right])
    sl = np.where(dl > 0, 1.0 / np.sqrt(np.maximum(dl, 1e-300)), 0.0)
    sr = np.where(dr > 0, 1.0 / np.sqrt(np.maximum(dr, 1e-300)), 0.0)
    return opnorm(sl[:, None] * np.asarray(mat, dtype=float) * sr[None, :])


# ---------------------------------------------------------------------------
# spectral approximation error


def _as_directed_laplacian(g: DiGraph, h) -> np.ndarray:
    if isinstance(h, DiGraph):
        if h.n != g.n:
            raise DimensionMismatch(f"h has {h.n} vertices, g has {g.n}")
        return directed_laplacian(h)
    h = np.asarray(h, dtype=float)
    if h.shape != (g.n, g.n):
        raise DimensionMismatch(f"matrix shape {h.shape} vs n={g.n}")
    return h


def spectral_error(g: DiGraph, h, bal_tol: float = 1e-9) -> float:
    """Degree-balance-preserving directed spectral approximation error.

    Returns ||L_G^{dagger/2} (vL_G - vL_H) L_G^{dagger/2}||_op computed per
    connected component of und(g).  Returns +inf when h couples distinct
    components of und(g) or changes any vertex's degree balance beyond
    ``bal_tol`` (relative): in either case the supremum in the definition
    is infinite.
    """
    vlg = directed_laplacian(g)
    vlh = _as_directed_laplacian(g, h)
    diff = vlg - vlh

    gu = und(g)
    comps = gu.components()
    comp_of = [0] * g.n
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci

    scale = max(1.0, float(np.abs(vlg).max()), float(np.abs(vlh).max()))
    # cross-component coupling in h
    for a in range(g.n):
        for b in range(g.n):
            if comp_of[a] != comp_of[b] and abs(vlh[a, b]) > bal_tol * scale:
                return math.inf
    # balance (row sums) and column sums of the difference must vanish
    if np.abs(diff.sum(axis=1)).max(initial=0.0) > bal_tol * scale:
        return math.inf
    if np.abs(diff.sum(axis=0)).max(initial=0.0) > bal_tol * scale:
        return math.inf

    lg = undirected_laplacian(gu)
    worst = 0.0
    for comp in comps:
        if len(comp) < 2:
            continue
        idx = np.ix_(comp, comp)
        half = psd_half_pinv(lg[idx])
        worst = max(worst, opnorm(half @ diff[idx] @ half))
    return worst


def approx_pinv_error(z, m, u, kernel_tol: float = 1e-8) -> float:
    """||P_im(M) - Z M||_{U -> U} after verifying the kernel conditions.

    Requires ker(U) subseteq ker(M) = ker(M^T) = ker(Z) = ker(Z^T); raises
    KernelMismatch otherwise.
    """
    z = np.asarray(z, dtype=float)
    m = np.asarray(m, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (z.shape == m.shape == u.shape) or z.shape[0] != z.shape[1]:
        raise DimensionMismatch("Z, M, U must be square and same shape")

    def kernel_projector(a):
        _, s, vt = np.linalg.svd(a)
        smax = s.max(initial=0.0)
        null = vt[s <= kernel_tol * max(smax, 1e-300)].T
        return null @ null.T

    pm = kernel_projector(m)
    pmt = kernel_projector(m.T)
    pz = kernel_projector(z)
    pzt = kernel_projector(z.T)
    pu = kernel_projector(u)
    for a, b, what in (
        (pm, pmt, "ker(M) = ker(M^T)"),
        (pm, pz, "ker(M) = ker(Z)"),
        (pm, pzt, "ker(M) = ker(Z^T)"),
    ):
        if opnorm(a - b) > 1e-6:
            raise KernelMismatch(what)
    # ker(U) subseteq ker(M): projecting ker(U) onto ker(M) changes nothing
    if opnorm(pm @ pu - pu) > 1e-6:
        raise KernelMismatch("ker(U) not contained in ker(M)")

    p_im = np.eye(m.shape[0]) - pmt  # image of M is the orthocomplement of ker(M^T)
    uh = psd_half(u)
    uhp = psd_half_pinv(u)
    return opnorm(uh @ (p_im - z @ m) @ uhp)


def schur_precondition_error(g: DiGraph, h: DiGraph) -> float:
    """||P_V - P_V vL_H^dagger vL_G||_{L_G -> L_G} for h on V + aux vertices.

    V is identified with vertices 0..g.n-1 of h; vL_G and L_G are extended
    by zero rows/columns over the auxiliary block.  Meaningful when g and h
    are degree-balanced (so the kernels of both directed Laplacians are the
    all-ones vectors of their components): then this measures how well the
    Schur complement of h onto V preconditions g.
    """
    if h.n < g.n:
        raise DimensionMismatch("h has fewer vertices than g")
    nn = h.n
    vlg = np.zeros((nn, nn))
    vlg[: g.n, : g.n] = directed_laplacian(g)
    lg = np.zeros((nn, nn))
    lg[: g.n, : g.n] = undirected_laplacian(und(g))
    vlh = directed_laplacian(h)
    pv = np.zeros((nn, nn))
    pv[range(g.n), range(g.n)] = 1.0
    z = np.linalg.pinv(vlh, rcond=1e-12)
    mat = pv - pv @ z @ vlg
    return opnorm(psd_half(lg) @ mat @ psd_half_pinv(lg))


# ---------------------------------------------------------------------------
# cuts


def dicut_weights(g: DiGraph, in_cut) -> tuple[float, float]:
    """(w(U, V-U), w(V-U, U)) for the 0/1 membership array ``in_cut``."""
    fwd = 0.0
    bwd = 0.0
    for (u, v), w in g.edges.items():
        if in_cut[u] and not in_cut[v]:
            fwd += float(w)
        elif in_cut[v] and not in_cut[u]:
            bwd += float(w)
    return fwd, bwd


def cut_check_dicut(g: DiGraph, h: DiGraph, beta: float, eps: float):
    """Enumerate every nontrivial directed cut and check the approximation

        |w_H(U,V-U) - w_G(U,V-U)| <= eps/sqrt(beta+1) * sqrt(w_G(C) * w_G_und(C))

    Returns (max_violation, witness) where max_violation is the smallest
    eps' that would make every cut pass (inf if some approximated cut has
    zero weight in g) and witness is the offending vertex subset.  The pair
    (g, h) passes at eps iff max_violation <= eps.
    """
    if g.n != h.n:
        raise DimensionMismatch("g and h must share a vertex set")
    if g.n > CUT_ENUM_CAP:
        raise TooLarge(f"cut enumeration capped at n={CUT_ENUM_CAP}")
    n = g.n
    if n < 2:
        return 0.0, None

    ge = list(g.edges.items())
    he = list(h.edges.items())
    gu = np.array([u for (u, _), _ in ge], dtype=np.int64)
    gv = np.array([v for (_, v), _ in ge], dtype=np.int64)
    gw = np.array([float(w) for _, w in ge])
    hu = np.array([u for (u, _), _ in he], dtype=np.int64)
    hv = np.array([v for (_, v), _ in he], dtype=np.int64)
    hw = np.array([float(w) for _, w in he])

    worst = 0.0
    witness = None
    denom = math.sqrt(beta + 1.0)
    for mask in range(1, 1 << (n - 1)):  # vertex n-1 always outside U
        g_in_u = ((mask >> gu) & 1).astype(bool)
        g_in_v = ((mask >> gv) & 1).astype(bool)
        wf = float(gw[g_in_u & ~g_in_v].sum())
        wb = float(gw[~g_in_u & g_in_v].sum())
        h_in_u = ((mask >> hu) & 1).astype(bool)
        h_in_v = ((mask >> hv) & 1).astype(bool)
        hf = float(hw[h_in_u & ~h_in_v].sum())
        hb = float(hw[~h_in_u & h_in_v].sum())
        for wg_cut, wh_cut in ((wf, hf), (wb, hb)):
            delta = abs(wh_cut - wg_cut)
            if delta == 0.0:
                continue
            bound_unit = math.sqrt(wg_cut * (wf + wb)) / denom
            viol = math.inf if bound_unit == 0.0 else delta / bound_unit
            if viol > worst:
                worst = viol
                witness = [v for v in range(n) if (mask >> v) & 1]
    return worst, witness


def balanced_dicut_check(g: DiGraph, h: DiGraph, beta: float):
    """Worst multiplicative error of h over beta-balanced dicuts of g.

    Returns (max_relative_error, witness) over all nontrivial U whose dicut
    satisfies w(V-U,U)/beta <= w(U,V-U) <= beta*w(V-U,U); the pair passes
    Def. of (beta,eps)-balanced approximation iff the result is <= eps.
    """
    if g.n > CUT_ENUM_CAP:
        raise TooLarge(f"cut enumeration capped at n={CUT_ENUM_CAP}")
    n = g.n
    worst = 0.0
    witness = None
    for mask in range(1, (1 << n) - 1):
        in_cut = [(mask >> v) & 1 for v in range(n)]
        wf, wb = dicut_weights(g, in_cut)
        if wf == 0.0 or not (wb / beta <= wf <= beta * wb):
            continue
        hf, _ = dicut_weights(h, in_cut)
        rel = abs(hf - wf) / wf
        if rel > worst:
            worst = rel
            witness = [v for v in range(n) if in_cut[v]]
    return worst, witness


def conductance_exact_cut(u: UndirectedGraph):
    """(min conductance, witness side) by enumerating all cuts of the support.

    Meet-in-the-middle enumeration: the support splits into halves A/B and
    internal weights of every cut come from one matrix product over all
    (mask_A, mask_B) pairs, so the full 2^(k-1) enumeration stays in numpy.
    The witness is a sorted vertex list; (inf, None) when the support has
    fewer than two vertices, conductance 0 with a witness when disconnected.
    """
    nz = u.nonisolated()
    if len(nz) > CUT_ENUM_CAP:
        raise TooLarge(f"conductance enumeration capped at {CUT_ENUM_CAP} support vertices")
    k = len(nz)
    if k < 2:
        return math.inf, None
    idx = {v: i for i, v in enumerate(nz)}
    deg = np.array([float(u.degree(v)) for v in nz])
    wmat = np.zeros((k, k))
    for (a, b), w in u.edges.items():
        wmat[idx[a], idx[b]] = wmat[idx[b], idx[a]] = float(w)

    k1 = k // 2
    k2 = k - k1
    # vertex nz[k-1] (top bit of the B half) is pinned outside the side set
    bits_a = ((np.arange(1 << k1)[:, None] >> np.arange(k1)[None, :]) & 1).astype(float)
    bits_b = ((np.arange(1 << (k2 - 1))[:, None] >> np.arange(k2)[None, :]) & 1).astype(float)
    vol_a = bits_a @ deg[:k1]
    vol_b = bits_b @ deg[k1:]
    int_a = 0.5 * np.einsum("ij,ij->i", bits_a @ wmat[:k1, :k1], bits_a)
    int_b = 0.5 * np.einsum("ij,ij->i", bits_b @ wmat[k1:, k1:], bits_b)
    cross = (bits_a @ wmat[:k1, k1:]) @ bits_b.T

    vol = vol_a[:, None] + vol_b[None, :]
    internal = int_a[:, None] + int_b[None, :] + cross
    total = float(deg.sum())
    minvol = np.minimum(vol, total - vol)
    cut = np.maximum(vol - 2.0 * internal, 0.0)  # clamp float round-off
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(minvol > 0, cut / np.where(minvol > 0, minvol, 1.0), math.inf)
    flat = int(np.argmin(phi))
    i, j = divmod(flat, phi.shape[1])
    best = float(phi[i, j])
    if not math.isfinite(best):
        return math.inf, None
    side = [nz[b] for b in range(k1) if (i >> b) & 1]
    side += [nz[k1 + b] for b in range(k2) if (j >> b) & 1]
    return best, sorted(side)


def conductance_exact(u: UndirectedGraph) -> float:
    """Exact conductance by enumerating all cuts; 0 when disconnected."""
    return conductance_exact_cut(u)[0]


def normalized_lambda2(u: UndirectedGraph) -> float:
    """lambda_2 of D^{dagger/2} L D^{dagger/2} on the non-isolated support.

    Returns 0.0 when the support is disconnected or trivial.
    """
    nz = u.nonisolated()
    if len(nz) < 2:
        return 0.0
    lap = undirected_laplacian(u)[np.ix_(nz, nz)]
    d = np.array([float(u.degree(v)) for v in nz])
    s = 1.0 / np.sqrt(d)
    ln = s[:, None] * lap * s[None, :]
    vals = np.linalg.eigvalsh((ln + ln.T) / 2.0)
    return max(float(vals[1]), 0.0)


def conductance_sweep(u: UndirectedGraph):
    """Certified conductance bracket from the spectral sweep.

    Returns (lower_bound, best_cut, best_cut_conductance): lower_bound is
    lambda_2/2 (a rigorous lower bound on conductance by the easy direction
    of Cheeger), best_cut is the sweep cut of smallest conductance (an upper
    bound witness).  Ties in the sweep break toward balanced volume.
    """
    nz = u.nonisolated()
    if len(nz) < 2:
        return math.inf, None, math.inf
    lap = undirected_laplacian(u)[np.ix_(nz, nz)]
    d = np.array([float(u.degree(v)) for v in nz])
    s = 1.0 / np.sqrt(d)
    ln = s[:, None] * lap * s[None, :]
    vals, vecs = np.linalg.eigh((ln + ln.T) / 2.0)
    lam2 = max(float(vals[1]), 0.0)
    fiedler = vecs[:, 1] * s  # v / sqrt(d): the sweep embedding
    order = sorted(range(len(nz)), key=lambda i: (fiedler[i], nz[i]))

    total_vol = float(d.sum())
    adj_in_prefix = 0.0
    vol = 0.0
    prefix = set()
    best = (math.inf, -math.inf, None)  # (conductance, -|balance gap|, cut)
    for idx in order[:-1]:
        v = nz[idx]
        inner = sum(float(w) for x, w in u.adj[v].items() if x in prefix)
        prefix.add(v)
        adj_in_prefix += inner
        vol += float(u.degree(v))
        cut = vol - 2.0 * adj_in_prefix
        msize = min(vol, total_vol - vol)
        if msize <= 0.0:
            continue
        phi = cut / msize
        balance = -abs(total_vol / 2.0 - vol)
        if (phi, -balance) < (best[0], -best[1]):
            best = (phi, balance, frozenset(prefix))
    phi_cut, _, cut_set = best
    return lam2 / 2.0, (sorted(cut_set) if cut_set else None), phi_cut


def edge_connectivity(u: UndirectedGraph, s: int, t: int) -> float:
    """Min s-t cut value in the undirected graph (Edmonds-Karp)."""
    if u.n > MAXFLOW_CAP:
        raise TooLarge(f"max-flow oracle capped at n={MAXFLOW_CAP}")
    if s == t:
        raise ValueError("s == t")
    cap: dict[tuple[int, int], float] = {}
    for (a, b), w in u.edges.items():
        cap[(a, b)] = cap.get((a, b), 0.0) + float(w)
        cap[(b, a)] = cap.get((b, a), 0.0) + float(w)
    adj = [sorted(u.adj[v]) for v in range(u.n)]
    flow = 0.0
    while True:
        parent = [-1] * u.n
        parent[s] = s
        queue = [s]
        qi = 0
        while qi < len(queue) and parent[t] == -1:
            x = queue[qi]
            qi += 1
            for y in adj[x]:
                if parent[y] == -1 and cap.get((x, y), 0.0) > 1e-12:
                    parent[y] = x
                    queue.append(y)
        if parent[t] == -1:
            return flow
        bottleneck = math.inf
        y = t
        while y != s:
            x = parent[y]
            bottleneck = min(bottleneck, cap[(x, y)])
            y = x
        y = t
        while y != s:
            x = parent[y]
            cap[(x, y)] -= bottleneck
            cap[(y, x)] = cap.get((y, x), 0.0) + bottleneck
            y = x
        flow += bottleneck


# ---------------------------------------------------------------------------
# Laplacian solver (substituted contract: preconditioned CG)


def laplacian_solve(u: UndirectedGraph, b, xi: float, seed: int = 0, max_iter: int | None = None):
    """xi-approximate solve of L x = b in the L-norm sense.

    Jacobi-preconditioned conjugate gradient per connected component.  The
    stopping rule is certified through rigorous spectral bounds: lambda_max
    <= 2 max-degree and Fiedler's bound lambda_2 >= 2 k_edge (1 - cos(pi/k))
    with k_edge >= the minimum edge weight, so that
    ||x - L^dagger b||_L <= xi ||L^dagger b||_L at termination.  The seed
    parameter is part of the interface contract (solvers downstream of it
    are replayable); this method is deterministic regardless.

    Raises NotConverged (carrying the best iterate) at the iteration cap.
    """
    del seed  # deterministic method; argument kept for interface stability
    b = np.asarray([float(x) for x in b], dtype=float)
    if b.shape != (u.n,):
        raise DimensionMismatch(f"rhs length {b.shape} vs n={u.n}")
    x = np.zeros(u.n)
    bnorm_all = float(np.linalg.norm(b))
    if bnorm_all == 0.0:
        return x

    full_lap = undirected_laplacian(u)
    for comp in u.components():
        idx = np.array(comp)
        bc = b[idx]
        tot = float(bc.sum())
        if abs(tot) > 1e-6 * max(bnorm_all, 1.0):
            raise ValueError("rhs not orthogonal to the all-ones vector on a component")
        bc = bc - tot / len(comp)
        if len(comp) == 1 or float(np.linalg.norm(bc)) == 0.0:
            continue
        lap = full_lap[np.ix_(comp, comp)]
        k = len(comp)
        compset = set(comp)
        wmin = min(float(w) for (a, _bb), w in u.edges.items() if a in compset)
        lam_max = 2.0 * float(np.max(np.diag(lap)))
        lam2_lb = 2.0 * wmin * (1.0 - math.cos(math.pi / k))
        target = xi * float(np.linalg.norm(bc)) * math.sqrt(lam2_lb / lam_max)

        diag = np.diag(lap).copy()
        minv = 1.0 / diag
        xc = np.zeros(k)
        r = bc.copy()
        z = minv * r
        z -= z.mean()
        p = z.copy()
        rz = float(r @ z)
        cap = max_iter if max_iter is not None else 40 * k + 400
        it = 0
        while float(np.linalg.norm(r)) > target:
            if it >= cap:
                x[idx] = xc
                raise NotConverged(f"CG hit the iteration cap ({cap})", best=x)
            lp = lap @ p
            denom = float(p @ lp)
            if denom <= 0.0:
                break
            alpha = rz / denom
            xc += alpha * p
            r -= alpha * lp
            z = minv * r
            z -= z.mean()
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
            it += 1
        xc -= xc.mean()
        x[idx] = xc
    return x
