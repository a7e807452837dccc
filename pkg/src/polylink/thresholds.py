"""Largest k-NN link and k-connectivity threshold of a finite point cloud.

Conventions: edges of the geometric graph join points at Euclidean distance
<= r (closed balls), so both thresholds are attained and equal one of the
pairwise distances.  Every distance in this module is computed by the single
expression np.sqrt(((a - b)**2).sum(-1)); the kd-tree fast paths reproduce it
bit for bit, which is what makes the exact-equality oracles meaningful.
Thresholds are +inf when n <= k (the infimum over an empty set).
"""

from __future__ import annotations

import itertools
import math
import time
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay, QhullError, cKDTree

from .errors import SizeGuardError

__all__ = [
    "ThresholdReport", "compute_thresholds",
    "largest_k_nn_link", "brute_force_L",
    "is_k_connected", "brute_force_is_k_connected",
    "k_connectivity_threshold", "longest_mst_edge",
    "UnionFind",
]

FULL_SORT_LIMIT = 5000   # up to here M is searched over all pairwise distances
_BRUTE_N_LIMIT = 16
_DENSE_EDGE_LIMIT = 400  # below this, radius queries use the full matrix


def _points(cloud) -> np.ndarray:
    pts = getattr(cloud, "points", cloud)
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise ValueError(f"expected an (n, d) point array, got shape {pts.shape}")
    return pts


def _dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # the one distance convention of the package
    return np.sqrt(((a - b) ** 2).sum(-1))


def _pairwise_matrix(pts: np.ndarray) -> np.ndarray:
    return _dist(pts[:, None, :], pts[None, :, :])


@dataclass
class ThresholdReport:
    """Thresholds of one cloud: L (largest k-NN link), M (k-connectivity)."""

    n: int
    k: int
    L: float
    M: float | None
    witness_L: int | None
    elapsed: float

    def to_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            return "inf" if math.isinf(v) else v
        return {"n": self.n, "k": self.k, "L": enc(self.L), "M": enc(self.M),
                "witness_L": self.witness_L, "elapsed": self.elapsed}


# -- largest k-NN link -----------------------------------------------------

def _largest_link_witness(pts: np.ndarray, k: int):
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    n = len(pts)
    if n <= k:
        return math.inf, None
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=k + 1)
    kth = dist[:, k]
    w = int(np.argmax(kth))  # first max = lowest witness index
    return float(kth[w]), w


def largest_k_nn_link(cloud, k: int) -> float:
    """Max over points of the distance to the k-th nearest other point.

    Equivalently the smallest r at which every vertex of the r-graph has
    degree >= k.  +inf when n <= k.  Exact distances via a kd-tree.
    """
    value, _ = _largest_link_witness(_points(cloud), k)
    return value


def brute_force_L(cloud, k: int) -> float:
    """O(n^2) oracle for largest_k_nn_link; identical float semantics."""
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    pts = _points(cloud)
    n = len(pts)
    if n <= k:
        return math.inf
    D = _pairwise_matrix(pts)
    D.sort(axis=1)  # column 0 is the self-distance 0
    return float(D[:, k].max())


# -- edge enumeration ------------------------------------------------------

def _edges_within(pts: np.ndarray, r: float) -> np.ndarray:
    """Index pairs (i < j) with distance <= r, by the package's convention."""
    n = len(pts)
    if n <= _DENSE_EDGE_LIMIT:
        D = _pairwise_matrix(pts)
        iu, ju = np.triu_indices(n, 1)
        keep = D[iu, ju] <= r
        return np.column_stack([iu[keep], ju[keep]])
    tree = cKDTree(pts)
    # inflate so kd-internal rounding can never exclude a boundary pair,
    # then refilter with the package's own distance expression
    pairs = tree.query_pairs(r * (1.0 + 1e-12), output_type="ndarray")
    if len(pairs) == 0:
        return pairs.reshape(0, 2)
    keep = _dist(pts[pairs[:, 0]], pts[pairs[:, 1]]) <= r
    return pairs[keep]


class UnionFind:
    """Disjoint sets with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True


# -- k-connectivity --------------------------------------------------------

def _validate_r_k(r, k):
    r = float(r)
    if not r >= 0.0:
        raise ValueError(f"radius must be >= 0, got {r!r}")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    return r, k


def is_k_connected(cloud, r, k: int) -> bool:
    """True iff the geometric graph at radius r is k-connected.

    Graphs on <= k vertices are not k-connected; the complete graph on k+1
    vertices is.  k=1 is union-find over the edge set; k >= 2 runs the
    Even-Tarjan scheme: unit-capacity max-flow on the vertex-split network
    between a minimum-degree vertex and its non-neighbours, then between
    non-adjacent neighbour pairs of that vertex.
    """
    r, k = _validate_r_k(r, k)
    pts = _points(cloud)
    n = len(pts)
    if n <= k:
        return False
    edges = _edges_within(pts, r)
    if k == 1:
        uf = UnionFind(n)
        for a, b in edges:
            uf.union(int(a), int(b))
        return uf.components == 1
    adj: list[set[int]] = [set() for _ in range(n)]
    for a, b in edges:
        adj[int(a)].add(int(b))
        adj[int(b)].add(int(a))
    if min(len(s) for s in adj) < k:
        return False
    if n == k + 1:
        return True  # min degree k on k+1 vertices means complete
    uf = UnionFind(n)
    for a, b in edges:
        uf.union(int(a), int(b))
    if uf.components > 1:
        return False
    return _vertex_connectivity_at_least(adj, n, k)


def _vertex_connectivity_at_least(adj, n, k) -> bool:
    v = min(range(n), key=lambda i: (len(adj[i]), i))
    for w in range(n):
        if w != v and w not in adj[v]:
            if not _split_flow_at_least(adj, v, w, k):
                return False
    nb = sorted(adj[v])
    for x, y in itertools.combinations(nb, 2):
        if y not in adj[x]:
            if not _split_flow_at_least(adj, x, y, k):
                return False
    return True


def _split_flow_at_least(adj, s, t, k) -> bool:
    """Vertex connectivity between non-adjacent s, t is >= k?

    Max-flow on the split network (node v becomes in(v)=2v -> out(v)=2v+1,
    capacity 1; each edge uv becomes out(u)->in(v) and out(v)->in(u) with
    capacity k), augmented one BFS path at a time, stopping at k units.
    """
    graph: list[list[list[int]]] = [[] for _ in range(2 * len(adj))]

    def add(u, v, cap):
        graph[u].append([v, cap, len(graph[v])])
        graph[v].append([u, 0, len(graph[u]) - 1])

    for i in range(len(adj)):
        add(2 * i, 2 * i + 1, 1)
    for i, nbs in enumerate(adj):
        for j in nbs:
            add(2 * i + 1, 2 * j, k)
    src, snk = 2 * s + 1, 2 * t
    flow = 0
    while flow < k:
        prev: list[tuple[int, int] | None] = [None] * len(graph)
        prev[src] = (-1, -1)
        q = deque([src])
        while q:
            u = q.popleft()
            if u == snk:
                break
            for ei, e in enumerate(graph[u]):
                if e[1] > 0 and prev[e[0]] is None:
                    prev[e[0]] = (u, ei)
                    q.append(e[0])
        if prev[snk] is None:
            return False
        node = snk
        while node != src:
            u, ei = prev[node]
            e = graph[u][ei]
            e[1] -= 1
            graph[node][e[2]][1] += 1
            node = u
        flow += 1
    return True


def brute_force_is_k_connected(cloud, r, k: int) -> bool:
    """Exhaustive oracle: no removal of <= k-1 vertices disconnects the graph.

    Guarded to n <= 16; bitmask BFS over every candidate removal set.
    """
    r, k = _validate_r_k(r, k)
    pts = _points(cloud)
    n = len(pts)
    if n > _BRUTE_N_LIMIT:
        raise SizeGuardError(f"brute-force connectivity is limited to n <= {_BRUTE_N_LIMIT}, got n={n}")
    if n <= k:
        return False
    adj = [0] * n
    for a, b in _edges_within(pts, r):
        adj[int(a)] |= 1 << int(b)
        adj[int(b)] |= 1 << int(a)
    full = (1 << n) - 1
    for size in range(k):
        for removed in itertools.combinations(range(n), size):
            rem = 0
            for i in removed:
                rem |= 1 << i
            if not _bitmask_connected(adj, full & ~rem):
                return False
    return True


def _bitmask_connected(adj, active: int) -> bool:
    reach = active & -active
    while True:
        nxt = reach
        s = reach
        while s:
            b = s & -s
            nxt |= adj[b.bit_length() - 1] & active
            s ^= b
        if nxt == reach:
            return reach == active
        reach = nxt


# -- minimum spanning tree -------------------------------------------------

def longest_mst_edge(cloud) -> float:
    """Maximum edge weight of a Euclidean minimum spanning tree.

    The edge-weight multiset is the same for every MST, so the value is
    well-defined under ties.  Delaunay + sparse MST when possible (the EMST is
    a subgraph of the Delaunay triangulation), dense Prim otherwise.
    Duplicate points collapse first (a 0-length edge would vanish in the
    sparse matrix); they rejoin the tree at distance 0, which never exceeds
    the longest edge unless all points coincide (then the answer is 0).
    """
    pts = _points(cloud)
    if len(pts) < 2:
        raise ValueError(f"longest_mst_edge needs n >= 2, got n={len(pts)}")
    uq = np.unique(pts, axis=0)
    m = len(uq)
    if m == 1:
        return 0.0
    if m == 2:
        return float(_dist(uq[0], uq[1]))
    if pts.shape[1] >= 2 and m > pts.shape[1] + 1:
        try:
            return _mst_longest_delaunay(uq)
        except QhullError:
            pass
    return _mst_longest_prim(uq)


def _delaunay_edges(uq: np.ndarray) -> np.ndarray:
    tri = Delaunay(uq)
    s = tri.simplices
    cols = s.shape[1]
    chunks = [np.stack([s[:, i], s[:, j]], axis=1)
              for i in range(cols) for j in range(i + 1, cols)]
    e = np.concatenate(chunks)
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _mst_longest_delaunay(uq: np.ndarray) -> float:
    e = _delaunay_edges(uq)
    w = _dist(uq[e[:, 0]], uq[e[:, 1]])
    m = len(uq)
    mst = minimum_spanning_tree(csr_matrix((w, (e[:, 0], e[:, 1])), shape=(m, m)))
    if mst.nnz != m - 1:  # degenerate triangulation; fall back
        return _mst_longest_prim(uq)
    return float(mst.data.max())


def _mst_longest_prim(uq: np.ndarray) -> float:
    m = len(uq)
    dmin = _dist(uq, uq[0])
    dmin[0] = -np.inf  # in tree
    best = 0.0
    for _ in range(m - 1):
        j = int(np.argmax(np.where(np.isneginf(dmin), -np.inf, -dmin)))
        # j is the nearest point outside the tree
        best = max(best, float(dmin[j]))
        np.minimum(dmin, _dist(uq, uq[j]), out=dmin)
        dmin[j] = -np.inf
    return best


# -- connectivity threshold ------------------------------------------------

def k_connectivity_threshold(cloud, k: int, *, fast_path: bool = True) -> float:
    """Smallest pairwise distance r with G(cloud, r) k-connected; +inf if n <= k.

    k=1 with fast_path uses the longest MST edge.  Otherwise the search starts
    at the largest k-NN link L (a valid lower bound: L <= M), gallops upward
    through candidate distances, and finishes with an exact scan of the
    pairwise distances inside the final bracket, so the result is always an
    actual pairwise distance of the cloud.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    pts = _points(cloud)
    n = len(pts)
    if n <= k:
        return math.inf
    if k == 1 and fast_path:
        return longest_mst_edge(pts)
    L, _ = _largest_link_witness(pts, k)
    if is_k_connected(pts, L, k):
        return L
    if n <= FULL_SORT_LIMIT:
        D = _pairwise_matrix(pts)
        cand = np.unique(D[np.triu_indices(n, 1)])
    else:
        tree = cKDTree(pts)
        dist, _ = tree.query(pts, k=k + 1)
        cand = np.unique(np.concatenate([dist[:, 1:].ravel(), _mst_edge_weights(pts)]))
    cand = cand[cand > L]
    lo, hi = _gallop_bracket(pts, k, cand)
    lo = max(lo, L) if math.isfinite(lo) else L  # M > L: connectivity at L failed
    if hi is None:
        # candidates exhausted without success (possible on the sparse
        # candidate set): grow the radius geometrically; the graph is complete
        # at the largest pairwise distance and n > k, so a bracket exists
        span = pts.max(0) - pts.min(0)
        diam = float(np.sqrt((span ** 2).sum()))
        r = lo
        while hi is None:
            r = max(r * 1.2, r + max(diam, 1.0) * 1e-6)
            if r >= diam:
                hi = diam  # complete graph here, k-connected since n > k
            elif is_k_connected(pts, r, k):
                hi = r
            else:
                lo = r
    gap = _pair_distances_between(pts, lo, hi)
    return _leftmost_connected(pts, k, gap)


def _mst_edge_weights(pts: np.ndarray) -> np.ndarray:
    uq = np.unique(pts, axis=0)
    if len(uq) < 2:
        return np.zeros(1)
    try:
        e = _delaunay_edges(uq)
    except QhullError:
        return np.array([_mst_longest_prim(uq)])
    w = _dist(uq[e[:, 0]], uq[e[:, 1]])
    m = len(uq)
    mst = minimum_spanning_tree(csr_matrix((w, (e[:, 0], e[:, 1])), shape=(m, m)))
    return np.asarray(mst.data, dtype=float)


def _gallop_bracket(pts, k, cand):
    """(largest value known not k-connected, smallest known k-connected or None)."""
    lo = -np.inf
    idx = 0
    prev_idx = -1
    while idx < len(cand):
        if is_k_connected(pts, cand[idx], k):
            # bisect down to the first success within (prev_idx, idx]
            lo_i, hi_i = prev_idx, idx
            while hi_i - lo_i > 1:
                mid = (lo_i + hi_i) // 2
                if is_k_connected(pts, cand[mid], k):
                    hi_i = mid
                else:
                    lo_i = mid
            lo_val = float(cand[lo_i]) if lo_i >= 0 else lo
            return lo_val, float(cand[hi_i])
        prev_idx = idx
        idx = 2 * idx + 1
    lo_val = float(cand[prev_idx]) if prev_idx >= 0 else lo
    return lo_val, None


def _pair_distances_between(pts, lo, hi) -> np.ndarray:
    """Sorted unique pairwise distances in (lo, hi]."""
    n = len(pts)
    if n <= _DENSE_EDGE_LIMIT:
        D = _pairwise_matrix(pts)
        vals = D[np.triu_indices(n, 1)]
    else:
        tree = cKDTree(pts)
        pairs = tree.query_pairs(hi * (1.0 + 1e-12), output_type="ndarray")
        if len(pairs) == 0:
            return np.empty(0)
        vals = _dist(pts[pairs[:, 0]], pts[pairs[:, 1]])
    return np.unique(vals[(vals > lo) & (vals <= hi)])


def _leftmost_connected(pts, k, vals) -> float:
    if len(vals) == 0:
        raise RuntimeError("internal error: empty refinement bracket")
    lo_i, hi_i = -1, len(vals) - 1
    if not is_k_connected(pts, vals[hi_i], k):
        raise RuntimeError("internal error: bracket upper end not k-connected")
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if is_k_connected(pts, vals[mid], k):
            hi_i = mid
        else:
            lo_i = mid
    return float(vals[hi_i])


def compute_thresholds(cloud, k: int, *, want_m: bool = True,
                       fast_path: bool = True) -> ThresholdReport:
    """L (always) and M (optional) for one cloud, with timing and L-witness."""
    pts = _points(cloud)
    t0 = time.perf_counter()
    L, witness = _largest_link_witness(pts, k)
    M = k_connectivity_threshold(pts, k, fast_path=fast_path) if want_m else None
    return ThresholdReport(n=len(pts), k=k, L=L, M=M, witness_L=witness,
                           elapsed=time.perf_counter() - t0)
