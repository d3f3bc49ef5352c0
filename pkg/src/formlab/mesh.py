"""Oriented simplicial meshes in one and two dimensions.

A :class:`SimplicialMesh` stores its top-dimensional simplices together with
the corner coordinates of every top simplex.  Keeping the corners (rather than
only global vertex positions) lets periodic meshes such as the flat torus carry
unwrapped local geometry, and lets restrictions recompute dual volumes
without special cases.

All derived tables (lower-degree simplices, primal and dual volumes, signed
incidence matrices) are computed once at construction and exposed read-only.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

logger = logging.getLogger(__name__)

MESH_SCHEMA = "formlab.mesh/1"
DUAL_KINDS = ("barycentric", "circumcentric")


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SimplicialMesh:
    """Oriented simplicial complex with primal/dual volumes and a base point.

    Parameters
    ----------
    vertices : array_like, shape (N, n)
        Vertex coordinates.  For periodic meshes these are positions inside
        the fundamental domain.
    top : array_like of int, shape (T, n + 1)
        Top-dimensional simplices.  Intervals must run left to right;
        triangles with negative orientation are flipped.
    corners : array_like, shape (T, n + 1, n), optional
        Local (unwrapped) corner coordinates of each top simplex.  Defaults
        to ``vertices[top]``.
    base_point : int
        Index of the base point p.
    dual : {"barycentric", "circumcentric"}
        Dual-cell construction used for the dual volumes.
    boundary : array_like of bool, optional
        Boundary flag per vertex.  Detected from the complex when omitted.
    period : tuple of float, optional
        Fundamental-domain size for periodic meshes (metadata only).
    """

    def __init__(self, vertices, top, corners=None, base_point=0,
                 dual="barycentric", boundary=None, period=None):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim == 1:
            vertices = vertices[:, None]
        top = np.asarray(top, dtype=np.int64)
        n = vertices.shape[1]
        if n not in (1, 2):
            raise ValueError(f"only dimensions 1 and 2 are supported, got {n}")
        if top.ndim != 2 or top.shape[1] != n + 1:
            raise ValueError(f"top simplices must have shape (T, {n + 1})")
        if dual not in DUAL_KINDS:
            raise ValueError(f"unknown dual construction {dual!r}")
        nv = len(vertices)
        if top.size and (top.min() < 0 or top.max() >= nv):
            raise ValueError("simplex references a vertex out of range")
        if not 0 <= base_point < nv:
            raise ValueError("base point out of range")
        if not np.all(np.isfinite(vertices)):
            raise ValueError("vertex coordinates must be finite")

        corners = vertices[top] if corners is None else np.asarray(corners, dtype=float)
        if corners.shape != (len(top), n + 1, n):
            raise ValueError("corners must have shape (T, n + 1, n)")

        if n == 2:
            u = corners[:, 1] - corners[:, 0]
            v = corners[:, 2] - corners[:, 0]
            cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
            scale = np.einsum("ij,ij->i", u, u) + np.einsum("ij,ij->i", v, v)
            if np.any(np.abs(cross) <= 1e-14 * scale):
                raise ValueError("degenerate triangle with zero area")
            flip = cross < 0
            if flip.any():
                top = top.copy()
                corners = corners.copy()
                top[flip] = top[flip][:, [0, 2, 1]]
                corners[flip] = corners[flip][:, [0, 2, 1]]

        self.dim = n
        self.dual = dual
        self.base_point = int(base_point)
        self.period = None if period is None else tuple(float(p) for p in period)
        self.vertices = _readonly(vertices)
        self.corners = _readonly(corners)

        if n == 1:
            self.simplices = (_readonly(np.arange(nv)[:, None]), _readonly(top))
            self._edges_sorted = np.sort(top, axis=1)
        else:
            pairs = np.concatenate([top[:, [1, 2]], top[:, [0, 2]], top[:, [0, 1]]])
            edges = np.unique(np.sort(pairs, axis=1), axis=0)
            self.simplices = (_readonly(np.arange(nv)[:, None]), _readonly(edges),
                              _readonly(top))
            self._edges_sorted = edges
        edges = self.simplices[1]
        self._edge_keys = self._edges_sorted[:, 0] * nv + self._edges_sorted[:, 1]
        self._edge_order = np.argsort(self._edge_keys)
        self._edge_keys_sorted = self._edge_keys[self._edge_order]
        self._edge_stored_sign = np.where(edges[:, 0] < edges[:, 1], 1, -1)

        if boundary is None:
            boundary = self._detect_boundary()
        boundary = np.asarray(boundary, dtype=bool)
        if boundary.shape != (nv,):
            raise ValueError("boundary flags must have one entry per vertex")
        self.boundary = _readonly(boundary)

        primal, dual_vol = self._geometry()
        self.primal_volumes = tuple(_readonly(p) for p in primal)
        self.dual_volumes = tuple(_readonly(d) for d in dual_vol)
        self._incidence = self._build_incidence()
        self._validate()

    # ------------------------------------------------------------------ tables

    @property
    def n_vertices(self):
        return len(self.vertices)

    def n_simplices(self, k):
        return len(self.simplices[k])

    @property
    def edges(self):
        return self.simplices[1]

    @property
    def edge_lengths(self):
        return self.primal_volumes[1]

    def boundary_matrix(self, k):
        """Signed incidence matrix from k-chains to (k-1)-chains."""
        if not 1 <= k <= self.dim:
            raise ValueError(f"boundary operator degree must be in 1..{self.dim}")
        return self._incidence[k - 1]

    def lookup_edges(self, a, b):
        """Return (edge index, sign) for oriented vertex pairs ``a -> b``."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * self.n_vertices + hi
        pos = np.searchsorted(self._edge_keys_sorted, keys)
        pos = np.clip(pos, 0, len(self._edge_keys_sorted) - 1)
        if not np.all(self._edge_keys_sorted[pos] == keys):
            raise KeyError("vertex pair is not an edge of the mesh")
        idx = self._edge_order[pos]
        sign = np.where(a < b, 1, -1) * self._edge_stored_sign[idx]
        return idx, sign

    def edge_vectors(self):
        """Displacement along each edge, unwrapped for periodic meshes."""
        e = self.edges
        d = self.vertices[e[:, 1]] - self.vertices[e[:, 0]]
        if self.period is not None:
            per = np.asarray(self.period)
            d = d - per * np.round(d / per)
        return d

    def vertex_graph(self, weights=None):
        """Symmetric sparse adjacency with the given per-edge weights."""
        w = self.edge_lengths if weights is None else np.asarray(weights, float)
        e = self.edges
        n = self.n_vertices
        return sparse.csr_matrix(
            (np.concatenate([w, w]), (np.concatenate([e[:, 0], e[:, 1]]),
                                      np.concatenate([e[:, 1], e[:, 0]]))),
            shape=(n, n))

    @property
    def total_volume(self):
        return float(self.primal_volumes[self.dim].sum())

    # --------------------------------------------------------------- geometry

    def _detect_boundary(self):
        nv = self.n_vertices
        flag = np.zeros(nv, dtype=bool)
        if self.dim == 1:
            count = np.bincount(self.simplices[1].ravel(), minlength=nv)
            flag[count == 1] = True
        else:
            top = self.simplices[2]
            pairs = np.sort(np.concatenate([top[:, [1, 2]], top[:, [0, 2]],
                                            top[:, [0, 1]]]), axis=1)
            _, inv, cnt = np.unique(pairs, axis=0, return_inverse=True,
                                    return_counts=True)
            lone = pairs[cnt[inv.ravel()] == 1]
            flag[lone.ravel()] = True
        return flag

    def _geometry(self):
        nv = self.n_vertices
        if self.dim == 1:
            length = self.corners[:, 1, 0] - self.corners[:, 0, 0]
            vdual = np.zeros(nv)
            np.add.at(vdual, self.simplices[1][:, 0], 0.5 * length)
            np.add.at(vdual, self.simplices[1][:, 1], 0.5 * length)
            return (np.ones(nv), length), (vdual, np.ones(len(length)))

        top = self.simplices[2]
        c = self.corners
        area, lengths, vpart, epart = triangle_duals(c, self.dual)
        ne = self.n_simplices(1)
        edge_len = np.zeros(ne)
        edual = np.zeros(ne)
        vdual = np.zeros(nv)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            idx, _ = self.lookup_edges(top[:, j], top[:, k])
            edge_len[idx] = lengths[:, i]
            np.add.at(edual, idx, epart[:, i])
            np.add.at(vdual, top[:, i], vpart[:, i])
        return (np.ones(nv), edge_len, area), (vdual, edual, np.ones(len(top)))

    def _build_incidence(self):
        nv = self.n_vertices
        e = self.edges
        ne = len(e)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([np.arange(ne), np.arange(ne)])
        vals = np.concatenate([-np.ones(ne), np.ones(ne)])
        mats = [sparse.csr_matrix((vals, (rows, cols)), shape=(nv, ne))]
        if self.dim == 2:
            t = self.simplices[2]
            nt = len(t)
            rows, cols, vals = [], [], []
            for i, s in ((0, 1.0), (1, -1.0), (2, 1.0)):
                j, k = [m for m in range(3) if m != i]
                idx, sign = self.lookup_edges(t[:, j], t[:, k])
                rows.append(idx)
                cols.append(np.arange(nt))
                vals.append(s * sign)
            mats.append(sparse.csr_matrix(
                (np.concatenate(vals).astype(float),
                 (np.concatenate(rows), np.concatenate(cols))), shape=(ne, nt)))
        return tuple(mats)

    def _validate(self):
        for k in range(self.dim + 1):
            for name, vol in (("primal", self.primal_volumes[k]),
                              ("dual", self.dual_volumes[k])):
                if not np.all(np.isfinite(vol)) or np.any(vol <= 0):
                    raise ValueError(
                        f"{name} volumes of degree {k} must be strictly positive "
                        f"and finite ({self.dual} dual)")
        if self.dim == 2:
            prod = self._incidence[0] @ self._incidence[1]
            if prod.count_nonzero():
                raise ValueError("inconsistent orientation: boundary of boundary is nonzero")
        ncomp, _ = csgraph.connected_components(self.vertex_graph(), directed=False)
        if ncomp != 1:
            raise ValueError(f"mesh must be connected, found {ncomp} components")

    # ------------------------------------------------------------ restriction

    def restrict(self, vertex_mask, base_point=None):
        """Sub-mesh spanned by top simplices whose vertices are all kept.

        Returns the sub-mesh and the parent index of each retained vertex.
        Vertices adjacent to a dropped simplex are flagged as boundary.
        """
        vertex_mask = np.asarray(vertex_mask, dtype=bool)
        top = self.simplices[self.dim]
        keep_top = vertex_mask[top].all(axis=1)
        if not keep_top.any():
            raise ValueError("restriction keeps no simplices")
        used = np.unique(top[keep_top])
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(len(used))
        cut = np.zeros(self.n_vertices, dtype=bool)
        dropped = top[~keep_top]
        cut[dropped.ravel()] = True
        new_boundary = (self.boundary | cut)[used]
        bp = self.base_point if base_point is None else base_point
        if remap[bp] < 0:
            raise ValueError("restriction removes the base point")
        sub = SimplicialMesh(self.vertices[used], remap[top[keep_top]],
                             corners=self.corners[keep_top], base_point=int(remap[bp]),
                             dual=self.dual, boundary=new_boundary, period=self.period)
        return sub, used

    # ---------------------------------------------------------- serialization

    def to_dict(self):
        out = {
            "schema": MESH_SCHEMA,
            "dimension": self.dim,
            "dual": self.dual,
            "base_point": self.base_point,
            "vertices": self.vertices.tolist(),
            "simplices": {str(k): self.simplices[k].tolist()
                          for k in range(1, self.dim + 1)},
            "corners": self.corners.tolist(),
            "boundary": [bool(b) for b in self.boundary],
            "primal_volumes": {str(k): self.primal_volumes[k].tolist()
                               for k in range(self.dim + 1)},
            "dual_volumes": {str(k): self.dual_volumes[k].tolist()
                             for k in range(self.dim + 1)},
        }
        if self.period is not None:
            out["period"] = list(self.period)
        return out

    @classmethod
    def from_dict(cls, data):
        if data.get("schema") != MESH_SCHEMA:
            raise ValueError(f"unsupported mesh schema {data.get('schema')!r}")
        n = int(data["dimension"])
        return cls(data["vertices"], data["simplices"][str(n)],
                   corners=data.get("corners"), base_point=data["base_point"],
                   dual=data.get("dual", "barycentric"),
                   boundary=data.get("boundary"), period=data.get("period"))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __repr__(self):
        counts = ", ".join(str(self.n_simplices(k)) for k in range(self.dim + 1))
        return f"SimplicialMesh(dim={self.dim}, simplices=({counts}), dual={self.dual!r})"


def triangle_duals(corners, dual):
    """Areas, edge lengths and dual-cell pieces for a batch of triangles.

    Edge ``i`` of a triangle is the edge opposite corner ``i``.  Returns
    ``(area, lengths, vertex_part, edge_part)``; the parts are the portion of
    each vertex/edge dual cell lying inside the triangle.  Circumcentric
    pieces are signed and turn negative on obtuse triangles.
    """
    p = np.asarray(corners, dtype=float)
    u = p[:, 1] - p[:, 0]
    v = p[:, 2] - p[:, 0]
    area = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    lengths = np.empty((len(p), 3))
    cot = np.empty((len(p), 3))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        lengths[:, i] = np.linalg.norm(p[:, k] - p[:, j], axis=1)
        a, b = p[:, j] - p[:, i], p[:, k] - p[:, i]
        cot[:, i] = np.einsum("ij,ij->i", a, b) / (2.0 * area)
    if dual == "circumcentric":
        epart = 0.5 * lengths * cot
        vpart = np.empty_like(epart)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            vpart[:, i] = (lengths[:, j] ** 2 * cot[:, j]
                           + lengths[:, k] ** 2 * cot[:, k]) / 8.0
    else:
        vpart = np.repeat(area[:, None] / 3.0, 3, axis=1)
        epart = np.empty_like(lengths)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            median = p[:, i] - 0.5 * (p[:, j] + p[:, k])
            epart[:, i] = np.linalg.norm(median, axis=1) / 3.0
    return area, lengths, vpart, epart


# ---------------------------------------------------------------- builders


def build_interval_mesh(r_max, n_cells, grading="uniform", ratio=None):
    """One-dimensional mesh on ``[0, r_max]`` with the base point at 0.

    ``grading="geometric"`` makes consecutive cell lengths grow by ``ratio``.
    """
    if not np.isfinite(r_max) or r_max <= 0:
        raise ValueError("r_max must be positive and finite")
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError("n_cells must be an integer >= 2")
    n_cells = int(n_cells)
    if grading == "uniform":
        x = np.linspace(0.0, float(r_max), n_cells + 1)
    elif grading == "geometric":
        if ratio is None or not 0.5 <= ratio <= 2.0:
            raise ValueError("geometric grading needs a ratio in [0.5, 2]")
        cells = float(ratio) ** np.arange(n_cells)
        x = np.concatenate([[0.0], np.cumsum(cells)]) * (r_max / cells.sum())
        x[-1] = r_max
    else:
        raise ValueError(f"unknown grading {grading!r}")
    top = np.column_stack([np.arange(n_cells), np.arange(1, n_cells + 1)])
    return SimplicialMesh(x[:, None], top, base_point=0)


def build_flat_torus(n_x, n_y, L_x=1.0, L_y=1.0, dual="circumcentric"):
    """Triangulated flat torus ``[0, L_x) x [0, L_y)``.

    Rows of the vertex lattice are staggered by a rational shift ``m / n_y``
    of a cell (``m`` the integer nearest ``n_y / 2``) so the seam closes up
    exactly and every triangle is acute for moderate aspect ratios, which
    keeps circumcentric dual volumes strictly positive.  Each sheared cell is
    split into two triangles.  Vertex 0 is the base point.
    """
    if n_x < 3 or n_y < 3 or int(n_x) != n_x or int(n_y) != n_y:
        raise ValueError("torus needs integer n_x, n_y >= 3")
    if not (np.isfinite(L_x) and np.isfinite(L_y) and L_x > 0 and L_y > 0):
        raise ValueError("torus side lengths must be positive and finite")
    n_x, n_y = int(n_x), int(n_y)
    hx, hy = L_x / n_x, L_y / n_y
    m = (n_y + 1) // 2
    s = m / n_y
    j = np.arange(n_y)
    num = (j * m) % n_y
    offset = num / n_y
    carry = (num + m) // n_y

    ii, jj = np.meshgrid(np.arange(n_x), j, indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    vid = lambda i, r: (i % n_x) + n_x * (r % n_y)
    verts = np.column_stack([(ii + offset[jj]) * hx, jj * hy])

    c = carry[jj]
    lower = np.column_stack([vid(ii, jj), vid(ii + 1, jj), vid(ii + c, jj + 1)])
    upper = np.column_stack([vid(ii + 1, jj), vid(ii + 1 + c, jj + 1), vid(ii + c, jj + 1)])
    p0 = verts[vid(ii, jj)]
    lower_c = np.stack([p0, p0 + [hx, 0.0], p0 + [s * hx, hy]], axis=1)
    p1 = p0 + [hx, 0.0]
    upper_c = np.stack([p1, p1 + [s * hx, hy], p1 + [(s - 1) * hx, hy]], axis=1)
    top = np.concatenate([lower, upper])
    corners = np.concatenate([lower_c, upper_c])
    return SimplicialMesh(verts, top, corners=corners, base_point=0, dual=dual,
                          boundary=np.zeros(len(verts), dtype=bool),
                          period=(L_x, L_y))


def build_disk_mesh(radius, n_rings, dual="barycentric"):
    """Triangulated disk of concentric rings centred on the base point.

    Ring ``k`` carries ``6 k`` equally spaced vertices at radius
    ``k * radius / n_rings``; the triangulation is the Delaunay triangulation
    of the point set.  Outer-ring vertices are flagged as boundary.
    """
    from scipy.spatial import Delaunay

    if not np.isfinite(radius) or radius <= 0:
        raise ValueError("radius must be positive and finite")
    if n_rings < 1:
        raise ValueError("need at least one ring")
    pts = [np.zeros((1, 2))]
    for k in range(1, int(n_rings) + 1):
        theta = 2.0 * np.pi * (np.arange(6 * k) + 0.5 * (k % 2)) / (6 * k)
        rk = radius * k / n_rings
        pts.append(rk * np.column_stack([np.cos(theta), np.sin(theta)]))
    verts = np.concatenate(pts)
    tri = Delaunay(verts).simplices
    # drop slivers Delaunay may emit along the (cocircular) outer ring
    c = verts[tri]
    u, v = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
    area = 0.5 * np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    tri = tri[area > 1e-12 * radius ** 2]
    return SimplicialMesh(verts, tri, base_point=0, dual=dual)


# -------------------------------------------------------- distance fields


@dataclass(frozen=True)
class DistanceField:
    """Per-vertex distance from ``source``; ``predecessor`` encodes the tree."""

    values: np.ndarray
    source: int
    predecessor: np.ndarray | None = None

    def __post_init__(self):
        values = _readonly(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)
        if self.predecessor is not None:
            object.__setattr__(self, "predecessor", _readonly(self.predecessor))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)

    def path_to(self, target):
        """Vertex sequence of the shortest path from the source to ``target``."""
        if self.predecessor is None:
            raise ValueError("field was built without predecessors")
        path = [int(target)]
        while path[-1] != self.source:
            prev = int(self.predecessor[path[-1]])
            if prev < 0:
                raise ValueError("target not reachable")
            path.append(prev)
        return path[::-1]


def dijkstra(n_vertices, edges, weights, source):
    """Single-source shortest paths with nonnegative (possibly zero) weights.

    Equal tentative distances are settled in increasing vertex order and a
    predecessor is only replaced on strict improvement, so the output is
    fully determined by the inputs.
    """
    adj = [[] for _ in range(n_vertices)]
    for (a, b), w in zip(edges.tolist(), weights.tolist()):
        adj[a].append((b, w))
        adj[b].append((a, w))
    for nbrs in adj:
        nbrs.sort()
    dist = [np.inf] * n_vertices
    pred = [-1] * n_vertices
    done = [False] * n_vertices
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for u, w in adj[v]:
            nd = d + w
            if nd < dist[u]:
                dist[u] = nd
                pred[u] = v
                heapq.heappush(heap, (nd, u))
    return np.asarray(dist), np.asarray(pred, dtype=np.int64)


def weighted_geodesic_field(mesh, edge_weight=None, source=None):
    """Shortest-path distance on the mesh graph with the given edge weights.

    With ``edge_weight=None`` the weights are the edge lengths and the result
    is the graph realization of the distance to ``source`` (default: the base
    point).
    """
    source = mesh.base_point if source is None else int(source)
    if not 0 <= source < mesh.n_vertices:
        raise ValueError("source vertex out of range")
    w = mesh.edge_lengths if edge_weight is None else np.asarray(edge_weight, float)
    if w.shape != (mesh.n_simplices(1),):
        raise ValueError("need exactly one weight per edge")
    if not np.all(np.isfinite(w)):
        raise ValueError("edge weights must be finite")
    if np.any(w < 0):
        raise ValueError("edge weights must be nonnegative")
    dist, pred = dijkstra(mesh.n_vertices, mesh.edges, w, source)
    return DistanceField(dist, source, pred)


def distance_from_base(mesh):
    """r(x): edge-length geodesic distance to the base point."""
    return weighted_geodesic_field(mesh)


def pairwise_geodesic(mesh, sources, weights=None):
    """Rows of edge-length (or weighted, strictly positive) graph distance."""
    graph = mesh.vertex_graph(weights)
    return csgraph.dijkstra(graph, directed=False, indices=np.asarray(sources))


def sample_vertex_pairs(mesh, n_pairs, seed=0, n_sources=None):
    """Random vertex pairs with their edge-length geodesic distance.

    Pairs are drawn as (source, target) with a small number of sources so
    that only ``n_sources`` shortest-path solves are needed.
    """
    rng = np.random.default_rng(seed)
    nv = mesh.n_vertices
    if n_sources is None:
        n_sources = min(nv, 20)
    sources = rng.choice(nv, size=n_sources, replace=False)
    dist = pairwise_geodesic(mesh, sources)
    per = int(np.ceil(n_pairs / n_sources))
    src_idx = np.repeat(np.arange(n_sources), per)[:n_pairs]
    targets = rng.integers(0, nv, size=len(src_idx))
    x = sources[src_idx]
    return x, targets, dist[src_idx, targets]
