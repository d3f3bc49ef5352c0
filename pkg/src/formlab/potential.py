"""Endomorphism-valued potentials, the Schrödinger operator and the envelope Q.

A potential assigns to every vertex a symmetric endomorphism of the full
exterior algebra of the cotangent fiber.  The fiber basis is ordered by
degree, then lexicographically: ``[1, dx]`` in one dimension and
``[1, dx, dy, dx^dy]`` in two.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from math import comb
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.interpolate import PchipInterpolator

from .forms import vertex_average
from .mesh import distance_from_base, sample_vertex_pairs

POTENTIAL_SCHEMA = "formlab.potential/1"
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


def degree_slice(n, k):
    """Rows of the fiber basis carrying degree-k forms."""
    start = sum(comb(n, j) for j in range(k))
    return slice(start, start + comb(n, k))


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Per-vertex symmetric blocks of size ``2**n`` plus an infinite-well mask."""

    blocks: np.ndarray
    infinite: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[1] not in (2, 4):
            raise ValueError("blocks must have shape (N, 2**n, 2**n) with n in {1, 2}")
        inf = np.zeros(len(b), dtype=bool) if self.infinite is None \
            else np.asarray(self.infinite, dtype=bool)
        if inf.shape != (len(b),):
            raise ValueError("infinite flags need one entry per vertex")
        b = np.where(inf[:, None, None], 0.0, b)
        if not np.all(np.isfinite(b)):
            raise ValueError("potential blocks must be finite where no infinite well is flagged")
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if np.abs(b - b.transpose(0, 2, 1)).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("potential blocks must be symmetric")
        b = 0.5 * (b + b.transpose(0, 2, 1))
        b.setflags(write=False)
        inf.setflags(write=False)
        object.__setattr__(self, "blocks", b)
        object.__setattr__(self, "infinite", inf)

    @property
    def dim(self):
        return int(np.log2(self.blocks.shape[1]))

    @property
    def n_vertices(self):
        return len(self.blocks)

    @classmethod
    def scalar(cls, values, n, infinite=None):
        """``V(x) = v(x) * Identity`` on the whole fiber."""
        v = np.asarray(values, dtype=float)
        blocks = np.zeros((len(v), 2 ** n, 2 ** n))
        diag = np.arange(2 ** n)
        blocks[:, diag, diag] = v[:, None]
        return cls(blocks, infinite)

    @classmethod
    def zero(cls, mesh):
        return cls.scalar(np.zeros(mesh.n_vertices), mesh.dim)

    @classmethod
    def from_degree_blocks(cls, per_degree, infinite=None):
        """Assemble degree-preserving blocks from one array per degree."""
        per_degree = [np.asarray(b, dtype=float) for b in per_degree]
        n = len(per_degree) - 1
        nv = len(per_degree[0])
        full = np.zeros((nv, 2 ** n, 2 ** n))
        for k, bk in enumerate(per_degree):
            s = degree_slice(n, k)
            full[:, s, s] = bk.reshape(nv, comb(n, k), comb(n, k))
        return cls(full, infinite)

    def degree_block(self, k):
        s = degree_slice(self.dim, k)
        return self.blocks[:, s, s]

    def __mul__(self, c):
        return PotentialField(self.blocks * c, self.infinite)

    __rmul__ = __mul__


def _simplex_directions(mesh, k):
    """Unit k-vector of each k-simplex in the degree-k fiber basis."""
    n_k = mesh.n_simplices(k)
    if k == 0 or k == mesh.dim:
        return np.ones((n_k, 1))
    vec = mesh.edge_vectors()
    return vec / np.linalg.norm(vec, axis=1, keepdims=True)


def potential_on_simplices(mesh, V, k):
    """Diagonal action of ``V`` on k-cochains.

    Each k-simplex receives the vertex average of the Rayleigh quotient of
    the degree-k block along the simplex's unit k-vector.
    """
    if V.n_vertices != mesh.n_vertices or V.dim != mesh.dim:
        raise ValueError("potential does not match the mesh")
    block = V.degree_block(k)
    t = _simplex_directions(mesh, k)
    simp = mesh.simplices[k]
    acc = np.zeros(len(simp))
    for j in range(simp.shape[1]):
        acc += np.einsum("si,sij,sj->s", t, block[simp[:, j]], t)
    return acc / simp.shape[1]


def assemble_H(calc, V, k):
    """``H = Delta_k + M_V`` as a sparse operator on k-cochains."""
    mesh = calc.mesh
    if V.n_vertices != mesh.n_vertices:
        raise ValueError("potential has the wrong number of vertices")
    if V.dim != mesh.dim:
        raise ValueError(f"potential fiber is for dimension {V.dim}, mesh has {mesh.dim}")
    if V.infinite.any():
        raise ValueError("infinite-well vertices inside the assembly region")
    return (calc.laplacian(k) + sparse.diags(potential_on_simplices(mesh, V, k))).tocsr()


@dataclass(frozen=True, eq=False)
class Envelope:
    """Lower-bound envelope ``Q >= 1`` with weight ``w = Q**-0.5``.

    ``infinite`` marks vertices with ``Q = inf`` (weight exactly 0).
    ``lipschitz`` is the estimated constant of ``w`` when known.
    """

    Q: np.ndarray
    w: np.ndarray
    infinite: np.ndarray
    lipschitz: float | None = None
    lipschitz_pair: tuple | None = None

    @classmethod
    def from_Q(cls, Q, infinite=None):
        Q = np.asarray(Q, dtype=float)
        inf = np.isinf(Q) if infinite is None else (np.asarray(infinite, bool) | np.isinf(Q))
        if np.any(Q[~inf] < 1.0) or np.any(np.isnan(Q)):
            raise ValueError("envelope requires 1 <= Q <= inf")
        w = np.zeros_like(Q)
        w[~inf] = Q[~inf] ** -0.5
        return cls(np.where(inf, np.inf, Q), w, inf)

    @classmethod
    def from_weight(cls, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 0) or np.any(w > 1) or not np.all(np.isfinite(w)):
            raise ValueError("weights must lie in [0, 1]")
        inf = w == 0
        Q = np.full_like(w, np.inf)
        Q[~inf] = w[~inf] ** -2.0
        return cls(Q, w.copy(), inf)

    def with_lipschitz(self, mesh, n_pairs=10_000, seed=0):
        K, pair = lipschitz_constant(mesh, self, n_pairs=n_pairs, seed=seed)
        return replace(self, lipschitz=K, lipschitz_pair=pair)

    def summary(self):
        finite = ~self.infinite
        return {
            "Q_min": float(self.Q[finite].min()) if finite.any() else None,
            "Q_max": float(self.Q[finite].max()) if finite.any() else None,
            "n_infinite": int(self.infinite.sum()),
            "w_min": float(self.w.min()),
            "w_max": float(self.w.max()),
            "K": None if self.lipschitz is None else float(self.lipschitz),
        }


def extract_envelope(V):
    """Minimal admissible envelope ``Q = max(1, -lambda_min(V(x)))``."""
    lam = np.linalg.eigvalsh(V.blocks)[:, 0]
    Q = np.maximum(1.0, -lam)
    Q[V.infinite] = np.inf
    return Envelope.from_Q(Q, V.infinite)


def lipschitz_constant(mesh, envelope, n_pairs=10_000, seed=0):
    """Estimate ``K = sup |w(x) - w(y)| / dist(x, y)``.

    The sup runs over all edges plus ``n_pairs`` random vertex pairs at
    edge-length geodesic distance.  Returns ``(K, (x, y))``.
    """
    w = envelope.w
    e = mesh.edges
    ratios = np.abs(w[e[:, 1]] - w[e[:, 0]]) / mesh.edge_lengths
    best = int(np.argmax(ratios))
    K, pair = float(ratios[best]), (int(e[best, 0]), int(e[best, 1]))
    if n_pairs:
        x, y, dist = sample_vertex_pairs(mesh, n_pairs, seed=seed)
        dw = np.abs(w[x] - w[y])
        same = dist == 0
        if np.any(same & (dw > 0)):
            i = int(np.nonzero(same & (dw > 0))[0][0])
            return np.inf, (int(x[i]), int(y[i]))
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(same, 0.0, dw / np.where(same, 1.0, dist))
        i = int(np.argmax(r))
        if r[i] > K:
            K, pair = float(r[i]), (int(x[i]), int(y[i]))
    return K, pair


def radial_envelope(mesh, t, q, r=None):
    """Envelope ``Q(x) = q(r(x))`` from a sampled radial profile.

    The weight ``q**-0.5`` is interpolated with a monotone cubic (PCHIP),
    which is exact at the knots and handles ``q = inf`` as weight 0.
    """
    t = np.asarray(t, dtype=float)
    q = np.asarray(q, dtype=float)
    if t.shape != q.shape or t.ndim != 1 or len(t) < 2:
        raise ValueError("need matching 1-D radius and profile samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("radial samples must be strictly increasing")
    if np.any(np.isnan(q)) or np.any(q < 1.0):
        raise ValueError("radial profile violates 1 <= q <= inf")
    wq = np.where(np.isinf(q), 0.0, q ** -0.5)
    rr = distance_from_base(mesh).values if r is None else np.asarray(r, dtype=float)
    span = t[-1] - t[0]
    if rr.min() < t[0] - 1e-12 * span or rr.max() > t[-1] + 1e-12 * span:
        raise ValueError("mesh radii fall outside the sampled profile")
    w = np.clip(PchipInterpolator(t, wq)(np.clip(rr, t[0], t[-1])), 0.0, 1.0)
    return Envelope.from_weight(w)


def power_profile(c, beta):
    """Radial envelope family ``q(r) = max(1, c (1 + r)**beta)``."""
    return lambda r: np.maximum(1.0, c * (1.0 + np.asarray(r, dtype=float)) ** beta)


def radial_potential(mesh, func, r=None):
    """Scalar potential ``V(x) = func(r(x))`` on every degree."""
    rr = distance_from_base(mesh).values if r is None else np.asarray(r, dtype=float)
    return PotentialField.scalar(func(rr), mesh.dim)


# ------------------------------------------------------------- ingestion


def load_potential_json(path, mesh=None):
    """Read per-vertex dense blocks (schema ``formlab.potential/1``)."""
    data = json.loads(Path(path).read_text())
    if data.get("schema") != POTENTIAL_SCHEMA:
        raise ValueError(f"unsupported potential schema {data.get('schema')!r}")
    V = PotentialField(np.asarray(data["blocks"], dtype=float), data.get("infinite"))
    if mesh is not None and (V.n_vertices != mesh.n_vertices or V.dim != mesh.dim):
        raise ValueError("potential file does not match the mesh")
    return V


def save_potential_json(V, path):
    Path(path).write_text(json.dumps({
        "schema": POTENTIAL_SCHEMA,
        "blocks": V.blocks.tolist(),
        "infinite": [bool(f) for f in V.infinite],
    }))


def load_radial_csv(path):
    """Two-column ``r, q`` profile; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"malformed profile row {i + 1}: {row}") from None
    if len(rows) < 2:
        raise ValueError("profile needs at least two rows")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1]
