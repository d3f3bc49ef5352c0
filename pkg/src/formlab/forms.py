"""Discrete exterior calculus on :class:`~formlab.mesh.SimplicialMesh`.

Cochains are value vectors indexed by k-simplices.  The Hodge star is the
diagonal dual/primal volume ratio, the codifferential is the exact adjoint of
the coboundary in the star-weighted inner product, and the Hodge Laplacian is
assembled from the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from math import factorial

import numpy as np
from scipy import sparse


@dataclass(frozen=True, eq=False)
class Cochain:
    """Degree-k cochain on ``mesh`` (real or complex values)."""

    mesh: object
    degree: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if not 0 <= self.degree <= self.mesh.dim:
            raise ValueError(f"degree {self.degree} out of range for a {self.mesh.dim}-mesh")
        if vals.shape != (self.mesh.n_simplices(self.degree),):
            raise ValueError(
                f"degree-{self.degree} cochain needs {self.mesh.n_simplices(self.degree)} "
                f"values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("cochain entries must be finite")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        _check_compatible(self, other)
        return Cochain(self.mesh, self.degree, self.values + other.values)

    def __sub__(self, other):
        _check_compatible(self, other)
        return Cochain(self.mesh, self.degree, self.values - other.values)

    def __mul__(self, c):
        return Cochain(self.mesh, self.degree, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return Cochain(self.mesh, self.degree, -self.values)

    def conj(self):
        return Cochain(self.mesh, self.degree, np.conj(self.values))


def _check_compatible(a, b):
    if a.degree != b.degree:
        raise ValueError(f"degree mismatch: {a.degree} vs {b.degree}")
    if a.mesh is not b.mesh:
        raise ValueError("cochains live on different meshes")


@dataclass(frozen=True, eq=False)
class HodgeStar:
    """Diagonal Hodge star: ``weights[k] = dual volume / primal volume``."""

    weights: tuple

    @classmethod
    def from_mesh(cls, mesh):
        w = tuple(mesh.dual_volumes[k] / mesh.primal_volumes[k]
                  for k in range(mesh.dim + 1))
        for k, wk in enumerate(w):
            if not np.all(np.isfinite(wk)) or np.any(wk <= 0):
                raise ValueError(f"Hodge star of degree {k} is not positive")
        return cls(w)

    def matrix(self, k):
        return sparse.diags(self.weights[k], format="csr")

    def inverse(self, k):
        return sparse.diags(1.0 / self.weights[k], format="csr")


def hodge_star(mesh):
    return HodgeStar.from_mesh(mesh)


def exterior_derivative(mesh, k):
    """Coboundary ``d_k`` from k-cochains to (k+1)-cochains (entries in {-1,0,1})."""
    if not 0 <= k < mesh.dim:
        raise ValueError(f"exterior derivative degree must be in 0..{mesh.dim - 1}")
    return mesh.boundary_matrix(k + 1).T.tocsr()


def codifferential(star, d, k):
    """``delta_k = star_{k-1}^{-1} d_{k-1}^T star_k`` for the derivative ``d = d_{k-1}``."""
    if k < 1 or k >= len(star.weights):
        raise ValueError(f"codifferential degree must be in 1..{len(star.weights) - 1}")
    return (star.inverse(k - 1) @ d.T @ star.matrix(k)).tocsr()


def inner_product(star, alpha, beta):
    """``<alpha, beta> = sum star_k * alpha * conj(beta)``."""
    _check_compatible(alpha, beta)
    return np.sum(star.weights[alpha.degree] * alpha.values * np.conj(beta.values))


def norm(star, alpha):
    return float(np.sqrt(np.real(inner_product(star, alpha, alpha))))


def vertex_average(mesh, phi, k):
    """Mean of a vertex function over the vertices of each k-simplex."""
    phi = np.asarray(phi, dtype=float)
    return phi[mesh.simplices[k]].mean(axis=1)


def multiply_by_function(mesh, phi, alpha):
    """Scale each entry of ``alpha`` by the vertex mean of ``phi`` on its simplex."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (mesh.n_vertices,):
        raise ValueError("phi needs one value per vertex")
    if not np.all(np.isfinite(phi)):
        raise ValueError("phi must be finite")
    return Cochain(mesh, alpha.degree, vertex_average(mesh, phi, alpha.degree) * alpha.values)


def _face_lookup(mesh, verts):
    """Index and orientation sign of the simplex spanned by ordered ``verts``."""
    if verts.shape[1] == 1:
        return verts[:, 0], np.ones(len(verts))
    if verts.shape[1] == 2:
        return mesh.lookup_edges(verts[:, 0], verts[:, 1])
    raise ValueError("only vertex and edge faces are looked up")


def _perm_sign(p):
    p = list(p)
    s = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def wedge(alpha, beta):
    """Primal-primal cup product with barycentric weights.

    For a (k+l)-simplex ``[v0 .. v_{k+l}]``::

        (alpha ^ beta) = 1 / ((k+l)! (k+l+1)) * sum_tau sign(tau)
                         alpha([v_tau0 .. v_tauk]) beta([v_tauk .. v_tau(k+l)])
    """
    mesh = alpha.mesh
    if beta.mesh is not mesh:
        raise ValueError("cochains live on different meshes")
    k, l = alpha.degree, beta.degree
    m = k + l
    if m > mesh.dim:
        raise ValueError("wedge degree exceeds mesh dimension")
    simp = mesh.simplices[m]
    out = np.zeros(len(simp), dtype=np.result_type(alpha.values, beta.values))
    whole = np.arange(len(simp))
    for tau in permutations(range(m + 1)):
        v = simp[:, list(tau)]
        sgn = _perm_sign(tau)
        # a face spanning the whole simplex is the simplex itself, permuted
        ia, sa = (whole, sgn) if k == m and m > 1 else _face_lookup(mesh, v[:, :k + 1])
        ib, sb = (whole, sgn) if l == m and m > 1 else _face_lookup(mesh, v[:, k:])
        out += sgn * sa * alpha.values[ia] * sb * beta.values[ib]
    return Cochain(mesh, m, out / (factorial(m) * (m + 1)))


class FormCalculus:
    """Assembled DEC operators of one mesh: ``d_k``, ``star_k``, ``delta_k``, ``Delta_k``.

    Operators are built lazily and cached; the instance is otherwise
    immutable.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.star = HodgeStar.from_mesh(mesh)
        self._lap = {}

    @property
    def dim(self):
        return self.mesh.dim

    @cached_property
    def _d(self):
        return tuple(exterior_derivative(self.mesh, k) for k in range(self.mesh.dim))

    @cached_property
    def _delta(self):
        return tuple(codifferential(self.star, self._d[k - 1], k)
                     for k in range(1, self.mesh.dim + 1))

    def d(self, k):
        if not 0 <= k < self.dim:
            raise ValueError(f"exterior derivative degree must be in 0..{self.dim - 1}")
        return self._d[k]

    def delta(self, k):
        if not 1 <= k <= self.dim:
            raise ValueError(f"codifferential degree must be in 1..{self.dim}")
        return self._delta[k - 1]

    def laplacian(self, k):
        if k not in self._lap:
            self._lap[k] = laplacian(self, k)
        return self._lap[k]

    # cochain-level conveniences

    def apply_d(self, alpha):
        if alpha.degree == self.dim:
            return None
        return Cochain(self.mesh, alpha.degree + 1, self._d[alpha.degree] @ alpha.values)

    def apply_delta(self, alpha):
        if alpha.degree == 0:
            return None
        return Cochain(self.mesh, alpha.degree - 1, self._delta[alpha.degree - 1] @ alpha.values)

    def apply_laplacian(self, alpha):
        return Cochain(self.mesh, alpha.degree, self.laplacian(alpha.degree) @ alpha.values)

    def inner(self, alpha, beta):
        return inner_product(self.star, alpha, beta)

    def norm(self, alpha):
        return norm(self.star, alpha)

    def cochain(self, k, values):
        return Cochain(self.mesh, k, values)


def laplacian(calc, k):
    """Hodge Laplacian ``d_{k-1} delta_k + delta_{k+1} d_k`` (boundary terms dropped)."""
    n = calc.dim
    if not 0 <= k <= n:
        raise ValueError(f"Laplacian degree must be in 0..{n}")
    size = calc.mesh.n_simplices(k)
    out = sparse.csr_matrix((size, size))
    if k >= 1:
        out = out + calc.d(k - 1) @ calc.delta(k)
    if k < n:
        out = out + calc.delta(k + 1) @ calc.d(k)
    return out.tocsr()


def de_rham(mesh, k, func, order=5):
    """Integrate a smooth k-form over every k-simplex.

    ``func`` maps points of shape (m, n) to: scalars (k = 0, point values),
    covector components of shape (m, n) (k = 1), or the top-form density
    (k = n = 2).
    """
    if k == 0:
        return Cochain(mesh, 0, np.asarray(func(mesh.vertices), dtype=float))
    if k == 1:
        x0 = mesh.vertices[mesh.edges[:, 0]]
        vec = mesh.edge_vectors()
        t, wq = np.polynomial.legendre.leggauss(order)
        t, wq = 0.5 * (t + 1.0), 0.5 * wq
        total = np.zeros(len(vec))
        for ti, wi in zip(t, wq):
            comp = np.asarray(func(x0 + ti * vec), dtype=float).reshape(len(vec), mesh.dim)
            total += wi * np.einsum("ij,ij->i", comp, vec)
        return Cochain(mesh, 1, total)
    if k == 2 and mesh.dim == 2:
        c = mesh.corners
        # Dunavant degree-5 rule
        a1, b1 = 0.059715871789770, 0.470142064105115
        a2, b2 = 0.797426985353087, 0.101286507323456
        bary = np.array([[1 / 3, 1 / 3, 1 / 3],
                         [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
                         [a2, b2, b2], [b2, a2, b2], [b2, b2, a2]])
        wts = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)
        vals = np.zeros(len(c))
        for lam, wi in zip(bary, wts):
            pts = np.einsum("j,tjd->td", lam, c)
            vals += wi * np.asarray(func(pts), dtype=float)
        return Cochain(mesh, 2, vals * mesh.primal_volumes[2])
    raise ValueError(f"de Rham map of degree {k} not available on a {mesh.dim}-mesh")


def export_coo(matrix, path):
    """Write a sparse operator as ``row col value`` lines (0-based indices)."""
    m = sparse.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    with open(path, "w") as fh:
        fh.write(f"# shape {m.shape[0]} {m.shape[1]} nnz {m.nnz}\n")
        for i in order:
            fh.write(f"{m.row[i]} {m.col[i]} {float(m.data[i])!r}\n")


def load_coo(path):
    with open(path) as fh:
        header = fh.readline().split()
        shape = (int(header[2]), int(header[3]))
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sparse.csr_matrix(shape)
    return sparse.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                             shape=shape)
