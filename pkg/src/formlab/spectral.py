"""Numerical probes of essential self-adjointness on truncated domains.

Truncations ``r <= R`` of a mesh carry an artificial boundary where a
Dirichlet or Neumann condition is imposed.  Sensitivity of the low spectrum
to that choice, the discrete energy estimate, and the integration-by-parts
identities are computed here.  The one-dimensional Weyl classifier lives in
:mod:`formlab.weyl`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, spsolve
from scipy.stats import kendalltau

from .criterion import generalized_distance, truncate_P
from .forms import Cochain, FormCalculus, multiply_by_function, wedge
from .mesh import distance_from_base
from .potential import PotentialField, assemble_H, extract_envelope

DENSE_LIMIT = 2000
# log-log slope of the resolvent gap below which boundary data is forgotten
VANISHING_SLOPE = -0.5
BOUNDARY_CONDITIONS = ("dirichlet", "neumann")


class EigensolveError(RuntimeError):
    """The sparse eigensolver did not converge."""


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """``H`` on the truncation ``r <= R`` under a boundary condition.

    ``matrix`` acts on the retained k-simplices ``dofs`` of ``mesh`` (the
    truncated sub-mesh) and is symmetric in the diagonal inner product
    ``weights``.  ``parent`` maps sub-mesh vertices to the original mesh.
    """

    mesh: object
    calc: FormCalculus
    potential: PotentialField
    degree: int
    R: float
    bc: str
    matrix: sparse.csr_matrix
    weights: np.ndarray
    dofs: np.ndarray
    parent: np.ndarray

    @property
    def size(self):
        return self.matrix.shape[0]

    def symmetry_error(self):
        """Largest entry of ``S H - (S H)^T`` relative to ``max |S H|``."""
        A = sparse.diags(self.weights) @ self.matrix
        scale = max(abs(A).max(), 1e-300)
        diff = A - A.T
        return float(abs(diff).max() / scale) if diff.nnz else 0.0

    def embed(self, values):
        """Extend values on ``dofs`` by zero to all k-simplices of the sub-mesh."""
        out = np.zeros(self.mesh.n_simplices(self.degree), dtype=np.result_type(values, float))
        out[self.dofs] = values
        return out


def truncated_operator(mesh, V, k, R=None, bc="dirichlet", natural=(), r=None):
    """Assemble ``H_R`` on ``{r <= R}``.

    Parameters
    ----------
    mesh : SimplicialMesh
    V : PotentialField
        Potential on the full mesh; must be finite on the truncation.
    k : int
        Form degree.
    R : float, optional
        Truncation radius (graph distance from the base point).  ``None``
        keeps the whole mesh.
    bc : {"dirichlet", "neumann"}
        Dirichlet drops the k-simplices spanned by boundary vertices;
        Neumann keeps them with the do-nothing closure of the discrete
        Laplacian.
    natural : sequence of int
        Parent vertex indices exempt from the Dirichlet condition (for
        instance a regular endpoint at the origin).
    """
    if bc not in BOUNDARY_CONDITIONS:
        raise ValueError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}")
    if R is None:
        sub, used = mesh, np.arange(mesh.n_vertices)
    else:
        rr = distance_from_base(mesh).values if r is None else np.asarray(r, dtype=float)
        if R >= rr.max():
            raise ValueError(f"truncation radius {R:g} is not below the mesh extent {rr.max():g}")
        mask = rr <= R * (1 + 1e-12)
        try:
            sub, used = mesh.restrict(mask)
        except ValueError as exc:
            raise ValueError(f"empty interior at R={R:g}") from exc
    Vs = PotentialField(V.blocks[used], V.infinite[used])
    if Vs.infinite.any():
        raise ValueError("potential has infinite wells inside the truncation")
    calc = FormCalculus(sub)
    H = assemble_H(calc, Vs, k)
    n_k = sub.n_simplices(k)
    dofs = np.arange(n_k)
    if bc == "dirichlet" and k < sub.dim:
        pinned = sub.boundary & ~np.isin(used, np.asarray(natural, dtype=np.int64))
        drop = pinned[sub.simplices[k]].all(axis=1)
        dofs = np.nonzero(~drop)[0]
        if len(dofs) == 0:
            raise ValueError("empty interior after imposing the boundary condition")
        H = H[dofs][:, dofs]
    return TruncatedOperator(sub, calc, Vs, k, np.inf if R is None else float(R), bc,
                             H.tocsr(), calc.star.weights[k][dofs], dofs, used)


def _gershgorin_lower(A):
    A = sparse.csr_matrix(A)
    diag = A.diagonal()
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - off))


def low_eigenvalues(H, m, weights=None, seed=0, return_vectors=False, tol=1e-10):
    """The ``m`` algebraically smallest eigenvalues of the pencil ``(S H, S)``.

    ``H`` is a :class:`TruncatedOperator` or a matrix; ``weights`` is the
    diagonal of ``S`` (identity when omitted).  Small problems use a dense
    solver; larger ones use shift-invert Lanczos below a Gershgorin bound with
    a seeded start vector.  Eigenvectors are returned in cochain coordinates,
    normalized in the weighted inner product.
    """
    if isinstance(H, TruncatedOperator):
        weights = H.weights
        H = H.matrix
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError("matrix must be square")
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < {n}")
    s = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    root = np.sqrt(s)
    A = sparse.diags(root) @ sparse.csr_matrix(H) @ sparse.diags(1.0 / root)
    A = 0.5 * (A + A.T)
    if n <= DENSE_LIMIT:
        vals, vecs = eigh(A.toarray(), subset_by_index=(0, m - 1))
    else:
        sigma = _gershgorin_lower(A) - 1.0
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            vals, vecs = eigsh(A.tocsc(), k=m, sigma=sigma, which="LM", v0=v0, tol=tol)
        except ArpackNoConvergence as exc:
            raise EigensolveError(f"Lanczos did not converge for {m} eigenvalues") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    if not return_vectors:
        return vals
    vecs = vecs / root[:, None]
    # fix the sign so that results are reproducible
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    return vals, vecs


# ------------------------------------------------------------ BC sweep


@dataclass(frozen=True)
class SweepRow:
    R: float
    lambda_dirichlet: float
    lambda_neumann: float
    gap: float
    resolvent_gap: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    gap_trend: float
    resolvent_trend: float
    resolvent_slope: float
    complete: bool
    diagnostics: str = ""

    @property
    def radii(self):
        return np.array([row.R for row in self.rows])

    @property
    def gaps(self):
        return np.array([row.gap for row in self.rows])

    @property
    def resolvent_gaps(self):
        return np.array([row.resolvent_gap for row in self.rows])

    @property
    def gap_decreasing(self):
        return bool(np.all(np.diff(self.gaps) < 0))

    @property
    def resolvent_decreasing(self):
        return bool(np.all(np.diff(self.resolvent_gaps) < 0))

    @property
    def boundary_insensitive(self):
        """Resolvent gap decays at least like ``R**VANISHING_SLOPE``."""
        return bool(self.resolvent_slope <= VANISHING_SLOPE)


def _probe(op, r_probe, rr):
    """Indicator of the k-simplices lying inside ``r <= r_probe``."""
    r_sub = rr[op.parent]
    inside = r_sub[op.mesh.simplices[op.degree]].max(axis=1) <= r_probe
    return inside.astype(float)


def resolvent_response(op, f, z=1j):
    """``(H - z)^{-1} f`` on the retained dofs, extended by zero."""
    A = (op.matrix - z * sparse.identity(op.size)).tocsc()
    return op.embed(spsolve(A, f[op.dofs].astype(complex)))


def bc_sensitivity_sweep(mesh, V, k, radii, r_probe=2.0, natural_origin=True):
    """Dirichlet/Neumann gaps of the lowest eigenvalue over truncation radii.

    Each row also carries the resolvent gap: the weighted norm, on the probe
    region ``r <= r_probe``, of the difference of ``(H_R - i)^{-1} f`` under
    the two conditions, with ``f`` the probe indicator.  Trend statistics are
    Kendall's tau of each column against ``R`` (-1 is strictly decreasing)
    and the log-log slope of the resolvent gap.
    An eigensolve failure stops the sweep and returns the partial table.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    rr = distance_from_base(mesh).values
    natural = (mesh.base_point,) if natural_origin else ()
    rows = []
    diag = ""
    for R in radii:
        try:
            ops = {bc: truncated_operator(mesh, V, k, R, bc, natural=natural, r=rr)
                   for bc in BOUNDARY_CONDITIONS}
            lam = {bc: float(low_eigenvalues(op, 1)[0]) for bc, op in ops.items()}
        except EigensolveError as exc:
            diag = f"aborted at R={R:g}: {exc}"
            break
        f = _probe(ops["neumann"], r_probe, rr)
        u = {bc: resolvent_response(op, f) for bc, op in ops.items()}
        w = ops["neumann"].calc.star.weights[k]
        diff = (u["dirichlet"] - u["neumann"]) * f
        res = float(np.sqrt(np.sum(w * np.abs(diff) ** 2)))
        rows.append(SweepRow(float(R), lam["dirichlet"], lam["neumann"],
                             abs(lam["dirichlet"] - lam["neumann"]), res))
    complete = len(rows) == len(radii)

    def trend(col):
        if len(rows) < 2:
            return float("nan")
        return float(kendalltau([row.R for row in rows], col).statistic)

    slope = float("nan")
    if len(rows) >= 2:
        res = np.array([row.resolvent_gap for row in rows])
        with np.errstate(divide="ignore"):
            slope = float(np.polyfit(np.log([row.R for row in rows]),
                                     np.log(np.maximum(res, 1e-300)), 1)[0])
    return SweepResult(tuple(rows), trend([row.gap for row in rows]),
                       trend([row.resolvent_gap for row in rows]), slope, complete, diag)


# ------------------------------------------------------- energy estimate


def smooth_step(x):
    """Degree-7 smoothstep: 0 at 0, 1 at 1, first three derivatives vanish at both ends."""
    x = np.clip(x, 0.0, 1.0)
    return x ** 4 * (35 - 84 * x + 70 * x ** 2 - 20 * x ** 3)


def cutoff_profile(t):
    """``Psi(t)``: 1 for ``t <= 1/2``, 0 for ``t >= 1``, smooth in between."""
    return 1.0 - smooth_step(2.0 * np.asarray(t, dtype=float) - 1.0)


def cutoff_function(mesh, envelope, R, r=None):
    """``psi_R = Psi(r / R) * w`` on vertices."""
    rr = distance_from_base(mesh).values if r is None else np.asarray(r, dtype=float)
    return cutoff_profile(rr / R) * envelope.w


@dataclass(frozen=True)
class EnergyEstimate:
    J: float
    rhs: float
    K1: float
    alpha_norm: float
    H_alpha_norm: float

    @property
    def slack(self):
        return self.rhs - self.J ** 2


def _weighted_norm(calc, phi, form):
    if form is None:
        return 0.0
    return calc.norm(multiply_by_function(calc.mesh, phi, form))


def energy_estimate_check(mesh, V, alpha, R, envelope=None, calc=None):
    """Both sides of ``J**2 <= 4 K1 |a| J + 2 |a| |H a| + 2 |a|**2``.

    ``J**2 = |psi d a|**2 + |psi delta a|**2`` with ``psi = Psi(r/R) w`` and
    ``K1`` the largest edge gradient of ``psi``.
    """
    calc = FormCalculus(mesh) if calc is None else calc
    envelope = extract_envelope(V) if envelope is None else envelope
    psi = cutoff_function(mesh, envelope, R)
    e = mesh.edges
    K1 = float(np.max(np.abs(psi[e[:, 1]] - psi[e[:, 0]]) / mesh.edge_lengths))
    a_norm = calc.norm(alpha)
    if a_norm == 0:
        return EnergyEstimate(0.0, 0.0, K1, 0.0, 0.0)
    J = float(np.hypot(_weighted_norm(calc, psi, calc.apply_d(alpha)),
                       _weighted_norm(calc, psi, calc.apply_delta(alpha))))
    Ha = Cochain(mesh, alpha.degree, assemble_H(calc, V, alpha.degree) @ alpha.values)
    Ha_norm = calc.norm(Ha)
    rhs = 4 * K1 * a_norm * J + 2 * a_norm * Ha_norm + 2 * a_norm ** 2
    return EnergyEstimate(J, float(rhs), K1, a_norm, Ha_norm)


def lemma1_diagnostic(mesh, envelope, alpha, calc=None):
    """``(|w d a|, |w delta a|)``; a missing derivative contributes 0."""
    calc = FormCalculus(mesh) if calc is None else calc
    return (_weighted_norm(calc, envelope.w, calc.apply_d(alpha)),
            _weighted_norm(calc, envelope.w, calc.apply_delta(alpha)))


# ----------------------------------------------------------- identities


def adjointness_defect(calc, alpha, beta):
    """``|<d a, b> - <a, delta b>|`` for a k-cochain ``a`` and (k+1)-cochain ``b``."""
    return float(abs(calc.inner(calc.apply_d(alpha), beta) - calc.inner(alpha, calc.apply_delta(beta))))


def weighted_ibp_terms(calc, phi, alpha, beta):
    """Left side and right side of the weighted integration by parts.

    ``<phi Lap a, b> = <phi d a, d b> + <phi delta a, delta b>
    + <d a, d phi ^ b> - <d phi ^ delta a, b>``
    """
    mesh = calc.mesh
    lhs = calc.inner(multiply_by_function(mesh, phi, calc.apply_laplacian(alpha)), beta)
    dphi = calc.apply_d(Cochain(mesh, 0, phi))
    rhs = 0.0
    da, db = calc.apply_d(alpha), calc.apply_d(beta)
    if da is not None:
        rhs += calc.inner(multiply_by_function(mesh, phi, da), db)
        rhs += calc.inner(da, wedge(dphi, beta))
    sa, sb = calc.apply_delta(alpha), calc.apply_delta(beta)
    if sa is not None:
        rhs += calc.inner(multiply_by_function(mesh, phi, sa), sb)
        rhs -= calc.inner(wedge(dphi, sa), beta)
    return lhs, rhs


def weighted_ibp_residual(calc, phi, alpha, beta):
    lhs, rhs = weighted_ibp_terms(calc, phi, alpha, beta)
    return float(abs(lhs - rhs))


def _check_interior(op_mesh, form, name):
    touches = op_mesh.boundary[op_mesh.simplices[form.degree]].any(axis=1)
    if np.any(touches & (form.values != 0)):
        raise ValueError(f"{name} is supported on the boundary")


def symmetry_defect(mesh, V, alpha, beta, R, envelope=None, calc=None, chi=None):
    """``I_R = <H a, chi b> - <chi a, H b>`` with ``chi = 1 - min(P, R) / R``.

    ``P`` is the generalized distance of the envelope of ``V``.  Passing
    ``chi`` overrides the cutoff (``chi = 1`` gives the plain symmetry
    defect).  Both forms must vanish on boundary simplices.
    """
    calc = FormCalculus(mesh) if calc is None else calc
    for form, name in ((alpha, "alpha"), (beta, "beta")):
        _check_interior(mesh, form, name)
    if chi is None:
        envelope = extract_envelope(V) if envelope is None else envelope
        P = generalized_distance(mesh, envelope).values
        chi = 1.0 - truncate_P(P, R) / R
    H = assemble_H(calc, V, alpha.degree)
    Ha = Cochain(mesh, alpha.degree, H @ alpha.values)
    Hb = Cochain(mesh, beta.degree, H @ beta.values)
    return complex(calc.inner(Ha, multiply_by_function(mesh, chi, beta))
                   - calc.inner(multiply_by_function(mesh, chi, alpha), Hb))


def symmetry_defect_flux(mesh, alpha, beta, chi):
    """Edge-flux form of the defect for 0-forms on a 1-D mesh.

    ``I_R = sum_e star_1 d chi_e (d a_e conj(b_e) - a_e conj(d b_e))`` where
    ``a_e`` and ``b_e`` are edge means; the potential cancels exactly.
    """
    if mesh.dim != 1 or alpha.degree != 0:
        raise ValueError("flux form is implemented for 0-forms on 1-D meshes")
    e = mesh.edges
    s1 = mesh.dual_volumes[1] / mesh.primal_volumes[1]

    def jump(v):
        return v[e[:, 1]] - v[e[:, 0]]

    def mean(v):
        return 0.5 * (v[e[:, 1]] + v[e[:, 0]])

    a, b = alpha.values, beta.values
    dchi = jump(np.asarray(chi, dtype=float))
    return complex(np.sum(s1 * dchi * (jump(a) * np.conj(mean(b)) - mean(a) * np.conj(jump(b)))))
