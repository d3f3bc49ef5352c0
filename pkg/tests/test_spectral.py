import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from formlab.criterion import generalized_distance, truncate_P
from formlab.forms import Cochain, FormCalculus
from formlab.mesh import build_interval_mesh, distance_from_base
from formlab.potential import Envelope, PotentialField, extract_envelope, radial_potential
from formlab.spectral import (DENSE_LIMIT, bc_sensitivity_sweep, cutoff_profile,
                              energy_estimate_check, lemma1_diagnostic, low_eigenvalues,
                              smooth_step, symmetry_defect, symmetry_defect_flux,
                              truncated_operator)
from formlab.weyl import LIMIT_CIRCLE, LIMIT_POINT, weyl_classify_1d


def _dirichlet_oracle(n_cells, L, m):
    # interior second-difference eigenvalues on a uniform grid
    h = L / n_cells
    j = np.arange(1, m + 1)
    return 4 / h ** 2 * np.sin(j * np.pi * h / (2 * L)) ** 2


def test_dirichlet_interval(interval1k):
    op = truncated_operator(interval1k, PotentialField.zero(interval1k), 0, bc="dirichlet")
    lam = low_eigenvalues(op, 3)
    assert lam[0] == pytest.approx(np.pi ** 2, rel=0.01)
    np.testing.assert_allclose(lam, _dirichlet_oracle(1000, 1.0, 3), rtol=1e-9)


def test_neumann_interval(interval1k):
    op = truncated_operator(interval1k, PotentialField.zero(interval1k), 0, bc="neumann")
    lam = low_eigenvalues(op, 2)
    assert abs(lam[0]) < 1e-8
    assert lam[1] == pytest.approx(np.pi ** 2, rel=0.01)


def test_truncated_operator_is_symmetric(disk):
    r = distance_from_base(disk).values
    V = radial_potential(disk, lambda t: -t ** 2)
    for k in (0, 1, 2):
        for bc in ("dirichlet", "neumann"):
            op = truncated_operator(disk, V, k, R=3.0, bc=bc, r=r)
            assert op.symmetry_error() < 1e-12


def test_truncated_operator_errors(interval1k):
    V = PotentialField.zero(interval1k)
    with pytest.raises(ValueError, match="boundary condition"):
        truncated_operator(interval1k, V, 0, R=0.5, bc="robin")
    with pytest.raises(ValueError, match="not below"):
        truncated_operator(interval1k, V, 0, R=2.0)
    inf = np.zeros(interval1k.n_vertices, dtype=bool)
    inf[10] = True
    well = PotentialField.scalar(np.zeros(interval1k.n_vertices), 1, infinite=inf)
    with pytest.raises(ValueError, match="infinite"):
        truncated_operator(interval1k, well, 0, R=0.5)


def test_diagonal_eigenvalues():
    H = sparse.diags(np.arange(10.0, 0.0, -1.0))
    np.testing.assert_allclose(low_eigenvalues(H, 3), [1.0, 2.0, 3.0])


def test_weighted_pencil():
    H = sparse.diags([2.0, 6.0, 12.0])
    vals, vecs = low_eigenvalues(H, 2, weights=np.array([1.0, 2.0, 3.0]), return_vectors=True)
    np.testing.assert_allclose(vals, [2.0, 6.0])
    np.testing.assert_allclose(np.abs(vecs[:, 0]), [1.0, 0.0, 0.0], atol=1e-12)


def test_sparse_path_matches_oracle():
    n = 3000
    assert n > DENSE_LIMIT
    m = build_interval_mesh(1.0, n)
    op = truncated_operator(m, PotentialField.zero(m), 0)
    lam = low_eigenvalues(op, 4, seed=3)
    np.testing.assert_allclose(lam, _dirichlet_oracle(n, 1.0, 4), rtol=1e-8)
    assert np.array_equal(lam, low_eigenvalues(op, 4, seed=3))


@settings(max_examples=20, deadline=None)
@given(st.floats(-50, 50))
def test_constant_shift(c):
    m = build_interval_mesh(1.0, 200)
    base = low_eigenvalues(truncated_operator(m, PotentialField.zero(m), 0), 3)
    shifted = low_eigenvalues(
        truncated_operator(m, PotentialField.scalar(np.full(m.n_vertices, c), 1), 0), 3)
    np.testing.assert_allclose(shifted, base + c, rtol=1e-10, atol=1e-8)


def test_eigenvectors_are_weighted_orthonormal(disk):
    op = truncated_operator(disk, PotentialField.zero(disk), 1, R=3.0)
    vals, vecs = low_eigenvalues(op, 4, return_vectors=True)
    G = vecs.T @ (op.weights[:, None] * vecs)
    np.testing.assert_allclose(G, np.eye(4), atol=1e-10)
    np.testing.assert_allclose(op.matrix @ vecs, vecs * vals, atol=1e-8)


@pytest.fixture(scope="module")
def half_line():
    return build_interval_mesh(12.0, 2400)


@pytest.mark.parametrize("func", [lambda t: -t ** 2, lambda t: -t ** 4, lambda t: 0 * t,
                                  lambda t: t ** 2])
def test_sweep_agrees_with_weyl(half_line, func):
    r = distance_from_base(half_line).values
    sweep = bc_sensitivity_sweep(half_line, radial_potential(half_line, func, r=r), 0,
                                 [4.0, 6.0, 8.0, 10.0])
    assert sweep.complete
    weyl = weyl_classify_1d(func, T=30.0)
    expected = {LIMIT_POINT: True, LIMIT_CIRCLE: False}[weyl.classification]
    assert sweep.boundary_insensitive is expected
    assert sweep.resolvent_trend < 0


def test_sweep_resolvent_gap_inverse_radius(half_line):
    r = distance_from_base(half_line).values
    sweep = bc_sensitivity_sweep(half_line, radial_potential(half_line, lambda t: -t ** 2, r=r),
                                 0, [4.0, 6.0, 8.0, 10.0])
    assert sweep.resolvent_slope == pytest.approx(-1.0, abs=0.05)
    assert sweep.resolvent_trend == pytest.approx(-1.0)


def test_sweep_rejects_unsorted(half_line):
    with pytest.raises(ValueError):
        bc_sensitivity_sweep(half_line, PotentialField.zero(half_line), 0, [4.0, 2.0])


def test_cutoff_profile():
    assert smooth_step(0.0) == 0 and smooth_step(1.0) == 1
    t = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 2.0])
    np.testing.assert_allclose(cutoff_profile(t), [1, 1, 1, 0.5, 0, 0])
    x = np.linspace(0, 1, 1001)
    assert np.all(np.diff(smooth_step(x)) >= 0)


def _compact_form(mesh, k, R, rng):
    r = distance_from_base(mesh).values
    inner = (r < 0.9 * R) & ~mesh.boundary
    ok = inner[mesh.simplices[k]].all(axis=1)
    vals = rng.standard_normal(mesh.n_simplices(k)) * ok
    return Cochain(mesh, k, vals)


@pytest.mark.parametrize("beta", [0, 1, 2])
def test_energy_estimate_interval(beta, rng):
    m = build_interval_mesh(10.0, 400)
    V = radial_potential(m, lambda t: -(1 + t) ** beta)
    calc = FormCalculus(m)
    env = extract_envelope(V)
    for k in (0, 1):
        for _ in range(10):
            est = energy_estimate_check(m, V, _compact_form(m, k, 8.0, rng), 8.0,
                                        envelope=env, calc=calc)
            assert est.slack >= -1e-8 * max(1.0, est.rhs)


@pytest.mark.parametrize("beta", [0, 2])
def test_energy_estimate_disk(beta, disk, rng):
    V = radial_potential(disk, lambda t: -(1 + t) ** beta)
    calc = FormCalculus(disk)
    env = extract_envelope(V)
    for k in (0, 1, 2):
        for _ in range(5):
            est = energy_estimate_check(disk, V, _compact_form(disk, k, 3.5, rng), 3.5,
                                        envelope=env, calc=calc)
            assert est.slack >= -1e-8 * max(1.0, est.rhs)


def test_energy_estimate_zero_form(disk):
    V = PotentialField.zero(disk)
    est = energy_estimate_check(disk, V, Cochain(disk, 1, np.zeros(disk.n_simplices(1))), 2.0)
    assert est.J == 0 and est.rhs == 0


def test_lemma1_zero_weight(interval1k, rng):
    env = Envelope.from_weight(np.zeros(interval1k.n_vertices))
    a = Cochain(interval1k, 0, rng.standard_normal(interval1k.n_vertices))
    assert lemma1_diagnostic(interval1k, env, a) == (0.0, 0.0)


def test_lemma1_bounded_on_eigenvectors(half_line):
    r = distance_from_base(half_line).values
    V = radial_potential(half_line, lambda t: -t ** 2, r=r)
    out = []
    for R in (4.0, 6.0, 8.0):
        op = truncated_operator(half_line, V, 0, R=R, natural=(half_line.base_point,), r=r)
        _, vecs = low_eigenvalues(op, 1, return_vectors=True)
        a = Cochain(op.mesh, 0, op.embed(vecs[:, 0]))
        env = extract_envelope(op.potential)
        out.append(lemma1_diagnostic(op.mesh, env, a, calc=op.calc))
    out = np.array(out)
    assert np.all(np.isfinite(out))
    assert np.all(out < 1.0)


@pytest.fixture(scope="module")
def defect_setup():
    m = build_interval_mesh(20.0, 4000)
    r = distance_from_base(m).values
    V = radial_potential(m, lambda t: -t ** 2, r=r)
    with np.errstate(divide="ignore"):
        bump = np.where((r > 0.5) & (r < 19.5),
                        np.exp(-1 / np.clip((r - 0.5) * (19.5 - r), 1e-300, None)), 0.0)
    a = Cochain(m, 0, bump * np.exp(1j * r))
    b = Cochain(m, 0, bump * np.exp(-2j * r) * (1 + r))
    return m, V, a, b


@pytest.mark.parametrize("R", [1.0, 2.0, 4.0, 8.0])
def test_symmetry_defect_matches_flux(defect_setup, R):
    m, V, a, b = defect_setup
    P = generalized_distance(m, extract_envelope(V)).values
    chi = 1 - truncate_P(P, R) / R
    I = symmetry_defect(m, V, a, b, R)
    assert abs(I - symmetry_defect_flux(m, a, b, chi)) <= 1e-10 * max(1.0, abs(I))


def test_symmetry_defect_constant_cutoff(defect_setup):
    m, V, a, b = defect_setup
    I = symmetry_defect(m, V, a, b, 4.0, chi=np.ones(m.n_vertices))
    scale = abs(FormCalculus(m).norm(a)) * 1e4
    assert abs(I) < 1e-12 * scale


def test_symmetry_defect_real_diagonal(defect_setup):
    m, V, a, _ = defect_setup
    re = Cochain(m, 0, a.values.real)
    assert abs(symmetry_defect(m, V, re, re, 3.0)) < 1e-12


def test_symmetry_defect_inverse_radius(defect_setup):
    # once R exceeds P on the support, chi = 1 - P / R and I_R is exactly I_1' / R
    m, V, a, b = defect_setup
    P = generalized_distance(m, extract_envelope(V)).values
    R0 = P.max() + 1
    I = [symmetry_defect(m, V, a, b, R) for R in (R0, 2 * R0, 4 * R0)]
    np.testing.assert_allclose([R0 * I[0], 2 * R0 * I[1], 4 * R0 * I[2]],
                               R0 * I[0], rtol=1e-7)


def test_symmetry_defect_rejects_boundary_support(defect_setup):
    m, V, a, b = defect_setup
    bad = a.values.copy()
    bad[-1] = 1.0
    with pytest.raises(ValueError, match="boundary"):
        symmetry_defect(m, V, Cochain(m, 0, bad), b, 2.0)
