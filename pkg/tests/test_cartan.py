import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gencalabi import cartan, jets
from gencalabi.errors import BlockStructureViolated, SingularMetric
from gencalabi.families import FamilySpec, SurfacePair, alpha, build_coframe, build_frame, catalog

from _support import admissible_points, fd_gradient, spec_for

FLAT = SurfacePair("1/(1+x^2+y^2)", "sqrt(1+x^2+y^2)")
TAN_CONST = SurfacePair("1", "1/sqrt(2)")
CP2 = SurfacePair("sqrt(2)/(1+x^2+y^2)", "sqrt(2)/(1+x^2+y^2)")


def diagonal_coframe(point, fn):
    """Coframe ``diag(1, 1, 1, fn(z))`` as jets."""
    z = jets.jet_variable(2, point)
    one = jets.Jet.constant(1.0, point)
    zero = jets.Jet.constant(0.0, point)
    rows = [[one, zero, zero, zero], [zero, one, zero, zero], [zero, zero, one, zero],
            [zero, zero, zero, fn(z)]]
    return jets.stack([jets.stack(r) for r in rows])


def generic_coframe(point, eps=0.3):
    """A coframe with no symmetry at all, built from elementary functions."""
    x, y, z, t = jets.chart_variables(point)
    entries = [
        [1.5 + eps * jets.sin(x * y), eps * z * t, eps * jets.exp(0.3 * x) - eps, eps * y],
        [eps * jets.cos(z) - eps, 1.2 + eps * x * x, eps * t, eps * jets.sinh(0.5 * y)],
        [eps * x * z, eps * jets.tanh(t), 1.3 + eps * jets.cos(x + t), eps * x],
        [eps * y * t, eps * z, eps * jets.sin(y - z), 1.1 + eps * jets.exp(0.2 * z * x)],
    ]
    return jets.stack([jets.stack([e if isinstance(e, jets.Jet) else jets.Jet.constant(e, point)
                                   for e in row]) for row in entries])


def generic_numeric(q, eps=0.3):
    x, y, z, t = q
    th = np.array([
        [1.5 + eps * math.sin(x * y), eps * z * t, eps * math.exp(0.3 * x) - eps, eps * y],
        [eps * math.cos(z) - eps, 1.2 + eps * x * x, eps * t, eps * math.sinh(0.5 * y)],
        [eps * x * z, eps * math.tanh(t), 1.3 + eps * math.cos(x + t), eps * x],
        [eps * y * t, eps * z, eps * math.sin(y - z), 1.1 + eps * math.exp(0.2 * z * x)],
    ])
    return th.T @ th


small = st.floats(-0.6, 0.6, allow_nan=False)
points = st.tuples(small, small, small, small)


# metric ----------------------------------------------------------------------------
def test_identity_coframe_gives_identity_metric():
    p = (0.1, 0.2, 0.3, 0.4)
    g = cartan.metric_from_coframe(jets.Jet.constant(np.eye(4), p))
    assert np.array_equal(g.value, np.eye(4))


def test_scaling_coframe_quadruples_metric():
    p = (0.1, -0.2, 0.3, 0.5)
    th = generic_coframe(p)
    g1 = cartan.metric_from_coframe(th).coeffs
    g2 = cartan.metric_from_coframe(2 * th).coeffs
    np.testing.assert_allclose(g2, 4 * g1, rtol=1e-14, atol=1e-14)


def test_singular_metric_detected():
    p = (0, 0, 0, 0)
    th = jets.Jet.constant(np.diag([1.0, 1.0, 1.0, 1e-7]), p)
    with pytest.raises(SingularMetric):
        cartan.levi_civita(cartan.metric_from_coframe(th))


# Christoffel symbols -----------------------------------------------------------------
def test_constant_metric_has_no_christoffels():
    p = (0.3, 0.1, -0.2, 0.0)
    G = cartan.levi_civita(cartan.metric_from_coframe(jets.Jet.constant(np.diag([1, 2, 3, 4.0]), p)))
    assert np.all(G.value == 0)


@pytest.mark.parametrize("z0", [0.4, 1.0, 2.2])
def test_sphere_block_christoffel(z0):
    p = (0.0, 0.0, z0, 0.3)
    G = cartan.levi_civita(cartan.metric_from_coframe(diagonal_coframe(p, jets.sin))).value
    assert G[3, 2, 3] == pytest.approx(1 / math.tan(z0), rel=1e-13)
    assert G[2, 3, 3] == pytest.approx(-math.sin(z0) * math.cos(z0), rel=1e-13)
    # finite-difference oracle: Gamma^t_zt = (1/2) g^tt d_z g_tt
    fd = 0.5 / math.sin(z0) ** 2 * fd_gradient(lambda q: math.sin(q[0]) ** 2, [z0])[0]
    assert G[3, 2, 3] == pytest.approx(fd, rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(points)
def test_christoffels_against_finite_differences(p):
    G = cartan.levi_civita(cartan.metric_from_coframe(generic_coframe(p))).value
    g0 = generic_numeric(p)
    dg = np.stack([fd_gradient(lambda q, i=i, j=j: generic_numeric(q)[i, j], p) for i in range(4) for j in range(4)])
    dg = dg.reshape(4, 4, 4)                       # dg[i, j, l] = d_l g_ij
    lower = np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    want = 0.5 * np.einsum("kl,lij->kij", np.linalg.inv(g0), lower)
    assert np.max(np.abs(G - want)) <= 1e-8
    assert np.max(np.abs(G - np.swapaxes(G, 1, 2))) <= 1e-14


# Riemann tensor ------------------------------------------------------------------------
def test_flat_metric_has_zero_curvature():
    p = (0.2, 0.1, 0.0, 0.0)
    R = cartan.riemann_coordinates(cartan.metric_from_coframe(jets.Jet.constant(np.eye(4), p)))
    assert np.all(R == 0)


@pytest.mark.parametrize("fn,K", [(jets.sin, 1.0), (jets.sinh, -1.0)])
def test_sectional_curvature_sign(fn, K):
    p = (0.0, 0.0, 0.8, 1.0)
    g = cartan.metric_from_coframe(diagonal_coframe(p, fn))
    R = cartan.riemann_coordinates(g)
    g0 = g.value
    sec = R[2, 3, 3, 2] / (g0[2, 2] * g0[3, 3] - g0[2, 3] ** 2)
    assert sec == pytest.approx(K, abs=1e-13)
    E = np.diag([1.0, 1.0, 1.0, 1.0 / g0[3, 3] ** 0.5])
    ric = cartan.ricci_from_riemann(cartan.to_frame(R, E))
    np.testing.assert_allclose(ric, np.diag([0, 0, K, K]), atol=1e-13)


@settings(max_examples=10, deadline=None)
@given(points)
def test_two_curvature_routes_agree_on_a_generic_coframe(p):
    th = generic_coframe(p)
    E = cartan.frame_from_coframe(th)
    R_coord = cartan.to_frame(cartan.riemann_coordinates(cartan.metric_from_coframe(th)), E.value)
    c = cartan.structure_constants(E, th)
    R_conn = cartan.riemann_from_connection(E, cartan.connection_forms(E, th), c)
    assert np.max(np.abs(R_coord - R_conn)) <= 1e-9 * max(1.0, np.max(np.abs(R_coord)))
    sym, bianchi = cartan.riemann_symmetry_residuals(R_coord)
    assert sym <= 1e-10 and bianchi <= 1e-10


@settings(max_examples=10, deadline=None)
@given(points)
def test_connection_forms_are_antisymmetric(p):
    th = generic_coframe(p)
    E = cartan.frame_from_coframe(th)
    w = cartan.connection_forms_frame(E, th)
    assert np.max(np.abs(w + np.swapaxes(w, 0, 1))) <= 1e-12


def test_orthonormality_of_family_frames():
    for entry in catalog():
        spec = spec_for(entry)
        pt = admissible_points(entry, spec, 1, np.random.default_rng(2))[0]
        th = build_coframe(spec, entry.pair(), pt)
        E = build_frame(spec, entry.pair(), pt).value
        g = cartan.metric_from_coframe(th).value
        assert np.max(np.abs(E @ g @ E.T - np.eye(4))) <= 1e-10


# 2-forms and complex structures --------------------------------------------------------
def test_orientation_and_hodge_star():
    np.testing.assert_allclose(cartan.hodge_star(cartan.OMEGA_BAR), cartan.OMEGA_BAR, atol=1e-15)
    for F in (cartan.OMEGA, cartan.PHI, cartan.PSI):
        np.testing.assert_allclose(cartan.hodge_star(F), -F, atol=1e-15)
    for F in (cartan.OMEGA, cartan.PHI, cartan.PSI, cartan.OMEGA_BAR):
        assert cartan.form_norm_sq(F) == pytest.approx(1.0)


def test_complex_structures_square_to_minus_one():
    for J in (cartan.JBAR, cartan.JHERM):
        np.testing.assert_array_equal(J @ J, -np.eye(4))
        np.testing.assert_array_equal(J.T @ J, np.eye(4))
    e = np.eye(4)
    np.testing.assert_array_equal(cartan.JBAR @ e[2], -e[3])
    np.testing.assert_array_equal(cartan.JHERM @ e[2], e[3])
    np.testing.assert_array_equal(cartan.JBAR @ e[0], e[1])


def test_nijenhuis_vanishes_on_flat_frame():
    assert cartan.nijenhuis_residual(cartan.JBAR, np.zeros((4, 4, 4))) == 0
    assert cartan.nijenhuis_residual(cartan.JHERM, np.zeros((4, 4, 4))) == 0


@pytest.mark.parametrize("entry", catalog(), ids=lambda e: e.name)
def test_nijenhuis_detects_a_perturbed_coframe(entry):
    spec = spec_for(entry)
    pt = admissible_points(entry, spec, 1, np.random.default_rng(4))[0]
    th = build_coframe(spec, entry.pair(), pt)
    E = build_frame(spec, entry.pair(), pt)
    c = cartan.structure_constants(E, th)
    assert cartan.nijenhuis_residual(cartan.JBAR, c) <= 1e-8
    assert cartan.nijenhuis_residual(cartan.JHERM, c) <= 1e-8
    x = jets.jet_variable(0, th.point)
    bumped = th.copy()
    bumped[2, 1] = th[2, 1] + 0.1 * x
    Eb = cartan.frame_from_coframe(bumped)
    cb = cartan.structure_constants(Eb, bumped)
    assert max(cartan.nijenhuis_residual(cartan.JBAR, cb), cartan.nijenhuis_residual(cartan.JHERM, cb)) > 1e-3


def test_kahler_residual_flat_and_nabla_omega_norm():
    assert cartan.kahler_residual(np.zeros((4, 4, 4))) == 0
    spec = FamilySpec("SemiSymmetric")
    pt = (0.1, -0.2, -2.0, 0.7)
    th = build_coframe(spec, FLAT, pt)
    E = build_frame(spec, FLAT, pt)
    w = cartan.connection_forms_frame(E, th)
    assert cartan.kahler_residual(w) <= 1e-8
    assert cartan.nabla_norm_sq(w) == pytest.approx(2.0, abs=1e-12)     # alpha = 1 at z = -2
    nabla = cartan.covariant_derivative_2form(cartan.OMEGA, w)
    np.testing.assert_allclose(nabla[0], cartan.PHI, atol=1e-12)
    np.testing.assert_allclose(nabla[1], cartan.PSI, atol=1e-12)
    assert np.max(np.abs(nabla[2:])) <= 1e-12


@pytest.mark.parametrize("entry", catalog(), ids=lambda e: e.name)
def test_connection_form_omega31(entry):
    spec = spec_for(entry)
    for pt in admissible_points(entry, spec, 3, np.random.default_rng(9)):
        th = build_coframe(spec, entry.pair(), pt)
        E = build_frame(spec, entry.pair(), pt)
        w = cartan.connection_forms_frame(E, th)
        a0 = alpha(spec, jets.jet_variable(2, th.point)).value
        np.testing.assert_allclose(w[2, 0], [0, -a0 / 2, 0, 0], atol=1e-9 * max(1, abs(a0)))


# Kahler curvature tensors ------------------------------------------------------------
def _unit(rng):
    v = rng.normal(size=4)
    return v / np.linalg.norm(v)


def test_pi_is_complex_projective_curvature():
    Pi, Phi, Psi = cartan.kahler_tensors()
    for T in (Pi, Phi, Psi):
        sym, bianchi = cartan.riemann_symmetry_residuals(T)
        assert sym <= 1e-15 and bianchi <= 1e-15
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = _unit(rng)
        assert cartan.holomorphic_curvature(Pi, X) == pytest.approx(1.0, abs=1e-14)
    e = np.eye(4)
    assert Pi[0, 2, 2, 0] == pytest.approx(0.25)            # totally real plane
    assert Pi[0, 1, 1, 0] == pytest.approx(1.0)             # complex line
    ric = cartan.ricci_from_riemann(4 * Pi)
    np.testing.assert_allclose(ric, 6 * np.eye(4), atol=1e-14)
    M, eigs = cartan.weyl_minus(4 * Pi)
    assert np.max(np.abs(eigs)) <= 1e-14
    assert cartan.holomorphic_curvature(Psi, e[0]) == pytest.approx(1.0)
    assert cartan.holomorphic_curvature(Psi, e[2]) == 0


def test_constant_sectional_curvature_has_no_weyl_part():
    g = np.eye(4)
    R = np.einsum("ad,bc->abcd", g, g) - np.einsum("ac,bd->abcd", g, g)
    assert R[0, 1, 1, 0] == 1
    assert np.max(np.abs(cartan.weyl_tensor(R))) <= 1e-15


def test_qch_scan_on_space_form_tensor():
    Pi, _, _ = cartan.kahler_tensors()
    out = cartan.qch_scan(4 * Pi, np.random.default_rng(1), samples=32)
    assert out["max_spread"] <= 1e-13
    np.testing.assert_allclose(out["fit"], (4, 0, 0), atol=1e-12)
    assert out["fit_residual"] <= 1e-13


def test_decomposition_requires_block_ricci():
    p = (0.1, 0.2, 0.3, 0.4)
    th = generic_coframe(p)
    E = cartan.frame_from_coframe(th)
    R = cartan.riemann_coordinates(cartan.metric_from_coframe(th))
    cd = cartan.frame_curvature(R, E, th, jets.Jet.constant(1.0, p))
    with pytest.raises(BlockStructureViolated):
        cartan.decomposition_check(cd)


# family examples ------------------------------------------------------------------------
def _curvature(spec, pair, pt):
    th = build_coframe(spec, pair, pt)
    E = build_frame(spec, pair, pt)
    R = cartan.riemann_coordinates(cartan.metric_from_coframe(th))
    return cartan.frame_curvature(R, E, th, alpha(spec, jets.jet_variable(2, th.point)))


def test_flat_example_curvature():
    cd = _curvature(FamilySpec("SemiSymmetric"), FLAT, (0.2, -0.1, -1.3, 0.4))
    assert abs(cd.tau) <= 1e-10 and abs(cd.K12) <= 1e-10 and abs(cd.K34) <= 1e-10
    assert np.max(np.abs(cd.riemann)) <= 1e-10
    assert np.max(np.abs(cd.wminus)) <= 1e-10
    assert cartan.decomposition_check(cd) <= 1e-8


@pytest.mark.parametrize("z", [-0.5, 0.2, 0.45])
def test_tan_constant_example_curvature(z):
    cd = _curvature(FamilySpec("Tan", 1), TAN_CONST, (0.0, 0.0, z, 0.3))
    kappa = -6 / math.cos(z) ** 2
    assert cd.K34 == pytest.approx(4.0, abs=1e-9)
    assert cd.kappa == pytest.approx(kappa, abs=1e-8)
    np.testing.assert_allclose(np.sort(cd.wminus_eigs), np.sort([kappa / 6, -kappa / 12, -kappa / 12]), atol=1e-8)
    assert abs(np.trace(cd.wminus)) <= 1e-8
    assert cartan.decomposition_check(cd) <= 1e-6
    assert cd.lee_sq + cd.delta_theta == pytest.approx(4.0, abs=1e-9)
    assert cd.lee_sq_generic + cd.delta_theta_generic == pytest.approx(4.0, abs=1e-8)


def test_cp2_example_is_four_pi():
    cd = _curvature(FamilySpec("Tan", 1), CP2, (0.3, -0.2, 0.4, 1.1))
    Pi, _, _ = cartan.kahler_tensors()
    assert np.max(np.abs(cd.riemann - 4 * Pi)) <= 1e-6
    assert cd.tau == pytest.approx(24.0, abs=1e-8)
    assert abs(cd.kappa) <= 1e-8 and abs(cd.delta_ric) <= 1e-8
    assert cartan.decomposition_residual(cd.riemann, 24.0, 0.0, 0.0) <= 1e-6
