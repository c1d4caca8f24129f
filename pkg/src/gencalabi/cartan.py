"""Family-agnostic curvature engine.

Everything here starts from a jet-valued coframe and never looks at which
family produced it.  The coordinate route (metric, Christoffel symbols,
Riemann tensor) and the frame route (brackets, exterior derivatives,
connection forms from the Koszul formula) are computed independently so
that each can check the other.

Conventions: ``R(X, Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y] Z`` and
``R(X, Y, Z, W) = g(R(X, Y)Z, W)``; sectional curvature of an orthonormal
pair is ``R(X, Y, Y, X)``.  Frame indices run 0..3 for ``E_1..E_4``.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import jets
from .errors import BlockStructureViolated, SingularMetric

# complex structures on the frame, as matrices acting on frame components:
# column j is the image of E_{j+1}
#   Kahler structure Jbar: E1 -> E2, E3 -> -E4
#   Hermitian structure J: E1 -> E2, E3 -> E4
JBAR = np.array([[0, -1, 0, 0],
                 [1, 0, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, -1, 0]], dtype=float)
JHERM = np.array([[0, -1, 0, 0],
                  [1, 0, 0, 0],
                  [0, 0, 0, -1],
                  [0, 0, 1, 0]], dtype=float)


def wedge(a, b):
    """Frame components of ``a ^ b`` for 1-forms given by frame component vectors."""
    return np.outer(a, b) - np.outer(b, a)


def basis_2form(i, j):
    """``theta_i ^ theta_j`` (0-based indices) as an antisymmetric component matrix."""
    e = np.eye(4)
    return wedge(e[i], e[j])


OMEGA_BAR = basis_2form(0, 1) - basis_2form(2, 3)   # Kahler form of Jbar
OMEGA = basis_2form(0, 1) + basis_2form(2, 3)       # Kahler form of J
PHI = basis_2form(0, 2) - basis_2form(1, 3)
PSI = basis_2form(0, 3) + basis_2form(1, 2)


# coordinate route ------------------------------------------------------------
def metric_from_coframe(theta):
    """``g_jk = sum_i theta_i[j] theta_i[k]`` as a jet-valued symmetric matrix."""
    return jets.einsum("ij,ik->jk", theta, theta)


def check_positive_definite(g0):
    minors = [np.linalg.det(g0[:k, :k]) for k in range(1, 5)]
    if min(minors) <= 0:
        raise SingularMetric(f"metric not positive definite, leading minors {minors}")
    if minors[-1] < 1e-12:
        raise SingularMetric(f"metric determinant {minors[-1]!r} below 1e-12")


def levi_civita(g):
    """Christoffel symbols ``Gamma[k, i, j] = Gamma^k_ij`` as jets.

    One derivative order is consumed, so an order-2 metric yields order-1
    symbols, enough for one more differentiation.
    """
    check_positive_definite(g.value)
    ginv = jets.inv(g)
    dg = jets.stack([g.d(v) for v in range(4)])          # dg[l, i, j] = d_l g_ij
    # lower[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    c = dg.coeffs
    lower = np.einsum("ijlc->lijc", c) + np.einsum("jilc->lijc", c) - c
    lower = jets.Jet(lower, g.point, dg.order)
    return 0.5 * jets.einsum("kl,lij->kij", ginv, lower)


def riemann_coordinates(g):
    """Fully covariant ``R[i, j, k, l] = R(d_i, d_j, d_k, d_l)`` at the base point."""
    G = levi_civita(g)
    dG = np.stack([G.d(v).value for v in range(4)])      # dG[a, k, i, j] = d_a Gamma^k_ij
    G0 = G.value
    # R^l_{k i j} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    Rup = (np.einsum("iljk->lkij", dG) - np.einsum("jlik->lkij", dG)
           + np.einsum("lim,mjk->lkij", G0, G0) - np.einsum("ljm,mik->lkij", G0, G0))
    # R(d_i, d_j, d_k, d_w) = g(R(d_i, d_j) d_k, d_w)
    return np.einsum("lkij,lw->ijkw", Rup, g.value)


def to_frame(R_coord, E0):
    """Contract every slot of a covariant 4-tensor with frame vectors (rows of ``E0``)."""
    return np.einsum("ijkl,ai,bj,ck,dl->abcd", R_coord, E0, E0, E0, E0, optimize=True)


def frame_from_coframe(theta):
    """Dual frame ``E[i, j]`` (row i is ``E_{i+1}``) by jet matrix inversion."""
    return jets.inv(theta).T


# frame route -----------------------------------------------------------------
def brackets(E):
    """Coordinate components of ``[E_i, E_j]`` as jets, shape (4, 4, 4)."""
    # dE[i, j, v] = E_i(E_j^v)
    rows = []
    for i in range(4):
        rows.append(jets.stack([_vec_derivative(E[i], E[j]) for j in range(4)]))
    dE = jets.stack(rows)
    return dE - jets.Jet(np.swapaxes(dE.coeffs, 0, 1), dE.point, dE.order)


def _vec_derivative(X, Y):
    """Components of ``X(Y^v)`` for vector fields with jet components."""
    return jets.stack([Y[v].directional(X) for v in range(4)])


def structure_constants(E, theta):
    """``c[i, j, k] = theta_k([E_i, E_j])`` as jets."""
    B = brackets(E)
    return jets.einsum("ijv,kv->ijk", B, theta)


def exterior_derivative_1forms(theta):
    """Coordinate components ``(d theta_k)[a, b] = d_a theta_k[b] - d_b theta_k[a]``."""
    dth = jets.stack([theta.d(v) for v in range(4)])     # dth[a, k, b] = d_a theta_k[b]
    c = np.einsum("akbX->kabX", dth.coeffs)
    return jets.Jet(c - np.swapaxes(c, 1, 2), theta.point, dth.order)


def forms_in_frame(form, E0):
    """Frame components ``form(E_i, E_j, ...)`` of covariant coordinate tensors.

    ``form`` has shape (..., 4, 4) of floats; the trailing two axes are contracted.
    """
    return np.einsum("...ab,ia,jb->...ij", form, E0, E0)


def connection_forms(E, theta):
    """``omega[i, j, k] = omega^i_j(E_k)`` with ``nabla_{E_k} E_j = sum_i omega^i_j(E_k) E_i``.

    Computed from the Koszul formula for an orthonormal frame; the result is a jet.
    """
    c = structure_constants(E, theta)                     # c[a, b, m] = g([E_a, E_b], E_m)
    # 2 g(nabla_{E_k} E_j, E_i) = c[k, j, i] - c[j, i, k] + c[i, k, j]
    cc = c.coeffs
    out = (np.einsum("kjiX->ijkX", cc) - np.einsum("jikX->ijkX", cc)
           + np.einsum("ikjX->ijkX", cc))
    return jets.Jet(0.5 * out, c.point, c.order)


def riemann_from_connection(E, omega, c):
    """Frame Riemann tensor via the second structure equation.

    ``R(E_a, E_b, E_j, E_i) = Omega^i_j(E_a, E_b)`` where
    ``Omega^i_j = d omega^i_j + omega^i_m ^ omega^m_j``.
    """
    w0 = omega.value
    # E_a(omega^i_j(E_b))
    dw = np.stack([omega.directional(E[a]).value for a in range(4)])   # dw[a, i, j, b]
    c0 = c.value
    d_omega = (np.einsum("aijb->ijab", dw) - np.einsum("bija->ijab", dw)
               - np.einsum("abm,ijm->ijab", c0, w0))
    wedge_term = (np.einsum("ima,mjb->ijab", w0, w0) - np.einsum("imb,mja->ijab", w0, w0))
    Omega = d_omega + wedge_term                                      # Omega[i, j, a, b]
    return np.einsum("ijab->abji", Omega)


# curvature data --------------------------------------------------------------
def two_form_pairing(R, u, v):
    """``<R(u), v>`` for a covariant 4-tensor seen as an operator on 2-forms.

    Uses the ``R(X, Y, Y, X) = K`` convention, so the sphere has positive operator.
    """
    Rs = -R
    return 0.25 * np.einsum("abcd,ab,cd->", Rs, u, v)


def ricci_from_riemann(R):
    return np.einsum("iabi->ab", R)


def weyl_tensor(R):
    """Weyl part of a frame Riemann tensor (orthonormal frame, dimension 4)."""
    ric = ricci_from_riemann(R)
    tau = np.trace(ric)
    g = np.eye(4)
    Rs = -R
    kn = (np.einsum("ac,bd->abcd", ric, g) - np.einsum("ad,bc->abcd", ric, g)
          + np.einsum("bd,ac->abcd", ric, g) - np.einsum("bc,ad->abcd", ric, g))
    gg = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    Ws = Rs - 0.5 * kn + tau / 6.0 * gg
    return -Ws


ASD_BASIS = (OMEGA / np.sqrt(2), PHI / np.sqrt(2), PSI / np.sqrt(2))


def weyl_minus(R, basis=ASD_BASIS):
    """Matrix of the Weyl operator on the anti-self-dual forms and its eigenvalues.

    The orientation makes ``OMEGA_BAR`` self-dual; ``basis`` spans the opposite
    eigenspace and must be orthonormal.
    """
    W = weyl_tensor(R)
    M = np.array([[two_form_pairing(W, u, v) for v in basis] for u in basis])
    M = 0.5 * (M + M.T)
    return M, np.linalg.eigvalsh(M)


def hodge_star(form):
    """Hodge star of frame 2-form components, orientation ``-theta_1234`` (Omega_bar self-dual)."""
    out = np.zeros((4, 4))
    for a, b, c, d in product(range(4), repeat=4):
        eps = _levi_civita_symbol(a, b, c, d)
        if eps:
            out[c, d] += -0.5 * eps * form[a, b]
    return out


def _levi_civita_symbol(*idx):
    if len(set(idx)) < len(idx):
        return 0
    perm = list(idx)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def nijenhuis_residual(Jmat, c):
    """``max |N_J(E_i, E_j)|`` for an almost complex structure constant on the frame.

    ``Jmat[:, i]`` holds the frame components of ``J E_i``; ``c`` the structure
    constants ``c[i, j, k] = theta_k([E_i, E_j])`` at the base point.
    """
    c = np.asarray(c.value if isinstance(c, jets.Jet) else c)

    def br(u, v):
        return np.einsum("i,j,ijk->k", u, v, c)

    worst = 0.0
    e = np.eye(4)
    for i, j in product(range(4), repeat=2):
        X, Y = e[i], e[j]
        JX, JY = Jmat @ X, Jmat @ Y
        N = br(JX, JY) - Jmat @ br(JX, Y) - Jmat @ br(X, JY) - br(X, Y)
        worst = max(worst, float(np.max(np.abs(N))))
    return worst


def covariant_derivative_2form(form, omega0):
    """``(nabla_{E_k} F)(E_i, E_j)`` for a 2-form with constant frame components."""
    # -F(nabla_k E_i, E_j) - F(E_i, nabla_k E_j)
    return -(np.einsum("mik,mj->kij", omega0, form) + np.einsum("mjk,im->kij", omega0, form))


def form_norm_sq(t):
    """Squared norm with ``|theta_a ^ theta_b|^2 = 1/2`` per term, so ``|Phi| = 1``."""
    return 0.25 * float(np.sum(np.asarray(t) ** 2))


def two_form_coordinates(theta, F):
    """Coordinate components of the 2-form with frame components ``F`` (jets)."""
    return jets.einsum("ia,ib->ab", theta, jets.einsum("ij,jb->ib", jets.Jet.constant(F, theta.point), theta))


def exterior_derivative_2form(F):
    """Coordinate 3-form ``(dF)[a, b, c] = d_a F_bc + d_b F_ca + d_c F_ab``."""
    dF = np.stack([F.d(v).coeffs for v in range(4)])       # dF[a, b, c]
    out = (dF + np.einsum("bcaX->abcX", dF) + np.einsum("cabX->abcX", dF))
    return jets.Jet(out, F.point, F.order - 1)


def wedge_1_2(a, F):
    """``(a ^ F)[i, j, k] = a_i F_jk + a_j F_ki + a_k F_ij`` for float arrays."""
    return (np.einsum("i,jk->ijk", a, F) + np.einsum("j,ki->ijk", a, F)
            + np.einsum("k,ij->ijk", a, F))


def lee_form(dF, F):
    """Solve ``dF = 2 theta ^ F`` for ``theta`` (all float, same basis); returns (theta, residual)."""
    A = np.stack([2 * wedge_1_2(e, F).ravel() for e in np.eye(4)], axis=1)
    sol, *_ = np.linalg.lstsq(A, dF.ravel(), rcond=None)
    resid = float(np.max(np.abs(A @ sol - dF.ravel())))
    return sol, resid


# Kahler curvature tensors ----------------------------------------------------
def kahler_tensors(Jmat=JBAR, proj=np.diag([1.0, 1.0, 0.0, 0.0])):
    """The tensors ``Pi``, ``Phi``, ``Psi`` in an orthonormal frame.

    ``Jmat`` acts on frame components (``J X = Jmat @ X``); ``proj`` projects
    onto the distribution whose metric ``h`` enters ``Phi`` and ``Psi``.
    """
    g = np.eye(4)
    # gJ[x, y] = g(J X, Y) for X = e_x, Y = e_y
    gJ = Jmat.T @ g
    h = proj.T @ g @ proj
    hJ = Jmat.T @ h
    E = np.einsum
    Pi = 0.25 * (E("yz,xu->xyzu", g, g) - E("xz,yu->xyzu", g, g)
                 + E("yz,xu->xyzu", gJ, gJ) - E("xz,yu->xyzu", gJ, gJ)
                 - 2 * E("xy,zu->xyzu", gJ, gJ))
    Phi = 0.125 * (E("yz,xu->xyzu", g, h) - E("xz,yu->xyzu", g, h)
                   + E("xu,yz->xyzu", g, h) - E("yu,xz->xyzu", g, h)
                   + E("yz,xu->xyzu", gJ, hJ) - E("xz,yu->xyzu", gJ, hJ)
                   + E("xu,yz->xyzu", gJ, hJ) - E("yu,xz->xyzu", gJ, hJ)
                   - 2 * E("xy,zu->xyzu", gJ, hJ) - 2 * E("zu,xy->xyzu", gJ, hJ))
    Psi = -E("xy,zu->xyzu", hJ, hJ)
    return Pi, Phi, Psi


def decomposition_coefficients(tau, delta, kappa):
    return tau / 6.0 - delta + kappa / 12.0, 2 * delta - kappa / 2.0, kappa / 2.0


def decomposition_residual(R, tau, delta, kappa, tensors=None):
    """``max |R - (a Pi + b Phi + c Psi)|`` with coefficients from ``tau``, ``delta``, ``kappa``."""
    Pi, Phi, Psi = tensors or kahler_tensors()
    a, b, c = decomposition_coefficients(tau, delta, kappa)
    return float(np.max(np.abs(R - (a * Pi + b * Phi + c * Psi))))


def exterior_derivative_frame(F, c):
    """Frame components of ``dF`` for a 2-form with constant frame components ``F``.

    ``dF(X, Y, Z) = -F([X, Y], Z) + F([X, Z], Y) - F([Y, Z], X)``; ``c`` holds
    the structure constants and the result inherits its jet order.
    """
    Fj = jets.Jet.constant(F, c.point)
    t1 = jets.einsum("abm,mc->abc", c, Fj)
    t2 = jets.einsum("acm,mb->abc", c, Fj)
    t3 = jets.einsum("bcm,ma->abc", c, Fj)
    return -t1 + t2 - t3


def riemann_symmetry_residuals(R):
    """Max violation of the antisymmetries, pair symmetry and first Bianchi identity."""
    anti = max(np.max(np.abs(R + np.swapaxes(R, 0, 1))), np.max(np.abs(R + np.swapaxes(R, 2, 3))))
    pair = np.max(np.abs(R - np.einsum("abcd->cdab", R)))
    bianchi = np.max(np.abs(R + np.einsum("abcd->bcad", R) + np.einsum("abcd->cabd", R)))
    return float(max(anti, pair)), float(bianchi)


@dataclass
class CurvatureData:
    """Curvature quantities at one chart point, all in the orthonormal frame."""

    riemann: np.ndarray
    ricci: np.ndarray
    tau: float
    delta_ric: float
    lee_sq: float
    delta_theta: float
    lee_sq_generic: float
    delta_theta_generic: float
    kappa: float
    K12: float
    K34: float
    wminus: np.ndarray
    wminus_eigs: np.ndarray
    symmetry_residual: float = 0.0
    bianchi_residual: float = 0.0
    extras: dict = field(default_factory=dict)


def frame_curvature(R_coord, E, theta, alpha, omega=None, c=None):
    """Project a coordinate Riemann tensor to the frame and derive all invariants.

    ``alpha`` is the jet of the Lee profile; ``|theta|^2`` and ``delta theta``
    are computed both from ``theta = -alpha theta_4`` via the closed identity
    ``delta theta = 2 (E_4 alpha - alpha^2)`` and generically from the Lee form
    solved out of ``d Omega = 2 theta ^ Omega``.
    """
    if c is None:
        c = structure_constants(E, theta)
    if omega is None:
        omega = connection_forms(E, theta)
    R = to_frame(R_coord, E.value)
    ric = ricci_from_riemann(R)
    tau = float(np.trace(ric))
    delta = 0.5 * float(ric[0, 0] - ric[2, 2])
    a0 = alpha.value
    E4a = float(alpha.directional(E[3]).value)
    lee_sq = a0 * a0
    delta_theta = 2.0 * (E4a - a0 * a0)

    # generic Lee form in frame components, as jets
    dOm = exterior_derivative_frame(OMEGA, c)
    A = np.stack([2 * wedge_1_2(e, OMEGA).ravel() for e in np.eye(4)], axis=1)
    P = np.linalg.pinv(A)
    lee = jets.Jet(np.einsum("ix,xX->iX", P, dOm.coeffs.reshape(-1, jets.NCOEF)), c.point, dOm.order)
    lee0 = lee.value
    lee_sq_generic = float(lee0 @ lee0)
    # delta theta = -sum_i [E_i(theta_i) - sum_j omega^j_i(E_i) theta_j]
    w0 = omega.value
    div = sum(float(lee[i].directional(E[i]).value) for i in range(4))
    conn = float(np.einsum("jii,j->", w0, lee0))
    delta_theta_generic = -(div - conn)

    kappa = tau - 6.0 * (lee_sq + delta_theta)
    M, eigs = weyl_minus(R)
    sym, bianchi = riemann_symmetry_residuals(R)
    return CurvatureData(
        riemann=R, ricci=ric, tau=tau, delta_ric=delta,
        lee_sq=lee_sq, delta_theta=delta_theta,
        lee_sq_generic=lee_sq_generic, delta_theta_generic=delta_theta_generic,
        kappa=kappa, K12=float(R[0, 1, 1, 0]), K34=float(R[2, 3, 3, 2]),
        wminus=M, wminus_eigs=eigs, symmetry_residual=sym, bianchi_residual=bianchi,
        extras={"lee_frame": lee0, "alpha_generic": -float(lee0[3]), "E4_alpha": E4a},
    )


def connection_forms_frame(E, theta):
    """Table ``omega[i, j, k] = omega^i_j(E_k)`` at the base point (antisymmetric in i, j)."""
    return connection_forms(E, theta).value


def kahler_residual(omega0, form=OMEGA_BAR):
    """``max |(nabla F)(E_k; E_i, E_j)|`` for a 2-form with constant frame components."""
    return float(np.max(np.abs(covariant_derivative_2form(form, omega0))))


def nabla_norm_sq(omega0, form=OMEGA):
    return form_norm_sq(covariant_derivative_2form(form, omega0))


def decomposition_check(cd, tol=1e-6):
    """Residual of ``R = a Pi + b Phi + c Psi`` with the coefficients read off ``cd``.

    Raises :class:`BlockStructureViolated` if the Ricci tensor is not block diagonal.
    """
    ric = cd.ricci
    off = ric - np.diag(np.diag(ric))
    if np.max(np.abs(off)) > tol:
        raise BlockStructureViolated(f"off-diagonal Ricci entries up to {np.max(np.abs(off)):.3e}")
    return decomposition_residual(cd.riemann, cd.tau, cd.delta_ric, cd.kappa)


QCH_LEVELS = (0.0, 0.5, 1 / np.sqrt(2), 1.0)


def holomorphic_curvature(R, X, Jmat=JBAR):
    JX = Jmat @ X
    return float(np.einsum("abcd,a,b,c,d->", R, X, JX, JX, X))


def qch_scan(R, rng, samples=32, levels=QCH_LEVELS, Jmat=JBAR):
    """Holomorphic curvature of random unit vectors at prescribed ``|X_Delta|``.

    ``Delta`` is spanned by ``E_3, E_4``.  Returns a dict with the per-level
    spreads, the least-squares quartic ``a + b s^2 + c s^4`` and its residual.
    """
    samples = max(int(samples), 32)
    spreads, rows, values = {}, [], []
    for s in levels:
        vals = []
        for _ in range(samples):
            p, q = rng.uniform(0, 2 * np.pi, size=2)
            u = np.array([np.cos(p), np.sin(p), 0.0, 0.0])
            v = np.array([0.0, 0.0, np.cos(q), np.sin(q)])
            X = np.sqrt(max(1 - s * s, 0.0)) * u + s * v
            vals.append(holomorphic_curvature(R, X, Jmat))
        spreads[float(s)] = max(vals) - min(vals)
        rows.extend([[1.0, s ** 2, s ** 4]] * len(vals))
        values.extend(vals)
    A, b = np.array(rows), np.array(values)
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    fit_residual = float(np.max(np.abs(A @ coef - b)))
    return {"spreads": spreads, "max_spread": max(spreads.values()),
            "fit": tuple(float(v) for v in coef), "fit_residual": fit_residual}
