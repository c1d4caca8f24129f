"""Closed-form curvature expressions for the four families.

Every formula is transcribed term by term, family by family, so that a typo
shows up as a disagreement with the numeric engine instead of being silently
corrected.  ``lap`` stands for ``lap ln h`` evaluated from the
expression jets.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .families import Kind, profiles


@dataclass(frozen=True)
class ClosedFormBundle:
    ricci_diag: tuple       # (Ric(E1, E1) = Ric(E2, E2), Ric(E3, E3) = Ric(E4, E4))
    tau: float
    kappa: float
    wminus_eigs: tuple      # printed diagonal of W-: (Omega, phi, psi)
    K12: float
    K34: float
    gamma: tuple            # (Gamma^2_11, Gamma^1_22)
    lee_constant: float     # |theta|^2 + delta theta

    @property
    def ricci(self):
        p, q = self.ricci_diag
        return np.diag([p, p, q, q])


def lee_constant(spec):
    """``|theta|^2 + delta theta = 2 E_4 alpha - alpha^2`` for each family."""
    a2 = spec.a ** 2
    return {Kind.SEMI_SYMMETRIC: 0.0, Kind.TAN: 4 * a2, Kind.COTH: -4 * a2, Kind.TANH: -4 * a2}[spec.kind]


def spaceform_expected(spec):
    """``(holomorphic curvature, scalar curvature, model)`` of the space form."""
    a2 = spec.a ** 2
    return {
        Kind.SEMI_SYMMETRIC: (0.0, 0.0, "C2"),
        Kind.TAN: (4 * a2, 24 * a2, "CP2"),
        Kind.COTH: (-4 * a2, -24 * a2, "B2"),
        Kind.TANH: (-4 * a2, -24 * a2, "B2"),
    }[spec.kind]


def _inputs(spec, pair, point, check_domain):
    p = profiles(spec, pair, point, check_domain)
    h = p.h.value
    H = p.H.value
    lap = jets.laplacian_xy(jets.ln(p.h))
    return p, h, H, lap


def gamma_jets(spec, pair, point, check_domain=True):
    """``Gamma^2_11`` and ``Gamma^1_22`` in closed form, as jets."""
    p = profiles(spec, pair, point, check_domain)
    h, H = p.h, p.H
    h_x, h_y = h.d(0), h.d(1)
    z = jets.jet_variable(2, p.point)
    a = spec.a
    s, c = p.sin_t, p.cos_t
    if spec.kind is Kind.SEMI_SYMMETRIC:
        g211 = -c * H / (z * z * h) - h_y / (z * h * h)
        g122 = -s * H / (z * z * h) - h_x / (z * h * h)
    elif spec.kind is Kind.TAN:
        sa, ca = jets.sin(a * z), jets.cos(a * z)
        g211 = a * sa * c * H / (ca * ca * h) - h_y / (ca * h * h)
        g122 = a * sa * s * H / (ca * ca * h) - h_x / (ca * h * h)
    elif spec.kind is Kind.COTH:
        sa, ca = jets.sinh(a * z), jets.cosh(a * z)
        g211 = -a * ca * s * H / (sa * sa * h) - h_y / (sa * h * h)
        g122 = -a * ca * c * H / (sa * sa * h) - h_x / (sa * h * h)
    else:
        sa, ca = jets.sinh(a * z), jets.cosh(a * z)
        g211 = -a * sa * c * H / (ca * ca * h) - h_y / (ca * h * h)
        g122 = -a * sa * s * H / (ca * ca * h) - h_x / (ca * h * h)
    return g211, g122


def closed_forms(spec, pair, point, check_domain=True):
    """Evaluate the printed Gamma, Ricci, scalar, conformal, W- and sectional formulas.

    With ``check_domain=False`` the formulas are evaluated even where the
    metric itself is undefined (for instance ``z = 0``), which is useful for
    reading off limiting values.
    """
    p, h, H, lap = _inputs(spec, pair, point, check_domain)
    z = p.point[2]
    a = spec.a
    a2 = a * a
    h2, H2 = h * h, H * H
    if spec.kind is Kind.SEMI_SYMMETRIC:
        ric1 = -lap / (z * z * h2) - 4 / (z * z)
        ric3 = 0.0
        tau = -2 * lap / (z * z * h2) - 8 / (z * z)
        kappa = -2 * lap / (z * z * h2) - 8 / (z * z)
        w = (-lap / (3 * z * z * h2) - 4 / (3 * z * z),
             lap / (6 * z * z * h2) + 2 / (3 * z * z))
        K12 = -lap / (z * z * h2) - 4 / (z * z)
        K34 = 0.0
    elif spec.kind is Kind.TAN:
        c2 = math.cos(a * z) ** 2
        ric1 = (-4 * a2 * h2 + 2 * a2 * H2 - lap) / (h2 * c2) + 6 * a2
        ric3 = 6 * a2
        tau = (-8 * a2 * h2 + 4 * a2 * H2 - 2 * lap) / (h2 * c2) + 24 * a2
        kappa = (-8 * a2 * h2 + 4 * a2 * H2 - 2 * lap) / (h2 * c2)
        w = ((-4 * a2 * h2 + 2 * a2 * H2 - lap) / (3 * h2 * c2),
             (4 * a2 * h2 - 2 * a2 * H2 + lap) / (6 * h2 * c2))
        K12 = (2 * a2 * H2 - lap) / (c2 * h2) - 4 * a2 * math.tan(a * z) ** 2
        K34 = 4 * a2
    elif spec.kind is Kind.COTH:
        s2 = math.sinh(a * z) ** 2
        ric1 = -(4 * a2 * h2 + 2 * a2 * H2 + lap) / (h2 * s2) - 6 * a2
        ric3 = -6 * a2
        tau = -(8 * a2 * h2 + 4 * a2 * H2 + 2 * lap) / (h2 * s2) - 24 * a2
        kappa = -(8 * a2 * h2 + 4 * a2 * H2 + 2 * lap) / (h2 * s2)
        w = (-(4 * a2 * h2 + 2 * a2 * H2 + lap) / (3 * h2 * s2),
             (4 * a2 * h2 + 2 * a2 * H2 + lap) / (6 * h2 * s2))
        K12 = -(2 * a2 * H2 + lap) / (s2 * h2) - 4 * a2 / math.tanh(a * z) ** 2
        K34 = -4 * a2
    else:
        ch2 = math.cosh(a * z) ** 2
        ric1 = (4 * a2 * h2 - 2 * a2 * H2 - lap) / (h2 * ch2) - 6 * a2
        ric3 = -6 * a2
        tau = (8 * a2 * h2 - 4 * a2 * H2 - 2 * lap) / (h2 * ch2) - 24 * a2
        kappa = (8 * a2 * h2 - 4 * a2 * H2 - 2 * lap) / (h2 * ch2)
        w = ((4 * a2 * h2 - 2 * a2 * H2 - lap) / (3 * h2 * ch2),
             (-4 * a2 * h2 + 2 * a2 * H2 + lap) / (6 * h2 * ch2))
        K12 = -(2 * a2 * H2 + lap) / (ch2 * h2) - 4 * a2 * math.tanh(a * z) ** 2
        K34 = -4 * a2
    g211, g122 = gamma_jets(spec, pair, point, check_domain)
    return ClosedFormBundle(
        ricci_diag=(ric1, ric3), tau=tau, kappa=kappa,
        wminus_eigs=(w[0], w[1], w[1]), K12=K12, K34=K34,
        gamma=(g211.value, g122.value), lee_constant=lee_constant(spec),
    )


def general_frame_ricci(alpha, E, g211, g122):
    """Frame Ricci tensor of a Hermitian surface from its special-frame data.

    ``alpha``, ``g211`` and ``g122`` are jets; ``E`` is the jet-valued frame.
    Frame derivatives are taken by jet differentiation along ``E_i``.
    """
    def Ed(i, f):
        return f.directional(E[i])

    Ea = [Ed(i, alpha) for i in range(4)]
    Ela = [Ea[i] / alpha for i in range(4)]          # E_i ln|alpha|
    m = Ela[3] - alpha                                # E_4 ln alpha - alpha
    v = lambda j: float(j.value)                     # noqa: E731
    a0 = v(alpha)

    r11 = (v(Ed(1, g211)) + v(Ed(0, g122)) - v(g211) ** 2 - v(g122) ** 2
           + v(Ea[3]) - 1.5 * a0 ** 2)
    r12 = 0.5 * v(Ea[2])
    r13 = 1.5 * v(Ea[1]) - v(Ed(3, Ela[1])) - v(Ela[1]) * v(Ela[3])
    r14 = v(Ed(2, Ela[1])) - v(Ed(0, m))
    r23 = -1.5 * v(Ea[0]) + v(Ed(3, Ela[0])) + v(Ela[0]) * v(Ela[3])
    r24 = -v(Ed(2, Ela[0])) - v(Ed(1, m))
    r33 = -v(Ed(3, m)) - v(m) ** 2 + a0 * v(m) + 0.5 * a0 ** 2
    r34 = v(Ea[2])
    return np.array([
        [r11, r12, r13, r14],
        [r12, r11, r23, r24],
        [r13, r23, r33, r34],
        [r14, r24, r34, r33],
    ])


def k12_from_gammas(alpha, E, g211, g122):
    """``K(E1, E2) = E_1 Gamma^1_22 + E_2 Gamma^2_11 - (Gamma^2_11)^2 - (Gamma^1_22)^2 - alpha^2``."""
    return float((g122.directional(E[0]) + g211.directional(E[1])
                  - g211 * g211 - g122 * g122 - alpha * alpha).value)


def gamma_coeffs(spec, pair, point):
    """Values of the printed ``Gamma^2_11`` and ``Gamma^1_22`` at ``point``."""
    g211, g122 = gamma_jets(spec, pair, point)
    return float(g211.value), float(g122.value)
