"""The four generalized Calabi type metric families.

Each family is fixed by its Lee profile ``alpha(z)``, a warp factor multiplying
the base surface metric ``h^2 (dx^2 + dy^2)``, the coefficient ``beta(z)`` of
``dt`` in the third coframe vector, and the rotation angle in ``t`` that mixes
``H dx`` and ``H dy``.  A surface pair ``(h, H)`` is admissible when
``lap ln H = c1 h^2 + c2 H^2`` holds on its domain.

Coframe and frame matrices are jet-valued 4x4 arrays in chart order
``(x, y, z, t)``: ``theta[i, j]`` is the ``dx^j`` coefficient of the
``(i+1)``-th coframe form and ``E[i, j]`` the ``d_j`` component of ``E_{i+1}``.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import DomainError, SingularFrame
from .exprlang import as_expr, eval_jet

log = logging.getLogger(__name__)

BETA_FLOOR = 1e-6
WARP_FLOOR = 1e-12


class Kind(enum.Enum):
    SEMI_SYMMETRIC = "SemiSymmetric"
    TAN = "Tan"
    COTH = "Coth"
    TANH = "Tanh"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(f"unknown family {name!r}; expected one of {[k.value for k in cls]}")


@dataclass(frozen=True)
class FamilySpec:
    kind: Kind
    a: float = 1.0

    def __post_init__(self):
        kind = Kind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        a = float(self.a)
        if kind is Kind.SEMI_SYMMETRIC:
            a = 1.0
        elif a == 0:
            raise ValueError(f"{kind.value} family needs a != 0")
        elif a < 0:
            log.info("%s: parameter a=%g mapped to |a|", kind.value, a)
            a = -a
        object.__setattr__(self, "a", a)

    @property
    def name(self):
        return self.kind.value

    def z_in_domain(self, z):
        if self.kind is Kind.TAN:
            return abs(z) < math.pi / (2 * self.a)
        return z < 0

    def beta_ok(self, z):
        """False where the third frame vector degenerates (``beta`` close to zero)."""
        if self.kind is Kind.TAN:
            return abs(math.sin(2 * self.a * z)) >= BETA_FLOOR
        if self.kind is Kind.SEMI_SYMMETRIC:
            return True
        return abs(math.sinh(2 * self.a * z)) >= BETA_FLOOR

    def check_point(self, point):
        z = point[2]
        if not self.z_in_domain(z):
            raise DomainError(self.name, z, f"{self.name}: z={z!r} outside chart domain")


@dataclass
class SurfacePair:
    """Surface functions ``h`` and ``H`` given as expressions in ``x`` and ``y``."""

    h: object
    H: object
    bindings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.h = as_expr(self.h)
        self.H = as_expr(self.H)
        self.bindings = dict(self.bindings)

    def jets_at(self, point):
        h = eval_jet(self.h, point, self.bindings)
        H = eval_jet(self.H, point, self.bindings)
        if h.value <= 0:
            raise DomainError("h", h.value, f"h must be positive, got {h.value!r}")
        if H.value <= 0:
            raise DomainError("H", H.value, f"H must be positive, got {H.value!r}")
        return h, H


def _as_point(point):
    point = tuple(float(p) for p in point)
    if len(point) == 2:
        point = point + (0.0, 0.0)
    return point


# scalar profiles -------------------------------------------------------------
def alpha(spec, z, check_domain=True):
    """Jet of the Lee-form profile ``alpha`` at the jet ``z``."""
    z0 = z.value
    if check_domain and not spec.z_in_domain(z0):
        raise DomainError("alpha", z0, f"{spec.name}: z={z0!r} outside chart domain")
    a = spec.a
    if spec.kind is Kind.SEMI_SYMMETRIC:
        return -2.0 / z
    if spec.kind is Kind.TAN:
        return 2 * a * jets.tan(a * z)
    if spec.kind is Kind.COTH:
        return -2 * a * jets.coth(a * z)
    return -2 * a * jets.tanh(a * z)


def warp(spec, z):
    a = spec.a
    if spec.kind is Kind.SEMI_SYMMETRIC:
        return z
    if spec.kind is Kind.TAN:
        return jets.cos(a * z)
    if spec.kind is Kind.COTH:
        return jets.sinh(a * z)
    return jets.cosh(a * z)


def beta(spec, z):
    """Coefficient of ``dt`` in the third coframe form."""
    a = spec.a
    if spec.kind is Kind.SEMI_SYMMETRIC:
        return -0.5 * z
    if spec.kind is Kind.TAN:
        return jets.sin(2 * a * z)
    return jets.sinh(2 * a * z)


def pde_coefficients(spec):
    """``(c1, c2)`` with ``lap ln H = c1 h^2 + c2 H^2``."""
    a2 = spec.a ** 2
    return {
        Kind.SEMI_SYMMETRIC: (2.0, 0.0),
        Kind.TAN: (2 * a2, -4 * a2),
        Kind.COTH: (2 * a2, 4 * a2),
        Kind.TANH: (-2 * a2, 4 * a2),
    }[spec.kind]


def spaceform_coefficients(spec):
    """``(d1, d2)`` with the space-form condition ``lap ln h = d1 h^2 + d2 H^2``."""
    a2 = spec.a ** 2
    return {
        Kind.SEMI_SYMMETRIC: (-4.0, 0.0),
        Kind.TAN: (-4 * a2, 2 * a2),
        Kind.COTH: (-4 * a2, -2 * a2),
        Kind.TANH: (4 * a2, -2 * a2),
    }[spec.kind]


def pde_residual(spec, pair, point):
    h, H = pair.jets_at(_as_point(point))
    c1, c2 = pde_coefficients(spec)
    return jets.laplacian_xy(jets.ln(H)) - c1 * h.value ** 2 - c2 * H.value ** 2


def spaceform_residual(spec, pair, point):
    h, H = pair.jets_at(_as_point(point))
    d1, d2 = spaceform_coefficients(spec)
    return jets.laplacian_xy(jets.ln(h)) - d1 * h.value ** 2 - d2 * H.value ** 2


# coframe ---------------------------------------------------------------------
# Sign of l2 = s * (ln H)_y / (2a), n2 = -s * (ln H)_x / (2a); the semi-symmetric
# case has no 1/(2a) factor.
_L2_SIGN = {Kind.SEMI_SYMMETRIC: -1.0, Kind.TAN: -1.0, Kind.COTH: 1.0, Kind.TANH: -1.0}


@dataclass
class _Profiles:
    """Everything the coframe and frame formulas share at one point."""

    spec: FamilySpec
    point: tuple
    h: jets.Jet
    H: jets.Jet
    lnH_x: jets.Jet
    lnH_y: jets.Jet
    alpha: jets.Jet
    warp: jets.Jet
    beta: jets.Jet
    sin_t: jets.Jet
    cos_t: jets.Jet
    l2: jets.Jet
    n2: jets.Jet

    @property
    def f(self):
        return self.warp * self.h


def profiles(spec, pair, point, check_domain=True):
    point = _as_point(point)
    if check_domain:
        spec.check_point(point)
    x, y, z, t = jets.chart_variables(point)
    h, H = pair.jets_at(point)
    lnH = jets.ln(H)
    lnH_x, lnH_y = lnH.d(0), lnH.d(1)
    if spec.kind is Kind.SEMI_SYMMETRIC:
        angle = 0.5 * t
        scale = 1.0
    else:
        angle = 2 * spec.a * t
        scale = 1.0 / (2 * spec.a)
    s = _L2_SIGN[spec.kind]
    return _Profiles(
        spec=spec, point=point, h=h, H=H, lnH_x=lnH_x, lnH_y=lnH_y,
        alpha=alpha(spec, z, check_domain), warp=warp(spec, z), beta=beta(spec, z),
        sin_t=jets.sin(angle), cos_t=jets.cos(angle),
        l2=s * scale * lnH_y, n2=-s * scale * lnH_x,
    )


def _theta34(p):
    """Coefficient jets (dx, dy, dz, dt) of the third and fourth coframe forms."""
    kind, a = p.spec.kind, p.spec.a
    H = p.H
    z = jets.jet_variable(2, p.point)
    zero = jets.Jet.constant(0.0, p.point)
    one = jets.Jet.constant(1.0, p.point)
    if kind is Kind.SEMI_SYMMETRIC:
        th3 = (p.cos_t * H + z * p.l2, -p.sin_t * H + z * p.n2, zero, p.beta)
        th4 = (-p.sin_t * H, -p.cos_t * H, one, zero)
        return th3, th4
    if kind is Kind.TAN:
        c2z = jets.cos(2 * a * z)
        th3 = (-(p.cos_t * c2z * H + p.beta * p.l2),
               -(-p.sin_t * c2z * H + p.beta * p.n2), zero, p.beta)
        th4 = (-p.sin_t * H, -p.cos_t * H, one, zero)
        return th3, th4
    ch2z = jets.cosh(2 * a * z)
    if kind is Kind.COTH:
        th3 = (-(-p.sin_t * ch2z * H + p.beta * p.l2),
               -(p.cos_t * ch2z * H + p.beta * p.n2), zero, p.beta)
        th4 = (-p.cos_t * H, -p.sin_t * H, one, zero)
        return th3, th4
    th3 = (-(p.cos_t * ch2z * H + p.beta * p.l2),
           -(-p.sin_t * ch2z * H + p.beta * p.n2), zero, p.beta)
    th4 = (-p.sin_t * H, -p.cos_t * H, one, zero)
    return th3, th4


def build_coframe(spec, pair, point):
    """Jet-valued 4x4 coframe matrix ``theta[i, j] = theta_{i+1}(d_j)``."""
    p = profiles(spec, pair, point)
    f = p.f
    if abs(f.value) < WARP_FLOOR:
        raise SingularFrame(f"warp * h = {f.value!r} vanishes at {p.point}")
    zero = jets.Jet.constant(0.0, p.point)
    th1 = (f, zero, zero, zero)
    th2 = (zero, f, zero, zero)
    th3, th4 = _theta34(p)
    return jets.stack([jets.stack(row) for row in (th1, th2, th3, th4)])


def _frame_klmn(p):
    """``(k, l, m, n)`` in ``E1 = d_x/f + k d_z + l d_t``, ``E2 = d_y/f + m d_z + n d_t``."""
    kind, a = p.spec.kind, p.spec.a
    f, H = p.f, p.H
    z = jets.jet_variable(2, p.point)
    if kind is Kind.SEMI_SYMMETRIC:
        m = p.cos_t * H / f
        k = p.sin_t * H / f
        n = (-2.0 / z * p.sin_t * H + 2 * p.lnH_x) / f
        l = (2.0 / z * p.cos_t * H - 2 * p.lnH_y) / f
        return k, l, m, n
    c = 1.0 / (2 * a)
    if kind is Kind.TAN:
        cot2 = 1.0 / jets.tan(2 * a * z)
        m = p.cos_t * H / f
        k = p.sin_t * H / f
        n = (-cot2 * p.sin_t * H + c * p.lnH_x) / f
        l = (cot2 * p.cos_t * H - c * p.lnH_y) / f
        return k, l, m, n
    coth2 = jets.coth(2 * a * z)
    if kind is Kind.COTH:
        m = p.sin_t * H / f
        k = p.cos_t * H / f
        n = (coth2 * p.cos_t * H - c * p.lnH_x) / f
        l = (-coth2 * p.sin_t * H + c * p.lnH_y) / f
        return k, l, m, n
    m = p.cos_t * H / f
    k = p.sin_t * H / f
    n = (-coth2 * p.sin_t * H + c * p.lnH_x) / f
    l = (coth2 * p.cos_t * H - c * p.lnH_y) / f
    return k, l, m, n


def build_frame(spec, pair, point):
    """Jet-valued frame ``E[i, j]`` assembled from the explicit ``k, l, m, n`` formulas."""
    p = profiles(spec, pair, point)
    f = p.f
    if abs(f.value) < WARP_FLOOR:
        raise SingularFrame(f"warp * h = {f.value!r} vanishes at {p.point}")
    if spec.kind is not Kind.SEMI_SYMMETRIC and abs(p.beta.value) < WARP_FLOOR:
        raise SingularFrame(f"beta = {p.beta.value!r} vanishes at {p.point}")
    k, l, m, n = _frame_klmn(p)
    zero = jets.Jet.constant(0.0, p.point)
    one = jets.Jet.constant(1.0, p.point)
    inv_f = 1.0 / f
    e3_t = p.alpha if spec.kind is Kind.SEMI_SYMMETRIC else 1.0 / p.beta
    rows = (
        (inv_f, zero, k, l),
        (zero, inv_f, m, n),
        (zero, zero, zero, e3_t),
        (zero, zero, one, zero),
    )
    return jets.stack([jets.stack(r) for r in rows])


def duality_residual(theta, E):
    """``max |theta_i(E_j) - delta_ij|`` at the base point."""
    pairing = theta.value @ E.value.T
    return float(np.max(np.abs(pairing - np.eye(4))))


# bundled example pairs -------------------------------------------------------
@dataclass(frozen=True)
class CatalogEntry:
    """A closed-form pair satisfying the constraint for every ``a > 0`` on its box."""

    name: str
    kind: Kind
    h: str
    H: str
    x_range: tuple = (-0.5, 0.5)
    y_range: tuple = (-0.5, 0.5)
    spaceform: bool = False

    def pair(self, a=1.0):
        return SurfacePair(self.h, self.H, {"a": a})


CATALOG = (
    CatalogEntry("semi-flat", Kind.SEMI_SYMMETRIC, "1/(1+x^2+y^2)", "sqrt(1+x^2+y^2)", spaceform=True),
    CatalogEntry("semi-gaussian", Kind.SEMI_SYMMETRIC, "1", "exp((x^2+y^2)/2)"),
    CatalogEntry("semi-cubic", Kind.SEMI_SYMMETRIC, "sqrt(1+x/2)", "exp((x^2+y^2)/2+x^3/6)"),
    CatalogEntry("tan-constant", Kind.TAN, "1", "1/sqrt(2)"),
    CatalogEntry("tan-cp2", Kind.TAN, "sqrt(2)/(a*(1+x^2+y^2))", "sqrt(2)/(a*(1+x^2+y^2))", spaceform=True),
    CatalogEntry("tan-exp", Kind.TAN, "sqrt(0.2/a^2 + 0.5*exp(0.2*(x^2+y^2)))", "exp(0.1*(x^2+y^2))/2"),
    CatalogEntry("coth-hyperbolic", Kind.COTH, "1/(sqrt(6)*a*x)", "1/(sqrt(6)*a*x)", x_range=(0.5, 1.5)),
    CatalogEntry("coth-exp", Kind.COTH, "sqrt(2/a^2 - 2*exp(2*(x^2+y^2)-6))", "exp(x^2+y^2-3)"),
    CatalogEntry("tanh-constant", Kind.TANH, "1", "1/sqrt(2)"),
    CatalogEntry("tanh-ball", Kind.TANH, "1/(sqrt(2)*a*x)", "1/(sqrt(2)*a*x)", x_range=(0.5, 1.5), spaceform=True),
    CatalogEntry("tanh-exp", Kind.TANH, "sqrt(0.5*exp(0.2*(x^2+y^2)) - 0.2/a^2)", "exp(0.1*(x^2+y^2))/2"),
)


def catalog(kind=None):
    """Bundled entries, optionally restricted to one family."""
    if kind is None:
        return CATALOG
    kind = Kind.parse(kind)
    return tuple(e for e in CATALOG if e.kind is kind)


def constant_pair(spec):
    """Constant solution ``h = 1`` with ``H`` solving ``c1 + c2 H^2 = 0`` (Tan, Tanh only)."""
    if spec.kind not in (Kind.TAN, Kind.TANH):
        raise ValueError(f"{spec.name} has no positive constant solution")
    return SurfacePair("1", "1/sqrt(2)")


def spaceform_pair(spec):
    """Closed-form pair satisfying both the constraint and the space-form condition."""
    if spec.kind is Kind.SEMI_SYMMETRIC:
        return SurfacePair("1/(1+x^2+y^2)", "sqrt(1+x^2+y^2)")
    if spec.kind is Kind.TAN:
        return SurfacePair("sqrt(2)/(a*(1+x^2+y^2))", "sqrt(2)/(a*(1+x^2+y^2))", {"a": spec.a})
    raise ValueError(f"no closed-form space-form pair bundled for {spec.name}")
