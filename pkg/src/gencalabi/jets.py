"""Truncated multivariate Taylor expansions ("jets") in the chart variables.

A :class:`Jet` stores the Taylor coefficients ``d^k f / k!`` of a scalar
function of ``(x, y, z, t)`` about a base point, up to total degree 3.  The
coefficient array may carry leading batch dimensions, so a 4x4 matrix of jets
is a single ``Jet`` whose ``coeffs`` has shape ``(4, 4, 35)``.

Each jet also records the degree through which its coefficients are valid.
Differentiation lowers it by one and products keep the minimum, so a
quantity that was differentiated twice cannot silently leak garbage into a
third derivative.
"""

from itertools import product
from math import factorial

import numpy as np

from .errors import DomainError

NVARS = 4
MAX_ORDER = 3
VARIABLES = ("x", "y", "z", "t")


def _build_multi_indices():
    out = []
    for deg in range(MAX_ORDER + 1):
        level = [a for a in product(range(deg + 1), repeat=NVARS) if sum(a) == deg]
        out.extend(sorted(level, reverse=True))
    return tuple(out)


MULTI_INDICES = _build_multi_indices()
NCOEF = len(MULTI_INDICES)
INDEX = {alpha: k for k, alpha in enumerate(MULTI_INDICES)}
DEGREE = np.array([sum(a) for a in MULTI_INDICES])

# _MUL[i, j, k] = 1 iff monomial_i * monomial_j == monomial_k
_MUL = np.zeros((NCOEF, NCOEF, NCOEF))
for _i, _a in enumerate(MULTI_INDICES):
    for _j, _b in enumerate(MULTI_INDICES):
        _c = tuple(p + q for p, q in zip(_a, _b))
        if sum(_c) <= MAX_ORDER:
            _MUL[_i, _j, INDEX[_c]] = 1.0

# derivative tables: (d/dv f)[k] = _DSCALE[v, k] * f[_DSRC[v, k]]
_DSRC = np.zeros((NVARS, NCOEF), dtype=int)
_DSCALE = np.zeros((NVARS, NCOEF))
for _v in range(NVARS):
    for _k, _a in enumerate(MULTI_INDICES):
        _up = list(_a)
        _up[_v] += 1
        _up = tuple(_up)
        if _up in INDEX:
            _DSRC[_v, _k] = INDEX[_up]
            _DSCALE[_v, _k] = _up[_v]


def index_of(alpha):
    """Position of a multi-index (tuple of four exponents) in ``coeffs``."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != NVARS or min(alpha) < 0 or sum(alpha) > MAX_ORDER:
        raise ValueError(f"invalid multi-index {alpha!r}")
    return INDEX[alpha]


def _check_point(point):
    point = tuple(float(p) for p in point)
    if len(point) != NVARS:
        raise ValueError(f"base point needs {NVARS} coordinates, got {len(point)}")
    return point


class Jet:
    """Truncated Taylor expansion (degree <= 3) of a scalar, or array of scalars."""

    __slots__ = ("coeffs", "point", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs, point, order=MAX_ORDER):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1:] != (NCOEF,):
            raise ValueError(f"last axis of coeffs must have length {NCOEF}")
        self.point = _check_point(point)
        self.order = int(order)
        if self.order < MAX_ORDER:
            coeffs = np.where(DEGREE > self.order, 0.0, coeffs)
        self.coeffs = coeffs

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, value, point, order=MAX_ORDER):
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (NCOEF,))
        c[..., 0] = value
        return cls(c, point, order)

    @classmethod
    def zeros(cls, shape, point, order=MAX_ORDER):
        return cls(np.zeros(tuple(shape) + (NCOEF,)), point, order)

    # shape handling ---------------------------------------------------------
    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coeffs[key + (slice(None),)], self.point, self.order)

    def __setitem__(self, key, other):
        if not isinstance(key, tuple):
            key = (key,)
        if isinstance(other, Jet):
            self._same_point(other)
            self.coeffs[key + (slice(None),)] = other.coeffs
            self.order = min(self.order, other.order)
        else:
            self.coeffs[key + (slice(None),)] = 0.0
            self.coeffs[key + (0,)] = other

    def reshape(self, *shape):
        return Jet(self.coeffs.reshape(*shape, NCOEF), self.point, self.order)

    @property
    def T(self):
        return Jet(np.swapaxes(self.coeffs, -2, -3), self.point, self.order)

    def copy(self):
        return Jet(self.coeffs.copy(), self.point, self.order)

    # inspection -------------------------------------------------------------
    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v

    def coeff(self, alpha):
        v = self.coeffs[..., index_of(alpha)]
        return float(v) if v.ndim == 0 else v

    def gradient(self):
        """First partial derivatives at the base point, last axis over (x, y, z, t)."""
        return self.coeffs[..., 1:1 + NVARS].copy()

    def partial_value(self, alpha):
        """The actual partial derivative ``d^alpha f`` at the base point."""
        scale = np.prod([factorial(a) for a in alpha])
        return self.coeff(alpha) * scale

    def __repr__(self):
        return f"Jet(shape={self.shape}, order={self.order}, value={self.value!r})"

    # arithmetic -------------------------------------------------------------
    def _same_point(self, other):
        if other.point != self.point:
            raise ValueError(
                f"jets expanded about different points: {self.point} vs {other.point}")

    def _coerce(self, other):
        if isinstance(other, Jet):
            self._same_point(other)
            return other
        return Jet.constant(other, self.point)

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.coeffs + other.coeffs, self.point, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.point, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.coeffs * other[..., None], self.point, self.order)
        self._same_point(other)
        c = np.einsum("...i,...j,ijk->...k", self.coeffs, other.coeffs, _MUL, optimize=True)
        return Jet(c, self.point, min(self.order, other.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, n):
        if int(n) != n:
            raise TypeError("jets only support integer powers")
        n = int(n)
        if n < 0:
            return self.reciprocal() ** (-n)
        out = Jet.constant(np.ones(self.shape), self.point, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def reciprocal(self):
        return apply("recip", self)

    # calculus ---------------------------------------------------------------
    def d(self, var):
        """Partial derivative along chart variable ``var`` (index or name)."""
        if isinstance(var, str):
            var = VARIABLES.index(var)
        if self.order < 1:
            raise ValueError("cannot differentiate a jet valid only through degree 0")
        c = self.coeffs[..., _DSRC[var]] * _DSCALE[var]
        return Jet(c, self.point, self.order - 1)

    def directional(self, vec):
        """Derivative along a vector field given as a jet array (..., 4) of components."""
        out = None
        for v in range(NVARS):
            term = vec[..., v] * self.d(v)
            out = term if out is None else out + term
        return out


def jet_variable(index, point):
    """Jet of the coordinate function ``x``, ``y``, ``z`` or ``t`` at ``point``."""
    point = _check_point(point)
    c = np.zeros(NCOEF)
    c[0] = point[index]
    c[1 + index] = 1.0
    return Jet(c, point)


def chart_variables(point):
    return tuple(jet_variable(i, point) for i in range(NVARS))


def laplacian_xy(u):
    """``u_xx + u_yy`` at the base point."""
    if u.order < 2:
        raise ValueError("laplacian needs a jet valid through degree 2")
    return 2.0 * u.coeff((2, 0, 0, 0)) + 2.0 * u.coeff((0, 2, 0, 0))


# elementary functions ------------------------------------------------------
def _derivs(name, v):
    """Values f, f', f'', f''' at ``v`` (ndarray)."""
    if name == "exp":
        e = np.exp(v)
        return e, e, e, e
    if name == "ln":
        return np.log(v), 1 / v, -1 / v**2, 2 / v**3
    if name == "sqrt":
        s = np.sqrt(v)
        return s, 0.5 / s, -0.25 / s**3, 0.375 / s**5
    if name == "recip":
        return 1 / v, -1 / v**2, 2 / v**3, -6 / v**4
    if name == "sin":
        s, c = np.sin(v), np.cos(v)
        return s, c, -s, -c
    if name == "cos":
        s, c = np.sin(v), np.cos(v)
        return c, -s, -c, s
    if name == "sinh":
        s, c = np.sinh(v), np.cosh(v)
        return s, c, s, c
    if name == "cosh":
        s, c = np.sinh(v), np.cosh(v)
        return c, s, c, s
    if name == "tan":
        T = np.tan(v)
        p = 1 + T * T
        return T, p, 2 * T * p, p * (2 + 6 * T * T)
    if name in ("tanh", "coth"):
        T = np.tanh(v) if name == "tanh" else 1 / np.tanh(v)
        p = 1 - T * T
        return T, p, -2 * T * p, p * (6 * T * T - 2)
    raise KeyError(name)


ELEMENTARY = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "coth", "exp", "ln", "sqrt")


def _check_domain(name, v):
    bad = None
    if name in ("ln", "sqrt"):
        bad = ~(v > 0)
    elif name == "recip":
        bad = v == 0
    elif name == "tan":
        bad = np.abs(np.cos(v)) < 1e-15
    elif name == "coth":
        bad = np.abs(np.sinh(v)) < 1e-300
    if bad is not None and np.any(bad):
        offending = np.asarray(v)[np.asarray(bad)].ravel()[0]
        raise DomainError(name, float(offending))


def apply(name, u):
    """Compose elementary function ``name`` with jet ``u`` through degree 3."""
    if name not in ELEMENTARY and name != "recip":
        raise KeyError(f"unknown elementary function {name!r}")
    v = u.coeffs[..., 0]
    _check_domain(name, v)
    f = _derivs(name, v)
    nil = u.coeffs.copy()
    nil[..., 0] = 0.0
    nil = Jet(nil, u.point, u.order)
    out = np.zeros_like(u.coeffs)
    out[..., 0] = f[0]
    power = nil
    for k in range(1, MAX_ORDER + 1):
        out = out + (f[k] / factorial(k))[..., None] * power.coeffs
        if k < MAX_ORDER:
            power = power * nil
    return Jet(out, u.point, u.order)


def _make(name):
    def fn(u):
        return apply(name, u)
    fn.__name__ = name
    fn.__doc__ = f"Jet of ``{name}(u)``."
    return fn


sin, cos, tan = _make("sin"), _make("cos"), _make("tan")
sinh, cosh, tanh, coth = _make("sinh"), _make("cosh"), _make("tanh"), _make("coth")
exp, ln, sqrt = _make("exp"), _make("ln"), _make("sqrt")


# jet-valued linear algebra -------------------------------------------------
def stack(jets, axis=0):
    jets = list(jets)
    point = jets[0].point
    for j in jets[1:]:
        if j.point != point:
            raise ValueError("jets expanded about different points")
    order = min(j.order for j in jets)
    ax = axis - 1 if axis < 0 else axis
    return Jet(np.stack([j.coeffs for j in jets], axis=ax), point, order)


def matmul(A, B):
    """Matrix product of jet matrices, shapes (..., n, m) @ (..., m, p)."""
    c = np.einsum("...nmi,...mpj,ijk->...npk", A.coeffs, B.coeffs, _MUL, optimize=True)
    return Jet(c, A.point, min(A.order, B.order))


def einsum(subscripts, *jets):
    """Einsum over the batch axes of two jets, multiplying coefficients as jets.

    Only two operands are supported; chain calls for more.  Subscripts must
    use lowercase letters (uppercase ones index the coefficient axis).
    """
    A, B = jets
    if A.point != B.point:
        raise ValueError("jets expanded about different points")
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    expr = f"{sa}X,{sb}Y,XYZ->{out}Z"
    c = np.einsum(expr, A.coeffs, B.coeffs, _MUL, optimize=True)
    return Jet(c, A.point, min(A.order, B.order))


def inv(A):
    """Inverse of a square jet matrix via the nilpotent Neumann series."""
    A0 = A.coeffs[..., 0]
    A0inv = np.linalg.inv(A0)
    Ainv0 = Jet.constant(A0inv, A.point, A.order)
    nil = A.coeffs.copy()
    nil[..., 0] = 0.0
    N = Jet(nil, A.point, A.order)
    # (A0 + N)^-1 = sum_k (-A0^-1 N)^k A0^-1
    M = -matmul(Ainv0, N)
    term = Ainv0
    out = Ainv0
    for _ in range(MAX_ORDER):
        term = matmul(M, term)
        out = out + term
    return out
