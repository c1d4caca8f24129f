"""Verification harness: scenarios in, claim-by-claim reports out.

A scenario names a family, the surface functions and a sample set.  Every
accepted sample point is pushed through the coordinate and frame curvature
engines and the closed forms, and each registered claim turns the resulting
:class:`PointAnalysis` into a scalar residual.  Reports are plain JSON with
claims sorted by id, so a fixed scenario and seed reproduce byte-identical
output.
"""

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, cartan, closedform, families, jets, liouville
from .exprlang import parse
from .errors import (ConfigError, DomainError, GenCalabiError, NonConvergence,
                     ParseError, SingularFrame, SingularMetric, UnboundConstant)
from .families import FamilySpec, Kind, SurfacePair

log = logging.getLogger(__name__)

# default tolerance per class; grid-tier runs replace every class by GRID_TOL
DEFAULT_TOLERANCES = {
    "linear": 1e-8,
    "curvature": 1e-7,
    "spectral": 1e-6,
    "closed-form-2": 1e-9,
    "vanishing": 1e-8,
    "pde": 1e-8,
}
GRID_TOL = 1e-3

FAMILY_SLUG = {Kind.SEMI_SYMMETRIC: "semi", Kind.TAN: "tan", Kind.COTH: "coth", Kind.TANH: "tanh"}

# sample ranges used when a scenario leaves them out; z is in units of 1/a
_DEFAULT_AZ = {
    Kind.SEMI_SYMMETRIC: (-2.0, -0.5),
    Kind.TAN: (-0.6, 0.6),
    Kind.COTH: (-1.5, -0.3),
    Kind.TANH: (-1.5, -0.1),
}
DEFAULT_XY = (-0.5, 0.5)
DEFAULT_T = (0.0, 2 * math.pi)
DEFAULT_BETA_BAND = 0.05


# --------------------------------------------------------------------------- #
# per-point analysis
# --------------------------------------------------------------------------- #
def _scaled(a, b):
    """``max |a - b|`` relative to ``max(1, max |b|)``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def expected_structure_constants(alpha, L, g211, g122):
    """Bracket table ``c[i, j, k] = theta_k([E_i, E_j])`` of the special frame.

    ``L[i]`` is ``E_i ln alpha``; ``g211, g122`` are the two Christoffel-type
    functions.
    """
    c = np.zeros((4, 4, 4))
    c[0, 3] = (-alpha / 2, 0, L[1], 0)
    c[1, 3] = (0, -alpha / 2, -L[0], 0)
    c[0, 2] = (0, 0, 0, -L[1])
    c[1, 2] = (0, 0, 0, L[0])
    c[2, 3] = (0, 0, L[3] - alpha, 0)
    c[0, 1] = (-g211, g122, alpha, 0)
    return c - np.swapaxes(c, 0, 1)


def expected_dtheta(alpha, L, g211, g122):
    """``D[k, i, j] = d theta_k(E_i, E_j)``."""
    D = np.zeros((4, 4, 4))
    D[0, 0, 1], D[0, 0, 3] = g211, alpha / 2
    D[1, 0, 1], D[1, 1, 3] = -g122, alpha / 2
    D[2, 0, 1], D[2, 0, 3], D[2, 1, 3], D[2, 2, 3] = -alpha, -L[1], L[0], alpha - L[3]
    D[3, 0, 2], D[3, 1, 2] = L[1], -L[0]
    return D - np.swapaxes(D, 1, 2)


def expected_connection(alpha, L, g211, g122):
    """``w[i, j, k] = omega^i_j(E_k)``, filled from the six independent forms."""
    w = np.zeros((4, 4, 4))
    w[2, 0] = (0, -alpha / 2, 0, 0)                 # omega^3_1
    w[1, 3] = (0, -alpha / 2, 0, 0)                 # omega^2_4
    w[0, 3] = (-alpha / 2, 0, 0, 0)                 # omega^1_4
    w[1, 2] = (-alpha / 2, 0, 0, 0)                 # omega^2_3
    w[1, 0] = (g211, -g122, -alpha / 2, 0)          # omega^2_1
    w[2, 3] = (L[1], -L[0], L[3] - alpha, 0)        # omega^3_4
    return w - np.swapaxes(w, 0, 1)


# independent connection forms as (i, j) pairs, 0-based
CONNECTION_FORMS = {"omega21": (1, 0), "omega31": (2, 0), "omega14": (0, 3),
                    "omega23": (1, 2), "omega24": (1, 3), "omega34": (2, 3)}


@dataclass
class PointAnalysis:
    """Everything the claim checkers read at one sample point."""

    point: tuple
    spec: FamilySpec
    alpha: float
    pde: float
    spaceform: float
    warp_h_sq: float
    duality: float
    c: np.ndarray
    c_expected: np.ndarray
    dtheta: np.ndarray
    dtheta_expected: np.ndarray
    omega: np.ndarray
    omega_expected: np.ndarray
    curvature: cartan.CurvatureData
    riemann_frame_route: np.ndarray
    closed: closedform.ClosedFormBundle
    gamma_numeric: tuple
    ricci_general: np.ndarray
    K12_gamma: float
    nabla_omegabar: float
    d_omegabar: float
    nijenhuis_J: float
    nijenhuis_Jbar: float
    d_omega_lee: float
    nabla_omega: np.ndarray
    nabla_omega_expected: np.ndarray
    qch: dict
    decomposition: float
    extras: dict = field(default_factory=dict)


def analyze_point(spec, pair, point, rng=None, qch_samples=32):
    """Run both curvature engines and the closed forms at ``point``."""
    if rng is None:
        rng = np.random.default_rng(0)
    point = tuple(float(v) for v in point)
    theta = families.build_coframe(spec, pair, point)
    E = families.build_frame(spec, pair, point)
    g = cartan.metric_from_coframe(theta)
    cartan.check_positive_definite(g.value)
    R_coord = cartan.riemann_coordinates(g)
    zj = jets.jet_variable(2, theta.point)
    al = families.alpha(spec, zj)
    c = cartan.structure_constants(E, theta)
    om = cartan.connection_forms(E, theta)
    cd = cartan.frame_curvature(R_coord, E, theta, al, om, c)
    R_frame = cartan.riemann_from_connection(E, om, c)
    cf = closedform.closed_forms(spec, pair, point)
    g211, g122 = closedform.gamma_jets(spec, pair, point)

    a0 = float(al.value)
    L = np.array([float(al.directional(E[i]).value) / a0 for i in range(4)])
    G = (float(g211.value), float(g122.value))
    E0, c0, w0 = E.value, c.value, om.value

    dtheta = cartan.forms_in_frame(cartan.exterior_derivative_1forms(theta).value, E0)

    d_omegabar = cartan.exterior_derivative_frame(cartan.OMEGA_BAR, c).value
    d_omega = cartan.exterior_derivative_frame(cartan.OMEGA, c).value
    lee = np.array([0.0, 0.0, 0.0, -a0])
    d_omega_lee = float(np.max(np.abs(d_omega - 2 * cartan.wedge_1_2(lee, cartan.OMEGA))))

    nabla = cartan.covariant_derivative_2form(cartan.OMEGA, w0)
    nabla_exp = np.zeros_like(nabla)
    nabla_exp[0], nabla_exp[1] = a0 * cartan.PHI, a0 * cartan.PSI

    p = families.profiles(spec, pair, point)
    return PointAnalysis(
        point=point, spec=spec, alpha=a0,
        pde=float(families.pde_residual(spec, pair, point)),
        spaceform=float(families.spaceform_residual(spec, pair, point)),
        warp_h_sq=float(p.f.value) ** 2,
        duality=families.duality_residual(theta, E),
        c=c0, c_expected=expected_structure_constants(a0, L, *G),
        dtheta=dtheta, dtheta_expected=expected_dtheta(a0, L, *G),
        omega=w0, omega_expected=expected_connection(a0, L, *G),
        curvature=cd, riemann_frame_route=R_frame, closed=cf,
        gamma_numeric=(float(w0[1, 0, 0]), float(w0[0, 1, 1])),
        ricci_general=closedform.general_frame_ricci(al, E, g211, g122),
        K12_gamma=closedform.k12_from_gammas(al, E, g211, g122),
        nabla_omegabar=cartan.kahler_residual(w0),
        d_omegabar=float(np.max(np.abs(d_omegabar))),
        nijenhuis_J=cartan.nijenhuis_residual(cartan.JHERM, c0),
        nijenhuis_Jbar=cartan.nijenhuis_residual(cartan.JBAR, c0),
        d_omega_lee=d_omega_lee,
        nabla_omega=nabla, nabla_omega_expected=nabla_exp,
        qch=cartan.qch_scan(cd.riemann, rng, qch_samples),
        decomposition=cartan.decomposition_residual(cd.riemann, cd.tau, cd.delta_ric, cd.kappa),
        extras={"E_ln_alpha": L},
    )


# --------------------------------------------------------------------------- #
# claim registry
# --------------------------------------------------------------------------- #
NOT_APPLICABLE = object()


@dataclass(frozen=True)
class Claim:
    id: str
    description: str
    tol_class: str
    check: object                 # PointAnalysis -> float | NOT_APPLICABLE
    closed_form: bool = False     # a failure is also reported as a finding


def _bracket_check(i, j):
    return lambda pa: _scaled(pa.c[i, j], pa.c_expected[i, j])


def _dtheta_check(k):
    return lambda pa: _scaled(pa.dtheta[k], pa.dtheta_expected[k])


def _omega_check(i, j):
    return lambda pa: _scaled(pa.omega[i, j], pa.omega_expected[i, j])


def _is_spaceform(pa, tol):
    return abs(pa.spaceform) <= tol


def _spaceform_R(pa):
    c_H, _, _ = closedform.spaceform_expected(pa.spec)
    Pi, _, _ = cartan.kahler_tensors()
    return _scaled(pa.curvature.riemann, c_H * Pi)


def _spaceform_tau(pa):
    _, tau, _ = closedform.spaceform_expected(pa.spec)
    return _scaled(pa.curvature.tau, tau)


def _wminus_norm(pa):
    return float(np.linalg.norm(pa.curvature.wminus))


def _wminus_identity(pa):
    # |W-| = (sqrt(6)/12)|kappa| and kappa = -2 (space-form residual) / (warp h)^2
    predicted = math.sqrt(6) / 6 * abs(pa.spaceform) / pa.warp_h_sq
    return _scaled(_wminus_norm(pa), predicted)


def registry(spec):
    """All claims checked for a scenario of family ``spec``, in id order."""
    fam = FAMILY_SLUG[spec.kind]
    thm = f"thm-{fam}"
    claims = [
        Claim("frame.duality", "theta_i(E_j) = delta_ij", "linear",
              lambda pa: pa.duality),
        Claim("curvature.dual-path", "coordinate and frame routes give the same Riemann tensor", "linear",
              lambda pa: _scaled(pa.curvature.riemann, pa.riemann_frame_route)),
        Claim("curvature.symmetries", "Riemann antisymmetries and pair symmetry", "linear",
              lambda pa: pa.curvature.symmetry_residual),
        Claim("curvature.bianchi", "first Bianchi identity", "linear",
              lambda pa: pa.curvature.bianchi_residual),
        Claim("eq5.K12-gamma", "K(E1,E2) = E1 G122 + E2 G211 - G211^2 - G122^2 - alpha^2", "curvature",
              lambda pa: _scaled(pa.curvature.K12, pa.K12_gamma), closed_form=True),
        Claim("eq9.lee-identity", "|theta|^2 + delta theta from the Lee form equals 2 E4 alpha - alpha^2", "linear",
              lambda pa: _scaled(pa.curvature.lee_sq_generic + pa.curvature.delta_theta_generic,
                                 pa.curvature.lee_sq + pa.curvature.delta_theta)),
        Claim("eq9.family-constant", "2 E4 alpha - alpha^2 equals the family constant", "linear",
              lambda pa: _scaled(pa.curvature.lee_sq + pa.curvature.delta_theta, pa.closed.lee_constant),
              closed_form=True),
        Claim("eq10.ricci", "general frame Ricci formula", "curvature",
              lambda pa: _scaled(pa.curvature.ricci, pa.ricci_general), closed_form=True),
        Claim("lee.form", "Lee form of J equals -alpha theta_4", "linear",
              lambda pa: _scaled(pa.curvature.extras["lee_frame"], [0, 0, 0, -pa.alpha])),
        Claim("ricci.J-invariant", "Ric(JX, JY) = Ric(X, Y)", "curvature",
              lambda pa: _scaled(cartan.JHERM.T @ pa.curvature.ricci @ cartan.JHERM, pa.curvature.ricci)),
        Claim("kahler.nabla-omegabar", "Kahler form of Jbar is parallel", "linear",
              lambda pa: pa.nabla_omegabar),
        Claim("kahler.d-omegabar", "Kahler form of Jbar is closed", "closed-form-2",
              lambda pa: pa.d_omegabar),
        Claim("kahler.nijenhuis-Jbar", "Jbar is integrable", "linear",
              lambda pa: pa.nijenhuis_Jbar),
        Claim("hermitian.nijenhuis-J", "J is integrable", "linear",
              lambda pa: pa.nijenhuis_J),
        Claim("hermitian.d-omega-lee", "d Omega = 2 theta ^ Omega", "linear",
              lambda pa: pa.d_omega_lee),
        Claim("hermitian.nabla-omega", "nabla Omega = alpha (theta_1 Phi + theta_2 Psi)", "linear",
              lambda pa: _scaled(pa.nabla_omega, pa.nabla_omega_expected)),
        Claim("hermitian.nabla-omega-norm", "|nabla Omega|^2 = 2 alpha^2", "curvature",
              lambda pa: _scaled(cartan.form_norm_sq(pa.nabla_omega), 2 * pa.alpha ** 2)),
        Claim("weyl.wminus-spectrum", "W- is diag(kappa/6, -kappa/12, -kappa/12) in (Omega, Phi, Psi)", "spectral",
              lambda pa: _scaled(pa.curvature.wminus,
                                 np.diag([1 / 6, -1 / 12, -1 / 12]) * pa.curvature.kappa)),
        Claim("qch.spread", "holomorphic curvature depends only on |X_Delta|", "curvature",
              lambda pa: pa.qch["max_spread"] / max(1.0, max(abs(v) for v in pa.qch["fit"]))),
        Claim("qch.fit", "holomorphic curvature is a + b s^2 + c s^4", "curvature",
              lambda pa: pa.qch["fit_residual"] / max(1.0, max(abs(v) for v in pa.qch["fit"]))),
        Claim("decomp.eq1", "R = (tau/6 - delta + kappa/12) Pi + (2 delta - kappa/2) Phi + kappa/2 Psi", "spectral",
              lambda pa: pa.decomposition / max(1.0, float(np.max(np.abs(pa.curvature.riemann))))),
        Claim("remark.wminus-iff-spaceform", "|W-| is proportional to the space-form residual", "curvature",
              _wminus_identity, closed_form=True),
        Claim(f"{thm}.ii.gamma", "closed-form Gamma^2_11 and Gamma^1_22", "linear",
              lambda pa: _scaled(pa.gamma_numeric, pa.closed.gamma), closed_form=True),
        Claim(f"{thm}.iii.ricci", "closed-form Ricci tensor", "curvature",
              lambda pa: _scaled(pa.curvature.ricci, pa.closed.ricci), closed_form=True),
        Claim(f"{thm}.iv.tau", "closed-form scalar curvature", "curvature",
              lambda pa: _scaled(pa.curvature.tau, pa.closed.tau), closed_form=True),
        Claim(f"{thm}.v.kappa", "closed-form conformal scalar curvature", "curvature",
              lambda pa: _scaled(pa.curvature.kappa, pa.closed.kappa), closed_form=True),
        Claim(f"{thm}.vi.wminus", "closed-form W- matrix", "spectral",
              lambda pa: _scaled(pa.curvature.wminus, np.diag(pa.closed.wminus_eigs)), closed_form=True),
        Claim(f"{thm}.vii.K12", "closed-form K(E1, E2)", "curvature",
              lambda pa: _scaled(pa.curvature.K12, pa.closed.K12), closed_form=True),
        Claim(f"{thm}.vii.K34", "closed-form K(E3, E4)", "curvature",
              lambda pa: _scaled(pa.curvature.K34, pa.closed.K34), closed_form=True),
        Claim(f"{thm}.viii.criterion", "kappa = -2 (space-form residual) / (warp h)^2", "curvature",
              lambda pa: _scaled(pa.curvature.kappa, -2 * pa.spaceform / pa.warp_h_sq), closed_form=True),
    ]
    for name, (i, j) in CONNECTION_FORMS.items():
        claims.append(Claim(f"eq4.{name}", f"connection form {name}", "linear", _omega_check(i, j)))
    for i, j in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
        claims.append(Claim(f"eq2.bracket{i + 1}{j + 1}", f"[E{i + 1}, E{j + 1}]", "linear", _bracket_check(i, j)))
    for k in range(4):
        claims.append(Claim(f"eq3.dtheta{k + 1}", f"d theta_{k + 1}", "linear", _dtheta_check(k)))
    claims.sort(key=lambda cl: cl.id)
    return claims


# space-form claims, evaluated only at points where the space-form condition holds
def spaceform_claims(spec):
    return [
        Claim("spaceform.R-eq-cPi", "R = c_H Pi", "spectral", _spaceform_R),
        Claim("spaceform.tau", "scalar curvature of the space form", "curvature", _spaceform_tau),
        Claim("wminus.zero", "W- vanishes", "vanishing", _wminus_norm),
    ]


def pde_claim_id(spec):
    return f"thm-{FAMILY_SLUG[spec.kind]}.i.pde"


def all_claim_ids(spec):
    return sorted([c.id for c in registry(spec)] + [c.id for c in spaceform_claims(spec)]
                  + [pde_claim_id(spec)])


# --------------------------------------------------------------------------- #
# scenarios
# --------------------------------------------------------------------------- #
@dataclass
class Scenario:
    family: FamilySpec
    h: object                       # expression text, Grid2D, or None (space-form solve)
    H: object                       # expression text, Grid2D, or dict solve directive
    samples: dict
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    qch_samples: int = 32
    report: str = None
    profile: dict = field(default_factory=dict)
    base_dir: str = "."
    bindings: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def grid_tier(self):
        return isinstance(self.h, liouville.Grid2D) or not isinstance(self.H, str)

    def tolerance(self, claim):
        """Per-claim override, then per-class override, then the tier default."""
        if claim.id in self.tolerances:
            return float(self.tolerances[claim.id])
        if claim.tol_class in self.tolerances:
            return float(self.tolerances[claim.tol_class])
        if self.grid_tier:
            return float(self.tolerances.get("grid", GRID_TOL))
        return DEFAULT_TOLERANCES[claim.tol_class]

    def pde_tolerance(self):
        if "pde" in self.tolerances:
            return float(self.tolerances["pde"])
        return float(self.tolerances.get("grid", GRID_TOL)) if self.grid_tier else DEFAULT_TOLERANCES["pde"]


def parse_tolerance_overrides(items):
    """``["key=value", ...]`` from the command line."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"tolerance override {item!r} is not key=value")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"tolerance override {item!r}: {value!r} is not a number") from None
        if not out[key.strip()] > 0:
            raise ConfigError(f"tolerance override {item!r} must be positive")
    return out


def _known_tolerance_keys(spec):
    return set(DEFAULT_TOLERANCES) | {"grid"} | set(all_claim_ids(spec))


def load_scenario(source, seed=None, tolerances=None):
    """Build a :class:`Scenario` from a JSON path or an already decoded dict."""
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        base = os.path.dirname(os.path.abspath(path))
    else:
        raw, base = dict(source), os.getcwd()
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    if "family" not in raw:
        raise ConfigError("scenario needs a 'family'")
    try:
        spec = FamilySpec(raw["family"], raw.get("a", 1.0))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad family/a: {exc}") from None
    bindings = {"a": spec.a}

    def source_of(key, allow_none=False):
        val = raw.get(key)
        if val is None:
            if allow_none:
                return None
            raise ConfigError(f"scenario needs '{key}'")
        if isinstance(val, (int, float)):
            val = repr(float(val))
        if isinstance(val, str):
            try:
                parse(val)
            except ParseError as exc:
                raise ConfigError(f"'{key}': {exc}") from None
            return val
        if isinstance(val, dict) and "grid" in val:
            return liouville.Grid2D.from_csv(os.path.join(base, val["grid"]))
        if isinstance(val, dict) and "solve" in val and key == "H":
            return dict(val["solve"])
        raise ConfigError(f"'{key}' must be an expression, {{'grid': path}} or (for H) {{'solve': ...}}")

    H = source_of("H")
    solve_mode = isinstance(H, dict) and H.get("mode", "H") == "spaceform"
    h = source_of("h", allow_none=solve_mode)

    tol = dict(raw.get("tolerances", {}))
    tol.update(tolerances or {})
    unknown = set(tol) - _known_tolerance_keys(spec)
    if unknown:
        raise ConfigError(f"unknown tolerance key(s): {', '.join(sorted(unknown))}")

    sc = Scenario(
        family=spec, h=h, H=H,
        samples=dict(raw.get("samples", {"count": 20})),
        tolerances=tol,
        seed=int(raw.get("seed", 0) if seed is None else seed),
        qch_samples=int(raw.get("qch_samples", 32)),
        report=raw.get("report"),
        profile=dict(raw.get("profile", {})),
        base_dir=base, bindings=bindings, raw=raw,
    )
    if sc.qch_samples < 32:
        raise ConfigError("qch_samples must be at least 32")
    return sc


def _range(samples, key, default):
    r = samples.get(key, default)
    if not (isinstance(r, (list, tuple)) and len(r) == 2 and float(r[0]) <= float(r[1])):
        raise ConfigError(f"samples.{key} must be [lo, hi] with lo <= hi")
    return float(r[0]), float(r[1])


def default_z_range(spec):
    lo, hi = _DEFAULT_AZ[spec.kind]
    return lo / spec.a, hi / spec.a


def _beta_zeros(spec, zlo, zhi):
    """z values in ``[zlo, zhi]`` where the third frame vector degenerates."""
    if spec.kind is Kind.SEMI_SYMMETRIC:
        return []
    if spec.kind is Kind.TAN:
        step = math.pi / (2 * spec.a)
        k0, k1 = math.ceil(zlo / step), math.floor(zhi / step)
        return [k * step for k in range(k0, k1 + 1)]
    return [0.0] if zlo <= 0.0 <= zhi else []


def sample_points(sc, rng):
    """Explicit points, or ``count`` uniform draws outside the exclusion bands."""
    s, spec = sc.samples, sc.family
    if "points" in s:
        pts = []
        for p in s["points"]:
            if len(p) != 4:
                raise ConfigError(f"sample point {p!r} needs four coordinates (x, y, z, t)")
            pts.append(tuple(float(v) for v in p))
        return pts
    count = int(s.get("count", 20))
    if count < 1:
        raise ConfigError("samples.count must be positive")
    xr = _range(s, "x", DEFAULT_XY)
    yr = _range(s, "y", DEFAULT_XY)
    zr = _range(s, "z", default_z_range(spec))
    tr = _range(s, "t", DEFAULT_T)
    band = float(s.get("exclude", {}).get("beta", DEFAULT_BETA_BAND))
    zeros = _beta_zeros(spec, *zr)
    pts, attempts = [], 0
    while len(pts) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise ConfigError("exclusion bands leave no room to place sample points")
        p = (rng.uniform(*xr), rng.uniform(*yr), rng.uniform(*zr), rng.uniform(*tr))
        if any(abs(p[2] - z0) < band for z0 in zeros):
            continue
        pts.append(tuple(float(v) for v in p))
    return pts


# --------------------------------------------------------------------------- #
# surface pairs
# --------------------------------------------------------------------------- #
def _solve_grid(directive):
    g = directive.get("grid", {"n": 65, "lo": -1.0, "hi": 1.0})
    try:
        if "n" in g:
            return liouville.Grid2D.square(int(g["n"]), float(g.get("lo", -1.0)), float(g.get("hi", 1.0)))
        return liouville.Grid2D(int(g["nx"]), int(g["ny"]), float(g["spacing"]),
                                tuple(g.get("origin", (0.0, 0.0))), np.zeros((int(g["nx"]), int(g["ny"]))))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"solve.grid: {exc}") from None


def _solve_config(directive, bindings):
    try:
        return liouville.SolveConfig(
            boundary=directive.get("boundary", 0.0),
            damping=float(directive.get("damping", 1.0)),
            max_iters=int(directive.get("max_iters", 60)),
            residual_target=float(directive.get("residual_target", 1e-10)),
            initial=directive.get("initial"),
            bindings=bindings,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"solve: {exc}") from None


def run_solver(sc):
    """Execute the scenario's solve directive; returns ``(h_grid, SolveResult)``."""
    d, spec = sc.H, sc.family
    if not isinstance(d, dict):
        raise ConfigError("scenario H is not a solve directive")
    cfg = _solve_config(d, sc.bindings)
    mode = d.get("mode", "H")
    if mode == "H":
        if isinstance(sc.h, liouville.Grid2D):
            hg = sc.h
        else:
            hg = _solve_grid(d).resample(sc.h, sc.bindings)
        res = liouville.solve_H_detailed(spec, hg, cfg)
        return hg, res
    if mode == "spaceform":
        grid = sc.h if isinstance(sc.h, liouville.Grid2D) else _solve_grid(d)
        seed = d.get("seed")
        if seed is not None:
            if not (isinstance(seed, dict) and "h" in seed and "H" in seed):
                raise ConfigError("solve.seed must be {'h': ..., 'H': ...}")
            seed = (seed["h"], seed["H"])
        res = liouville.spaceform_pair(spec, grid, cfg, seed=seed)
        return res.grids[0], res
    raise ConfigError(f"solve.mode must be 'H' or 'spaceform', got {mode!r}")


def build_pair(sc):
    """The surface pair to verify plus a summary of any solve that produced it."""
    if isinstance(sc.h, str) and isinstance(sc.H, str):
        return SurfacePair(sc.h, sc.H, sc.bindings), None
    if isinstance(sc.H, dict):
        hg, res = run_solver(sc)
        Hg = res.H
        summary = {"residual": res.residual, "iterations": res.iterations}
    else:
        Hg = sc.H if isinstance(sc.H, liouville.Grid2D) else None
        hg = sc.h if isinstance(sc.h, liouville.Grid2D) else None
        if Hg is None:
            Hg = hg.resample(sc.H, sc.bindings)
        if hg is None:
            hg = Hg.resample(sc.h, sc.bindings)
        summary = None
    if not hg.same_layout(Hg):
        raise ConfigError("h and H grids differ in layout")
    pair = liouville.GridPair(hg, Hg)
    grid_summary = liouville.grid_pde_summary(sc.family, hg, Hg)
    if summary:
        grid_summary.update(summary)
    return pair, grid_summary


# --------------------------------------------------------------------------- #
# verification
# --------------------------------------------------------------------------- #
POINT_ERRORS = (DomainError, SingularFrame, SingularMetric, ZeroDivisionError, np.linalg.LinAlgError)


def _claim_record(claim, tol, values):
    """Aggregate ``[(residual, point), ...]`` into a report record."""
    rec = {"id": claim.id, "description": claim.description, "tolerance": tol,
           "tolerance_class": claim.tol_class}
    if not values:
        rec.update(status="not-evaluated", max_residual=None, worst_point=None, points=0)
        return rec
    bad = [(r, p) for r, p in values if not math.isfinite(r)]
    if bad:
        worst_r, worst_p = bad[0][0], min(p for _, p in bad)
    else:
        worst_r = max(r for r, _ in values)
        worst_p = min(p for r, p in values if r == worst_r)
    passed = not bad and worst_r <= tol
    rec.update(status="pass" if passed else "fail",
               max_residual=worst_r if math.isfinite(worst_r) else str(worst_r),
               worst_point=list(worst_p), points=len(values))
    return rec


def _finite(v):
    return float(v) if math.isfinite(float(v)) else str(float(v))


def run_verify(sc):
    """Run every claim over the scenario's accepted points; returns the report dict."""
    spec = sc.family
    pair, solve_summary = build_pair(sc)
    rng = np.random.default_rng(sc.seed)
    points = sample_points(sc, rng)
    box = pair.interior_box() if isinstance(pair, liouville.GridPair) else None

    pde_tol = sc.pde_tolerance()
    claims = registry(spec)
    sf_claims = spaceform_claims(spec)
    values = {c.id: [] for c in claims + sf_claims}
    pde_values, rejected, findings_detail = [], [], {}
    accepted = 0
    for idx, p in enumerate(points):
        if box and not (box[0][0] <= p[0] <= box[0][1] and box[1][0] <= p[1] <= box[1][1]):
            rejected.append({"point": list(p), "reason": "outside-grid-interior"})
            continue
        try:
            pde = float(families.pde_residual(spec, pair, p))
        except POINT_ERRORS as exc:
            rejected.append({"point": list(p), "reason": "domain", "detail": str(exc)})
            continue
        pde_values.append((abs(pde), p))
        if not abs(pde) <= pde_tol:
            rejected.append({"point": list(p), "reason": "pde-residual", "value": _finite(pde)})
            continue
        try:
            pa = analyze_point(spec, pair, p, np.random.default_rng([sc.seed, idx]), sc.qch_samples)
        except POINT_ERRORS as exc:
            rejected.append({"point": list(p), "reason": "domain", "detail": str(exc)})
            continue
        accepted += 1
        for c in claims:
            r = float(c.check(pa))
            values[c.id].append((r if math.isfinite(r) else math.inf, p))
            if c.closed_form:
                findings_detail.setdefault(c.id, {})[p] = _finding_values(c.id, pa)
        if _is_spaceform(pa, pde_tol):
            for c in sf_claims:
                values[c.id].append((float(c.check(pa)), p))

    records = []
    for c in claims:
        records.append(_claim_record(c, sc.tolerance(c), values[c.id]))
    for c in sf_claims:
        rec = _claim_record(c, sc.tolerance(c), values[c.id])
        if rec["status"] == "not-evaluated" and accepted:
            rec["status"] = "not-applicable"
        if c.id == "spaceform.R-eq-cPi":
            rec["c_H"], _, rec["model"] = closedform.spaceform_expected(spec)
        records.append(rec)
    pde_claim = Claim(pde_claim_id(spec), "surface pair satisfies the Liouville-type constraint", "pde", None)
    records.append(_claim_record(pde_claim, pde_tol, pde_values))
    records.sort(key=lambda r: r["id"])

    findings = []
    for rec in records:
        if rec["status"] == "fail" and rec["id"] in findings_detail and rec["worst_point"] is not None:
            detail = findings_detail[rec["id"]].get(tuple(rec["worst_point"]), {})
            findings.append({"claim": rec["id"], "worst_point": rec["worst_point"],
                             "max_residual": rec["max_residual"], **detail})

    counts = {s: sum(r["status"] == s for r in records)
              for s in ("pass", "fail", "not-applicable", "not-evaluated")}
    failed = counts["fail"] > 0 or accepted == 0
    report = {
        "engine": {"name": "gencalabi", "version": __version__},
        "scenario": _scenario_echo(sc),
        "seed": sc.seed,
        "tier": "grid" if sc.grid_tier else "expression",
        "points": {"requested": len(points), "accepted": accepted, "rejected": len(rejected)},
        "rejections": rejected,
        "claims": records,
        "findings": findings,
        "summary": {**counts, "status": "fail" if failed else "pass"},
    }
    if solve_summary is not None:
        report["grid"] = solve_summary
    return report


def _finding_values(cid, pa):
    """Closed-form and numeric values behind a closed-form claim, for the findings list."""
    cd, cf = pa.curvature, pa.closed
    if cid.endswith(".iii.ricci"):
        return {"closed": list(cf.ricci_diag), "numeric": [float(cd.ricci[0, 0]), float(cd.ricci[2, 2])]}
    if cid.endswith(".iv.tau"):
        return {"closed": cf.tau, "numeric": cd.tau}
    if cid.endswith(".v.kappa"):
        return {"closed": cf.kappa, "numeric": cd.kappa}
    if cid.endswith(".vi.wminus"):
        return {"closed": list(cf.wminus_eigs), "numeric": [float(v) for v in np.diag(cd.wminus)]}
    if cid.endswith(".vii.K12"):
        return {"closed": cf.K12, "numeric": cd.K12}
    if cid.endswith(".vii.K34"):
        return {"closed": cf.K34, "numeric": cd.K34}
    if cid.endswith(".ii.gamma"):
        return {"closed": list(cf.gamma), "numeric": list(pa.gamma_numeric)}
    if cid == "eq9.family-constant":
        return {"closed": cf.lee_constant, "numeric": cd.lee_sq + cd.delta_theta}
    if cid == "eq5.K12-gamma":
        return {"closed": pa.K12_gamma, "numeric": cd.K12}
    return {}


def _scenario_echo(sc):
    def src(v):
        if isinstance(v, liouville.Grid2D):
            return {"grid": list(v.shape), "spacing": v.spacing, "origin": list(v.origin)}
        return v

    return {"family": sc.family.name, "a": sc.family.a, "h": src(sc.h), "H": src(sc.H),
            "samples": sc.samples, "tolerances": dict(sorted(sc.tolerances.items())),
            "qch_samples": sc.qch_samples}


def dump_report(report):
    """Deterministic JSON text for a report."""
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def exit_status(report):
    return 0 if report["summary"]["status"] == "pass" else 1


# --------------------------------------------------------------------------- #
# profile
# --------------------------------------------------------------------------- #
PROFILE_COLUMNS = ("coordinate", "tau_numeric", "tau_closed", "kappa_numeric", "kappa_closed",
                   "K12_numeric", "K12_closed", "K34_numeric", "K34_closed",
                   "wminus_omega", "wminus_phi", "wminus_psi")


def profile_rows(sc, axis="z", count=25, span=None, at=None):
    """Curvature along one chart coordinate.

    Numeric columns are ``nan`` where the metric is singular (``beta = 0``);
    closed-form columns are filled wherever the formulas make sense.
    """
    if axis not in ("z", "t"):
        raise ConfigError(f"profile axis must be z or t, got {axis!r}")
    if count < 2:
        raise ConfigError("profile count must be at least 2")
    spec = sc.family
    pair, _ = build_pair(sc)
    prof = sc.profile
    at = list(at or prof.get("at") or [0.0, 0.0, default_z_range(spec)[0], 0.0])
    if len(at) != 4:
        raise ConfigError("profile.at needs four coordinates")
    if span is None:
        span = prof.get("range")
    if span is None:
        span = sc.samples.get(axis) or (default_z_range(spec) if axis == "z" else DEFAULT_T)
    lo, hi = float(span[0]), float(span[1])
    k = 2 if axis == "z" else 3
    rows = []
    for s in np.linspace(lo, hi, count):
        p = list(at)
        p[k] = float(s)
        row = {"coordinate": float(s)}
        try:
            cf = closedform.closed_forms(spec, pair, p, check_domain=False)
            row.update(tau_closed=cf.tau, kappa_closed=cf.kappa, K12_closed=cf.K12, K34_closed=cf.K34)
        except (DomainError, ZeroDivisionError):
            row.update(tau_closed=math.nan, kappa_closed=math.nan, K12_closed=math.nan, K34_closed=math.nan)
        try:
            if not spec.beta_ok(p[2]):
                raise SingularFrame("beta vanishes")
            pa = analyze_point(spec, pair, p, np.random.default_rng([sc.seed, len(rows)]), sc.qch_samples)
            cd = pa.curvature
            w = np.diag(cd.wminus)
            row.update(tau_numeric=cd.tau, kappa_numeric=cd.kappa, K12_numeric=cd.K12, K34_numeric=cd.K34,
                       wminus_omega=w[0], wminus_phi=w[1], wminus_psi=w[2])
        except POINT_ERRORS:
            row.update(tau_numeric=math.nan, kappa_numeric=math.nan, K12_numeric=math.nan,
                       K34_numeric=math.nan, wminus_omega=math.nan, wminus_phi=math.nan, wminus_psi=math.nan)
        rows.append(row)
    return rows


def run_profile(sc, axis="z", count=25, span=None, at=None):
    """CSV text of :func:`profile_rows`."""
    rows = profile_rows(sc, axis, count, span, at)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r[c])) for c in PROFILE_COLUMNS])
    return buf.getvalue()


# --------------------------------------------------------------------------- #
# solve
# --------------------------------------------------------------------------- #
def run_solve(sc, out_dir):
    """Solve and write grid CSV files plus ``summary.json`` into ``out_dir``.

    Returns ``(summary, exit_code)``; on non-convergence the best iterate is
    written and the exit code is 3.
    """
    if not isinstance(sc.H, dict):
        raise ConfigError("solve needs H given as {'solve': {...}}")
    os.makedirs(out_dir, exist_ok=True)
    spec = sc.family
    mode = sc.H.get("mode", "H")
    summary = {"family": spec.name, "a": spec.a, "mode": mode}
    try:
        hg, res = run_solver(sc)
        grids = (hg, res.H)
        summary.update(status="converged", residual=res.residual, iterations=res.iterations,
                       history=res.history)
        code = 0
    except NonConvergence as exc:
        best = exc.best
        if isinstance(best, tuple):
            grids = best
        else:
            grids = (None, best)
        summary.update(status="non-convergence", residual=exc.residual, iterations=exc.iterations,
                       message=str(exc))
        code = 3
    files = {}
    if grids[0] is not None and mode == "spaceform":
        files["h"] = os.path.join(out_dir, "h.csv")
        grids[0].to_csv(files["h"])
    if grids[1] is not None:
        files["H"] = os.path.join(out_dir, "H.csv")
        grids[1].to_csv(files["H"])
        if code == 0 and grids[0] is not None:
            summary["pde_residual"] = liouville.grid_pde_summary(spec, grids[0], grids[1])
            if mode == "spaceform":
                sres = liouville.spaceform_residual_grid(spec, grids[0], grids[1]).values
                summary["spaceform_residual"] = float(np.max(np.abs(sres)))
    summary["files"] = {k: os.path.basename(v) for k, v in files.items()}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary, code


CONFIG_ERRORS = (ConfigError, ParseError, UnboundConstant)
__all__ = [
    "Scenario", "PointAnalysis", "Claim", "registry", "spaceform_claims", "all_claim_ids",
    "analyze_point", "load_scenario", "sample_points", "run_verify", "run_profile", "profile_rows",
    "run_solve", "dump_report", "exit_status", "parse_tolerance_overrides", "GenCalabiError",
]
