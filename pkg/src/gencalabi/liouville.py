"""Finite-difference solver for the Liouville-type constraint on ``(h, H)``.

The constraint is ``lap ln H = c1 h^2 + c2 H^2`` on a rectangle.  Writing
``u = ln H`` it becomes the semilinear problem

    F(u) = L u - c1 h^2 - c2 exp(2 u) = 0

with ``L`` the five-point Laplacian and Dirichlet data on the edge.  The
space-form system adds a second equation of the same type for ``v = ln h``.
Both are solved with damped Newton and backtracking.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import jets
from .errors import ConfigError, DomainError, NonConvergence, ShapeMismatch
from .exprlang import as_expr, evaluate
from .families import Kind, pde_coefficients, spaceform_coefficients

log = logging.getLogger(__name__)

CSV_HEADER = ("nx", "ny", "spacing", "x0", "y0")
BACKTRACK_FLOOR = 2.0 ** -20
EDGES = ("left", "right", "bottom", "top")


@dataclass
class Grid2D:
    """Values on the uniform grid ``x0 + i*spacing, y0 + j*spacing``.

    ``values[i, j]`` sits at ``(x_i, y_j)``.
    """

    nx: int
    ny: int
    spacing: float
    origin: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nx, self.ny = int(self.nx), int(self.ny)
        self.spacing = float(self.spacing)
        self.origin = (float(self.origin[0]), float(self.origin[1]))
        if self.nx < 5 or self.ny < 5:
            raise ConfigError(f"grid needs at least 5x5 nodes, got {self.nx}x{self.ny}")
        if not self.spacing > 0:
            raise ConfigError(f"grid spacing must be positive, got {self.spacing}")
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.nx, self.ny):
            raise ShapeMismatch(f"values have shape {values.shape}, expected {(self.nx, self.ny)}")
        self.values = values

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def x(self):
        return self.origin[0] + self.spacing * np.arange(self.nx)

    @property
    def y(self):
        return self.origin[1] + self.spacing * np.arange(self.ny)

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def like(self, values):
        return Grid2D(self.nx, self.ny, self.spacing, self.origin, values)

    def same_layout(self, other):
        return (self.shape == other.shape and self.spacing == other.spacing
                and self.origin == other.origin)

    @classmethod
    def square(cls, n, lo=-1.0, hi=1.0, values=0.0):
        spacing = (hi - lo) / (n - 1)
        return cls(n, n, spacing, (lo, lo), np.full((n, n), values, dtype=float))

    @classmethod
    def sample(cls, source, nx, ny, spacing, origin, bindings=None):
        """Sample an expression (text or tree) or a callable ``f(x, y)``."""
        g = cls(nx, ny, spacing, origin, np.zeros((nx, ny)))
        X, Y = g.mesh()
        if callable(source):
            vals = source(X, Y)
        else:
            vals = evaluate(as_expr(source), X, Y, bindings)
        g.values = np.broadcast_to(np.asarray(vals, dtype=float), g.shape).copy()
        return g

    def resample(self, source, bindings=None):
        return Grid2D.sample(source, self.nx, self.ny, self.spacing, self.origin, bindings)

    # CSV ------------------------------------------------------------------
    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            w.writerow([self.nx, self.ny, repr(self.spacing), repr(self.origin[0]), repr(self.origin[1])])
            for row in self.values:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
            raise ConfigError(f"{path}: first line must be {','.join(CSV_HEADER)}")
        try:
            nx, ny = int(rows[1][0]), int(rows[1][1])
            spacing, x0, y0 = (float(v) for v in rows[1][2:5])
            values = np.array([[float(v) for v in r] for r in rows[2:] if r], dtype=float)
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"{path}: malformed grid file ({exc})") from None
        if values.shape != (nx, ny):
            raise ShapeMismatch(f"{path}: {values.shape} values for a {nx}x{ny} grid")
        return cls(nx, ny, spacing, (x0, y0), values)


@dataclass
class SolveConfig:
    """Newton settings and Dirichlet data for ``u = ln H``.

    ``boundary`` may be a number, an expression in ``x`` and ``y``, a callable,
    an ``(nx, ny)`` array whose edge entries are used, or a dict with the
    keys ``left``, ``right`` (length ``ny``), ``bottom`` and ``top`` (length ``nx``).
    ``initial`` seeds the interior the same way; by default the interior starts
    at the mean boundary value.
    """

    boundary: object = 0.0
    damping: float = 1.0
    max_iters: int = 60
    residual_target: float = 1e-10
    initial: object = None
    bindings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.residual_target > 0:
            raise ConfigError(f"residual_target must be positive, got {self.residual_target}")
        if int(self.max_iters) < 1:
            raise ConfigError(f"max_iters must be at least 1, got {self.max_iters}")
        self.max_iters = int(self.max_iters)


@dataclass
class SolveResult:
    grids: tuple            # solved grids (H,) or (h, H)
    residual: float
    iterations: int
    history: list           # residual after every accepted step, starting with the initial one

    @property
    def H(self):
        return self.grids[-1]


# discrete operators ---------------------------------------------------------
def _interior_mask(shape):
    mask = np.zeros(shape, dtype=bool)
    mask[1:-1, 1:-1] = True
    return mask


def laplacian5(values, spacing):
    """Five-point Laplacian at interior nodes; boundary entries are zero."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    out[1:-1, 1:-1] = (v[2:, 1:-1] + v[:-2, 1:-1] + v[1:-1, 2:] + v[1:-1, :-2]
                       - 4 * v[1:-1, 1:-1]) / spacing ** 2
    return out


def _laplacian_matrix(shape, spacing):
    """Sparse five-point Laplacian acting on the interior unknowns (boundary moved to rhs)."""
    mx, my = shape[0] - 2, shape[1] - 2
    d2x = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(mx, mx))
    d2y = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(my, my))
    return (sp.kron(d2x, sp.identity(my)) + sp.kron(sp.identity(mx), d2y)).tocsc() / spacing ** 2


def _edge_values(spec_boundary, grid, bindings, what="boundary"):
    """Full ``(nx, ny)`` array carrying the Dirichlet data on the edges."""
    nx, ny = grid.shape
    b = spec_boundary
    if isinstance(b, dict):
        out = np.zeros(grid.shape)
        expected = {"left": ny, "right": ny, "bottom": nx, "top": nx}
        for edge, n in expected.items():
            if edge not in b:
                raise ConfigError(f"{what}: missing edge {edge!r}")
            vals = np.asarray(b[edge], dtype=float).ravel()
            if vals.size == 1:
                vals = np.full(n, float(vals[0]))
            if vals.size != n:
                raise ConfigError(f"{what}: edge {edge!r} has {vals.size} values, expected {n}")
            if edge == "left":
                out[0, :] = vals
            elif edge == "right":
                out[-1, :] = vals
            elif edge == "bottom":
                out[:, 0] = vals
            else:
                out[:, -1] = vals
        unknown = set(b) - set(expected)
        if unknown:
            raise ConfigError(f"{what}: unknown edge(s) {sorted(unknown)}")
        return out
    if isinstance(b, Grid2D):
        if not b.same_layout(grid):
            raise ShapeMismatch(f"{what}: grid layout differs from the problem grid")
        return b.values.copy()
    if isinstance(b, np.ndarray) and b.ndim == 2:
        if b.shape != grid.shape:
            raise ShapeMismatch(f"{what}: array shape {b.shape}, expected {grid.shape}")
        return b.astype(float).copy()
    if isinstance(b, (int, float, np.floating)):
        return np.full(grid.shape, float(b))
    try:
        return grid.resample(b, bindings).values
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: cannot interpret {b!r} ({exc})") from None


def _initial_values(cfg, grid, edge):
    mask = _interior_mask(grid.shape)
    if cfg.initial is None:
        out = edge.copy()
        out[mask] = edge[~mask].mean()
        return out
    init = _edge_values(cfg.initial, grid, cfg.bindings, "initial")
    init[~mask] = edge[~mask]
    return init


# Newton ---------------------------------------------------------------------
def _newton(residual, jacobian, x0, cfg, label):
    """Damped Newton on ``residual(x) = 0`` with halving backtracking.

    A step is accepted only if it lowers the max-norm residual, so the
    recorded history is strictly decreasing.
    """
    x = x0.copy()
    r = residual(x)
    norm = float(np.max(np.abs(r)))
    history = [norm]
    lam = cfg.damping
    it = 0
    while norm > cfg.residual_target and it < cfg.max_iters:
        it += 1
        try:
            dx = spla.spsolve(jacobian(x), -r)
        except RuntimeError as exc:  # singular factorization
            raise NonConvergence(f"{label}: singular Jacobian ({exc})", best=x, residual=norm, iterations=it) from None
        if not np.all(np.isfinite(dx)):
            raise NonConvergence(f"{label}: Newton step not finite", best=x, residual=norm, iterations=it)
        while True:
            trial = x + lam * dx
            with np.errstate(over="ignore", invalid="ignore"):
                r_trial = residual(trial)
            n_trial = float(np.max(np.abs(r_trial)))
            if np.isfinite(n_trial) and n_trial < norm:
                break
            lam *= 0.5
            if lam < BACKTRACK_FLOOR:
                raise NonConvergence(
                    f"{label}: line search stalled at residual {norm:.3e}",
                    best=x, residual=norm, iterations=it)
        x, r, norm = trial, r_trial, n_trial
        history.append(norm)
        log.debug("%s: iteration %d, step %.3g, residual %.3e", label, it, lam, norm)
        lam = min(1.0, 2 * lam)
    if norm > cfg.residual_target:
        raise NonConvergence(
            f"{label}: {cfg.max_iters} iterations left residual {norm:.3e} above {cfg.residual_target:.1e}",
            best=x, residual=norm, iterations=it)
    return x, norm, it, history


def _check_positive(grid, name):
    if np.any(grid.values <= 0):
        raise DomainError(name, float(grid.values.min()), f"{name} must be positive on the grid")


def solve_H_detailed(spec, h, cfg):
    """Solve for ``H`` given ``h``; returns a :class:`SolveResult`."""
    _check_positive(h, "h")
    c1, c2 = pde_coefficients(spec)
    edge = _edge_values(cfg.boundary, h, cfg.bindings)
    mask = _interior_mask(h.shape)
    L = _laplacian_matrix(h.shape, h.spacing)
    u_full = _initial_values(cfg, h, edge)
    src = c1 * h.values[mask] ** 2

    def full(x):
        out = u_full.copy()
        out[mask] = x
        return out

    def residual(x):
        return laplacian5(full(x), h.spacing)[mask] - src - c2 * np.exp(2 * x)

    def jacobian(x):
        return (L - sp.diags(2 * c2 * np.exp(2 * x))).tocsc()

    try:
        x, norm, it, history = _newton(residual, jacobian, u_full[mask], cfg, f"solve_H[{spec.name}]")
    except NonConvergence as exc:
        exc.best = h.like(np.exp(full(exc.best)))
        raise
    return SolveResult((h.like(np.exp(full(x))),), norm, it, history)


def solve_H(spec, h, cfg):
    """``H`` on the grid of ``h`` with discrete residual at most ``cfg.residual_target``."""
    return solve_H_detailed(spec, h, cfg).H


def residual_grid(spec, h, H):
    """Interior residual ``L ln H - c1 h^2 - c2 H^2``; zero on the edge."""
    if not h.same_layout(H):
        raise ShapeMismatch(f"h grid {h.shape} and H grid {H.shape} differ in layout")
    _check_positive(H, "H")
    c1, c2 = pde_coefficients(spec)
    res = laplacian5(np.log(H.values), h.spacing) - c1 * h.values ** 2 - c2 * H.values ** 2
    res[~_interior_mask(h.shape)] = 0.0
    return h.like(res)


def spaceform_residual_grid(spec, h, H):
    """Interior residual of ``lap ln h = s1 h^2 + s2 H^2``; zero on the edge."""
    if not h.same_layout(H):
        raise ShapeMismatch(f"h grid {h.shape} and H grid {H.shape} differ in layout")
    _check_positive(h, "h")
    s1, s2 = spaceform_coefficients(spec)
    res = laplacian5(np.log(h.values), h.spacing) - s1 * h.values ** 2 - s2 * H.values ** 2
    res[~_interior_mask(h.shape)] = 0.0
    return h.like(res)


def analytic_spaceform_seed(spec):
    """Expression pair solving both equations exactly, where one is known."""
    if spec.kind is Kind.SEMI_SYMMETRIC:
        return "1/(1+x^2+y^2)", "sqrt(1+x^2+y^2)"
    if spec.kind is Kind.TAN:
        return "sqrt(2)/(a*(1+x^2+y^2))", "sqrt(2)/(a*(1+x^2+y^2))"
    return None


def spaceform_pair(spec, grid, cfg, seed=None):
    """Solve the coupled space-form system for ``(h, H)`` on ``grid``.

    ``seed`` is a pair of grids (or numbers) used both as Dirichlet data and
    as the starting iterate.  Without a seed the analytic pair of the family
    is sampled when one is bundled; otherwise a :class:`ConfigError` is raised.
    """
    bindings = {"a": spec.a, **cfg.bindings}
    if seed is None:
        exprs = analytic_spaceform_seed(spec)
        if exprs is None:
            raise ConfigError(f"{spec.name}: no analytic seed bundled; pass seed=(h, H)")
        seed = tuple(grid.resample(e, bindings) for e in exprs)
    h0 = _edge_values(seed[0], grid, bindings, "seed h")
    H0 = _edge_values(seed[1], grid, bindings, "seed H")
    if np.any(h0 <= 0) or np.any(H0 <= 0):
        raise DomainError("seed", float(min(h0.min(), H0.min())), "seed values must be positive")
    s1, s2 = spaceform_coefficients(spec)
    c1, c2 = pde_coefficients(spec)
    mask = _interior_mask(grid.shape)
    m = int(mask.sum())
    L = _laplacian_matrix(grid.shape, grid.spacing)
    v_full, u_full = np.log(h0), np.log(H0)

    def split(x):
        v, u = v_full.copy(), u_full.copy()
        v[mask], u[mask] = x[:m], x[m:]
        return v, u

    def residual(x):
        v, u = split(x)
        ev, eu = np.exp(2 * v[mask]), np.exp(2 * u[mask])
        r1 = laplacian5(v, grid.spacing)[mask] - s1 * ev - s2 * eu
        r2 = laplacian5(u, grid.spacing)[mask] - c1 * ev - c2 * eu
        return np.concatenate([r1, r2])

    def jacobian(x):
        ev, eu = np.exp(2 * x[:m]), np.exp(2 * x[m:])
        return sp.bmat([
            [L - sp.diags(2 * s1 * ev), sp.diags(-2 * s2 * eu)],
            [sp.diags(-2 * c1 * ev), L - sp.diags(2 * c2 * eu)],
        ]).tocsc()

    x0 = np.concatenate([v_full[mask], u_full[mask]])
    try:
        x, norm, it, history = _newton(residual, jacobian, x0, cfg, f"spaceform_pair[{spec.name}]")
    except NonConvergence as exc:
        v, u = split(exc.best)
        exc.best = (grid.like(np.exp(v)), grid.like(np.exp(u)))
        raise
    v, u = split(x)
    return SolveResult((grid.like(np.exp(v)), grid.like(np.exp(u))), norm, it, history)


# grid-tier jets -------------------------------------------------------------
def _fit_monomials(degree):
    return [(i, k - i) for k in range(degree + 1) for i in range(k, -1, -1)]


class GridFunction:
    """Local polynomial reconstruction of grid values as order-3 jets.

    Around the query point a least-squares polynomial of total degree
    ``degree`` is fitted to a ``(2 radius + 1)``-square window of nodes, and
    its Taylor coefficients up to order three become the jet.
    """

    def __init__(self, grid, degree=6, radius=4):
        self.grid = grid
        self.degree = degree
        self.radius = radius
        self._monomials = _fit_monomials(degree)
        if (2 * radius + 1) ** 2 < len(self._monomials):
            raise ConfigError("fit window too small for the requested degree")

    def jet(self, point):
        g = self.grid
        point = tuple(float(p) for p in point)
        if len(point) == 2:
            point = point + (0.0, 0.0)
        x, y = point[0], point[1]
        r = self.radius
        i0 = int(round((x - g.origin[0]) / g.spacing))
        j0 = int(round((y - g.origin[1]) / g.spacing))
        i0 = min(max(i0, r), g.nx - 1 - r)
        j0 = min(max(j0, r), g.ny - 1 - r)
        if g.nx < 2 * r + 1 or g.ny < 2 * r + 1:
            raise ConfigError("grid smaller than the fit window")
        lo_x, hi_x = g.x[0], g.x[-1]
        lo_y, hi_y = g.y[0], g.y[-1]
        if not (lo_x <= x <= hi_x and lo_y <= y <= hi_y):
            raise DomainError("grid", x, f"point ({x}, {y}) outside the grid")
        ii = np.arange(i0 - r, i0 + r + 1)
        jj = np.arange(j0 - r, j0 + r + 1)
        X, Y = np.meshgrid(g.x[ii], g.y[jj], indexing="ij")
        dx = ((X - x) / g.spacing).ravel()
        dy = ((Y - y) / g.spacing).ravel()
        A = np.stack([dx ** p * dy ** q for p, q in self._monomials], axis=1)
        coef, *_ = np.linalg.lstsq(A, g.values[np.ix_(ii, jj)].ravel(), rcond=None)
        c = np.zeros(jets.NCOEF)
        for (p, q), v in zip(self._monomials, coef):
            if p + q <= jets.MAX_ORDER:
                c[jets.index_of((p, q, 0, 0))] = v / g.spacing ** (p + q)
        return jets.Jet(c, point)


class GridPair:
    """Duck-typed stand-in for a surface pair whose ``h`` and ``H`` come from grids."""

    def __init__(self, h, H, degree=6, radius=4):
        if not h.same_layout(H):
            raise ShapeMismatch("h and H grids differ in layout")
        self.h_grid, self.H_grid = h, H
        self._h = GridFunction(h, degree, radius)
        self._H = GridFunction(H, degree, radius)
        self.bindings = {}

    def jets_at(self, point):
        h, H = self._h.jet(point), self._H.jet(point)
        if h.value <= 0:
            raise DomainError("h", h.value, f"h must be positive, got {h.value!r}")
        if H.value <= 0:
            raise DomainError("H", H.value, f"H must be positive, got {H.value!r}")
        return h, H

    def interior_box(self, margin=None):
        """``((xmin, xmax), (ymin, ymax))`` where the fit window stays centred."""
        g = self.h_grid
        m = (self._h.radius if margin is None else margin) * g.spacing
        return (g.x[0] + m, g.x[-1] - m), (g.y[0] + m, g.y[-1] - m)


def grid_pde_summary(spec, h, H):
    res = residual_grid(spec, h, H).values
    return {"max_abs": float(np.max(np.abs(res))), "rms": float(math.sqrt(np.mean(res[1:-1, 1:-1] ** 2)))}
