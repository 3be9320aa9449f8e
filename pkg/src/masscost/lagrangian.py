"""Lagrangians f(u, xi), discretized densities, and their energies.

All built-in Lagrangians are isotropic (depend on xi through |xi| only),
constant in space, defined for u >= 0, and satisfy f(0, 0) = 0.  Singular
integrands (u^s with s < 0) follow the convention that the zero-order term
vanishes on {u = 0}, so compactly supported candidates have finite energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

# Cells with u below this relative threshold (and all incident differences
# likewise) contribute exactly 0 to quadratures, masking singular branches.
ZERO_THRESHOLD_REL = 1e-14

# Numeric slopes larger than this are reported as +inf.
DIVERGENCE_CUTOFF = 1e8


def sphere_area(N: int) -> float:
    """Surface measure |S^{N-1}| of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def power_zero(u, s: float):
    """u^s for u > 0, extended by 0 at u = 0 (support convention)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] ** s
    return out


# ---------------------------------------------------------------------------
# Lagrangian kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerSum:
    """f(u, xi) = |xi|^p + u^s  (u^s extended by 0 at u = 0)."""

    p: float
    s: float
    N: int = 1
    coercivity: Optional[tuple] = None  # (alpha, beta, p) witnesses

    kind = "powersum"

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"powersum requires p > 1, got p={self.p}")
        if not self.s <= 1:
            raise ValueError(f"powersum requires s <= 1, got s={self.s}")
        if self.N < 1:
            raise ValueError("dimension N must be >= 1")

    def value(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        return g**self.p + power_zero(u, self.s)

    def partials(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        fu = np.zeros_like(u)
        pos = u > 0
        fu[pos] = self.s * u[pos] ** (self.s - 1.0)
        fg = self.p * g ** (self.p - 1.0)
        return fu, fg

    def default_coercivity(self):
        return self.coercivity or (1.0, 0.0, self.p)

    def params(self) -> dict:
        return {"p": self.p, "s": self.s, "N": self.N}


def _sobolev_exponent(p: float, N: int) -> float:
    return p * N / (N - p)


@dataclass(frozen=True)
class ScaleInvariant:
    """f(u, xi) = u^{p(1/p* - 1)} |xi|^p for u > 0, 0 else; p* = pN/(N-p).

    The rescaled energies built from this kind are independent of the
    rescaling parameter.  Requires 1 < p < N.
    """

    p: float
    N: int
    coercivity: Optional[tuple] = None

    kind = "scale_invariant"

    def __post_init__(self):
        if not (1 < self.p < self.N):
            raise ValueError(
                f"scale_invariant requires 1 < p < N, got p={self.p}, N={self.N}"
            )

    @property
    def exponent(self) -> float:
        return self.p * (1.0 / _sobolev_exponent(self.p, self.N) - 1.0)

    def value(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        out = np.zeros(np.broadcast(u, g).shape)
        pos = u > 0
        gb = np.broadcast_to(g, out.shape)
        ub = np.broadcast_to(u, out.shape)
        out[pos] = ub[pos] ** self.exponent * gb[pos] ** self.p
        return out

    def partials(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        e = self.exponent
        fu = np.zeros_like(u)
        fg = np.zeros_like(u)
        pos = u > 0
        fu[pos] = e * u[pos] ** (e - 1.0) * g[pos] ** self.p
        fg[pos] = self.p * u[pos] ** e * g[pos] ** (self.p - 1.0)
        return fu, fg

    def default_coercivity(self):
        return self.coercivity

    def params(self) -> dict:
        return {"p": self.p, "N": self.N}


@dataclass(frozen=True)
class ScaleInvariantPerturbed:
    """f(u, xi) = (1 + u^{p(1/p* - 1)}) |xi|^p, the coercive perturbation.

    Satisfies the coercivity bound with (1, 0, p) but violates the slope
    condition at the origin.
    """

    p: float
    N: int
    coercivity: Optional[tuple] = None

    kind = "scale_invariant_perturbed"

    def __post_init__(self):
        if not (1 < self.p < self.N):
            raise ValueError(
                f"scale_invariant_perturbed requires 1 < p < N, "
                f"got p={self.p}, N={self.N}"
            )

    @property
    def exponent(self) -> float:
        return self.p * (1.0 / _sobolev_exponent(self.p, self.N) - 1.0)

    def value(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        base = g**self.p
        out = np.array(np.broadcast_to(base, np.broadcast(u, g).shape), dtype=float)
        pos = u > 0
        ub = np.broadcast_to(u, out.shape)
        gb = np.broadcast_to(g, out.shape)
        out[pos] += ub[pos] ** self.exponent * gb[pos] ** self.p
        return out

    def partials(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        e = self.exponent
        fu = np.zeros_like(u)
        pos = u > 0
        fu[pos] = e * u[pos] ** (e - 1.0) * g[pos] ** self.p
        fg = self.p * g ** (self.p - 1.0)
        fg = np.array(fg)
        fg[pos] *= 1.0 + u[pos] ** e
        return fu, fg

    def default_coercivity(self):
        return self.coercivity or (1.0, 0.0, self.p)

    def params(self) -> dict:
        return {"p": self.p, "N": self.N}


@dataclass(frozen=True)
class WProfile:
    """Zero-order potential W for the droplet model.

    Either a builtin form ('power' for u^s, 'power_perturbed' for
    u^s (1 + e^-u)) or a tabulation (u_k, W_k) with u_k > 0 increasing.
    W(0) = 0 always; the tabulation is continued by the u^s tail above its
    range and below it when s < 0 (linearly towards the origin otherwise).
    """

    s: float
    form: str = "power"  # 'power' | 'power_perturbed' | 'table'
    table_u: Optional[np.ndarray] = None
    table_w: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.form not in ("power", "power_perturbed", "table"):
            raise ValueError(f"unknown W form {self.form!r}")
        if self.form == "table":
            tu = np.asarray(self.table_u, dtype=float)
            tw = np.asarray(self.table_w, dtype=float)
            if tu.ndim != 1 or tu.shape != tw.shape or tu.size < 2:
                raise ValueError("W table needs matching 1d arrays, >= 2 points")
            if not np.all(np.diff(tu) > 0) or tu[0] <= 0:
                raise ValueError("W table abscissae must be positive increasing")
            if np.any(tw < 0):
                raise ValueError("W table values must be non-negative")
            object.__setattr__(self, "table_u", tu)
            object.__setattr__(self, "table_w", tw)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        if self.form == "power":
            out[pos] = u[pos] ** self.s
        elif self.form == "power_perturbed":
            out[pos] = u[pos] ** self.s * (1.0 + np.exp(-u[pos]))
        else:
            tu, tw = self.table_u, self.table_w
            up = u[pos]
            vals = np.interp(up, tu, tw)
            hi = up > tu[-1]
            vals[hi] = tw[-1] * (up[hi] / tu[-1]) ** self.s
            lo = up < tu[0]
            if self.s < 0:
                vals[lo] = tw[0] * (up[lo] / tu[0]) ** self.s
            else:
                vals[lo] = tw[0] * up[lo] / tu[0]
            out[pos] = vals
        return out

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        if self.form == "power":
            out[pos] = self.s * u[pos] ** (self.s - 1.0)
        elif self.form == "power_perturbed":
            up = u[pos]
            out[pos] = up ** (self.s - 1.0) * (
                self.s * (1.0 + np.exp(-up)) - up * np.exp(-up)
            )
        else:
            tu, tw = self.table_u, self.table_w
            slopes = np.diff(tw) / np.diff(tu)
            up = u[pos]
            idx = np.clip(np.searchsorted(tu, up) - 1, 0, slopes.size - 1)
            vals = slopes[idx]
            hi = up > tu[-1]
            vals[hi] = self.s * tw[-1] / tu[-1] ** self.s * up[hi] ** (self.s - 1.0)
            lo = up < tu[0]
            if self.s < 0:
                vals[lo] = self.s * tw[0] / tu[0] ** self.s * up[lo] ** (self.s - 1.0)
            else:
                vals[lo] = tw[0] / tu[0]
            out[pos] = vals
        return out


@dataclass(frozen=True)
class DropletW:
    """Droplet-model Lagrangian f(u, xi) = W_eps(u) + |xi|^2.

    W_eps(u) = eps^{N s} W(eps^{-N} u); the family converges pointwise to
    |xi|^2 + u^s as eps -> 0 when W(u) ~ u^s at infinity.
    """

    s: float
    W: WProfile
    eps: float
    N: int = 1
    coercivity: Optional[tuple] = None

    kind = "droplet"

    def __post_init__(self):
        if not self.s < 1:
            raise ValueError(f"droplet kind requires s < 1, got s={self.s}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def w_eps(self, u):
        scale = self.eps ** (self.N * self.s)
        return scale * self.W(np.asarray(u, dtype=float) * self.eps ** (-self.N))

    def value(self, u, g):
        g = np.asarray(g, dtype=float)
        return self.w_eps(u) + g**2

    def partials(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        fu = self.eps ** (self.N * (self.s - 1.0)) * self.W.derivative(
            u * self.eps ** (-self.N)
        )
        return fu, 2.0 * g

    def default_coercivity(self):
        return self.coercivity or (1.0, 0.0, 2.0)

    def params(self) -> dict:
        return {"s": self.s, "eps": self.eps, "N": self.N, "W": self.W.form}


@dataclass(frozen=True)
class Tabulated:
    """Isotropic Lagrangian tabulated on a rectangular (u, |xi|) grid.

    Bilinear interpolation inside the grid, clamped at its edges.  The
    table must have f(0, 0) = 0 and non-negative entries.
    """

    u_grid: np.ndarray
    g_grid: np.ndarray
    values: np.ndarray  # shape (len(u_grid), len(g_grid))
    N: int = 1
    coercivity: Optional[tuple] = None

    kind = "tabulated"

    def __post_init__(self):
        ug = np.asarray(self.u_grid, dtype=float)
        gg = np.asarray(self.g_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (ug.size, gg.size):
            raise ValueError("table shape must be (len(u_grid), len(g_grid))")
        if ug[0] != 0 or gg[0] != 0:
            raise ValueError("tabulated grids must start at 0")
        if not (np.all(np.diff(ug) > 0) and np.all(np.diff(gg) > 0)):
            raise ValueError("tabulated grids must be strictly increasing")
        if vals[0, 0] != 0:
            raise ValueError("tabulated Lagrangian must have f(0,0) = 0")
        if np.any(vals[np.isfinite(vals)] < 0):
            raise ValueError("tabulated Lagrangian must be non-negative")
        object.__setattr__(self, "u_grid", ug)
        object.__setattr__(self, "g_grid", gg)
        object.__setattr__(self, "values", vals)

    def _locate(self, x, grid):
        idx = np.clip(np.searchsorted(grid, x) - 1, 0, grid.size - 2)
        x0 = grid[idx]
        w = np.clip((x - x0) / (grid[idx + 1] - x0), 0.0, 1.0)
        return idx, w

    def value(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        u, g = np.broadcast_arrays(u, g)
        iu, wu = self._locate(u, self.u_grid)
        ig, wg = self._locate(g, self.g_grid)
        v = self.values
        return (
            v[iu, ig] * (1 - wu) * (1 - wg)
            + v[iu + 1, ig] * wu * (1 - wg)
            + v[iu, ig + 1] * (1 - wu) * wg
            + v[iu + 1, ig + 1] * wu * wg
        )

    def partials(self, u, g):
        u = np.asarray(u, dtype=float)
        g = np.asarray(g, dtype=float)
        u, g = np.broadcast_arrays(u, g)
        iu, wu = self._locate(u, self.u_grid)
        ig, wg = self._locate(g, self.g_grid)
        v = self.values
        du = self.u_grid[iu + 1] - self.u_grid[iu]
        dg = self.g_grid[ig + 1] - self.g_grid[ig]
        fu = ((v[iu + 1, ig] - v[iu, ig]) * (1 - wg)
              + (v[iu + 1, ig + 1] - v[iu, ig + 1]) * wg) / du
        fg = ((v[iu, ig + 1] - v[iu, ig]) * (1 - wu)
              + (v[iu + 1, ig + 1] - v[iu + 1, ig]) * wu) / dg
        return fu, fg

    def default_coercivity(self):
        return self.coercivity

    def params(self) -> dict:
        return {"N": self.N, "shape": self.values.shape}


LagrangianSpec = Union[PowerSum, ScaleInvariant, ScaleInvariantPerturbed,
                       DropletW, Tabulated]


def evaluate(f: LagrangianSpec, u: float, xi_norm: float) -> float:
    """Pointwise value f(u, |xi|); may be +inf, never negative."""
    if u < 0:
        raise ValueError("u must be non-negative")
    if xi_norm < 0:
        raise ValueError("xi_norm must be non-negative")
    if u == 0.0 and xi_norm == 0.0:
        return 0.0
    return float(f.value(np.asarray([u]), np.asarray([xi_norm]))[0])


# ---------------------------------------------------------------------------
# Discretized candidates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Radial candidate u(r) sampled at r_i = i R / n, with u(R) = 0."""

    N: int
    R: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("values must be a 1d array with >= 2 entries")
        if np.any(vals < 0):
            raise ValueError("profile values must be non-negative")
        if vals[-1] != 0.0:
            raise ValueError("profile must vanish at r = R")
        if self.R <= 0:
            raise ValueError("outer radius must be positive")
        if self.N < 1:
            raise ValueError("dimension N must be >= 1")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return self.R / self.n

    def radii(self) -> np.ndarray:
        return np.linspace(0.0, self.R, self.values.size)

    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights including the |S^{N-1}| r^{N-1} factor."""
        return _radial_weights(self.N, self.R, self.n)

    def mass(self) -> float:
        return float(self.quad_weights() @ self.values)


@lru_cache(maxsize=128)
def _radial_weights(N: int, R: float, n: int) -> np.ndarray:
    r = np.linspace(0.0, R, n + 1)
    t = np.full(r.size, R / n)
    t[0] *= 0.5
    t[-1] *= 0.5
    w = sphere_area(N) * r ** (N - 1) * t
    w.setflags(write=False)
    return w


def _unsafe_radial(N: int, R: float, values: np.ndarray) -> "RadialProfile":
    """RadialProfile constructor without validation, for solver hot loops."""
    p = object.__new__(RadialProfile)
    object.__setattr__(p, "N", N)
    object.__setattr__(p, "R", R)
    object.__setattr__(p, "values", values)
    return p


@dataclass(frozen=True)
class GridDensity:
    """Non-negative density sampled on a uniform grid in dimension 1 or 2."""

    origin: tuple
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim not in (1, 2):
            raise ValueError("grid densities live in dimension 1 or 2")
        if np.any(vals < 0):
            raise ValueError("density values must be non-negative")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        origin = tuple(float(c) for c in np.atleast_1d(self.origin))
        if len(origin) != vals.ndim:
            raise ValueError("origin length must match dimension")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return self.values.ndim

    def mass(self) -> float:
        return float(self.spacing**self.dim * self.values.sum())

    def coords(self):
        """Cell-center coordinate arrays, one per axis."""
        return tuple(
            self.origin[a] + self.spacing * np.arange(self.values.shape[a])
            for a in range(self.dim)
        )


Candidate = Union[RadialProfile, GridDensity]


# ---------------------------------------------------------------------------
# Quadrature of the energy
# ---------------------------------------------------------------------------


def _radial_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """One-sided differences: forward in the bulk, backward at r = R."""
    d = np.empty_like(values)
    d[:-1] = np.diff(values) / h
    d[-1] = (values[-1] - values[-2]) / h
    return d


def _grid_gradient_1d(values: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2 * h)
    d[0] = (values[1] - values[0]) / h
    d[-1] = (values[-1] - values[-2]) / h
    return d


def _grid_gradient_2d(values: np.ndarray, h: float):
    gx = np.empty_like(values)
    gx[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * h)
    gx[0, :] = (values[1, :] - values[0, :]) / h
    gx[-1, :] = (values[-1, :] - values[-2, :]) / h
    gy = np.empty_like(values)
    gy[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h)
    gy[:, 0] = (values[:, 1] - values[:, 0]) / h
    gy[:, -1] = (values[:, -1] - values[:, -2]) / h
    return gx, gy


def _zero_mask(values: np.ndarray) -> np.ndarray:
    """Cells where u and every neighbour are below the zero threshold.

    On such cells all incident differences vanish to threshold accuracy and
    the integrand is pinned to f(0,0) = 0 without touching singular branches.
    """
    vmax = values.max() if values.size else 0.0
    tol = ZERO_THRESHOLD_REL * vmax
    small = values <= tol
    mask = small.copy()
    if values.ndim == 1:
        mask[:-1] &= small[1:]
        mask[1:] &= small[:-1]
    else:
        mask[:-1, :] &= small[1:, :]
        mask[1:, :] &= small[:-1, :]
        mask[:, :-1] &= small[:, 1:]
        mask[:, 1:] &= small[:, :-1]
    return mask


def _energy_terms(f: LagrangianSpec, u: Candidate,
                  u_scale: float = 1.0, g_scale: float = 1.0):
    """Per-cell quadrature terms of int f(u_scale*u, g_scale*|grad u|)."""
    if isinstance(u, RadialProfile):
        vals = u.values
        grad = np.abs(_radial_gradient(vals, u.h))
        weights = u.quad_weights()
    else:
        vals = u.values
        if u.dim == 1:
            grad = np.abs(_grid_gradient_1d(vals, u.spacing))
        else:
            gx, gy = _grid_gradient_2d(vals, u.spacing)
            grad = np.hypot(gx, gy)
        weights = u.spacing**u.dim
    mask = _zero_mask(vals)
    live = ~mask
    terms = np.zeros(vals.shape)
    terms[live] = f.value(u_scale * vals[live], g_scale * grad[live])
    return terms, weights, grad, live


def eval_energy(f: LagrangianSpec, u: Candidate) -> float:
    """Quadrature of int f(u, |grad u|); +inf propagates from any cell."""
    _check_dimension(f, u)
    terms, weights, _, _ = _energy_terms(f, u)
    if np.any(np.isinf(terms)):
        return math.inf
    return float((terms * weights).sum())


def rescaled_energy(f: LagrangianSpec, eps: float, u: Candidate) -> float:
    """Quadrature of int f(eps^N u, eps^{N+1} grad u) eps^{-N}."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    _check_dimension(f, u)
    N = f.N
    terms, weights, _, _ = _energy_terms(
        f, u, u_scale=eps**N, g_scale=eps ** (N + 1)
    )
    if np.any(np.isinf(terms)):
        return math.inf
    return float((terms * weights).sum() * eps ** (-N))


def _check_dimension(f: LagrangianSpec, u: Candidate) -> None:
    dim = u.N if isinstance(u, RadialProfile) else u.dim
    if dim != f.N:
        raise ValueError(f"dimension mismatch: Lagrangian N={f.N}, candidate {dim}")


def energy_gradient(f: LagrangianSpec, u: Candidate) -> np.ndarray:
    """Exact gradient of eval_energy with respect to the nodal values.

    Matches central finite differences of eval_energy wherever the masked
    cells and |grad u| kinks are inactive.  Masked cells receive zero
    derivative (the subgradient pinning them at zero).
    """
    return energy_value_and_gradient(f, u)[1]


def energy_value_and_gradient(f: LagrangianSpec, u: Candidate,
                              u_floor_rel: float = 0.0):
    """Energy and its gradient in one pass over the quadrature cells.

    u_floor_rel > 0 evaluates the u-partial at max(u, u_floor_rel * max u),
    bounding the singular derivative of concave zero-order terms near the
    support edge; the energy value itself is always exact.  With
    u_floor_rel = 0 this is the exact gradient of eval_energy.
    """
    _check_dimension(f, u)
    terms, weights, grad, live = _energy_terms(f, u)
    energy = math.inf if np.any(np.isinf(terms)) else float((terms * weights).sum())
    vals = u.values
    fu = np.zeros(vals.shape)
    fg = np.zeros(vals.shape)
    veval = vals
    if u_floor_rel > 0.0 and vals.size:
        veval = np.maximum(vals, u_floor_rel * vals.max())
    fu[live], fg[live] = f.partials(veval[live], grad[live])
    cfu = weights * fu
    cfg = weights * fg

    if isinstance(u, RadialProfile):
        d = _radial_gradient(vals, u.h)
        sig = cfg * np.sign(d)
        g = cfu.copy()
        h = u.h
        # d_i = (u_{i+1}-u_i)/h for i < n, d_n = (u_n - u_{n-1})/h
        g[:-1] -= sig[:-1] / h
        g[1:] += sig[:-1] / h
        g[-1] += sig[-1] / h
        g[-2] -= sig[-1] / h
        return energy, g

    h = u.spacing
    if u.dim == 1:
        d = _grid_gradient_1d(vals, h)
        sig = cfg * np.sign(d)
        g = cfu.copy()
        # interior central differences
        g[2:] += sig[1:-1] / (2 * h)
        g[:-2] -= sig[1:-1] / (2 * h)
        # one-sided boundary stencils
        g[0] -= sig[0] / h
        g[1] += sig[0] / h
        g[-1] += sig[-1] / h
        g[-2] -= sig[-1] / h
        return energy, g

    gx, gy = _grid_gradient_2d(vals, h)
    norm = np.hypot(gx, gy)
    with np.errstate(invalid="ignore", divide="ignore"):
        wx = np.where(norm > 0, cfg * gx / norm, 0.0)
        wy = np.where(norm > 0, cfg * gy / norm, 0.0)
    g = cfu.copy()
    g[2:, :] += wx[1:-1, :] / (2 * h)
    g[:-2, :] -= wx[1:-1, :] / (2 * h)
    g[0, :] -= wx[0, :] / h
    g[1, :] += wx[0, :] / h
    g[-1, :] += wx[-1, :] / h
    g[-2, :] -= wx[-1, :] / h
    g[:, 2:] += wy[:, 1:-1] / (2 * h)
    g[:, :-2] -= wy[:, 1:-1] / (2 * h)
    g[:, 0] -= wy[:, 0] / h
    g[:, 1] += wy[:, 0] / h
    g[:, -1] += wy[:, -1] / h
    g[:, -2] -= wy[:, -1] / h
    return energy, g


# ---------------------------------------------------------------------------
# Slope at the origin and hypothesis checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeAtZero:
    value: float  # may be math.inf
    minimizer: Optional[tuple] = None  # (u, xi) grid argmin when numeric
    diverged: bool = False


def _window_points(r: float, points_per_decade: int = 12):
    lo = r / 10.0
    us = np.geomspace(lo, r, points_per_decade)
    xis = np.concatenate([[0.0], np.geomspace(lo, r, points_per_decade)])
    return us, xis


def _numeric_liminf_slope(f: LagrangianSpec):
    """liminf of f(u, xi)/u over shrinking windows (u, |xi|) -> (0+, 0)."""
    best = None
    prev = None
    growing = True
    for k in range(7):
        r = 10.0 ** (-2 - k)
        us, xis = _window_points(r)
        U, X = np.meshgrid(us, xis, indexing="ij")
        vals = f.value(U.ravel(), X.ravel()) / U.ravel()
        idx = int(np.argmin(vals))
        m_k = float(vals[idx])
        best = (m_k, (float(U.ravel()[idx]), float(X.ravel()[idx])))
        if prev is not None and not (m_k >= prev * 1.5 or prev > DIVERGENCE_CUTOFF):
            growing = False
        prev = m_k
    m_last, minimizer = best
    if growing and m_last > DIVERGENCE_CUTOFF:
        return SlopeAtZero(math.inf, minimizer, diverged=True)
    return SlopeAtZero(m_last, minimizer, diverged=False)


def _numeric_limsup_rho_slope(f: LagrangianSpec):
    """limsup of f(u, rho(u))/u with rho(t) = t, along u -> 0+."""
    prev = None
    growing = True
    s_last = 0.0
    for k in range(7):
        r = 10.0 ** (-2 - k)
        us = np.geomspace(r / 10.0, r, 24)
        vals = f.value(us, us) / us
        s_last = float(np.max(vals))
        if prev is not None and not (s_last >= prev * 1.5 or prev > DIVERGENCE_CUTOFF):
            growing = False
        prev = s_last
    if growing and s_last > DIVERGENCE_CUTOFF:
        return math.inf
    return s_last


def slope_at_zero(f: LagrangianSpec) -> SlopeAtZero:
    """Slope of f at the origin: liminf of f(u, xi)/u as (u, xi) -> (0+, 0).

    Analytic shortcut for the power-sum kind (+inf when s < 1, 1 when
    s = 1); otherwise a numeric liminf over log-spaced windows, reported
    with the grid minimizer.
    """
    if isinstance(f, PowerSum):
        if f.s < 1:
            return SlopeAtZero(math.inf, None, diverged=True)
        return SlopeAtZero(1.0, (0.0, 0.0), diverged=False)
    return _numeric_liminf_slope(f)


@dataclass(frozen=True)
class SampleConfig:
    n_samples: int = 10_000
    u_max: float = 1e3
    xi_max: float = 1e3
    seed: int = 0


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    witness: Optional[tuple] = None
    detail: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    checks: dict

    def passed(self, name: str) -> bool:
        return self.checks[name].passed

    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def summary(self) -> str:
        lines = []
        for name in sorted(self.checks):
            c = self.checks[name]
            status = "pass" if c.passed else "FAIL"
            extra = f"  [{c.detail}]" if c.detail else ""
            wit = f"  witness={c.witness}" if (not c.passed and c.witness) else ""
            lines.append(f"{name}: {status}{extra}{wit}")
        return "\n".join(lines)


def _sample_points(cfg: SampleConfig, dim: int):
    from scipy.stats import qmc

    sampler = qmc.Halton(d=dim, scramble=True, seed=cfg.seed)
    return sampler.random(cfg.n_samples)


def verify_hypotheses(f: LagrangianSpec,
                      cfg: SampleConfig = SampleConfig()) -> HypothesisReport:
    """Sampled checks of lower semicontinuity, xi-convexity, zero at the
    origin, coercivity, and the slope condition at the origin."""
    checks = {}
    pts = _sample_points(cfg, 3)
    u_s = pts[:, 0] * cfg.u_max
    xi_s = pts[:, 1] * cfg.xi_max

    # H1: lower semicontinuity, sampled surrogate.  A failure is a point
    # whose value persistently exceeds nearby minima as the radius shrinks.
    sub = slice(0, min(200, u_s.size))
    h1_witness = None
    for u0, x0 in zip(u_s[sub], xi_s[sub]):
        f0 = f.value(np.asarray([u0]), np.asarray([x0]))[0]
        if not np.isfinite(f0):
            continue
        drops = 0
        for r in (1e-2, 1e-3, 1e-4):
            du = r * max(u0, 1.0)
            dx = r * max(x0, 1.0)
            nb_u = np.clip(np.array([u0 - du, u0 + du, u0, u0]), 0, None)
            nb_x = np.clip(np.array([x0, x0, x0 - dx, x0 + dx]), 0, None)
            if f0 > np.min(f.value(nb_u, nb_x)) + 1e-6 * (1 + abs(f0)):
                drops += 1
        if drops == 3:
            h1_witness = (float(u0), float(x0))
            break
    checks["H1"] = CheckResult(h1_witness is None, h1_witness,
                               "sampled lsc surrogate")

    # H2: convexity in xi via the midpoint test on random vector pairs.
    rng = np.random.default_rng(cfg.seed)
    n_pairs = min(2000, cfg.n_samples)
    uu = rng.uniform(0, cfg.u_max, n_pairs)
    xa = rng.normal(size=(n_pairs, f.N)) * cfg.xi_max / 3.0
    xb = rng.normal(size=(n_pairs, f.N)) * cfg.xi_max / 3.0
    na = np.linalg.norm(xa, axis=1)
    nb = np.linalg.norm(xb, axis=1)
    nm = np.linalg.norm(0.5 * (xa + xb), axis=1)
    fa = f.value(uu, na)
    fb = f.value(uu, nb)
    fm = f.value(uu, nm)
    finite = np.isfinite(fa) & np.isfinite(fb)
    viol = finite & (fm > 0.5 * (fa + fb) + 1e-9 * (1 + 0.5 * (fa + fb)))
    if np.any(viol):
        i = int(np.argmax(viol))
        checks["H2"] = CheckResult(False, (float(uu[i]), float(na[i]), float(nb[i])),
                                   "midpoint convexity in xi")
    else:
        checks["H2"] = CheckResult(True, None, "midpoint convexity in xi")

    # H3: exact zero at the origin.
    z = evaluate(f, 0.0, 0.0)
    checks["H3"] = CheckResult(z == 0.0, None if z == 0.0 else (0.0, 0.0),
                               "f(0,0) = 0")

    # H5: coercivity f >= alpha |xi|^p - beta u.
    wit = f.default_coercivity()
    vals = f.value(u_s, xi_s)
    if wit is not None:
        alpha, beta, p = wit
        bad = vals < alpha * xi_s**p - beta * u_s - 1e-9
        if np.any(bad):
            i = int(np.argmax(bad))
            checks["H5"] = CheckResult(False, (float(u_s[i]), float(xi_s[i])),
                                       f"declared witnesses alpha={alpha}, "
                                       f"beta={beta}, p={p}")
        else:
            checks["H5"] = CheckResult(True, None,
                                       f"alpha={alpha}, beta={beta}, p={p}")
    else:
        # No witnesses available: estimate the best alpha for the kind's own
        # exponent with beta = 1; fail when it collapses to zero.
        p = getattr(f, "p", 2.0)
        pos = xi_s > 1.0
        ratios = (vals[pos] + u_s[pos]) / xi_s[pos] ** p
        alpha_est = float(np.min(ratios)) if ratios.size else 0.0
        if alpha_est <= 1e-9:
            i = int(np.argmin(ratios))
            idx = np.flatnonzero(pos)[i]
            checks["H5"] = CheckResult(False, (float(u_s[idx]), float(xi_s[idx])),
                                       f"best alpha ~ {alpha_est:.2e} with beta=1")
        else:
            checks["H5"] = CheckResult(True, None,
                                       f"estimated alpha={alpha_est:.3g}, beta=1")

    # H6: slope condition with rho(t) = t, via numeric liminf vs limsup.
    lhs = slope_at_zero(f)
    rhs = _numeric_limsup_rho_slope(f)
    if math.isinf(lhs.value):
        ok = True
        detail = "liminf slope diverges"
    elif math.isinf(rhs):
        ok = False
        detail = f"liminf {lhs.value:.4g} < diverging rho-slope"
    else:
        ok = lhs.value >= rhs * (1 - 1e-3) - 1e-12
        detail = f"liminf {lhs.value:.4g} vs rho-limsup {rhs:.4g}"
    if f.N >= 2:
        # admissibility of rho(t) = t: int_0^1 (-log y)^N dy = N!
        from scipy.integrate import quad

        integral, _ = quad(lambda y: (-math.log(y)) ** f.N, 0.0, 1.0)
        detail += f"; rho-integral {integral:.6g} ~ {math.factorial(f.N)}"
    checks["H6"] = CheckResult(ok, None if ok else lhs.minimizer, detail)

    return HypothesisReport(checks)


# ---------------------------------------------------------------------------
# Config file I/O (key = value with a kind discriminator)
# ---------------------------------------------------------------------------


def _parse_kv(text: str) -> dict:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def load_config(path) -> LagrangianSpec:
    """Read a Lagrangian from a key=value config file."""
    path = Path(path)
    kv = _parse_kv(path.read_text())
    try:
        kind = kv.pop("kind")
    except KeyError:
        raise ValueError("config must declare a kind") from None
    coercivity = None
    if "alpha" in kv:
        coercivity = (float(kv.pop("alpha")), float(kv.pop("beta", "0")),
                      float(kv.pop("coercivity_p")))
    N = int(kv.pop("N", "1"))
    if kind == "powersum":
        return PowerSum(p=float(kv["p"]), s=float(kv["s"]), N=N,
                        coercivity=coercivity)
    if kind == "scale_invariant":
        return ScaleInvariant(p=float(kv["p"]), N=N, coercivity=coercivity)
    if kind == "scale_invariant_perturbed":
        return ScaleInvariantPerturbed(p=float(kv["p"]), N=N,
                                       coercivity=coercivity)
    if kind == "droplet":
        wspec = kv.get("W", "power")
        s = float(kv["s"])
        if wspec in ("power", "power_perturbed"):
            W = WProfile(s=s, form=wspec)
        else:
            wpath = Path(wspec)
            if not wpath.is_absolute():
                wpath = path.parent / wpath
            tu, tw = read_w_table(wpath)
            W = WProfile(s=s, form="table", table_u=tu, table_w=tw)
        return DropletW(s=s, W=W, eps=float(kv["eps"]), N=N,
                        coercivity=coercivity)
    if kind == "tabulated":
        tpath = Path(kv["table"])
        if not tpath.is_absolute():
            tpath = path.parent / tpath
        ug, gg, vals = read_f_table(tpath)
        return Tabulated(u_grid=ug, g_grid=gg, values=vals, N=N,
                         coercivity=coercivity)
    raise ValueError(f"unknown Lagrangian kind {kind!r}")


def save_config(f: LagrangianSpec, path) -> None:
    lines = [f"kind = {f.kind}"]
    for key, val in f.params().items():
        if key == "W":
            lines.append(f"W = {val}")
        elif key != "shape":
            lines.append(f"{key} = {val}")
    if f.coercivity is not None:
        alpha, beta, p = f.coercivity
        lines += [f"alpha = {alpha}", f"beta = {beta}", f"coercivity_p = {p}"]
    Path(path).write_text("\n".join(lines) + "\n")


def read_w_table(path):
    """Two-column CSV (u, W(u)) -> arrays."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("W table CSV must have two columns: u, W(u)")
    return data[:, 0], data[:, 1]


def write_w_table(path, table_u, table_w) -> None:
    np.savetxt(path, np.column_stack([table_u, table_w]), delimiter=",")


def read_f_table(path):
    """CSV with |xi| grid on the first row (leading blank), u grid in the
    first column, f values in the body."""
    rows = [line.split(",") for line in Path(path).read_text().strip().splitlines()]
    gg = np.asarray([float(x) for x in rows[0][1:]])
    ug = np.asarray([float(r[0]) for r in rows[1:]])
    vals = np.asarray([[float(x) for x in r[1:]] for r in rows[1:]])
    return ug, gg, vals


def write_f_table(path, u_grid, g_grid, values) -> None:
    lines = ["," + ",".join(repr(float(g)) for g in g_grid)]
    for u, row in zip(u_grid, values):
        lines.append(repr(float(u)) + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
