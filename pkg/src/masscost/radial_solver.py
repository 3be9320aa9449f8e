"""Optimal radial profiles and the cost curve m -> H(m).

Minimization is over non-negative radial profiles with prescribed mass;
every reported energy is an upper bound for the true minimal cost by
construction.  The explicit exponential construction attaining the slope
bound at the origin lives here as well.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import descent
from .lagrangian import (
    LagrangianSpec,
    RadialProfile,
    ZERO_THRESHOLD_REL,
    _unsafe_radial,
    energy_value_and_gradient,
    eval_energy,
    sphere_area,
)


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the constrained minimizer.

    R = None triggers the adaptive outer radius: start at 10 and double
    until the minimizer's boundary value drops below 1e-8 of its max,
    up to max_doublings.
    """

    n: int = 2000
    R: Optional[float] = None
    max_iter: int = 50_000
    tol: float = 1e-8
    restarts: int = 5
    seed: int = 0
    max_doublings: int = 4

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid size n must be >= 16")
        if self.R is not None and self.R <= 0:
            raise ValueError("outer radius must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class ProfileResult:
    profile: RadialProfile
    energy: float
    status: str
    pg_norm: float
    iterations: int


def _support_radius(values: np.ndarray, R: float) -> float:
    tol = ZERO_THRESHOLD_REL * max(values.max(), 1e-300)
    idx = np.flatnonzero(values > tol)
    if idx.size == 0:
        return 0.0
    return R * idx[-1] / (values.size - 1)


def _compacton_exponent(f: LagrangianSpec) -> float:
    """Edge exponent gamma for the compacton start (1 - r/R0)_+^gamma.

    Finite energy requires (gamma - 1) p > -1 and, for singular s < 0,
    gamma s > -1; pick the midpoint of the admissible window.
    """
    p = getattr(f, "p", 2.0)
    s = getattr(f, "s", 1.0)
    lo = 1.0 - 1.0 / p
    if s < 0:
        hi = -1.0 / s
        if hi <= lo:
            return lo + 0.05
        return 0.5 * (lo + hi)
    return max(2.0, lo + 1.0)


def _support_width_guess(f, N, m, R, h):
    """Heuristic support radius of the minimizer at mass m.

    The mass-rescaling substitution scales lengths by m^{(1 - s/p)/(1+N-sN/p)};
    the unit-mass prefactor is taken as 2.  Clipped to the usable grid range.
    """
    p = getattr(f, "p", 2.0)
    s = getattr(f, "s", 1.0)
    den = 1.0 + N - s * N / p
    kappa = (1.0 - s / p) / den if abs(den) > 1e-12 else 0.0
    base = 2.0 * m**kappa if m > 0 else R / 4.0
    return float(np.clip(base, 30.0 * h, 0.6 * R))


def _initial_profiles(f, N, r, R, m, restarts, seed, weights):
    """Seeded initializations around the guessed support width: compactons
    and Gaussian bumps at several widths, then random smooth bumps.

    The flat spread state is first-order stationary for the projected
    dynamics, so narrow starts matter at small mass."""
    h = r[1] - r[0]
    wstar = _support_width_guess(f, N, m, R, h)
    gamma = _compacton_exponent(f)

    def compacton(width):
        return np.clip(1.0 - r / width, 0.0, None) ** gamma

    def gaussian(sig):
        return np.exp(-((r / sig) ** 2))

    inits = [
        compacton(wstar),
        gaussian(wstar / 2.0),
        compacton(min(4.0 * wstar, 0.8 * R)),
        compacton(max(wstar / 4.0, 20.0 * h)),
        gaussian(R / 6.0),
    ]
    rng = np.random.default_rng(seed)
    while len(inits) < max(restarts, 1):
        coeffs = rng.uniform(0.3, 1.0, 3)
        widths = rng.uniform(0.3 * wstar, 2.0 * wstar, 3)
        centers = rng.uniform(0.0, wstar, 3)
        u = sum(c * np.exp(-(((r - x0) / wdt) ** 2))
                for c, wdt, x0 in zip(coeffs, widths, centers))
        inits.append(u)
    out = []
    for u in inits[: max(restarts, 1)]:
        u = np.asarray(u, dtype=float)
        u[-1] = 0.0
        total = u.sum()
        if total > 0 and m > 0:
            u = u * (m / total)  # rough scaling; projection enforces mass
        out.append(u)
    return out


def _solve_at_radius(f, N, m, R, cfg) -> ProfileResult:
    n = cfg.n
    r = np.linspace(0.0, R, n + 1)
    h = R / n
    t = np.full(n + 1, h)
    t[0] *= 0.5
    t[-1] *= 0.5
    w_full = sphere_area(N) * r ** (N - 1) * t
    w = w_full[:-1]  # Dirichlet node excluded from the unknowns

    def to_profile(x):
        return _unsafe_radial(N, R, np.append(x, 0.0))

    def energy(x):
        return eval_energy(f, to_profile(x))

    def energy_grad(x):
        e, g = energy_value_and_gradient(f, to_profile(x))
        return e, g[:-1]

    best = None
    for k, u0 in enumerate(_initial_profiles(f, N, r, R, m, cfg.restarts, cfg.seed)):
        res = descent.minimize_constrained(
            energy, energy_grad, u0[:-1], w, m, tol=cfg.tol, max_iter=cfg.max_iter
        )
        prof = to_profile(res.x)
        cand = ProfileResult(prof, res.energy, res.status, res.pg_norm,
                             res.iterations)
        if best is None:
            best = cand
            continue
        if cand.energy < best.energy - 1e-10 * (1.0 + abs(best.energy)):
            best = cand
        elif abs(cand.energy - best.energy) <= 1e-10 * (1.0 + abs(best.energy)):
            # tie: prefer the smaller support radius
            if _support_radius(prof.values, R) < _support_radius(
                best.profile.values, R
            ):
                best = cand
    return best


def minimize_profile(f: LagrangianSpec, N: int, m: float,
                     cfg: SolverConfig = SolverConfig()) -> ProfileResult:
    """Best non-negative radial profile of mass m over seeded restarts.

    The mass constraint is enforced at every iteration by projection onto
    the intersection of the mass hyperplane and the non-negative cone; the
    returned energy is an upper bound for the minimal cost.
    """
    if m < 0:
        raise ValueError("mass must be non-negative")
    if f.N != N:
        raise ValueError(f"Lagrangian has N={f.N}, requested N={N}")
    if f.value(np.asarray([0.0]), np.asarray([0.0]))[0] != 0.0:
        raise ValueError("Lagrangian must vanish at the origin (u, xi) = (0, 0)")
    R = cfg.R if cfg.R is not None else 10.0
    if m == 0.0:
        zero = RadialProfile(N=N, R=R, values=np.zeros(cfg.n + 1))
        return ProfileResult(zero, 0.0, descent.CONVERGED, 0.0, 0)
    result = _solve_at_radius(f, N, m, R, cfg)
    if cfg.R is None:
        for _ in range(cfg.max_doublings):
            vals = result.profile.values
            if vals[-2] < 1e-8 * max(vals.max(), 1e-300):
                break
            R *= 2.0
            result = _solve_at_radius(f, N, m, R, cfg)
    return result


@dataclass(frozen=True)
class PowerLawFit:
    alpha_hat: float
    c_hat: float
    r_squared: float
    n_used: int
    excluded: int = 0
    flagged: Optional[str] = None


def fit_power_law(samples: Sequence[tuple]) -> PowerLawFit:
    """Least squares of log H against log m; exact power data is recovered
    exactly.  Non-positive H samples are excluded and flagged."""
    ms = np.asarray([p[0] for p in samples], dtype=float)
    hs = np.asarray([p[1] for p in samples], dtype=float)
    if np.any(ms <= 0):
        raise ValueError("masses must be positive for a power-law fit")
    good = hs > 0
    excluded = int((~good).sum())
    flag = "non-positive samples excluded" if excluded else None
    if good.sum() < 3:
        return PowerLawFit(math.nan, math.nan, math.nan, int(good.sum()),
                           excluded, "insufficient samples")
    x = np.log(ms[good])
    y = np.log(hs[good])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(np.exp(intercept)), r2,
                       int(good.sum()), excluded, flag)


@dataclass
class CostCurve:
    """Sampled cost curve with its fitted power law."""

    lagrangian: LagrangianSpec
    N: int
    masses: np.ndarray
    energies: np.ndarray
    statuses: list
    fit: PowerLawFit
    profiles: Optional[list] = None

    def converged_samples(self):
        return [
            (float(m), float(h))
            for m, h, st in zip(self.masses, self.energies, self.statuses)
            if st == descent.CONVERGED
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "H", "status"])
            for m, h, st in zip(self.masses, self.energies, self.statuses):
                writer.writerow([repr(float(m)), repr(float(h)), st])

    def to_json(self) -> str:
        return json.dumps(
            {
                "samples": [
                    {"m": float(m), "H": float(h), "status": st}
                    for m, h, st in zip(self.masses, self.energies, self.statuses)
                ],
                "fit": {
                    "alpha_hat": self.fit.alpha_hat,
                    "c_hat": self.fit.c_hat,
                    "r_squared": self.fit.r_squared,
                    "n_used": self.fit.n_used,
                    "excluded": self.fit.excluded,
                    "flagged": self.fit.flagged,
                },
            },
            indent=2,
            sort_keys=True,
        )


def read_cost_curve_csv(path):
    """Inverse of CostCurve.write_csv: (masses, energies, statuses)."""
    ms, hs, sts = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["m", "H"]:
            raise ValueError("not a cost-curve CSV")
        for row in reader:
            ms.append(float(row[0]))
            hs.append(float(row[1]))
            sts.append(row[2])
    return np.asarray(ms), np.asarray(hs), sts


def cost_curve(f: LagrangianSpec, N: int, masses: Sequence[float],
               cfg: SolverConfig = SolverConfig(),
               keep_profiles: bool = False) -> CostCurve:
    """Sample m -> H(m) over an increasing mass grid and fit a power law.

    Each mass gets an independent seed derived from (cfg.seed, index) so
    results do not depend on evaluation order.
    """
    masses = np.asarray(list(masses), dtype=float)
    if masses.size == 0 or np.any(masses <= 0):
        raise ValueError("masses must be positive")
    if np.any(np.diff(masses) <= 0):
        raise ValueError("masses must be strictly increasing")
    energies = np.empty(masses.size)
    statuses = []
    profiles = [] if keep_profiles else None
    for j, m in enumerate(masses):
        sub = SolverConfig(
            n=cfg.n, R=cfg.R, max_iter=cfg.max_iter, tol=cfg.tol,
            restarts=cfg.restarts,
            seed=int(np.random.SeedSequence([cfg.seed, j]).generate_state(1)[0]),
            max_doublings=cfg.max_doublings,
        )
        res = minimize_profile(f, N, float(m), sub)
        energies[j] = res.energy
        statuses.append(res.status)
        if keep_profiles:
            profiles.append(res.profile)
    fit = fit_power_law(
        [(m, h) for m, h, st in zip(masses, energies, statuses)
         if st == descent.CONVERGED]
    )
    return CostCurve(f, N, masses, energies, statuses, fit, profiles)


@dataclass(frozen=True)
class SlopeConstruction:
    """Exponential radial construction u(r) = eps e^{-r} for rho(t) = t."""

    profile: RadialProfile
    mass_quadrature: float
    mass_closed_form: float
    energy_per_mass: Optional[float] = None

    @property
    def mass_relative_gap(self) -> float:
        return abs(self.mass_quadrature - self.mass_closed_form) / \
            self.mass_closed_form


def slope_construction_profile(
    rho_kind: str,
    eps: float,
    N: int,
    f: Optional[LagrangianSpec] = None,
    R: float = 40.0,
    n: int = 4000,
) -> SlopeConstruction:
    """Profile solving v' = -rho(v), v(0) = eps, for rho(t) = t.

    The solution is eps e^{-r}; its exact mass is |S^{N-1}| eps (N-1)!,
    checked against the quadrature.  In dimension 1 the construction
    degenerates (rho = 0 there) and is rejected.
    """
    if rho_kind != "identity":
        raise ValueError("only rho(t) = t is implemented")
    if N < 2:
        raise ValueError("the exponential construction needs N >= 2")
    if eps <= 0:
        raise ValueError("eps must be positive")
    r = np.linspace(0.0, R, n + 1)
    vals = eps * np.exp(-r)
    vals[-1] = 0.0  # Dirichlet truncation; e^{-R} is far below quadrature error
    profile = RadialProfile(N=N, R=R, values=vals)
    mass_quad = profile.mass()
    mass_closed = sphere_area(N) * eps * math.factorial(N - 1)
    epm = None
    if f is not None:
        epm = eval_energy(f, profile) / mass_quad
    return SlopeConstruction(profile, mass_quad, mass_closed, epm)
