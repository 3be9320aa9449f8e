"""Closed-form exponent arithmetic for the scaling laws of the cost curves.

Ground truth for solver-fit comparisons; no solver logic and no claims
about the prefactors c = H(1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Optional

DEGENERACY_TOL = 1e-14


def _conjugate(p: float) -> float:
    return p / (p - 1.0)


def alpha_exponent(s: float, p: float, N: int) -> float:
    """Homogeneity exponent of the cost: H(m) = c m^alpha for |grad u|^p + u^s.

    alpha = (1 - s/p + s/N) / (1 - s/p + 1/N).
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    if N < 1:
        raise ValueError("N must be a positive integer")
    den = 1.0 - s / p + 1.0 / N
    if abs(den) < DEGENERACY_TOL:
        raise ValueError("degenerate denominator 1 - s/p + 1/N")
    return (1.0 - s / p + s / N) / den


def alpha_nontrivial(s: float, p: float) -> bool:
    """Whether (s, p) lies in the range where the cost is non-trivial:
    s in (-p', 1] with p' the conjugate exponent."""
    return -_conjugate(p) < s <= 1.0


def mass_scaling_lambda(m: float, s: float, p: float, N: int) -> float:
    """Scaling factor lambda from substituting u = m lambda^N v(lambda .).

    The substitution preserves the unit mass of v and multiplies the energy
    by m^alpha.  lambda = m^{(s/p - 1)/(1 + N - sN/p)}.
    """
    if m <= 0:
        raise ValueError("mass must be positive")
    den = 1.0 + N - s * N / p
    if abs(den) < DEGENERACY_TOL:
        raise ValueError("degenerate denominator 1 + N - sN/p")
    return m ** ((s / p - 1.0) / den)


def scale_invariant_alpha(p: float, N: int) -> float:
    """Exponent of H(m) = m^{1 - p/N} H(1) for the scale-invariant kind."""
    if not (1 < p < N):
        raise ValueError(f"requires 1 < p < N, got p={p}, N={N}")
    return 1.0 - p / N


def droplet_exponents(s: float, N: int) -> tuple[float, float]:
    """Droplet rescaling exponents (rho, epsbar exponent).

    rho = N(1-s) / ((N+2) + N(1-s)); the rescaling parameter substitution
    uses epsbar = eps^{(N+2) + N(1-s)}.  1 - rho = (N+2)/((N+2) + N(1-s)).
    """
    if not s < 1:
        raise ValueError("droplet exponents require s < 1")
    if N < 1:
        raise ValueError("N must be a positive integer")
    den = (N + 2.0) + N * (1.0 - s)
    return N * (1.0 - s) / den, den


def bt_exponents(alpha: float, d: int) -> tuple[float, float, float]:
    """Branched-transport approximation exponents (beta, gamma1, gamma2).

    beta = (2 - 2d + 2 alpha d)/(3 - d + alpha(d-1)), gamma1 = (d-1)(1-alpha),
    gamma2 = 3 - d + alpha(d-1).
    """
    if d < 2:
        raise ValueError("branched transport requires ambient dimension d >= 2")
    gamma2 = 3.0 - d + alpha * (d - 1.0)
    if abs(gamma2) < DEGENERACY_TOL:
        raise ValueError("degenerate denominator 3 - d + alpha(d-1)")
    beta = (2.0 - 2.0 * d + 2.0 * alpha * d) / gamma2
    gamma1 = (d - 1.0) * (1.0 - alpha)
    return beta, gamma1, gamma2


def bt_supercritical(alpha: float, d: int) -> bool:
    return 1.0 - 1.0 / d < alpha <= 1.0


def bt_attainable(alpha: float, d: int) -> bool:
    return (2.0 * d - 4.0) / (2.0 * d + 1.0) < alpha <= 1.0


@dataclass(frozen=True)
class ExponentReport:
    """All scaling exponents for one parameter choice (s, p, N) and an
    ambient branched-transport dimension d."""

    s: float
    p: float
    N: int
    d: int
    alpha: float
    nontrivial: bool
    lambda_exponent: float
    rho: Optional[float] = None
    epsbar_exponent: Optional[float] = None
    beta: Optional[float] = None
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None
    supercritical: Optional[bool] = None
    attainable: Optional[bool] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_text(self) -> str:
        rows = [
            ("s", self.s),
            ("p", self.p),
            ("N", self.N),
            ("alpha", self.alpha),
            ("nontrivial", self.nontrivial),
            ("lambda exponent", self.lambda_exponent),
        ]
        if self.rho is not None:
            rows += [("rho", self.rho), ("epsbar exponent", self.epsbar_exponent)]
        if self.beta is not None:
            rows += [
                ("d", self.d),
                ("beta", self.beta),
                ("gamma1", self.gamma1),
                ("gamma2", self.gamma2),
                ("supercritical", self.supercritical),
                ("attainable", self.attainable),
            ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def exponent_report(s: float, p: float, N: int, d: int = 2) -> ExponentReport:
    """Assemble every scaling exponent available for (s, p, N, d)."""
    alpha = alpha_exponent(s, p, N)
    den = 1.0 + N - s * N / p
    lam_exp = (s / p - 1.0) / den if abs(den) > DEGENERACY_TOL else float("nan")
    rho = epsbar = None
    if s < 1:
        rho, epsbar = droplet_exponents(s, N)
    beta = gamma1 = gamma2 = None
    supercritical = attainable = None
    if d >= 2 and 0.0 < alpha <= 1.0:
        try:
            beta, gamma1, gamma2 = bt_exponents(alpha, d)
            supercritical = bt_supercritical(alpha, d)
            attainable = bt_attainable(alpha, d)
        except ValueError:
            pass
    return ExponentReport(
        s=s, p=p, N=N, d=d,
        alpha=alpha,
        nontrivial=alpha_nontrivial(s, p),
        lambda_exponent=lam_exp,
        rho=rho, epsbar_exponent=epsbar,
        beta=beta, gamma1=gamma1, gamma2=gamma2,
        supercritical=supercritical, attainable=attainable,
    )
