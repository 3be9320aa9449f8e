"""Minimal cost functions of mass-constrained first-order energies.

Numerical library and CLI for computing cost curves m -> H(m) of energies
int f(u, grad u) under the constraint int u = m, checking their structural
properties (concavity, power laws, slope identities), decomposing densities
into concentration bubbles, and running rescaled-energy concentration
experiments.
"""

from .lagrangian import (
    DropletW,
    GridDensity,
    PowerSum,
    RadialProfile,
    ScaleInvariant,
    ScaleInvariantPerturbed,
    Tabulated,
    WProfile,
    eval_energy,
    evaluate,
    rescaled_energy,
    slope_at_zero,
    verify_hypotheses,
)

__version__ = "0.1.0"
