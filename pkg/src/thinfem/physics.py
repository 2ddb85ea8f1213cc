"""Mobility and free-energy models for the fourth-order flux.

Three mobility families are supported: a constant, the power law |u|^p
(prefactor 1), and the degenerate Cahn-Hilliard choice 1 - u^2 that
vanishes at the pure phases.  Free energies are absent, a quartic
double well c (u^2 - root^2)^2, or the logarithmic double well whose
derivative blows up at u = +-1; the combined coefficient
g(u) = theta - theta_c (1 - u^2) stays finite there and is the basis of
the singularity-free Cahn-Hilliard formulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mobility:
    kind: str  # "constant" | "power" | "degenerate"
    m_const: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "degenerate"):
            raise ValueError(f"unknown mobility kind {self.kind!r}")


@dataclass(frozen=True)
class FreeEnergy:
    kind: str  # "null" | "quartic" | "logarithmic"
    theta: float = 0.0
    theta_c: float = 0.0
    quartic_c: float = 1.0
    # positive root of the quartic well; named to avoid the Uzawa step size
    quartic_root: float = 1.0

    def __post_init__(self):
        if self.kind not in ("null", "quartic", "logarithmic"):
            raise ValueError(f"unknown free-energy kind {self.kind!r}")


@dataclass(frozen=True)
class PhysicsConfig:
    """Mobility, free energy, and the interface coefficient gamma."""

    mobility: Mobility = field(default_factory=lambda: Mobility("constant"))
    energy: FreeEnergy = field(default_factory=lambda: FreeEnergy("null"))
    gamma: float = 1.0

    @property
    def uses_gform(self) -> bool:
        """The singularity-free path applies to the degenerate/log pairing."""
        return self.mobility.kind == "degenerate" and self.energy.kind == "logarithmic"


def mobility_eval(m: Mobility, u):
    """Evaluate f(u); the power kind uses |u|^p so negatives are safe."""
    u = np.asarray(u, dtype=float)
    if m.kind == "constant":
        return np.full_like(u, m.m_const)
    if m.kind == "power":
        return np.abs(u) ** m.p
    return 1.0 - u * u


def energy_derivs(e: FreeEnergy, u):
    """Return (phi, phi', phi'') at u.

    The logarithmic kind is only defined for |u| < 1; callers that need
    values at the pure phases must use the g-form instead.
    """
    u = np.asarray(u, dtype=float)
    if e.kind == "null":
        z = np.zeros_like(u)
        return z, z.copy(), z.copy()
    if e.kind == "quartic":
        c, r2 = e.quartic_c, e.quartic_root**2
        well = u * u - r2
        return c * well**2, 4.0 * c * u * well, 4.0 * c * (3.0 * u * u - r2)
    if np.any(np.abs(u) >= 1.0):
        raise ValueError("logarithmic free energy derivative undefined for |u| >= 1")
    phi = 0.5 * e.theta * ((1.0 + u) * np.log((1.0 + u) / 2.0)
                           + (1.0 - u) * np.log((1.0 - u) / 2.0)) \
        + 0.5 * e.theta_c * (1.0 - u * u)
    dphi = 0.5 * e.theta * np.log((1.0 + u) / (1.0 - u)) - e.theta_c * u
    ddphi = e.theta / (1.0 - u * u) - e.theta_c
    return phi, dphi, ddphi


def free_energy_value(e: FreeEnergy, u):
    """phi(u) alone, with the continuous extension at |u| = 1.

    Used for energy reporting where bounded runs legitimately reach the
    pure phases; the convention 0 log 0 = 0 applies.
    """
    u = np.asarray(u, dtype=float)
    if e.kind != "logarithmic":
        return energy_derivs(e, u)[0]
    if np.any(np.abs(u) > 1.0 + 1e-12):
        raise ValueError("logarithmic free energy undefined for |u| > 1")
    up = np.clip(1.0 + u, 0.0, 2.0)
    um = np.clip(1.0 - u, 0.0, 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(up > 0.0, up * np.log(up / 2.0), 0.0)
        t2 = np.where(um > 0.0, um * np.log(um / 2.0), 0.0)
    return 0.5 * e.theta * (t1 + t2) + 0.5 * e.theta_c * (1.0 - u * u)


def g_eval(theta: float, theta_c: float, u):
    """g(u) = theta - theta_c (1 - u^2), finite at the pure phases."""
    u = np.asarray(u, dtype=float)
    return theta - theta_c * (1.0 - u * u)


def g_eval_config(physics: PhysicsConfig, u):
    return g_eval(physics.energy.theta, physics.energy.theta_c, u)
