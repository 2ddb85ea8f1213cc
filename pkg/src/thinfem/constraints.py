"""Bound and mass enforcement applied after each linear solve.

Given the unconstrained candidate from the variational step, four routes
produce an admissible solution: plain nodal clamping, clamping of a
constant translation whose size restores the total mass (root found by a
secant iteration on the mass mismatch), an Uzawa multiplier loop for the
full constrained projection, and a brute-force active-set oracle kept for
verification on tiny meshes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .assembly import integrate_p1, l2_norm, lumped_weights
from .errors import InfeasibleError, NonConvergenceError
from .mesh import FeField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundSpec:
    """Nodal bounds: a lower value (scalar or per-node) and optional upper."""

    lower: float | np.ndarray = 0.0
    upper: float | np.ndarray | None = None

    def __post_init__(self):
        if self.upper is not None and np.any(np.asarray(self.lower) >= np.asarray(self.upper)):
            raise ValueError("lower bound must be strictly below upper bound")

    @property
    def two_sided(self) -> bool:
        return self.upper is not None


@dataclass(frozen=True)
class UzawaParams:
    """Step sizes and stopping control for the multiplier iteration.

    The constant rho doubles as the lower bound rho_min in the mass-defect
    estimate of the convergence theorem.
    """

    alpha: float = 1.0
    beta: float = 1.0
    rho: float = 1.0
    eps: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if min(self.alpha, self.beta, self.rho, self.eps) <= 0.0:
            raise ValueError("alpha, beta, rho and eps must be positive")


def project_nodal(u: FeField, bounds: BoundSpec) -> FeField:
    """Clamp every nodal value into [lower, upper]; idempotent."""
    if bounds.two_sided:
        return u.with_values(np.clip(u.values, bounds.lower, bounds.upper))
    return u.with_values(np.maximum(u.values, bounds.lower))


def scheme2_truncate(u_hat: FeField, bounds: BoundSpec) -> tuple[FeField, float]:
    """Classical truncation: clamp and report the mass it created."""
    u = project_nodal(u_hat, bounds)
    mesh = u_hat.mesh
    defect = integrate_p1(mesh, u) - integrate_p1(mesh, u_hat)
    return u, defect


def theta(u_hat: FeField, bounds: BoundSpec, mu: float, target_mass: float) -> float:
    """Mass mismatch of the clamped translation: int P[u_hat - mu] - target.

    Nonincreasing in mu with Lipschitz constant at most the domain area.
    """
    shifted = u_hat.with_values(u_hat.values - mu)
    return integrate_p1(u_hat.mesh, project_nodal(shifted, bounds)) - target_mass


def _bracket(u_hat: FeField, bounds: BoundSpec, target_mass: float):
    """Sign-checked bracket [lo, hi] with theta(lo) >= 0 >= theta(hi)."""
    vals = u_hat.values
    hi = float(np.max(vals - np.asarray(bounds.lower)))
    if bounds.two_sided:
        lo = float(np.min(vals - np.asarray(bounds.upper)))
    else:
        lo = float(np.min(vals - np.asarray(bounds.lower)))

    th_hi = theta(u_hat, bounds, hi, target_mass)
    if th_hi > 0.0:
        # every node clamped to the lower bound and still too much mass
        raise InfeasibleError(
            f"target mass {target_mass} below the mass of the lower-bound field"
        )
    th_lo = theta(u_hat, bounds, lo, target_mass)
    if th_lo < 0.0:
        if bounds.two_sided:
            raise InfeasibleError(
                f"target mass {target_mass} above the mass of the upper-bound field"
            )
        # one-sided: theta grows without bound as mu decreases
        span = max(hi - lo, 1.0)
        while th_lo < 0.0:
            lo -= span
            span *= 2.0
            th_lo = theta(u_hat, bounds, lo, target_mass)
    return lo, th_lo, hi, th_hi


def secant_solve(
    u_hat: FeField,
    bounds: BoundSpec,
    target_mass: float,
    eps: float,
    max_iter: int = 100,
) -> tuple[float, int]:
    """Find the translation that restores the target mass.

    Secant updates on theta, falling back to bisection of the maintained
    sign bracket whenever the secant line is flat or shoots outside it.
    Stops once consecutive iterates differ by at most eps.
    """
    lo, th_lo, hi, th_hi = _bracket(u_hat, bounds, target_mass)
    if th_lo == 0.0:
        return lo, 0
    if th_hi == 0.0:
        return hi, 0

    mu_prev = min(max(0.0, lo), hi)
    th_prev = theta(u_hat, bounds, mu_prev, target_mass)
    if th_prev == 0.0:
        return mu_prev, 0
    mu_cur = min(max(0.1 * hi, lo), hi)
    if mu_cur == mu_prev:
        mu_cur = 0.5 * (lo + hi)
    th_cur = theta(u_hat, bounds, mu_cur, target_mass)

    for mu, th in ((mu_prev, th_prev), (mu_cur, th_cur)):
        if th > 0.0 and mu > lo:
            lo, th_lo = mu, th
        elif th < 0.0 and mu < hi:
            hi, th_hi = mu, th

    iterations = 0
    while iterations < max_iter:
        if th_cur == 0.0:
            return mu_cur, iterations
        if th_cur == th_prev:
            logger.warning("flat mass-mismatch segment at mu=%g; bisecting", mu_cur)
            mu_next = 0.5 * (lo + hi)
        else:
            mu_next = mu_cur - th_cur * (mu_cur - mu_prev) / (th_cur - th_prev)
            if not np.isfinite(mu_next) or not lo <= mu_next <= hi:
                mu_next = 0.5 * (lo + hi)
        iterations += 1
        th_next = theta(u_hat, bounds, mu_next, target_mass)
        if th_next > 0.0:
            lo, th_lo = mu_next, th_next
        elif th_next < 0.0:
            hi, th_hi = mu_next, th_next
        if abs(mu_next - mu_cur) <= eps or th_next == 0.0:
            return mu_next, iterations
        mu_prev, th_prev = mu_cur, th_cur
        mu_cur, th_cur = mu_next, th_next

    raise NonConvergenceError(
        f"secant iteration exceeded {max_iter} iterations",
        iterations=max_iter,
        residual=abs(th_cur),
        last=mu_cur,
    )


def scheme3_apply(
    u_hat: FeField,
    bounds: BoundSpec,
    target_mass: float,
    eps: float,
    max_iter: int = 100,
) -> FeField:
    """Conservative truncation: clamp the mass-restoring translation."""
    mu_star, _ = secant_solve(u_hat, bounds, target_mass, eps, max_iter)
    return project_nodal(u_hat.with_values(u_hat.values - mu_star), bounds)


def uzawa_solve(
    u_hat: FeField,
    bounds: BoundSpec,
    target_mass: float,
    params: UzawaParams,
) -> tuple[FeField, FeField, float, int]:
    """Multiplier iteration for the bound-and-mass constrained projection.

    Returns (solution, multiplier field, mass multiplier, iterations).
    The three stopping tests (squared multiplier increment, mass-multiplier
    increment, squared lagged primal increment) must all hold at the same
    sweep.  For two-sided bounds a second multiplier handles the upper
    constraint and the returned field is the lower-minus-upper combination.
    """
    mesh = u_hat.mesh
    lower = np.broadcast_to(np.asarray(bounds.lower, dtype=float), u_hat.values.shape)
    upper = None
    if bounds.two_sided:
        upper = np.broadcast_to(np.asarray(bounds.upper, dtype=float), u_hat.values.shape)

    u = project_nodal(u_hat, bounds).values
    lam_lo = np.zeros_like(u)
    lam_up = np.zeros_like(u)
    mu = 0.0
    u_prev = None  # u at sweep k-1, for the lagged primal test

    def norm(values: np.ndarray) -> float:
        return l2_norm(FeField(mesh, values))

    for k in range(1, params.max_iter + 1):
        lam_lo_new = np.maximum(lam_lo - params.beta * (u - lower), 0.0)
        lam_up_new = lam_up
        if upper is not None:
            lam_up_new = np.maximum(lam_up - params.beta * (upper - u), 0.0)
        mu_new = mu + params.rho * (integrate_p1(mesh, FeField(mesh, u)) - target_mass)
        u_new = u - params.alpha * (u - u_hat.values + mu_new - lam_lo_new + lam_up_new)

        tau_sq = norm(lam_lo_new - lam_lo) ** 2
        if upper is not None:
            tau_sq = max(tau_sq, norm(lam_up_new - lam_up) ** 2)
        xi = abs(mu_new - mu)
        eta_sq = norm(u - u_prev) ** 2 if u_prev is not None else np.inf

        u_prev = u
        u, lam_lo, lam_up, mu = u_new, lam_lo_new, lam_up_new, mu_new

        if k >= 2 and tau_sq <= params.eps and xi <= params.eps and eta_sq <= params.eps:
            lam = FeField(mesh, lam_lo - lam_up)
            return FeField(mesh, u), lam, mu, k

    raise NonConvergenceError(
        f"Uzawa iteration exceeded {params.max_iter} iterations "
        f"(tau^2={tau_sq:.3e}, xi={xi:.3e}, eta^2={eta_sq:.3e})",
        iterations=params.max_iter,
        residual=max(tau_sq, xi, eta_sq),
        last=FeField(mesh, u),
    )


def uzawa_solve_unconstrained_mass(
    u_hat: FeField,
    bounds: BoundSpec,
    params: UzawaParams,
) -> FeField:
    """Uzawa loop with the mass multiplier frozen at zero.

    With unit step sizes the iterates reach the plain nodal clamp exactly
    after finitely many sweeps, so the loop stops on nodal equality.
    """
    if params.alpha != 1.0 or params.beta != 1.0:
        raise ValueError("finite-step equivalence requires alpha = beta = 1")
    lower = np.broadcast_to(np.asarray(bounds.lower, dtype=float), u_hat.values.shape)
    upper = None
    if bounds.two_sided:
        upper = np.broadcast_to(np.asarray(bounds.upper, dtype=float), u_hat.values.shape)

    u = project_nodal(u_hat, bounds).values
    lam_lo = np.zeros_like(u)
    lam_up = np.zeros_like(u)
    for _ in range(1, params.max_iter + 1):
        lam_lo_new = np.maximum(lam_lo - (u - lower), 0.0)
        lam_up_new = lam_up
        if upper is not None:
            lam_up_new = np.maximum(lam_up - (upper - u), 0.0)
        u_new = u_hat.values + lam_lo_new - lam_up_new
        if np.array_equal(u_new, u) and np.array_equal(lam_lo_new, lam_lo) \
                and np.array_equal(lam_up_new, lam_up):
            return FeField(u_hat.mesh, u_new)
        u, lam_lo, lam_up = u_new, lam_lo_new, lam_up_new

    raise NonConvergenceError(
        "unconstrained-mass Uzawa did not reach its fixed point",
        iterations=params.max_iter,
        residual=float(np.max(np.abs(u - project_nodal(u_hat, bounds).values))),
        last=FeField(u_hat.mesh, u),
    )


def qp_oracle(u_hat: FeField, bounds: BoundSpec, target_mass: float) -> FeField:
    """Exact minimizer of the lumped-mass projection by KKT enumeration.

    Test-only verifier restricted to meshes with at most 12 nodes and
    scalar bounds.  One-sided specs enumerate every clamped subset;
    two-sided specs enumerate the value-ordered splits that the KKT sign
    conditions allow.
    """
    n = u_hat.mesh.n_nodes
    if n > 12:
        raise ValueError("qp_oracle is limited to meshes with at most 12 nodes")
    if np.ndim(bounds.lower) != 0 or (bounds.upper is not None and np.ndim(bounds.upper) != 0):
        raise ValueError("qp_oracle supports scalar bounds only")
    a = float(bounds.lower)
    b = float(bounds.upper) if bounds.two_sided else None
    m = lumped_weights(u_hat.mesh)
    uh = u_hat.values
    total = m.sum()
    tol = 1e-11 * max(1.0, np.max(np.abs(uh)))

    if target_mass < a * total - tol or (b is not None and target_mass > b * total + tol):
        raise InfeasibleError(f"target mass {target_mass} outside the feasible range")

    best = None
    best_obj = np.inf

    def consider(values: np.ndarray):
        nonlocal best, best_obj
        obj = float(np.sum(m * (values - uh) ** 2))
        if obj < best_obj:
            best, best_obj = values, obj

    if b is None:
        subsets = (np.arange(2**n)[:, None] >> np.arange(n)) & 1  # 1 = clamped at a
        clamped = subsets.astype(bool)
        free = ~clamped
        m_free = free @ m
        mass_free = free @ (m * uh)
        mass_clamped = (clamped @ m) * a
        with np.errstate(divide="ignore", invalid="ignore"):
            mu = np.where(m_free > 0.0, (mass_free + mass_clamped - target_mass) / m_free, 0.0)
        shifted = uh[None, :] - mu[:, None]
        primal_ok = np.all(np.where(free, shifted >= a - tol, True), axis=1)
        dual_ok = np.all(np.where(clamped, shifted <= a + tol, True), axis=1)
        empty_free = m_free == 0.0
        exact_mass = np.abs(a * total - target_mass) <= tol
        valid = np.where(empty_free, exact_mass, primal_ok & dual_ok)
        for idx in np.flatnonzero(valid):
            values = np.where(clamped[idx], a, uh - mu[idx])
            consider(values)
    else:
        order = np.argsort(uh, kind="stable")
        for k_lo in range(n + 1):
            for k_hi in range(k_lo, n + 1):
                lo_set = order[:k_lo]
                free_set = order[k_lo:k_hi]
                hi_set = order[k_hi:]
                m_free = m[free_set].sum()
                fixed_mass = a * m[lo_set].sum() + b * m[hi_set].sum()
                if m_free == 0.0:
                    if abs(fixed_mass - target_mass) > tol:
                        continue
                    mu = 0.0
                else:
                    mu = (np.sum(m[free_set] * uh[free_set]) + fixed_mass - target_mass) / m_free
                shifted = uh - mu
                if np.any(shifted[free_set] < a - tol) or np.any(shifted[free_set] > b + tol):
                    continue
                if np.any(shifted[lo_set] > a + tol) or np.any(shifted[hi_set] < b - tol):
                    continue
                values = uh - mu
                values[lo_set] = a
                values[hi_set] = b
                consider(values)

    if best is None:
        raise InfeasibleError("no KKT-consistent active set found")
    return FeField(u_hat.mesh, best)
