"""Analytic bounds on the coincidence probability, with quadrature oracles.

For same-bin tagging with window equal to the resolution, the per-pair
coincidence probability is bounded by ``tau * min(T1,T2) / (T1*T2)`` and by
1.  Averaging over the hidden direction gives rate bounds as a function of
the angle alpha between the settings:

* unequal settings: the closed form ``8 * tau * cot(alpha/2)``, paired with
  direct quadrature of the sphere-averaged density integral
  ``2*tau * integral dphi / max(sin^2 phi, sin^2(phi - alpha))``;
* equal settings: the saturation-aware closed form
  ``4*pi*(t*sqrt(1-t) + t/(1+sqrt(1-t)))`` with ``t = tau^(2/3)``,
  approximately ``6*pi*tau^(2/3)`` for small tau, paired with quadrature of
  the clamped double integral over the sphere.

Both bounds are un-normalized sphere integrals (the equal-settings form is
4*pi, not 1, at tau = 1), which only loosens them as bounds on a probability.
Note the cot closed form agrees with its density integral only to leading
order in alpha: the exact value of the integral is ``16*tau / sin(alpha)``,
i.e. ``8*tau*(cot(alpha/2) + tan(alpha/2))``.  The two are reported side by
side so the discrepancy is visible instead of reconciled away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .coincidence import CoincidenceStats
from .model import CoincidenceMode

__all__ = [
    "BoundReport",
    "unequal_settings_bound",
    "unequal_settings_quadrature",
    "equal_settings_bound",
    "equal_settings_quadrature",
    "approx_equal_settings",
    "check_simulated_gamma",
]

# quadrature targets, one order tighter than any tolerance asserted on them
UNEQUAL_QUAD_REL_TOL = 1e-8
EQUAL_QUAD_REL_TOL = 1e-6


@dataclass(frozen=True)
class BoundReport:
    """One row of the bound audit: analytic values and the simulated rate."""

    alpha: float
    tau: float
    closed_form: float
    quadrature: float
    simulated_gamma: float | None = None
    stderr_gamma: float | None = None
    satisfied: bool | None = None


def unequal_settings_bound(alpha: float, tau: float) -> float:
    """Closed-form rate bound 8 * tau * cot(alpha/2) for settings an angle
    alpha apart.

    Exact only to leading order in alpha (see module docstring); ill-defined
    at alpha = 0 where the equal-settings form applies instead.
    """
    if alpha == 0.0:
        raise ValueError("alpha = 0: use equal_settings_bound")
    if not 0.0 < alpha <= math.pi:
        raise ValueError(f"alpha must be in (0, pi], got {alpha}")
    if tau <= 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return 8.0 * tau / math.tan(0.5 * alpha)


def _inv_max_sin_sq(phi: float, alpha: float) -> float:
    s1 = math.sin(phi)
    s2 = math.sin(phi - alpha)
    return 1.0 / max(s1 * s1, s2 * s2)


def unequal_settings_quadrature(alpha: float, tau: float, start: float = 0.0) -> float:
    """Direct quadrature of the sphere-averaged coincidence-density integral
    ``2*tau * integral_0^{2pi} dphi / max(sin^2 phi, sin^2(phi - alpha))``.

    The integrand switches branch at phi = alpha/2 + k*pi/2; each smooth
    piece is integrated separately.  ``start`` shifts the (periodic)
    integration interval to [start, start + 2pi].  Diverges as alpha -> 0
    or alpha -> pi, where the two delay scales coincide and the density
    picture breaks down; both endpoints are rejected.
    """
    if not 0.0 < alpha < math.pi:
        raise ValueError(f"alpha must be strictly inside (0, pi), got {alpha}")
    if tau <= 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    two_pi = 2.0 * math.pi
    kinks = sorted(
        start + (0.5 * alpha + 0.5 * k * math.pi - start) % two_pi for k in range(4)
    )
    points = [start] + [k for k in kinks if start < k < start + two_pi] + [start + two_pi]
    total = 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        if hi - lo < 1e-15:
            continue
        val, _ = quad(
            _inv_max_sin_sq,
            lo,
            hi,
            args=(alpha,),
            epsabs=0.0,
            epsrel=UNEQUAL_QUAD_REL_TOL * 1e-2,
            limit=200,
        )
        total += val
    return 2.0 * tau * total


def equal_settings_bound(tau: float) -> float:
    """Closed-form rate bound for equal settings, where the density must be
    clamped at 1: ``4*pi*(t*sqrt(1-t) + t/(1+sqrt(1-t)))`` with t = tau^(2/3).

    Equals 4*pi at tau = 1 (the full un-normalized sphere) and behaves as
    6*pi*tau^(2/3) for small tau.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    t = tau ** (2.0 / 3.0)
    root = math.sqrt(max(0.0, 1.0 - t))
    return 4.0 * math.pi * (t * root + t / (1.0 + root))


def equal_settings_quadrature(tau: float) -> float:
    """Quadrature of the clamped double integral
    ``int_0^pi int_0^{2pi} min(tau / (1 - cos^2 phi sin^2 th)^{3/2}, 1)
    sin th dth dphi``.

    The integrand saturates at 1 inside the region where the delay scale
    drops below tau; the integration is split along that boundary in both
    variables.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    u0 = math.sqrt(max(0.0, 1.0 - tau ** (2.0 / 3.0)))

    def inner(phi: float) -> float:
        c = abs(math.cos(phi))

        def f(theta: float) -> float:
            cs = c * math.sin(theta)
            base = 1.0 - cs * cs
            T = base * math.sqrt(base)
            weight = 1.0 if T <= tau else tau / T
            return weight * math.sin(theta)

        pts = None
        if 0.0 < u0 < c:
            theta_sat = math.asin(u0 / c)
            pts = [theta_sat, math.pi - theta_sat]
        val, _ = quad(f, 0.0, math.pi, points=pts, epsabs=0.0, epsrel=1e-10, limit=200)
        return val

    pts = None
    if u0 > 0.0:
        a = math.acos(min(1.0, u0))
        pts = [a, math.pi - a, math.pi + a, 2.0 * math.pi - a]
        pts = [p for p in pts if 0.0 < p < 2.0 * math.pi]
    val, _ = quad(inner, 0.0, 2.0 * math.pi, points=pts, epsabs=0.0, epsrel=1e-9, limit=300)
    return val


def approx_equal_settings(tau: float) -> float:
    """Small-tau approximation 6*pi*tau^(2/3) of the equal-settings bound."""
    if tau <= 0.0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return 6.0 * math.pi * tau ** (2.0 / 3.0)


def check_simulated_gamma(stats: CoincidenceStats, alpha: float, tau: float) -> BoundReport:
    """Compare a simulated coincidence rate against the applicable bound.

    Requires same-bin statistics taken with window = tau; the bounds do not
    describe the continuous-window convention.  ``satisfied`` demands the
    estimate clear the bound with four standard errors to spare, so a pass
    is never a fluctuation.  The bounds are one-sided: any compliant rate
    passes, equality is not expected.
    """
    if stats.mode is not CoincidenceMode.SAME_BIN:
        raise ValueError(
            "bound check requires same-bin statistics; "
            f"got mode {stats.mode.value if stats.mode else None!r}"
        )
    if stats.window != tau or stats.tau != tau:
        raise ValueError(
            f"bounds assume W = tau = {tau}; statistics were taken with "
            f"tau = {stats.tau}, W = {stats.window}"
        )
    if not 0.0 <= alpha <= math.pi:
        raise ValueError(f"alpha must be in [0, pi], got {alpha}")
    if alpha == 0.0:
        closed = equal_settings_bound(tau)
        quadr = equal_settings_quadrature(tau)
    else:
        closed = unequal_settings_bound(alpha, tau)
        quadr = unequal_settings_quadrature(alpha, tau) if alpha < math.pi else math.inf
    satisfied = stats.gamma_hat + 4.0 * stats.stderr_gamma <= closed
    return BoundReport(
        alpha=alpha,
        tau=tau,
        closed_form=closed,
        quadrature=quadr,
        simulated_gamma=stats.gamma_hat,
        stderr_gamma=stats.stderr_gamma,
        satisfied=satisfied,
    )
