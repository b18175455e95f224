"""Ring fluxes of planar fields and the comparison-ODE blow-up argument.

For a C^1 planar field V obeying div V >= C ||V||^2, integrating over
circles and applying Cauchy-Schwarz to the right side yields, for the
flux phi(r) through the circle of radius r,

    phi'(r) >= C * phi(r)^2 / (2 * pi * r),

whose nonzero solutions blow up at a finite radius; only phi == 0 stays
finite for all r, forcing V == 0.  This module certifies each step of
that chain numerically on a catalog of analytic fields: the flux /
ring-divergence identity, the Cauchy-Schwarz inequality on every ring,
where (if anywhere) the pointwise inequality itself holds, and the
blow-up radius of the comparison ODE.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class PlanarField:
    """Analytic planar vector field with exact divergence."""

    name: str
    v: Callable  # (x, y) -> (vx, vy), vectorized
    div: Callable  # (x, y) -> scalar field, vectorized
    c: float = 1.0  # constant of the pointwise inequality under test

    def norm2(self, x, y):
        vx, vy = self.v(x, y)
        return vx * vx + vy * vy


def radial_linear(c: float = 1.0) -> PlanarField:
    """V = (x, y): div = 2, flux through S_r is 2*pi*r^2."""
    return PlanarField("radial_linear", lambda x, y: (x, y),
                       lambda x, y: 2.0 * np.ones_like(np.asarray(x, float)), c)


def rotation(c: float = 1.0) -> PlanarField:
    """V = (-y, x): divergence-free, zero flux through every circle."""
    return PlanarField("rotation", lambda x, y: (-y, x),
                       lambda x, y: np.zeros_like(np.asarray(x, float)), c)


def radial_gaussian(scale: float = 1.0, c: float = 1.0) -> PlanarField:
    s2 = scale * scale

    def v(x, y):
        g = np.exp(-(x * x + y * y) / (2.0 * s2))
        return g * x, g * y

    def div(x, y):
        r2 = x * x + y * y
        return (2.0 - r2 / s2) * np.exp(-r2 / (2.0 * s2))

    return PlanarField("radial_gaussian", v, div, c)


def radial_power(power: int = 1, c: float = 1.0) -> PlanarField:
    """V = r^(2m) (x, y): div = (2m + 2) r^(2m)."""
    m = int(power)

    def v(x, y):
        rm = (x * x + y * y) ** m
        return rm * x, rm * y

    def div(x, y):
        return (2.0 * m + 2.0) * (x * x + y * y) ** m

    return PlanarField("radial_power", v, div, c)


def zero_field(c: float = 1.0) -> PlanarField:
    z = lambda x, y: np.zeros_like(np.asarray(x, float))  # noqa: E731
    return PlanarField("zero", lambda x, y: (z(x, y), z(x, y)), z, c)


CATALOG = {
    "radial_linear": radial_linear,
    "rotation": rotation,
    "radial_gaussian": radial_gaussian,
    "radial_power": radial_power,
    "zero": zero_field,
}


@dataclass
class FluxProfile:
    """Ring quadratures: flux, divergence, squared norm, and their slacks."""

    radii: np.ndarray
    phi: np.ndarray        # circulation of <V, n> over S_r
    ring_div: np.ndarray   # integral of div V over S_r
    ring_norm: np.ndarray  # integral of ||V||^2 over S_r
    cs_slack: np.ndarray   # ring_norm - phi^2 / (2 pi r)  (Cauchy-Schwarz)
    ode_slack: np.ndarray  # phi' - C phi^2 / (2 pi r), nan at the ends


def flux_profile(field: PlanarField, radii, n_angular: int = 256) -> FluxProfile:
    """Trapezoid quadrature of flux, divergence, and norm over each circle."""
    radii = np.asarray(radii, dtype=float)
    if n_angular < 64:
        raise ValueError("n_angular must be at least 64")
    if np.any(radii <= 0.0) or np.any(np.diff(radii) <= 0.0):
        raise ValueError("radii must be positive and strictly increasing")
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    ct, st = np.cos(theta), np.sin(theta)
    phi = np.empty_like(radii)
    ring_div = np.empty_like(radii)
    ring_norm = np.empty_like(radii)
    for i, r in enumerate(radii):
        x, y = r * ct, r * st
        vx, vy = field.v(x, y)
        weight = 2.0 * np.pi * r / n_angular
        phi[i] = np.sum(vx * ct + vy * st) * weight
        ring_div[i] = np.sum(field.div(x, y)) * weight
        ring_norm[i] = np.sum(vx * vx + vy * vy) * weight
    cs_slack = ring_norm - phi * phi / (2.0 * np.pi * radii)
    ode_slack = np.full_like(radii, np.nan)
    if len(radii) >= 3:
        dphi = (phi[2:] - phi[:-2]) / (radii[2:] - radii[:-2])
        mid = slice(1, -1)
        ode_slack[mid] = dphi - field.c * phi[mid] ** 2 / (2.0 * np.pi * radii[mid])
    return FluxProfile(radii=radii, phi=phi, ring_div=ring_div,
                       ring_norm=ring_norm, cs_slack=cs_slack, ode_slack=ode_slack)


def flux_derivative_residual(profile: FluxProfile) -> float:
    """Max defect of d(phi)/dr = ring divergence (central differences)."""
    r, phi = profile.radii, profile.phi
    dphi = (phi[2:] - phi[:-2]) / (r[2:] - r[:-2])
    return float(np.max(np.abs(dphi - profile.ring_div[1:-1])))


FLUX_CSV_HEADER = ["r", "phi", "ring_div", "ring_norm", "cs_slack", "ode_slack"]


def flux_profile_rows(profile: FluxProfile):
    return zip(profile.radii, profile.phi, profile.ring_div, profile.ring_norm,
               profile.cs_slack, profile.ode_slack)


def comparison_blowup_radius(psi0: float, c: float, r0: float) -> float:
    """Closed-form blow-up radius of psi' = c psi^2 / (2 pi r), psi(r0) = psi0 > 0."""
    if psi0 <= 0.0:
        raise ValueError("blow-up requires psi0 > 0")
    return r0 * float(np.exp(2.0 * np.pi / (c * psi0)))


def integrate_comparison_ode(psi0: float, c: float, r0: float,
                             r_max: float | None = None,
                             n_steps: int = 20000) -> tuple[np.ndarray, np.ndarray, float | None]:
    """Numerically locate the comparison-ODE blow-up as a root of 1/psi.

    Integrates w = 1/psi, which satisfies w' = -c/(2 pi r) and stays
    smooth through the blow-up; the blow-up radius is the zero of w,
    refined by bisection on the integrated profile.
    """
    if psi0 <= 0.0:
        raise ValueError("psi0 must be positive")
    target = comparison_blowup_radius(psi0, c, r0)
    if r_max is None:
        r_max = 1.25 * target
    r = np.linspace(r0, r_max, n_steps + 1)
    h = r[1] - r[0]
    w = np.empty_like(r)
    w[0] = 1.0 / psi0

    def rhs(radius):
        return -c / (2.0 * np.pi * radius)

    for i in range(n_steps):
        k1 = rhs(r[i])
        k2 = rhs(r[i] + 0.5 * h)
        k3 = k2
        k4 = rhs(r[i] + h)
        w[i + 1] = w[i] + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    blowup = None
    cross = np.nonzero(w[:-1] * w[1:] <= 0.0)[0]
    if len(cross):
        i = int(cross[0])
        a, b = r[i], r[i + 1]
        wa = w[i]
        for _ in range(80):
            m = 0.5 * (a + b)
            wm = _w_between(r[i], wa, m, c)
            if np.sign(wm) == np.sign(wa):
                a = m
            else:
                b = m
        blowup = 0.5 * (a + b)
    psi = np.where(w > 0.0, 1.0 / np.where(w > 0.0, w, 1.0), np.nan)
    return r, psi, blowup


def _w_between(r_start: float, w_start: float, r_end: float, c: float) -> float:
    """Dense RK4 evaluation of w between grid points (single step)."""
    h = r_end - r_start
    k1 = -c / (2.0 * np.pi * r_start)
    k2 = -c / (2.0 * np.pi * (r_start + 0.5 * h))
    k4 = -c / (2.0 * np.pi * (r_start + h))
    return w_start + (h / 6.0) * (k1 + 4.0 * k2 + k4)


@dataclass
class ComparisonReport:
    """Where the pointwise inequality holds and what the flux then forces."""

    inequality_holds: bool
    min_pointwise_slack: float
    first_failure_radius: float | None
    min_ode_slack: float
    phi_r0: float
    blowup_radius: float | None
    blowup_radius_numeric: float | None


def comparison_ode_check(field: PlanarField, r0: float, r1: float,
                         n_radial: int = 201, n_angular: int = 512,
                         n_r_dense: int = 400) -> ComparisonReport:
    """Check div V >= C ||V||^2 on the annulus and the flux consequence.

    Failure of the pointwise inequality is a finding, not an error: for
    smooth nonzero fields it must fail on large annuli, which is the
    heart of the vanishing argument.
    """
    if not 0.0 < r0 < r1:
        raise ValueError("need 0 < r0 < r1")
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    ct, st = np.cos(theta), np.sin(theta)
    min_slack = np.inf
    first_fail = None
    for r in np.linspace(r0, r1, n_r_dense):
        x, y = r * ct, r * st
        slack = field.div(x, y) - field.c * field.norm2(x, y)
        m = float(np.min(slack))
        if m < min_slack:
            min_slack = m
        if m < 0.0 and first_fail is None:
            first_fail = float(r)
    profile = flux_profile(field, np.linspace(r0, r1, n_radial), n_angular)
    ode_slack = profile.ode_slack[1:-1]
    phi_r0 = float(profile.phi[0])
    blowup = blowup_num = None
    if phi_r0 > 0.0:
        blowup = comparison_blowup_radius(phi_r0, field.c, r0)
        _, _, blowup_num = integrate_comparison_ode(phi_r0, field.c, r0)
    return ComparisonReport(
        inequality_holds=min_slack >= 0.0,
        min_pointwise_slack=float(min_slack),
        first_failure_radius=first_fail,
        min_ode_slack=float(np.min(ode_slack)),
        phi_r0=phi_r0,
        blowup_radius=blowup,
        blowup_radius_numeric=blowup_num,
    )
