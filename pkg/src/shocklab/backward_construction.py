"""Backward build of foliated initial data that never shocks forward.

For a potential that switches off at a cutoff time T, take the family of
characteristics that for t >= T are the straight lines

    q(t, beta) = alpha * (t - T) + beta

and integrate them backward to t = 0.  The variational component xi
(the beta-derivative of position) starts at (xi, eta)(T) = (1, 0); as
long as the curvature stays below an admissibility threshold, a Sturm
comparison with the constant-curvature oscillator keeps xi positive on
[0, T], so the curves q(0; beta) -> p(0; beta) are ordered graphs: valid
foliated initial data whose forward evolution never focuses.  Whatever
shocks the general existence result forces must then sit in backward
time, and the scan here goes looking for them.

The default admissibility gate is |u_qq| < (pi / (2T))^2: with the
Neumann-type seed (1, 0) at T the comparison solution is
cos(sqrt(c) (T - t)), whose first zero sits a quarter period (not a
half) away from T, so the gate keeps that zero outside [0, T].  The
looser classical threshold (pi / T)^2 can be selected for exploration,
in which case positivity of xi is checked empirically instead of being
guaranteed by the comparison argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .characteristics import flow_batch
from .errors import BoundViolated, FoliationFailed, ForwardShockFound
from .foliation import ShockReport


def admissibility_threshold(t_cutoff: float, paper_bound: bool = False) -> float:
    factor = 1.0 if paper_bound else 2.0
    return (np.pi / (factor * t_cutoff)) ** 2


@dataclass
class ConstructedFoliation:
    """Initial-data curves produced by the backward build."""

    t_cutoff: float
    alpha_grid: np.ndarray
    beta_grid: np.ndarray
    q0: np.ndarray   # (n_alpha, n_beta) positions at t = 0
    p0: np.ndarray   # velocities at t = 0
    xi0: np.ndarray  # d q0 / d beta, transported
    eta0: np.ndarray  # d p0 / d beta, transported
    jacobi_min: np.ndarray  # per leaf: min over (beta, t in [0, T]) of xi
    max_u_qq: float
    threshold: float
    dt: float

    def leaf_monotone_margin(self, i: int) -> float:
        """Smallest increment of q0 along beta, closing the period."""
        q = self.q0[i]
        inc = np.diff(q)
        wrap = q[0] + 1.0 - q[-1]
        return float(min(inc.min(initial=np.inf), wrap))


def _backward_leaves(pot, alphas: np.ndarray, betas: np.ndarray,
                     t_cutoff: float, dt: float):
    """Integrate the post-cutoff lines backward to t = 0, watching xi."""
    n_a, n_b = len(alphas), len(betas)
    q_T = np.tile(betas, n_a)
    p_T = np.repeat(alphas, n_b)
    res = flow_batch(pot, q_T, p_T, 1.0, 0.0, t_cutoff, 0.0, dt)
    if np.any(np.isfinite(res.first_zero)):
        i = int(np.nonzero(np.isfinite(res.first_zero))[0][0])
        raise FoliationFailed(
            f"variational component vanished at t={res.first_zero[i]:.6g} on leaf "
            f"alpha={p_T[i]:.6g}, beta={q_T[i]:.6g}"
        )
    shape = (n_a, n_b)
    return (res.q.reshape(shape), res.p.reshape(shape),
            res.xi.reshape(shape), res.eta.reshape(shape),
            res.min_xi.reshape(shape))


def construct(pot, alpha_grid, beta_grid, dt: float,
              t_cutoff: float | None = None,
              paper_bound: bool = False) -> ConstructedFoliation:
    """Build initial data at t = 0 from straight lines at the cutoff time.

    The potential must vanish identically for t >= t_cutoff (compact
    envelopes); the curvature bound is checked on [0, t_cutoff] before
    any integration.
    """
    alphas = np.asarray(alpha_grid, dtype=float)
    betas = np.asarray(beta_grid, dtype=float)
    support_end = pot.compact_support_end()
    if t_cutoff is None:
        if support_end is None:
            raise ValueError(
                "t_cutoff is required when the potential does not declare "
                "compact envelopes"
            )
        t_cutoff = support_end
    elif support_end is not None and support_end > t_cutoff + 1e-12:
        raise ValueError("potential support extends past the requested cutoff")
    elif support_end is None and not pot.is_zero():
        raise ValueError("potential must vanish for t >= t_cutoff (compact envelopes)")

    threshold = admissibility_threshold(t_cutoff, paper_bound)
    max_uqq = 0.0 if pot.is_zero() else pot.max_abs_u_qq(0.0, t_cutoff)
    if max_uqq >= threshold:
        raise BoundViolated(max_uqq, threshold)

    q0, p0, xi0, eta0, min_xi = _backward_leaves(pot, alphas, betas, t_cutoff, dt)
    jacobi_min = min_xi.min(axis=1)
    if np.any(jacobi_min <= 0.0):
        i = int(np.argmin(jacobi_min))
        raise FoliationFailed(
            f"xi dipped to {jacobi_min[i]:.6g} on leaf alpha={alphas[i]:.6g}"
        )
    return ConstructedFoliation(
        t_cutoff=float(t_cutoff), alpha_grid=alphas, beta_grid=betas,
        q0=q0, p0=p0, xi0=xi0, eta0=eta0, jacobi_min=jacobi_min,
        max_u_qq=float(max_uqq), threshold=float(threshold), dt=dt,
    )


@dataclass
class ForwardReport:
    """Round-trip and straight-line checks of the forward verification."""

    ok: bool
    round_trip_max: float      # |(q, p)(t_cutoff) - (beta, alpha)|, max over leaves
    line_deviation_max: float  # |q(t) - (alpha (t - T) + beta)| at the horizon
    horizon: float


def verify_no_forward_shock(cf: ConstructedFoliation, pot,
                            horizon: float, dt: float) -> ForwardReport:
    """Re-integrate the construction forward and certify it never focuses.

    Raises ForwardShockFound (with the offending leaf and time) if any
    variational component crosses zero on [0, horizon]; past the cutoff
    the integrated paths must coincide with their defining lines.
    """
    if horizon < cf.t_cutoff:
        raise ValueError("horizon must reach past the cutoff time")
    n_a, n_b = cf.q0.shape
    q = cf.q0.ravel()
    p = cf.p0.ravel()
    xi = cf.xi0.ravel()
    eta = cf.eta0.ravel()
    alphas = np.repeat(cf.alpha_grid, n_b)
    betas = np.tile(cf.beta_grid, n_a)

    mid = flow_batch(pot, q, p, xi, eta, 0.0, cf.t_cutoff, dt)
    _raise_if_zero(mid.first_zero, alphas, betas)
    round_trip = max(float(np.max(np.abs(mid.q - betas))),
                     float(np.max(np.abs(mid.p - alphas))))

    end = flow_batch(pot, mid.q, mid.p, mid.xi, mid.eta, cf.t_cutoff, horizon, dt)
    _raise_if_zero(end.first_zero, alphas, betas)
    line = alphas * (horizon - cf.t_cutoff) + betas
    # distinct-beta lines share the slope alpha, so staying on the lines
    # rules out crossings without a pairwise check
    line_dev = float(np.max(np.abs(end.q - (mid.q + mid.p * (horizon - cf.t_cutoff)))))
    line_dev = max(line_dev, float(np.max(np.abs(end.q - line))))
    return ForwardReport(ok=True, round_trip_max=round_trip,
                         line_deviation_max=line_dev, horizon=horizon)


def _raise_if_zero(first_zero: np.ndarray, alphas: np.ndarray, betas: np.ndarray):
    if np.any(np.isfinite(first_zero)):
        i = int(np.nonzero(np.isfinite(first_zero))[0][0])
        raise ForwardShockFound(float(alphas[i]), float(betas[i]), float(first_zero[i]))


@dataclass
class BackwardScanResult:
    """Outcome of the widening backward scan.

    status is "found" once some leaf focuses in backward time, else
    "no_backward_shock_within_horizon": an inconclusive scan (horizon or
    label range too small), never a claim that no shock exists.
    """

    reports: list[ShockReport]
    found: bool
    status: str
    alphas_scanned: np.ndarray


def find_backward_shocks(cf: ConstructedFoliation, pot, backward_horizon: float,
                         dt: float, alpha_cap: float = 64.0,
                         widen_factor: float = 2.0) -> BackwardScanResult:
    """Scan constructed leaves backward; widen the label range until a hit.

    Starts from the leaves already constructed; when none of them
    focuses, new leaves are built (by the same backward construction)
    on a geometrically widened alpha range until a shock is found or
    the cap on |alpha| is reached.
    """
    if backward_horizon <= 0.0:
        raise ValueError("backward_horizon must be positive")
    reports: list[ShockReport] = []
    alphas = np.asarray(cf.alpha_grid, dtype=float)
    spacing = np.min(np.diff(np.sort(alphas))) if len(alphas) > 1 else 1.0
    betas = cf.beta_grid
    scanned: list[float] = []

    def scan(alpha_vals, q0, p0, xi0, eta0) -> bool:
        hit = False
        n_b = q0.shape[1]
        res = flow_batch(pot, q0.ravel(), p0.ravel(), xi0.ravel(), eta0.ravel(),
                         0.0, -backward_horizon, dt)
        fz = res.first_zero.reshape(len(alpha_vals), n_b)
        for i, a in enumerate(alpha_vals):
            scanned.append(float(a))
            row = fz[i]
            if np.any(np.isfinite(row)):
                j = int(np.nanargmax(row))
                reports.append(ShockReport(
                    alpha=float(a), status="backward",
                    backward_shock_time=float(row[j]),
                    backward_seed_q=float(q0[i, j] % 1.0),
                ))
                hit = True
            else:
                reports.append(ShockReport(alpha=float(a),
                                           status="no_shock_within_horizon"))
        return hit

    found = scan(alphas, cf.q0, cf.p0, cf.xi0, cf.eta0)
    lo, hi = float(alphas.min()), float(alphas.max())
    width = max(hi - lo, spacing)
    while not found and max(abs(lo), abs(hi)) < alpha_cap:
        new_lo = np.arange(lo - width, lo - 0.5 * spacing, spacing)
        new_hi = np.arange(hi + spacing, hi + width + 0.5 * spacing, spacing)
        fresh = np.concatenate([new_lo, new_hi])
        fresh = fresh[np.abs(fresh) <= alpha_cap]
        if len(fresh) == 0:
            break
        q0, p0, xi0, eta0, _ = _backward_leaves(pot, fresh, betas, cf.t_cutoff, dt)
        found = scan(fresh, q0, p0, xi0, eta0)
        lo, hi = lo - width, hi + width
        width *= widen_factor
    reports.sort(key=lambda r: r.alpha)
    return BackwardScanResult(
        reports=reports, found=found,
        status="found" if found else "no_backward_shock_within_horizon",
        alphas_scanned=np.array(sorted(scanned)),
    )


def initial_data_rows(cf: ConstructedFoliation):
    for i, a in enumerate(cf.alpha_grid):
        for j in range(len(cf.beta_grid)):
            yield (float(a), cf.q0[i, j], cf.p0[i, j])


INITIAL_DATA_CSV_HEADER = ["alpha", "q0", "p0"]
