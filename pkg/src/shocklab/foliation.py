"""Foliated initial data: shock scans, the slope field, and its identities.

Initial data comes as a one-parameter family of graphs

    phi(alpha, q) = alpha + psi(q) + eps * sin(alpha) * chi(q)

with psi, chi finite Fourier sums, so ordering (d phi / d alpha > 0) is
checkable analytically.  Evolving every leaf under the characteristic
flow keeps the family a foliation until some leaf develops a conjugate
point; the slope field omega(p, q, t) is the q-slope of the leaf passing
through (p, q) at time t.

The module certifies, at finite resolution, the two identities that the
slope field satisfies while the foliation persists: the transport PDE

    omega_t + p omega_q - u_q omega_p + omega^2 + u_qq = 0

and its q-averaged divergence form

    -d/dt (int omega dq) + d/dp (int omega u_q dq) = int omega^2 dq.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .characteristics import flow_batch, integrate_state
from .errors import CoverageGap, FoliationBroken, MonotonicityViolation
from .fourier import FourierSeries1D

ALPHA_SOLVE_TOL = 1e-13
LEAF_P_TOL = 1e-9


@dataclass(frozen=True)
class FoliationSpec:
    """Parametric leaf family with analytically checkable ordering."""

    alpha_grid: tuple[float, ...]
    base_shift: FourierSeries1D = FourierSeries1D()
    alpha_coupling: FourierSeries1D | None = None
    coupling_eps: float = 0.0
    q_grid_size: int = 32

    def __post_init__(self):
        if len(self.alpha_grid) == 0:
            raise ValueError("alpha_grid must not be empty")
        if self.q_grid_size < 2:
            raise ValueError("q_grid_size must be at least 2")
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))

    def phi(self, alpha, q):
        out = np.asarray(alpha, dtype=float) + self.base_shift.value(q)
        if self.alpha_coupling is not None and self.coupling_eps != 0.0:
            out = out + self.coupling_eps * np.sin(alpha) * self.alpha_coupling.value(q)
        return out

    def dphi_dalpha(self, alpha, q):
        out = np.ones(np.broadcast(np.asarray(alpha), np.asarray(q)).shape)
        if self.alpha_coupling is not None and self.coupling_eps != 0.0:
            out = out + self.coupling_eps * np.cos(alpha) * self.alpha_coupling.value(q)
        return out

    def dphi_dq(self, alpha, q):
        out = self.base_shift.derivative(q) * np.ones(
            np.broadcast(np.asarray(alpha), np.asarray(q)).shape
        )
        if self.alpha_coupling is not None and self.coupling_eps != 0.0:
            out = out + self.coupling_eps * np.sin(alpha) * self.alpha_coupling.derivative(q)
        return out

    def seeds(self) -> np.ndarray:
        return np.arange(self.q_grid_size) / self.q_grid_size

    def to_dict(self) -> dict:
        return {
            "base_shift": self.base_shift.to_dict(),
            "alpha_coupling": None
            if self.alpha_coupling is None
            else self.alpha_coupling.to_dict(),
            "coupling_eps": self.coupling_eps,
            "alpha_grid": list(self.alpha_grid),
            "q_grid_size": self.q_grid_size,
        }


@dataclass
class ValidationReport:
    ok: bool
    min_dphi_dalpha: float
    argmin_alpha: float
    argmin_q: float
    periodic_in_q: bool = True  # structural: Fourier representation


def validate(spec: FoliationSpec, n_alpha_scan: int = 721, n_q_scan: int = 512) -> ValidationReport:
    """Certify the ordering condition d(phi)/d(alpha) > 0 on a dense grid.

    The alpha dependence enters only through sin/cos, so scanning one
    2*pi period of alpha (union the declared leaf labels) is exhaustive
    up to grid resolution.  Raises MonotonicityViolation at the first
    offending sample.
    """
    q = np.arange(n_q_scan) / n_q_scan
    alphas = np.asarray(spec.alpha_grid)
    if spec.alpha_coupling is not None and spec.coupling_eps != 0.0:
        alphas = np.concatenate([alphas, np.linspace(0.0, 2.0 * np.pi, n_alpha_scan)])
    best = np.inf
    arg = (float(alphas[0]), 0.0)
    for a in alphas:
        vals = spec.dphi_dalpha(a, q)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best = float(vals[i])
            arg = (float(a), float(q[i]))
    if best <= 0.0:
        raise MonotonicityViolation(arg[0], arg[1], best)
    return ValidationReport(ok=True, min_dphi_dalpha=best,
                            argmin_alpha=arg[0], argmin_q=arg[1])


@dataclass
class ShockReport:
    """Per-leaf verdict of a bidirectional conjugate-point scan."""

    alpha: float
    status: str  # no_shock_within_horizon | forward | backward | both
    forward_shock_time: float | None = None
    backward_shock_time: float | None = None
    forward_seed_q: float | None = None
    backward_seed_q: float | None = None

    @property
    def shock_seed_q(self) -> float | None:
        """Seed of the earliest focusing characteristic over both directions."""
        tf = self.forward_shock_time
        tb = self.backward_shock_time
        if tf is None and tb is None:
            return None
        if tb is None or (tf is not None and tf <= -tb):
            return self.forward_seed_q
        return self.backward_seed_q


def shock_scan(spec: FoliationSpec, pot, horizon: float, dt: float,
               forward: bool = True, backward: bool = True) -> list[ShockReport]:
    """Scan every leaf for conjugate points within +/- horizon.

    Each seed q0 on a leaf starts the characteristic (q0, phi(alpha, q0))
    with variational seed (1, d phi/d q), i.e. the tangent of the leaf
    graph.  The leaf's shock time is the first conjugate point over its
    seed grid: the minimum forward, the maximum (closest to zero)
    backward.  A finite seed/leaf grid demonstrates shocks, it cannot
    exhaust them; absence is reported as such, never as a proof.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    alphas = np.asarray(spec.alpha_grid)
    seeds = spec.seeds()
    n_a, n_s = len(alphas), len(seeds)
    a_flat = np.repeat(alphas, n_s)
    q_flat = np.tile(seeds, n_a)
    p_flat = spec.phi(a_flat, q_flat)
    eta_flat = spec.dphi_dq(a_flat, q_flat)

    t_fwd = np.full(n_a * n_s, np.nan)
    t_bwd = np.full(n_a * n_s, np.nan)
    if forward:
        t_fwd = flow_batch(pot, q_flat, p_flat, 1.0, eta_flat, 0.0, horizon, dt).first_zero
    if backward:
        t_bwd = flow_batch(pot, q_flat, p_flat, 1.0, eta_flat, 0.0, -horizon, dt).first_zero

    reports = []
    for i, a in enumerate(alphas):
        fw = t_fwd[i * n_s:(i + 1) * n_s]
        bw = t_bwd[i * n_s:(i + 1) * n_s]
        tf = ts_f = tb = ts_b = None
        if np.any(np.isfinite(fw)):
            j = int(np.nanargmin(fw))
            tf, ts_f = float(fw[j]), float(seeds[j])
        if np.any(np.isfinite(bw)):
            j = int(np.nanargmax(bw))  # first conjugate point met going backward
            tb, ts_b = float(bw[j]), float(seeds[j])
        if tf is not None and tb is not None:
            status = "both"
        elif tf is not None:
            status = "forward"
        elif tb is not None:
            status = "backward"
        else:
            status = "no_shock_within_horizon"
        reports.append(ShockReport(alpha=float(a), status=status,
                                   forward_shock_time=tf, backward_shock_time=tb,
                                   forward_seed_q=ts_f, backward_seed_q=ts_b))
    return reports


def shock_reports_to_rows(reports: list[ShockReport]):
    for r in reports:
        yield (r.alpha, r.status, r.forward_shock_time, r.backward_shock_time,
               r.shock_seed_q)


SHOCK_CSV_HEADER = ["alpha", "status", "t_forward", "t_backward", "q_seed"]


@dataclass
class OmegaGrid:
    """Sampled slope field omega(p, q, t) with a coverage mask."""

    t: float
    p_grid: np.ndarray
    q_grid: np.ndarray
    omega: np.ndarray  # (n_p, n_q)
    mask: np.ndarray   # True where a leaf inside the label range was found
    alpha: np.ndarray  # label of the leaf through each grid point


def _solve_alpha(spec: FoliationSpec, q0, p0):
    """Leaf label through the initial point (q0, p0): monotone scalar solve."""
    target = p0 - spec.base_shift.value(q0)
    if spec.alpha_coupling is None or spec.coupling_eps == 0.0:
        return target
    chi = spec.alpha_coupling.value(q0)
    alpha = target.copy()
    for _ in range(100):
        f = alpha + spec.coupling_eps * np.sin(alpha) * chi - target
        if np.max(np.abs(f)) < ALPHA_SOLVE_TOL:
            break
        fp = 1.0 + spec.coupling_eps * np.cos(alpha) * chi
        alpha = alpha - f / fp
    return alpha


def _precheck_window(spec, pot, t_lo, t_hi, dt):
    """Raise FoliationBroken if any leaf focuses inside [t_lo, t_hi]."""
    if t_hi > 0.0:
        for r in shock_scan(spec, pot, t_hi, dt, forward=True, backward=False):
            if r.forward_shock_time is not None:
                raise FoliationBroken(
                    f"leaf alpha={r.alpha:.6g} focuses at t={r.forward_shock_time:.6g} "
                    f"inside the requested window"
                )
    if t_lo < 0.0:
        for r in shock_scan(spec, pot, -t_lo, dt, forward=False, backward=True):
            if r.backward_shock_time is not None:
                raise FoliationBroken(
                    f"leaf alpha={r.alpha:.6g} focuses at t={r.backward_shock_time:.6g} "
                    f"inside the requested window"
                )


def build_omega_grid(spec: FoliationSpec, pot, t: float,
                     p_grid: np.ndarray, q_grid: np.ndarray, dt: float,
                     precheck: bool = True) -> OmegaGrid:
    """Evaluate the slope field on a (p, q) grid at time t.

    Each grid point is pulled back along its characteristic to time 0,
    where the leaf label is recovered by the monotone solve of
    phi(alpha, q0) = p0; the leaf tangent (1, phi_q) is then pushed
    forward through the transported variational frame, giving the slope
    eta/xi at the grid point exactly (up to integrator error), with no
    between-leaf interpolation.  Points whose label falls outside the
    declared alpha range are masked out (coverage gap).
    """
    p_grid = np.asarray(p_grid, dtype=float)
    q_grid = np.asarray(q_grid, dtype=float)
    if precheck and t != 0.0:
        _precheck_window(spec, pot, min(0.0, t), max(0.0, t), dt)

    pp, qq = np.meshgrid(p_grid, q_grid, indexing="ij")
    pf, qf = pp.ravel(), qq.ravel()

    if t == 0.0:
        alpha = _solve_alpha(spec, qf, pf)
        omega = spec.dphi_dq(alpha, qf)
    else:
        y0 = np.array([
            qf, pf,
            np.ones_like(qf), np.zeros_like(qf),   # d/d(q at time t)
            np.zeros_like(qf), np.ones_like(qf),   # d/d(p at time t)
        ])
        y = integrate_state(pot, y0, t, 0.0, dt)
        q0, p0 = y[0], y[1]
        xa, ea, xb, eb = y[2], y[3], y[4], y[5]
        alpha = _solve_alpha(spec, q0, p0)
        phi_q = spec.dphi_dq(alpha, q0)
        # backward frame B maps tangents at time t to tangents at time 0;
        # solve B v = (1, phi_q) for the evolved leaf tangent v.
        det = xa * eb - xb * ea
        v_q = (eb - xb * phi_q) / det
        v_p = (xa * phi_q - ea) / det
        omega = np.where(v_q != 0.0, v_p / np.where(v_q != 0.0, v_q, 1.0), np.nan)
        bad_fold = v_q <= 0.0
    lo, hi = min(spec.alpha_grid), max(spec.alpha_grid)
    mask = (alpha >= lo - 1e-12) & (alpha <= hi + 1e-12)
    if t != 0.0 and np.any(mask & bad_fold):
        i = int(np.nonzero(mask & bad_fold)[0][0])
        raise FoliationBroken(
            f"leaf tangent folded at p={pf[i]:.6g}, q={qf[i]:.6g}, t={t:.6g}"
        )
    shape = (len(p_grid), len(q_grid))
    return OmegaGrid(
        t=t, p_grid=p_grid, q_grid=q_grid,
        omega=np.where(mask, omega, np.nan).reshape(shape),
        mask=mask.reshape(shape),
        alpha=np.where(mask, alpha, np.nan).reshape(shape),
    )


def leaf_momentum(spec: FoliationSpec, pot, alpha: float, q: float, t: float,
                  dt: float, p_bracket: tuple[float, float] | None = None) -> float:
    """Momentum of leaf `alpha` above position q at time t.

    Inverts the pullback label map p -> alpha(p, q, t) by bisection; the
    map is increasing in p while the foliation persists.  Used by tests
    to cross-check omega against finite differences of leaf positions.
    """
    def label(p):
        grid = build_omega_grid(
            spec, pot, t, np.array([p]), np.array([q]), dt, precheck=False
        )
        return float(grid.alpha[0, 0]) if grid.mask[0, 0] else np.nan

    if p_bracket is None:
        lo, hi = min(spec.alpha_grid), max(spec.alpha_grid)
        width = max(1.0, hi - lo)
        p_bracket = (lo - width, hi + width)
    a, b = p_bracket
    fa = label(a) - alpha
    fb = label(b) - alpha
    if not (np.isfinite(fa) and np.isfinite(fb)) or fa * fb > 0:
        raise CoverageGap(f"leaf alpha={alpha:.6g} not bracketed over {p_bracket}")
    while b - a > LEAF_P_TOL:
        m = 0.5 * (a + b)
        fm = label(m) - alpha
        if fa * fm <= 0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


@dataclass
class FluxField:
    """q-averaged flux data of the slope field on a (p, t) grid."""

    p_grid: np.ndarray
    t_grid: np.ndarray
    v1: np.ndarray       # -int omega dq
    v2: np.ndarray       # int omega u_q dq
    source: np.ndarray   # int omega^2 dq
    residual: np.ndarray  # divergence defect, nan on the boundary ring
    mask: np.ndarray


@dataclass
class DivergenceReport:
    max_residual: float
    n_interior: int


def _require_uniform(grid: np.ndarray, name: str) -> float:
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        raise ValueError(f"{name} needs at least two points")
    d = np.diff(grid)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ValueError(f"{name} must be uniform")
    return float(d[0])


def _require_simpson_q(q_grid: np.ndarray) -> None:
    _require_uniform(q_grid, "q_grid")
    if len(q_grid) % 2 == 0:
        raise ValueError("q_grid needs an odd point count for composite Simpson")
    if abs(q_grid[0]) > 1e-12 or abs(q_grid[-1] - 1.0) > 1e-12:
        raise ValueError("q_grid must span [0, 1]")


def divergence_check(spec: FoliationSpec, pot, p_grid, t_grid, q_grid, dt,
                     precheck: bool = True) -> tuple[FluxField, DivergenceReport]:
    """Certify the q-averaged divergence identity on a (p, t) grid.

    Quadratures are composite Simpson in q; the outer derivatives are
    central differences, with the sign pairing -d/dt on int(omega) and
    +d/dp on int(omega u_q) taken verbatim.  The residual converges at
    second order in the (p, t) spacings.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    q_grid = np.asarray(q_grid, dtype=float)
    dp = _require_uniform(p_grid, "p_grid")
    dtg = _require_uniform(t_grid, "t_grid")
    _require_simpson_q(q_grid)

    if precheck:
        _precheck_window(spec, pot, min(0.0, float(t_grid.min())),
                         max(0.0, float(t_grid.max())), dt)

    n_p, n_t = len(p_grid), len(t_grid)
    i1 = np.zeros((n_p, n_t))      # int omega dq
    i2 = np.zeros((n_p, n_t))      # int omega u_q dq
    src = np.zeros((n_p, n_t))
    ok = np.zeros((n_p, n_t), dtype=bool)
    for j, t in enumerate(t_grid):
        grid = build_omega_grid(spec, pot, float(t), p_grid, q_grid, dt, precheck=False)
        uq = pot.eval_force(q_grid, float(t))
        row_ok = np.all(grid.mask, axis=1)
        w = grid.omega
        i1[:, j] = simpson(w, x=q_grid, axis=1)
        i2[:, j] = simpson(w * uq, x=q_grid, axis=1)
        src[:, j] = simpson(w * w, x=q_grid, axis=1)
        ok[:, j] = row_ok

    residual = np.full((n_p, n_t), np.nan)
    interior_ok = (
        ok[1:-1, 1:-1] & ok[:-2, 1:-1] & ok[2:, 1:-1] & ok[1:-1, :-2] & ok[1:-1, 2:]
    )
    d_dt = (i1[1:-1, 2:] - i1[1:-1, :-2]) / (2.0 * dtg)
    d_dp = (i2[2:, 1:-1] - i2[:-2, 1:-1]) / (2.0 * dp)
    vals = np.abs(-d_dt + d_dp - src[1:-1, 1:-1])
    residual[1:-1, 1:-1] = np.where(interior_ok, vals, np.nan)

    n_interior = int(np.sum(interior_ok))
    if n_interior == 0:
        raise CoverageGap("no interior (p, t) point has full leaf coverage")
    flux = FluxField(p_grid=p_grid, t_grid=t_grid, v1=-i1, v2=i2, source=src,
                     residual=residual, mask=ok)
    report = DivergenceReport(
        max_residual=float(np.nanmax(residual)), n_interior=n_interior
    )
    return flux, report


def flux_field_rows(flux: FluxField):
    for i, p in enumerate(flux.p_grid):
        for j, t in enumerate(flux.t_grid):
            yield (p, t, flux.v1[i, j], flux.v2[i, j], flux.source[i, j],
                   flux.residual[i, j])


FLUX_CSV_HEADER = ["p", "t", "V1", "V2", "source", "residual"]


@dataclass
class ConvergenceStudy:
    """Residuals of an identity under synchronized grid halvings."""

    h: list[float]
    max_residual: list[float]
    orders: list[float]

    @property
    def fitted_order(self) -> float:
        x = np.log2(np.asarray(self.h))
        y = np.log2(np.asarray(self.max_residual))
        return float(np.polyfit(x, y, 1)[0])


def divergence_convergence(spec: FoliationSpec, pot, p_window, t_window,
                           q_grid, dt, levels: int = 3,
                           precheck: bool = True) -> tuple[ConvergenceStudy, FluxField]:
    """Run divergence_check on `levels` grids, halving dp and dt together."""
    p_lo, p_hi, n_p0 = p_window
    t_lo, t_hi, n_t0 = t_window
    if precheck:
        _precheck_window(spec, pot, min(0.0, t_lo), max(0.0, t_hi), dt)
    hs, resids = [], []
    flux = None
    for lev in range(levels):
        n_p = (n_p0 - 1) * 2 ** lev + 1
        n_t = (n_t0 - 1) * 2 ** lev + 1
        p_grid = np.linspace(p_lo, p_hi, n_p)
        t_grid = np.linspace(t_lo, t_hi, n_t)
        flux, rep = divergence_check(spec, pot, p_grid, t_grid, q_grid, dt,
                                     precheck=False)
        hs.append(float(t_grid[1] - t_grid[0]))
        resids.append(rep.max_residual)
    orders = [float(np.log2(resids[i] / resids[i + 1])) for i in range(len(resids) - 1)]
    return ConvergenceStudy(h=hs, max_residual=resids, orders=orders), flux


@dataclass
class PdeResidualReport:
    max_residual: float
    h: float
    n_valid: int


def circle_grid(n: int) -> np.ndarray:
    """n uniform points on [0, 1), endpoint excluded (periodic stencils)."""
    return np.arange(n) / n


def pde_residual(spec: FoliationSpec, pot, t: float, p_grid, n_q: int,
                 h_t: float, dt: float, precheck: bool = True,
                 return_grid: bool = False):
    """Finite-difference residual of the slope-field transport PDE at time t.

    Needs slope grids at t-h, t, t+h; q-derivatives use periodic central
    differences on an endpoint-free circle grid, p-derivatives central
    differences on the interior of p_grid.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    dp = _require_uniform(p_grid, "p_grid")
    q_grid = circle_grid(n_q)
    dq = 1.0 / n_q
    if precheck:
        _precheck_window(spec, pot, min(0.0, t - h_t), max(0.0, t + h_t), dt)

    grids = {
        s: build_omega_grid(spec, pot, t + s * h_t, p_grid, q_grid, dt, precheck=False)
        for s in (-1, 0, 1)
    }
    w = grids[0].omega
    w_t = (grids[1].omega - grids[-1].omega) / (2.0 * h_t)
    w_q = (np.roll(w, -1, axis=1) - np.roll(w, 1, axis=1)) / (2.0 * dq)
    w_p = np.full_like(w, np.nan)
    w_p[1:-1, :] = (w[2:, :] - w[:-2, :]) / (2.0 * dp)

    uq = pot.eval_force(q_grid, t)
    uqq = pot.eval_u_qq(q_grid, t)
    res = w_t + p_grid[:, None] * w_q - uq * w_p + w * w + uqq

    valid = grids[0].mask & grids[1].mask & grids[-1].mask
    valid &= np.roll(valid, 1, axis=1) & np.roll(valid, -1, axis=1)
    valid[0, :] = valid[-1, :] = False
    n_valid = int(np.sum(valid))
    if n_valid == 0:
        raise CoverageGap("no grid point has the full PDE stencil covered")
    report = PdeResidualReport(
        max_residual=float(np.nanmax(np.abs(res[valid]))), h=h_t, n_valid=n_valid
    )
    if return_grid:
        return report, grids[0], np.where(valid, res, np.nan)
    return report


def pde_residual_convergence(spec: FoliationSpec, pot, t: float, p_window,
                             n_q0: int, h0: float, dt: float,
                             levels: int = 3, precheck: bool = True) -> ConvergenceStudy:
    """Halve the FD steps (dp, dq, h_t) together and measure the order."""
    p_lo, p_hi, n_p0 = p_window
    if precheck:
        _precheck_window(spec, pot, min(0.0, t - h0), max(0.0, t + h0), dt)
    hs, resids = [], []
    for lev in range(levels):
        n_p = (n_p0 - 1) * 2 ** lev + 1
        rep = pde_residual(
            spec, pot, t, np.linspace(p_lo, p_hi, n_p), n_q0 * 2 ** lev,
            h0 / 2 ** lev, dt, precheck=False,
        )
        hs.append(rep.h)
        resids.append(rep.max_residual)
    orders = [float(np.log2(resids[i] / resids[i + 1])) for i in range(len(resids) - 1)]
    return ConvergenceStudy(h=hs, max_residual=resids, orders=orders)
