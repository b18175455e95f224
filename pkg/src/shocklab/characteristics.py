"""Characteristic flow of the forced Burgers equation with variational data.

The characteristic system is the Newton flow

    dq/dt = p,        dp/dt = -u_q(q, t),

carried together with one or more variational pairs (xi, eta) obeying
the linearized equations

    dxi/dt = eta,     deta/dt = -u_qq(q, t) * xi.

A zero of xi is a conjugate point of the characteristic: the leaf it
belongs to folds there, which is exactly when the transported Burgers
solution forms a shock.  Detection therefore runs on the linear (xi,
eta) system, which passes smoothly through zero, instead of the slope
variable eta/xi, which blows up.

Integration is classical fixed-step RK4 (bit-reproducible for a fixed
dt) with the final step shortened to land on t_end exactly.  Positions
are kept unwrapped on the real line; reduce mod 1 only for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

XI_EVENT_TOL = 1e-10   # bisection bracket width for conjugate-point refinement
XI_OMEGA_CUTOFF = 1e-12  # below this |xi| the slope eta/xi is not reported


def _rhs(pot, t, y):
    """Right side for state rows (q, p[, xi_i, eta_i ...])."""
    out = np.empty_like(y)
    out[0] = y[1]
    out[1] = -pot.eval_force(y[0], t)
    if y.shape[0] > 2:
        cur = pot.eval_u_qq(y[0], t)
        for j in range(2, y.shape[0], 2):
            out[j] = y[j + 1]
            out[j + 1] = -cur * y[j]
    return out


def _rk4_step(pot, t, y, h):
    """One RK4 step; t and h may be per-column arrays."""
    k1 = _rhs(pot, t, y)
    k2 = _rhs(pot, t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = _rhs(pot, t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = _rhs(pot, t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _step_times(t0: float, t_end: float, dt: float) -> np.ndarray:
    """Step endpoints from t0 to t_end: full dt steps, last one shortened.

    The last time is exactly t_end; intermediate times are computed by
    multiplication, not accumulation, so runs are bit-reproducible.
    """
    sign = 1.0 if t_end > t0 else -1.0
    span = abs(t_end - t0)
    n_full = int(np.floor(span / dt + 1e-12))
    rem = span - n_full * dt
    times = t0 + sign * dt * np.arange(1, n_full + 1)
    if rem > 1e-12 * max(1.0, span):
        times = np.append(times, t_end)
    elif n_full > 0:
        times[-1] = t_end
    else:
        times = np.array([t_end])
    return times


def _refine_xi_zero(pot, t_lo, y_lo, h_bracket):
    """Bisect the first xi zero inside per-column brackets.

    t_lo, h_bracket: arrays (m,); y_lo: array (rows, m) holding the state
    at the bracket start, whose xi (row 2) has the sign to flee from.
    Evaluation inside the bracket is a single dense RK4 step, which is
    accurate to the integrator's own order on these sub-dt intervals.
    """
    a = np.zeros_like(h_bracket)
    b = h_bracket.copy()
    sign_lo = np.sign(y_lo[2])
    while np.max(np.abs(b - a)) > XI_EVENT_TOL:
        m = 0.5 * (a + b)
        xi_m = _rk4_step(pot, t_lo, y_lo, m)[2]
        same = np.sign(xi_m) == sign_lo
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    return t_lo + 0.5 * (a + b)


@dataclass
class BatchFlow:
    """Final state of a batched integration plus conjugate-point data."""

    t: float
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    extra: np.ndarray | None      # remaining variational rows, if any
    first_zero: np.ndarray        # refined time of first xi zero, nan if none
    min_xi: np.ndarray            # sampled minimum of xi along the path
    sample_t: np.ndarray | None = None
    samples: np.ndarray | None = None  # (rows, n_samples, n) when recorded


def flow_batch(pot, q0, p0, xi0, eta0, t0, t_end, dt,
               extra_pairs=None, record_every: int = 0) -> BatchFlow:
    """Integrate a batch of characteristics from t0 to t_end.

    extra_pairs: optional list of (xi, eta) array pairs integrated along
    the same base trajectories (used to transport a full variational
    frame).  Events are tracked on the first pair only.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_end == t0:
        raise ValueError("t_end must differ from the start time")
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    rows = [q0, np.broadcast_to(np.asarray(p0, dtype=float), q0.shape),
            np.broadcast_to(np.asarray(xi0, dtype=float), q0.shape),
            np.broadcast_to(np.asarray(eta0, dtype=float), q0.shape)]
    for pair in extra_pairs or []:
        rows.append(np.broadcast_to(np.asarray(pair[0], dtype=float), q0.shape))
        rows.append(np.broadcast_to(np.asarray(pair[1], dtype=float), q0.shape))
    y = np.array(rows, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("start state must be finite")

    n = y.shape[1]
    times = _step_times(t0, t_end, dt)

    found = np.zeros(n, dtype=bool)
    bracket_t = np.zeros(n)
    bracket_h = np.zeros(n)
    bracket_y = np.zeros((4, n))
    min_xi = y[2].copy()

    sample_t: list[float] = []
    samples: list[np.ndarray] = []
    if record_every:
        sample_t.append(t0)
        samples.append(y.copy())

    t_prev = t0
    total_steps = len(times)
    for i, t_next in enumerate(times):
        h = t_next - t_prev
        y_new = _rk4_step(pot, t_prev, y, h)
        crossed = ((y[2] * y_new[2] < 0.0) | (y_new[2] == 0.0)) & ~found
        if np.any(crossed):
            bracket_t[crossed] = t_prev
            bracket_h[crossed] = h
            bracket_y[:, crossed] = y[:4, crossed]
            found |= crossed
        y = y_new
        np.minimum(min_xi, y[2], out=min_xi)
        t_prev = t_next
        if record_every and ((i + 1) % record_every == 0 or i + 1 == total_steps):
            sample_t.append(t_prev)
            samples.append(y.copy())

    first_zero = np.full(n, np.nan)
    if np.any(found):
        idx = np.nonzero(found)[0]
        exact = bracket_y[2, idx] == 0.0  # crossing landed on a sample
        refined = _refine_xi_zero(
            pot, bracket_t[idx], bracket_y[:, idx], bracket_h[idx]
        )
        first_zero[idx] = np.where(exact, bracket_t[idx], refined)

    return BatchFlow(
        t=t_end,
        q=y[0].copy(),
        p=y[1].copy(),
        xi=y[2].copy(),
        eta=y[3].copy(),
        extra=y[4:].copy() if y.shape[0] > 4 else None,
        first_zero=first_zero,
        min_xi=min_xi,
        sample_t=np.array(sample_t) if record_every else None,
        samples=np.stack(samples, axis=1) if record_every else None,
    )


def integrate_state(pot, y0: np.ndarray, t0: float, t_end: float, dt: float) -> np.ndarray:
    """Plain batched RK4 on state rows, no event tracking or recording."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_end == t0:
        return np.asarray(y0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    t_prev = t0
    for t_next in _step_times(t0, t_end, dt):
        y = _rk4_step(pot, t_prev, y, t_next - t_prev)
        t_prev = t_next
    return y


@dataclass(frozen=True)
class CharPoint:
    """Characteristic state with its variational pair."""

    q: float
    p: float
    xi: float = 1.0
    eta: float = 0.0
    t: float = 0.0


@dataclass
class Trajectory:
    """Sampled characteristic with refined conjugate-point events."""

    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    dt: float
    events: list[tuple[float, str]] = field(default_factory=list)

    def point(self, i: int) -> CharPoint:
        return CharPoint(q=float(self.q[i]), p=float(self.p[i]),
                         xi=float(self.xi[i]), eta=float(self.eta[i]),
                         t=float(self.t[i]))

    @property
    def start(self) -> CharPoint:
        return self.point(0)

    @property
    def end(self) -> CharPoint:
        return self.point(-1)

    def to_csv(self, path) -> None:
        from .reporting import write_csv

        write_csv(path, ["t", "q", "p", "xi", "eta"],
                  zip(self.t, self.q, self.p, self.xi, self.eta))


def flow(pot, start: CharPoint, t_end: float, dt: float) -> Trajectory:
    """Integrate a single characteristic, recording every step.

    Backward integration happens when t_end < start.t.  All xi sign
    changes along the path are refined by bisection and stored as
    (time, "xi_zero") events in traversal order.
    """
    for v in (start.q, start.p, start.xi, start.eta, start.t):
        if not np.isfinite(v):
            raise ValueError("start state must be finite")
    res = flow_batch(pot, [start.q], [start.p], [start.xi], [start.eta],
                     start.t, t_end, dt, record_every=1)
    traj = Trajectory(
        t=res.sample_t,
        q=res.samples[0, :, 0],
        p=res.samples[1, :, 0],
        xi=res.samples[2, :, 0],
        eta=res.samples[3, :, 0],
        dt=dt,
    )
    # refine every sign change, not just the first
    xi = traj.xi
    for i in np.nonzero((xi[:-1] * xi[1:] < 0.0) | (xi[1:] == 0.0))[0]:
        if xi[i + 1] == 0.0:
            traj.events.append((float(traj.t[i + 1]), "xi_zero"))
            continue
        y_lo = np.array([[traj.q[i]], [traj.p[i]], [xi[i]], [traj.eta[i]]])
        t_ref = _refine_xi_zero(
            pot,
            np.array([traj.t[i]]),
            y_lo,
            np.array([traj.t[i + 1] - traj.t[i]]),
        )
        traj.events.append((float(t_ref[0]), "xi_zero"))
    return traj


def first_xi_zero(traj: Trajectory) -> float | None:
    """Time of the first conjugate point along the trajectory, if any."""
    for t, kind in traj.events:
        if kind == "xi_zero":
            return t
    return None


@dataclass
class SlopeSamples:
    """eta/xi along a trajectory, with near-conjugate samples flagged."""

    t: np.ndarray
    omega: np.ndarray
    omitted_t: np.ndarray


def omega_along(traj: Trajectory) -> SlopeSamples:
    """Slope variable eta/xi at each sample where xi is safely nonzero.

    Along a characteristic the slope obeys the Riccati equation
    d(omega)/dt = -omega^2 - u_qq, so it diverges exactly where xi
    vanishes; those samples are omitted and reported separately.
    """
    ok = np.abs(traj.xi) > XI_OMEGA_CUTOFF
    return SlopeSamples(
        t=traj.t[ok],
        omega=traj.eta[ok] / traj.xi[ok],
        omitted_t=traj.t[~ok],
    )
