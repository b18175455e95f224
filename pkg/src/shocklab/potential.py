"""Spatially periodic forcing potentials u(q, t) with analytic derivatives.

A potential is a finite Fourier sum in q whose modes are modulated by
analytic time envelopes.  This keeps u, the force u_q, the curvature
u_qq, and the force energy integral exact, so tests never have to
disentangle model error from quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


def _smoothstep(x):
    """Quintic ramp: 0 below 0, 1 above 1, C^2 at both junctions."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


@dataclass(frozen=True)
class ConstantEnvelope:
    kind = "constant"

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones(t.shape)
        return out if out.ndim else 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class GaussianEnvelope:
    center: float = 0.0
    width: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if self.width <= 0.0:
            raise ValueError("gaussian envelope width must be positive")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(-0.5 * ((t - self.center) / self.width) ** 2)
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "center": self.center, "width": self.width}


@dataclass(frozen=True)
class CompactBumpEnvelope:
    """C^2 bump supported on [0, t_end].

    Quintic ramps of width `taper` at both ends of the support and a
    unit plateau in between; identically zero outside, so the forcing
    switches off exactly at t_end.
    """

    t_end: float
    taper: float | None = None

    kind = "compact_bump"

    def __post_init__(self):
        if self.t_end <= 0.0:
            raise ValueError("compact bump needs t_end > 0")
        taper = self.t_end / 4.0 if self.taper is None else self.taper
        if not 0.0 < taper <= self.t_end / 2.0:
            raise ValueError("taper must lie in (0, t_end/2]")
        object.__setattr__(self, "taper", float(taper))

    def value(self, t):
        t = np.asarray(t, dtype=float)
        up = _smoothstep(t / self.taper)
        down = _smoothstep((self.t_end - t) / self.taper)
        out = np.where((t <= 0.0) | (t >= self.t_end), 0.0, np.minimum(up, down))
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t_end": self.t_end, "taper": self.taper}


@dataclass(frozen=True)
class PeriodicEnvelope:
    """cos(2*pi*t / period); makes the forcing periodic in both q and t."""

    period: float = 1.0
    kind = "periodic"

    def __post_init__(self):
        if self.period <= 0.0:
            raise ValueError("periodic envelope period must be positive")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.cos(TWO_PI * t / self.period)
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "period": self.period}


Envelope = ConstantEnvelope | GaussianEnvelope | CompactBumpEnvelope | PeriodicEnvelope

_ENVELOPE_KINDS = {
    "constant": ConstantEnvelope,
    "gaussian": GaussianEnvelope,
    "compact_bump": CompactBumpEnvelope,
    "periodic": PeriodicEnvelope,
}


def envelope_from_dict(obj: dict) -> Envelope:
    if "kind" not in obj:
        raise ValueError("envelope needs a 'kind' key")
    kind = obj["kind"]
    if kind not in _ENVELOPE_KINDS:
        raise ValueError(f"unknown envelope kind {kind!r}")
    kwargs = {k: v for k, v in obj.items() if k != "kind"}
    allowed = {
        "constant": set(),
        "gaussian": {"center", "width"},
        "compact_bump": {"t_end", "taper"},
        "periodic": {"period"},
    }[kind]
    unknown = set(kwargs) - allowed
    if unknown:
        raise ValueError(f"unknown {kind} envelope keys: {sorted(unknown)}")
    return _ENVELOPE_KINDS[kind](**kwargs)


@dataclass(frozen=True)
class Mode:
    """One Fourier mode of the potential, tied to a named envelope."""

    k: int
    cos_amp: float = 0.0
    sin_amp: float = 0.0
    envelope: str = "constant"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"wavenumber must be a positive integer, got {self.k!r}")


@dataclass(frozen=True)
class PotentialSpec:
    """u(q,t) = sum over modes of env(t) * (A cos(2*pi*k*q) + B sin(2*pi*k*q)).

    1-periodicity in q is structural.  The envelope name "constant" is
    predefined; other names must appear in `envelopes`.
    """

    modes: tuple[Mode, ...] = ()
    envelopes: dict = field(default_factory=dict)

    def __post_init__(self):
        envs = {"constant": ConstantEnvelope(), **self.envelopes}
        object.__setattr__(self, "envelopes", envs)
        for m in self.modes:
            if m.envelope not in envs:
                raise ValueError(f"mode references undeclared envelope {m.envelope!r}")

    # -- evaluation ---------------------------------------------------

    def eval_u(self, q, t):
        """Potential value; q may be an array, t a scalar or array of like shape."""
        q = np.asarray(q, dtype=float)
        out = np.zeros(np.broadcast(q, np.asarray(t)).shape)
        for m in self.modes:
            w = TWO_PI * m.k
            env = self.envelopes[m.envelope].value(t)
            out += env * (m.cos_amp * np.cos(w * q) + m.sin_amp * np.sin(w * q))
        return out if out.ndim else float(out)

    def eval_force(self, q, t):
        """The force u_q entering the momentum equation."""
        q = np.asarray(q, dtype=float)
        out = np.zeros(np.broadcast(q, np.asarray(t)).shape)
        for m in self.modes:
            w = TWO_PI * m.k
            env = self.envelopes[m.envelope].value(t)
            out += env * w * (-m.cos_amp * np.sin(w * q) + m.sin_amp * np.cos(w * q))
        return out if out.ndim else float(out)

    def eval_u_qq(self, q, t):
        """Curvature u_qq driving the variational (Jacobi) equation."""
        q = np.asarray(q, dtype=float)
        out = np.zeros(np.broadcast(q, np.asarray(t)).shape)
        for m in self.modes:
            w = TWO_PI * m.k
            env = self.envelopes[m.envelope].value(t)
            out += -env * w * w * (m.cos_amp * np.cos(w * q) + m.sin_amp * np.sin(w * q))
        return out if out.ndim else float(out)

    def force_energy(self, t):
        """Closed-form integral of u_q^2 over one period in q.

        Modes sharing a wavenumber interfere, so amplitudes are summed
        per k before Parseval is applied.
        """
        t_arr = np.asarray(t, dtype=float)
        total = np.zeros(t_arr.shape)
        by_k: dict[int, list[Mode]] = {}
        for m in self.modes:
            by_k.setdefault(m.k, []).append(m)
        for k, group in by_k.items():
            a = np.zeros(t_arr.shape)
            b = np.zeros(t_arr.shape)
            for m in group:
                env = self.envelopes[m.envelope].value(t)
                a += env * m.cos_amp
                b += env * m.sin_amp
            total += 0.5 * (TWO_PI * k) ** 2 * (a * a + b * b)
        return total if total.ndim else float(total)

    # -- structure queries --------------------------------------------

    def is_zero(self) -> bool:
        return not self.modes

    def compact_support_end(self) -> float | None:
        """If every used envelope has compact support, the latest cutoff time."""
        if not self.modes:
            return None
        ends = []
        for m in self.modes:
            env = self.envelopes[m.envelope]
            if not isinstance(env, CompactBumpEnvelope):
                return None
            ends.append(env.t_end)
        return max(ends)

    def max_abs_u_qq(self, t_lo: float, t_hi: float, n_t: int = 201, n_q: int = 512) -> float:
        """Dense-grid supremum of |u_qq| over [t_lo, t_hi] x one period."""
        tg = np.linspace(t_lo, t_hi, n_t)
        qg = np.arange(n_q) / n_q
        worst = 0.0
        for t in tg:
            worst = max(worst, float(np.max(np.abs(self.eval_u_qq(qg, t)))))
        return worst

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        envs = {
            name: env.to_dict()
            for name, env in self.envelopes.items()
            if name != "constant" or not isinstance(env, ConstantEnvelope)
        }
        return {
            "modes": [
                {"k": m.k, "cos": m.cos_amp, "sin": m.sin_amp, "envelope": m.envelope}
                for m in self.modes
            ],
            "envelopes": envs,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PotentialSpec":
        unknown = set(obj) - {"modes", "envelopes"}
        if unknown:
            raise ValueError(f"unknown potential keys: {sorted(unknown)}")
        envelopes = {
            name: envelope_from_dict(e) for name, e in obj.get("envelopes", {}).items()
        }
        modes = []
        for m in obj.get("modes", []):
            extra = set(m) - {"k", "cos", "sin", "envelope"}
            if extra:
                raise ValueError(f"unknown potential mode keys: {sorted(extra)}")
            modes.append(
                Mode(
                    k=int(m["k"]),
                    cos_amp=float(m.get("cos", 0.0)),
                    sin_amp=float(m.get("sin", 0.0)),
                    envelope=m.get("envelope", "constant"),
                )
            )
        return cls(modes=tuple(modes), envelopes=envelopes)


@dataclass(frozen=True)
class ConstantCurvaturePotential:
    """Test-only potential with u_qq identically equal to `curvature`.

    u = c q^2 / 2 is not periodic in q, so this object deliberately sits
    outside the scenario schema; it exists because the variational
    equation then has cos/sin solutions that serve as analytic oracles.
    """

    curvature: float

    def eval_u(self, q, t):
        q = np.asarray(q, dtype=float)
        out = 0.5 * self.curvature * q * q
        return out if out.ndim else float(out)

    def eval_force(self, q, t):
        q = np.asarray(q, dtype=float)
        out = self.curvature * q
        return out if out.ndim else float(out)

    def eval_u_qq(self, q, t):
        q = np.asarray(q, dtype=float)
        out = np.full(np.broadcast(q, np.asarray(t)).shape, self.curvature)
        return out if out.ndim else float(out)

    def is_zero(self) -> bool:
        return self.curvature == 0.0
