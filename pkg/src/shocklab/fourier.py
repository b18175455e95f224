"""Finite Fourier series on the unit circle with exact derivatives.

Everything periodic in q in this package is represented this way, so
first and second derivatives and quadratic integrals are available in
closed form instead of by numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class FourierSeries1D:
    """const + sum over modes of a*cos(2*pi*k*q) + b*sin(2*pi*k*q).

    Wavenumbers k are positive integers, so the series is exactly
    1-periodic in q.
    """

    const: float = 0.0
    modes: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self):
        for k, _, _ in self.modes:
            if int(k) != k or k < 1:
                raise ValueError(f"wavenumber must be a positive integer, got {k!r}")

    def value(self, q):
        q = np.asarray(q, dtype=float)
        out = np.full(q.shape, self.const)
        for k, a, b in self.modes:
            w = TWO_PI * k
            out += a * np.cos(w * q) + b * np.sin(w * q)
        return out if out.ndim else float(out)

    def derivative(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape)
        for k, a, b in self.modes:
            w = TWO_PI * k
            out += w * (-a * np.sin(w * q) + b * np.cos(w * q))
        return out if out.ndim else float(out)

    def second_derivative(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape)
        for k, a, b in self.modes:
            w = TWO_PI * k
            out += -w * w * (a * np.cos(w * q) + b * np.sin(w * q))
        return out if out.ndim else float(out)

    def sup_abs(self) -> float:
        """Upper bound on |value| (triangle inequality over modes)."""
        return abs(self.const) + sum(np.hypot(a, b) for _, a, b in self.modes)

    def sup_abs_derivative(self) -> float:
        return sum(TWO_PI * k * np.hypot(a, b) for k, a, b in self.modes)

    def is_zero(self) -> bool:
        return self.const == 0.0 and not self.modes

    def to_dict(self) -> dict:
        return {
            "const": self.const,
            "modes": [{"k": k, "cos": a, "sin": b} for k, a, b in self.modes],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FourierSeries1D":
        unknown = set(obj) - {"const", "modes"}
        if unknown:
            raise ValueError(f"unknown Fourier series keys: {sorted(unknown)}")
        modes = []
        for m in obj.get("modes", []):
            extra = set(m) - {"k", "cos", "sin"}
            if extra:
                raise ValueError(f"unknown Fourier mode keys: {sorted(extra)}")
            modes.append((int(m["k"]), float(m.get("cos", 0.0)), float(m.get("sin", 0.0))))
        return cls(const=float(obj.get("const", 0.0)), modes=tuple(modes))
