"""Exception types shared across the lab's modules."""

from __future__ import annotations


class ShocklabError(Exception):
    """Base class for all domain errors raised by this package."""


class MonotonicityViolation(ShocklabError):
    """Leaf family fails to be ordered: d(phi)/d(alpha) <= 0 somewhere.

    Carries the offending (alpha, q) sample and the value found there.
    """

    def __init__(self, alpha: float, q: float, value: float):
        self.alpha = alpha
        self.q = q
        self.value = value
        super().__init__(
            f"d(phi)/d(alpha) = {value:.6g} <= 0 at alpha={alpha:.6g}, q={q:.6g}"
        )


class FoliationBroken(ShocklabError):
    """Evolved leaves no longer form an ordered graph family at the requested time."""


class CoverageGap(ShocklabError):
    """Requested momentum range not spanned by the sampled leaf family."""


class BoundViolated(ShocklabError):
    """Potential curvature exceeds the admissibility threshold of the backward build."""

    def __init__(self, max_u_qq: float, threshold: float):
        self.max_u_qq = max_u_qq
        self.threshold = threshold
        super().__init__(
            f"max |u_qq| = {max_u_qq:.6g} exceeds admissibility threshold {threshold:.6g}"
        )


class FoliationFailed(ShocklabError):
    """A variational component vanished during the backward build; leaves fold."""


class ForwardShockFound(ShocklabError):
    """A constructed leaf focused in forward time, falsifying the construction."""

    def __init__(self, alpha: float, beta: float, t: float):
        self.alpha = alpha
        self.beta = beta
        self.t = t
        super().__init__(
            f"forward conjugate point at t={t:.6g} on leaf alpha={alpha:.6g}, beta={beta:.6g}"
        )


class EllipticityViolated(ShocklabError):
    """State leaves the elliptic domain (u1 <= u0^2 somewhere)."""


class NotElliptic(ShocklabError):
    """Operation requires an elliptic state and the given one is not."""


class LevelOutOfRange(ShocklabError):
    """No real solution of F(p, q) = c found for the requested level."""


class ScenarioError(ShocklabError):
    """Scenario file is malformed; message carries the JSON path."""
