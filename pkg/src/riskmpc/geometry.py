"""Planar poses, circular footprints and the constant-curvature reference path."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# below this |curvature| the path is treated as a straight line
STRAIGHT_KAPPA = 1e-9


class PathRangeWarning(UserWarning):
    """Issued when a path parameter outside [lambda_0, lambda_g] gets clamped."""


def wrap_2pi(angle):
    """Map an angle (scalar or array) into [0, 2*pi)."""
    a = np.mod(angle, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    a = np.where(a >= TWO_PI, 0.0, a)
    return float(a) if np.ndim(a) == 0 else a


def wrap_pi(angle):
    """Map an angle (scalar or array) into (-pi, pi]."""
    a = math.pi - np.mod(math.pi - np.asarray(angle, dtype=float), TWO_PI)
    a = np.where(a <= -math.pi, a + TWO_PI, a)
    return float(a) if np.ndim(a) == 0 else a


@dataclass(frozen=True)
class Configuration:
    """Pose of an actor: center position (c1, c2) in meters and heading theta."""

    c1: float
    c2: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c1", float(self.c1))
        object.__setattr__(self, "c2", float(self.c2))
        object.__setattr__(self, "theta", wrap_2pi(float(self.theta)))

    @property
    def q(self) -> np.ndarray:
        return np.array([self.c1, self.c2])

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.theta])

    @classmethod
    def from_array(cls, arr) -> "Configuration":
        return cls(arr[0], arr[1], arr[2])


@dataclass(frozen=True)
class CircleShape:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")


def collision_indicator(q_e, q_o, r_e: float, r_o: float) -> int:
    """1 if the two circles touch or overlap, else 0.

    Touching circles (center distance exactly r_e + r_o) count as a collision.
    """
    if r_e <= 0 or r_o <= 0:
        raise ValueError("radii must be positive")
    d = math.hypot(q_e[0] - q_o[0], q_e[1] - q_o[1])
    return int(d <= r_e + r_o)


@dataclass(frozen=True)
class ArcPath:
    """Arc-length parameterized circular arc that ends at ``goal`` when lambda = lambda_g.

    The tangent heading is ``goal.theta + curvature * (lam - lambda_g)``.
    """

    goal: Configuration
    curvature: float
    lambda_0: float
    lambda_g: float = 0.0

    def __post_init__(self):
        if not self.lambda_0 < self.lambda_g:
            raise ValueError(
                f"lambda_0 ({self.lambda_0}) must be smaller than lambda_g ({self.lambda_g})"
            )

    @property
    def length(self) -> float:
        return self.lambda_g - self.lambda_0

    def clamp(self, lam):
        return np.clip(lam, self.lambda_0, self.lambda_g)

    def heading(self, lam):
        """Unwrapped tangent angle at ``lam`` (no clamping, vectorized)."""
        return self.goal.theta + self.curvature * (np.asarray(lam, dtype=float) - self.lambda_g)

    def position(self, lam):
        """Arc point(s) at ``lam``; returns arrays (c1, c2). No clamping."""
        d = np.asarray(lam, dtype=float) - self.lambda_g
        th_g = self.goal.theta
        k = self.curvature
        if abs(k) < STRAIGHT_KAPPA:
            return self.goal.c1 + d * math.cos(th_g), self.goal.c2 + d * math.sin(th_g)
        # chord form avoids the cancellation in sin(a + b) - sin(a)
        half = 0.5 * k * d
        chord = 2.0 * np.sin(half) / k
        mid = th_g + half
        return self.goal.c1 + chord * np.cos(mid), self.goal.c2 + chord * np.sin(mid)


def path_eval(path: ArcPath, lam: float) -> Configuration:
    """Reference configuration at path parameter ``lam`` (clamped to the path, with a warning)."""
    lam_c = float(path.clamp(lam))
    if lam_c != lam:
        warnings.warn(
            f"path parameter {lam} outside [{path.lambda_0}, {path.lambda_g}], clamped to {lam_c}",
            PathRangeWarning,
            stacklevel=2,
        )
    c1, c2 = path.position(lam_c)
    return Configuration(c1, c2, path.heading(lam_c))


def _golden_section(f, a: float, b: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def nearest_lambda(path: ArcPath, y_e: Configuration, coarse_step: float = 1.0, tol: float = 1e-5) -> float:
    """Path parameter of the arc point closest to the ego position.

    Only the position components enter the distance. A coarse scan at ``coarse_step``
    brackets the minimum, golden-section search then refines it to ``tol``.
    """
    n = max(int(math.ceil(path.length / coarse_step)), 1)
    grid = np.linspace(path.lambda_0, path.lambda_g, n + 1)
    px, py = path.position(grid)
    d2 = (px - y_e.c1) ** 2 + (py - y_e.c2) ** 2
    i = int(np.argmin(d2))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, n)]

    def dist2(lam):
        x, y = path.position(lam)
        return (float(x) - y_e.c1) ** 2 + (float(y) - y_e.c2) ** 2

    lam = _golden_section(dist2, lo, hi, tol)
    # golden section never evaluates the bracket ends; the minimum can sit on a path end
    best = min((lam, lo, hi), key=dist2)
    return float(best)
