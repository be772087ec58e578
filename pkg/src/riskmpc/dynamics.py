"""Discrete unicycle model, input box and the path-parameter timing law."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArcPath, Configuration, wrap_2pi, wrap_pi

# below this |omega| the exact-arc update switches to its straight-line limit
OMEGA_EPS = 1e-6

# the ego state is its configuration
EgoState = Configuration


@dataclass(frozen=True)
class EgoInput:
    v: float
    omega: float


@dataclass(frozen=True)
class InputBounds:
    """Box constraints on (v, omega) and on the path velocity u2."""

    v_lo: float = -5.0
    v_hi: float = 10.0
    omega_lo: float = -0.5
    omega_hi: float = 0.5
    u2_lo: float = -5.0
    u2_hi: float = 10.0

    def __post_init__(self):
        for lo, hi, name in (
            (self.v_lo, self.v_hi, "v"),
            (self.omega_lo, self.omega_hi, "omega"),
            (self.u2_lo, self.u2_hi, "u2"),
        ):
            if lo > hi:
                raise ValueError(f"empty {name} interval [{lo}, {hi}]")

    @property
    def lower(self) -> np.ndarray:
        """Per-step lower bounds in decision-vector order (v, omega, u2)."""
        return np.array([self.v_lo, self.omega_lo, self.u2_lo])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.v_hi, self.omega_hi, self.u2_hi])

    def contains(self, u: EgoInput, u2: float | None = None) -> bool:
        ok = self.v_lo <= u.v <= self.v_hi and self.omega_lo <= u.omega <= self.omega_hi
        if u2 is not None:
            ok = ok and self.u2_lo <= u2 <= self.u2_hi
        return ok


def step_arrays(c1, c2, theta, v, omega, T: float):
    """Vectorized exact-arc unicycle update; heading is left unwrapped.

    Uses the product form 2 sin(wT/2) cos(theta + wT/2) of the sine difference,
    which is algebraically identical and avoids cancellation for small omega.
    """
    omega = np.asarray(omega, dtype=float)
    small = np.abs(omega) < OMEGA_EPS
    safe_w = np.where(small, 1.0, omega)
    half = 0.5 * omega * T
    mid = theta + half
    # for tiny omega the chord tends to v*T; keeping the mid-step direction makes
    # the two branches agree to second order at the switch
    chord = np.where(small, v * T, 2.0 * v * np.sin(half) / safe_w)
    return c1 + chord * np.cos(mid), c2 + chord * np.sin(mid), theta + omega * T


def step(x: EgoState, u: EgoInput, T: float) -> EgoState:
    """Advance the unicycle by one sample period ``T`` under constant input ``u``."""
    if T <= 0:
        raise ValueError("sample time must be positive")
    c1, c2, th = step_arrays(x.c1, x.c2, x.theta, u.v, u.omega, T)
    return Configuration(float(c1), float(c2), float(th))


def advance_lambda(lam, u2, theta_e, theta_p, T: float, path: ArcPath):
    """Timing law: project the displacement u2*T onto the path tangent and clamp."""
    nxt = lam + u2 * np.cos(theta_e - theta_p) * T
    out = np.clip(nxt, path.lambda_0, path.lambda_g)
    return float(out) if np.ndim(out) == 0 else out


def tracking_error(x: EgoState, lam: float, u2: float, path: ArcPath, v_ref: float) -> np.ndarray:
    """Four-component following error (dc1, dc2, dtheta, u2 - v_ref).

    The heading difference is wrapped into (-pi, pi].
    """
    lam = float(path.clamp(lam))
    pc1, pc2 = path.position(lam)
    return np.array(
        [
            x.c1 - float(pc1),
            x.c2 - float(pc2),
            wrap_pi(x.theta - float(path.heading(lam))),
            u2 - v_ref,
        ]
    )


__all__ = [
    "OMEGA_EPS",
    "EgoInput",
    "EgoState",
    "InputBounds",
    "advance_lambda",
    "step",
    "step_arrays",
    "tracking_error",
    "wrap_2pi",
]
