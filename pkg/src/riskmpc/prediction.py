"""Object belief with linearly growing truncated-Gaussian spread.

Position and velocity of the object are independent truncated normals. The
truncation box travels with the predicted mean and widens by a constant amount
per prediction step. The spread grows by a constant increment per step too,
added either to the variance (default) or directly to the standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from .dynamics import EgoInput, step
from .geometry import Configuration


@dataclass(frozen=True, eq=False)
class ObjectBelief:
    mean_config: Configuration
    mean_v: float
    sigma: np.ndarray  # std devs (c1, c2, v)
    q_lo: np.ndarray
    q_hi: np.ndarray
    v_lo: float
    v_hi: float

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float).reshape(3)
        q_lo = np.asarray(self.q_lo, dtype=float).reshape(2)
        q_hi = np.asarray(self.q_hi, dtype=float).reshape(2)
        if np.any(sigma < 0):
            raise ValueError("standard deviations must be non-negative")
        mq = self.mean_config.q
        if np.any(q_lo > mq) or np.any(mq > q_hi):
            raise ValueError("mean position outside the truncation box")
        if not self.v_lo <= self.mean_v <= self.v_hi:
            raise ValueError("mean velocity outside the truncation interval")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "q_lo", q_lo)
        object.__setattr__(self, "q_hi", q_hi)

    @classmethod
    def point_mass(cls, config: Configuration, v: float, v_lo: float | None = None, v_hi: float | None = None):
        """Exactly measured object; only the velocity truncation interval may be wider."""
        q = config.q
        return cls(
            mean_config=config,
            mean_v=float(v),
            sigma=np.zeros(3),
            q_lo=q,
            q_hi=q.copy(),
            v_lo=float(v if v_lo is None else v_lo),
            v_hi=float(v if v_hi is None else v_hi),
        )

    @property
    def is_degenerate(self) -> bool:
        return bool(
            np.all(self.sigma == 0)
            and np.all(self.q_lo == self.q_hi)
            and self.v_lo == self.v_hi
        )


# what the per-step spread increment Q is added to
VARIANCE = "variance"
STD = "std"
SPREAD_MODES = (VARIANCE, STD)


@dataclass(frozen=True, eq=False)
class UncertaintyGrowth:
    """Constant per-step increments of the spread and of the box half-widths.

    With ``mode="variance"`` the squared standard deviations grow by ``Q_diag``
    (random-walk growth); with ``mode="std"`` the standard deviations do.
    """

    Q_diag: np.ndarray
    dq: np.ndarray
    dv: float
    mode: str = VARIANCE

    def __post_init__(self):
        Q = np.asarray(self.Q_diag, dtype=float).reshape(3)
        dq = np.asarray(self.dq, dtype=float).reshape(2)
        if np.any(Q < 0) or np.any(dq < 0) or self.dv < 0:
            raise ValueError("uncertainty increments must be non-negative")
        if self.mode not in SPREAD_MODES:
            raise ValueError(f"mode must be one of {SPREAD_MODES}, got {self.mode!r}")
        object.__setattr__(self, "Q_diag", Q)
        object.__setattr__(self, "dq", dq)
        object.__setattr__(self, "dv", float(self.dv))

    @classmethod
    def isotropic(cls, q: float, box: float, mode: str = VARIANCE) -> "UncertaintyGrowth":
        return cls(Q_diag=np.full(3, q), dq=np.full(2, box), dv=box, mode=mode)

    def scaled(self, n: float) -> "UncertaintyGrowth":
        return UncertaintyGrowth(self.Q_diag * n, self.dq * n, self.dv * n, self.mode)

    def with_mode(self, mode: str) -> "UncertaintyGrowth":
        return replace(self, mode=mode)

    def spread(self, sigma: np.ndarray) -> np.ndarray:
        """Standard deviations one step later."""
        if self.mode == STD:
            return sigma + self.Q_diag
        return np.sqrt(np.square(sigma) + self.Q_diag)


NO_GROWTH = UncertaintyGrowth(np.zeros(3), np.zeros(2), 0.0)

# low / medium / high settings of the case study
UNCERTAINTY_LEVELS = {
    "low": UncertaintyGrowth.isotropic(0.1, 1.0),
    "medium": UncertaintyGrowth.isotropic(0.8, 2.0),
    "high": UncertaintyGrowth.isotropic(1.5, 3.0),
}


def propagate_mean(belief: ObjectBelief, u_o: EgoInput, T: float) -> ObjectBelief:
    """Move the mean one step along the constant-input unicycle.

    The truncation box is translated with the mean, so its half-widths are unchanged.
    """
    new_conf = step(belief.mean_config, u_o, T)
    shift = new_conf.q - belief.mean_config.q
    v_lo = min(belief.v_lo, u_o.v)
    v_hi = max(belief.v_hi, u_o.v)
    return replace(
        belief,
        mean_config=new_conf,
        mean_v=float(u_o.v),
        q_lo=belief.q_lo + shift,
        q_hi=belief.q_hi + shift,
        v_lo=v_lo,
        v_hi=v_hi,
    )


def grow(belief: ObjectBelief, g: UncertaintyGrowth) -> ObjectBelief:
    return replace(
        belief,
        sigma=g.spread(belief.sigma),
        q_lo=belief.q_lo - g.dq,
        q_hi=belief.q_hi + g.dq,
        v_lo=belief.v_lo - g.dv,
        v_hi=belief.v_hi + g.dv,
    )


def predict_beliefs(
    belief0: ObjectBelief, u_o: EgoInput, growth: UncertaintyGrowth, T: float, N: int
) -> list[ObjectBelief]:
    """Beliefs for prediction steps 0..N (N + 1 entries, the first is ``belief0``)."""
    out = [belief0]
    for _ in range(N):
        out.append(grow(propagate_mean(out[-1], u_o, T), g=growth))
    return out


def truncnorm_ppf(u, mu, sigma, lo, hi):
    """Inverse CDF of N(mu, sigma^2) truncated to [lo, hi], evaluated at ``u`` in [0, 1].

    Zero sigma or an empty interval collapse to the mean (clipped into the interval).
    """
    u = np.asarray(u, dtype=float)
    if sigma <= 0 or hi <= lo:
        return np.full(u.shape, float(np.clip(mu, lo, hi)))
    a = (lo - mu) / sigma
    b = (hi - mu) / sigma
    pa = ndtr(a)
    sb = ndtr(-b)
    # interval mass from the side where it does not cancel
    if a > 0:
        mass = ndtr(-a) - sb
    elif b < 0:
        mass = ndtr(b) - pa
    else:
        mass = 1.0 - pa - sb
    p = pa + u * mass
    # invert the upper half through the survival function to keep tail precision
    q = sb + (1.0 - u) * mass
    z = np.where(p < 0.5, ndtri(np.minimum(p, 0.5)), -ndtri(np.minimum(q, 0.5)))
    return np.clip(mu + sigma * z, lo, hi)


class Samples(NamedTuple):
    positions: np.ndarray  # (J, 2)
    v: np.ndarray  # (J,)


def sample(belief: ObjectBelief, J: int, rng: np.random.Generator) -> Samples:
    """Draw ``J`` independent (position, velocity) realizations from the belief.

    Always consumes exactly ``3 * J`` uniforms from ``rng``, degenerate axes included.
    """
    if J < 1:
        raise ValueError("need at least one sample")
    u = rng.random((J, 3))
    m = belief.mean_config.q
    c1 = truncnorm_ppf(u[:, 0], m[0], belief.sigma[0], belief.q_lo[0], belief.q_hi[0])
    c2 = truncnorm_ppf(u[:, 1], m[1], belief.sigma[1], belief.q_lo[1], belief.q_hi[1])
    v = truncnorm_ppf(u[:, 2], belief.mean_v, belief.sigma[2], belief.v_lo, belief.v_hi)
    return Samples(np.column_stack([c1, c2]), v)


def _axis(lo: float, hi: float, mean: float, L: int) -> np.ndarray:
    if hi > lo:
        return np.linspace(lo, hi, L)
    return np.array([mean])


def grid_axes(belief: ObjectBelief, L: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniformly spaced points (endpoints included) along c1, c2 and v."""
    if L < 2:
        raise ValueError("grid resolution L must be at least 2")
    m = belief.mean_config.q
    return (
        _axis(belief.q_lo[0], belief.q_hi[0], m[0], L),
        _axis(belief.q_lo[1], belief.q_hi[1], m[1], L),
        _axis(belief.v_lo, belief.v_hi, belief.mean_v, L),
    )


def grid(belief: ObjectBelief, L: int) -> np.ndarray:
    """Full Cartesian grid over the truncation box as an (M, 3) array of (c1, c2, v)."""
    ax1, ax2, axv = grid_axes(belief, L)
    g1, g2, gv = np.meshgrid(ax1, ax2, axv, indexing="ij")
    return np.column_stack([g1.ravel(), g2.ravel(), gv.ravel()])
