"""Collision severity, Monte Carlo expected severity and the grid worst case."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prediction import ObjectBelief, Samples, grid_axes


@dataclass(frozen=True)
class SeverityParams:
    m_e: float = 1000.0
    m_o: float = 1000.0

    def __post_init__(self):
        if self.m_e <= 0 or self.m_o <= 0:
            raise ValueError("masses must be positive")


@dataclass(frozen=True, eq=False)
class RiskQuery:
    q_e: np.ndarray
    v_e: float
    r_e: float
    r_o: float
    belief: ObjectBelief

    def __post_init__(self):
        if self.r_e <= 0 or self.r_o <= 0:
            raise ValueError("radii must be positive")
        object.__setattr__(self, "q_e", np.asarray(self.q_e, dtype=float).reshape(2))

    @property
    def reach(self) -> float:
        return self.r_e + self.r_o


def severity(v_e, v_o, p: SeverityParams = SeverityParams()):
    """Differential kinetic energy 0.5 * |m_e v_e^2 - m_o v_o^2| in joules."""
    return 0.5 * np.abs(p.m_e * np.square(v_e) - p.m_o * np.square(v_o))


def _single_realization(samples: Samples) -> Samples | None:
    """The one distinct draw of a degenerate sample set, else None.

    Averaging J copies of a value need not return it bit-for-bit, so such sets
    are evaluated exactly through their single realization.
    """
    pos, v = samples.positions, samples.v
    if np.all(pos == pos[0]) and np.all(v == v[0]):
        return Samples(pos[:1], v[:1])
    return None


def mcs_terms(query: RiskQuery, samples: Samples, p: SeverityParams = SeverityParams()) -> np.ndarray:
    """Per-sample indicator-weighted severities, the summands of the Monte Carlo estimate."""
    d = np.hypot(samples.positions[:, 0] - query.q_e[0], samples.positions[:, 1] - query.q_e[1])
    hit = d <= query.reach
    return np.where(hit, severity(query.v_e, samples.v, p), 0.0)


def mcs_risk(query: RiskQuery, samples: Samples, p: SeverityParams = SeverityParams()) -> float:
    """Sample-mean estimate of the expected collision severity."""
    if len(samples.v) == 0:
        raise ValueError("need at least one sample")
    samples = _single_realization(samples) or samples
    return float(np.sum(mcs_terms(query, samples, p)) / len(samples.v))


def mcs_risk_batch(q_e: np.ndarray, v_e: np.ndarray, samples: Samples, reach: float,
                   p: SeverityParams = SeverityParams()) -> np.ndarray:
    """Monte Carlo risk for many ego (position, speed) pairs against one frozen sample set.

    ``q_e`` has shape (P, 2) and ``v_e`` shape (P,); returns shape (P,).
    """
    samples = _single_realization(samples) or samples
    dx = q_e[:, 0:1] - samples.positions[None, :, 0]
    dy = q_e[:, 1:2] - samples.positions[None, :, 1]
    hit = np.hypot(dx, dy) <= reach
    sev = severity(v_e[:, None], samples.v[None, :], p)
    return np.sum(np.where(hit, sev, 0.0), axis=1) / len(samples.v)


def worst_case_risk_batch(q_e: np.ndarray, v_e: np.ndarray, belief: ObjectBelief, L: int,
                          reach: float, p: SeverityParams = SeverityParams()) -> np.ndarray:
    """Grid worst-case risk for many ego (position, speed) pairs, shape (P,).

    Severity does not depend on position, so the maximum over the product grid
    splits into "does any grid position collide" times "largest severity over the
    velocity axis". The grid position nearest to the ego is found per axis.
    """
    ax1, ax2, axv = grid_axes(belief, L)
    near1 = np.min(np.abs(q_e[:, 0:1] - ax1[None, :]), axis=1)
    near2 = np.min(np.abs(q_e[:, 1:2] - ax2[None, :]), axis=1)
    hit = np.hypot(near1, near2) <= reach
    sev_max = np.max(severity(v_e[:, None], axv[None, :], p), axis=1)
    return np.where(hit, sev_max, 0.0)


def worst_case_risk(query: RiskQuery, L: int, p: SeverityParams = SeverityParams()) -> float:
    """Maximum of indicator times severity over the L-per-axis grid of the truncation box."""
    out = worst_case_risk_batch(query.q_e[None, :], np.array([query.v_e]), query.belief, L, query.reach, p)
    return float(out[0])
