"""Receding-horizon path-following OCP with a per-step collision-risk constraint.

Both controller flavours share one problem: minimise the quadratic following
error over the horizon subject to the input box and ``risk <= epsilon`` at every
predicted step. They differ only in how the risk of a predicted ego state is
measured: ``robust`` uses the grid worst case over the truncation box,
``stochastic`` the Monte Carlo expected severity.

The risk is piecewise constant in the inputs, so the problem is solved by single
shooting with a cross-entropy search over the 3N inputs (v, omega, u2 per
step). Constraint violation enters the search through an exact penalty; the
returned plan is re-checked against the hard constraint and flagged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EgoInput, InputBounds, advance_lambda, step_arrays
from .geometry import ArcPath, Configuration, wrap_pi
from .prediction import (
    NO_GROWTH,
    ObjectBelief,
    Samples,
    UncertaintyGrowth,
    predict_beliefs,
    sample,
)
from .risk import SeverityParams, mcs_risk_batch, worst_case_risk_batch

logger = logging.getLogger(__name__)

ROBUST = "robust"
STOCHASTIC = "stochastic"
MODES = (ROBUST, STOCHASTIC)


@dataclass(frozen=True, eq=False)
class OcpConfig:
    path: ArcPath
    v_ref: float = 3.0
    N: int = 6
    T: float = 0.5
    W: np.ndarray = field(default_factory=lambda: np.eye(4))
    epsilon: float = 0.0
    mode: str = STOCHASTIC
    bounds: InputBounds = field(default_factory=InputBounds)
    J: int = 500
    L: int = 40
    r_e: float = 1.5
    r_o: float = 1.5
    masses: SeverityParams = field(default_factory=SeverityParams)
    object_input: EgoInput = EgoInput(3.0, 1e-4)
    growth: UncertaintyGrowth = NO_GROWTH
    # cross-entropy search budget
    population: int = 64
    iterations: int = 30
    elite_frac: float = 0.125
    init_std_frac: float = 0.25
    smoothing: float = 0.8
    penalty_scale: float = 1e6
    # joules charged per violating step on top of the excess risk
    violation_step_cost: float = 1e7
    tol_risk: float = 1e-6

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.shape != (4, 4) or not np.allclose(W, W.T):
            raise ValueError("W must be a symmetric 4x4 matrix")
        if np.any(np.linalg.eigvalsh(W) <= 0):
            raise ValueError("W must be positive definite")
        object.__setattr__(self, "W", W)
        if self.N < 1:
            raise ValueError("horizon N must be at least 1")
        if self.T <= 0:
            raise ValueError("sample time T must be positive")
        if self.epsilon < 0:
            raise ValueError("risk tolerance must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.population < 4 or self.iterations < 1:
            raise ValueError("solver budget too small")

    @property
    def mu(self) -> float:
        """Penalty weight on risk violation, scaled with the cost weights."""
        return self.penalty_scale * float(np.trace(self.W)) / 4.0

    def risk_limit(self) -> float:
        return self.epsilon + self.tol_risk * max(1.0, self.epsilon)


@dataclass(frozen=True, eq=False)
class OcpSolution:
    u1_seq: np.ndarray  # (N, 2) columns v, omega
    u2_seq: np.ndarray  # (N,)
    states: np.ndarray  # (N + 1, 3), heading wrapped into [0, 2pi)
    lambdas: np.ndarray  # (N + 1,)
    risks: np.ndarray  # (N + 1,)
    errors: np.ndarray  # (N, 4)
    cost: float
    feasible: bool

    @property
    def first_input(self) -> EgoInput:
        return EgoInput(float(self.u1_seq[0, 0]), float(self.u1_seq[0, 1]))

    @property
    def decision(self) -> np.ndarray:
        """Inputs as an (N, 3) array of (v, omega, u2)."""
        return np.column_stack([self.u1_seq, self.u2_seq])

    def shifted(self) -> np.ndarray:
        """Decision array moved one step ahead, repeating the last input."""
        d = self.decision
        return np.vstack([d[1:], d[-1:]])


@dataclass
class _Batch:
    cost: np.ndarray  # (P,)
    risks: np.ndarray  # (P, N + 1)
    states: np.ndarray  # (P, N + 1, 3) unwrapped heading
    lambdas: np.ndarray  # (P, N + 1)
    errors: np.ndarray  # (P, N, 4)


def _simulate(U: np.ndarray, x0: Configuration, lam0: float, cfg: OcpConfig,
              beliefs: list[ObjectBelief], samples: list[Samples] | None) -> _Batch:
    P, N, _ = U.shape
    path = cfg.path
    states = np.empty((P, N + 1, 3))
    lambdas = np.empty((P, N + 1))
    errors = np.empty((P, N, 4))
    c1 = np.full(P, x0.c1)
    c2 = np.full(P, x0.c2)
    th = np.full(P, x0.theta)
    lam = np.full(P, float(lam0))
    states[:, 0] = np.column_stack([c1, c2, th])
    lambdas[:, 0] = lam
    for n in range(N):
        v, w, u2 = U[:, n, 0], U[:, n, 1], U[:, n, 2]
        pc1, pc2 = path.position(lam)
        thp = path.heading(lam)
        errors[:, n, 0] = c1 - pc1
        errors[:, n, 1] = c2 - pc2
        errors[:, n, 2] = wrap_pi(th - thp)
        errors[:, n, 3] = u2 - cfg.v_ref
        lam = advance_lambda(lam, u2, th, thp, cfg.T, path)
        c1, c2, th = step_arrays(c1, c2, th, v, w, cfg.T)
        states[:, n + 1] = np.column_stack([c1, c2, th])
        lambdas[:, n + 1] = lam
    cost = np.einsum("pni,ij,pnj->p", errors, cfg.W, errors)

    reach = cfg.r_e + cfg.r_o
    risks = np.empty((P, N + 1))
    for n in range(N + 1):
        # the speed held while reaching step n; step 0 uses the speed about to be applied
        v_e = U[:, max(n - 1, 0), 0]
        q_e = states[:, n, :2]
        if cfg.mode == ROBUST:
            risks[:, n] = worst_case_risk_batch(q_e, v_e, beliefs[n], cfg.L, reach, cfg.masses)
        else:
            risks[:, n] = mcs_risk_batch(q_e, v_e, samples[n], reach, cfg.masses)
    return _Batch(cost, risks, states, lambdas, errors)


def _check_inputs(U: np.ndarray, N: int, beliefs, samples, mode: str):
    if U.ndim != 3 or U.shape[1:] != (N, 3):
        raise ValueError(f"expected input sequences of length N={N}, got shape {U.shape[1:]}")
    if len(beliefs) != N + 1:
        raise ValueError(f"need N + 1 = {N + 1} beliefs, got {len(beliefs)}")
    if mode == STOCHASTIC and (samples is None or len(samples) != N + 1):
        raise ValueError(f"stochastic mode needs N + 1 = {N + 1} frozen sample sets")


def draw_samples(beliefs: list[ObjectBelief], J: int, rng: np.random.Generator) -> list[Samples]:
    return [sample(b, J, rng) for b in beliefs]


def _within_bounds(U: np.ndarray, bounds: InputBounds) -> bool:
    return bool(np.all(U >= bounds.lower) and np.all(U <= bounds.upper))


def _solution(batch: _Batch, U: np.ndarray, i: int, cfg: OcpConfig) -> OcpSolution:
    states = batch.states[i].copy()
    states[:, 2] = np.mod(states[:, 2], 2 * np.pi)
    risks = batch.risks[i].copy()
    feasible = bool(np.all(risks <= cfg.risk_limit()) and _within_bounds(U[i], cfg.bounds))
    return OcpSolution(
        u1_seq=U[i, :, :2].copy(),
        u2_seq=U[i, :, 2].copy(),
        states=states,
        lambdas=batch.lambdas[i].copy(),
        risks=risks,
        errors=batch.errors[i].copy(),
        cost=float(batch.cost[i]),
        feasible=feasible,
    )


def rollout(x0: Configuration, lambda0: float, u1_seq, u2_seq, cfg: OcpConfig,
            beliefs: list[ObjectBelief], samples: list[Samples] | None = None) -> OcpSolution:
    """Simulate one input sequence over the horizon and evaluate cost, risk and feasibility.

    ``beliefs`` and (in stochastic mode) ``samples`` cover prediction steps 0..N.
    """
    u1 = np.asarray(u1_seq, dtype=float).reshape(-1, 2)
    u2 = np.asarray(u2_seq, dtype=float).reshape(-1)
    if len(u1) != len(u2):
        raise ValueError("u1_seq and u2_seq differ in length")
    U = np.column_stack([u1, u2])[None]
    _check_inputs(U, cfg.N, beliefs, samples, cfg.mode)
    batch = _simulate(U, x0, lambda0, cfg, beliefs, samples)
    return _solution(batch, U, 0, cfg)


class PathFollowingMPC:
    """Cross-entropy solver for the risk-constrained path-following OCP.

    Keeps the previous plan between calls for warm starting, so one instance
    belongs to one closed-loop run.
    """

    def __init__(self, cfg: OcpConfig):
        self.cfg = cfg
        self.previous: OcpSolution | None = None

    def reset(self):
        self.previous = None

    def penalized(self, batch: _Batch) -> np.ndarray:
        """Cost plus exact penalty; with no feasible plan, fewer violating steps win first.

        Ranking infeasible plans by excess risk alone favours high ego speeds, since
        the worst-case severity over a wide velocity interval shrinks as v_e grows.
        """
        cfg = self.cfg
        excess = np.maximum(batch.risks - cfg.epsilon, 0.0)
        # earlier violations leave less time to recover, so they weigh more
        urgency = np.arange(cfg.N + 1, 0, -1, dtype=float)
        violating = (batch.risks > cfg.risk_limit()) @ urgency
        return batch.cost + cfg.mu * (np.sum(excess, axis=1) + cfg.violation_step_cost * violating)

    def solve(self, x0: Configuration, lambda0: float, belief0: ObjectBelief,
              rng: np.random.Generator, warm: OcpSolution | None = None) -> OcpSolution:
        """Plan an input sequence from the current ego state and object measurement.

        ``warm`` defaults to the plan returned by the previous call; it is shifted by
        one step and always competes as a candidate, so the result is never worse
        than the shifted plan.
        """
        cfg = self.cfg
        if warm is None:
            warm = self.previous
        sample_rng, search_rng = rng.spawn(2)
        beliefs = predict_beliefs(belief0, cfg.object_input, cfg.growth, cfg.T, cfg.N)
        samples = draw_samples(beliefs, cfg.J, sample_rng) if cfg.mode == STOCHASTIC else None

        lo = np.broadcast_to(cfg.bounds.lower, (cfg.N, 3))
        hi = np.broadcast_to(cfg.bounds.upper, (cfg.N, 3))
        if warm is not None:
            seed_plan = np.clip(warm.shifted(), lo, hi)
        else:
            seed_plan = np.clip(np.zeros((cfg.N, 3)), lo, hi)
        # fallback seeds: stand still, and back off at full reverse speed
        stop_plan = np.clip(np.zeros((cfg.N, 3)), lo, hi)
        retreat_plan = stop_plan.copy()
        retreat_plan[:, 0] = cfg.bounds.v_lo
        retreat_plan[:, 2] = np.clip(cfg.bounds.v_lo, cfg.bounds.u2_lo, cfg.bounds.u2_hi)

        mean = seed_plan.copy()
        std = cfg.init_std_frac * (hi - lo)
        min_std = 1e-4 * (hi - lo)
        n_elite = max(2, int(round(cfg.elite_frac * cfg.population)))

        best_U = None
        best_score = np.inf
        for it in range(cfg.iterations):
            noise = search_rng.standard_normal((cfg.population, cfg.N, 3))
            U = np.clip(mean[None] + std[None] * noise, lo, hi)
            if it == 0:
                U[0] = seed_plan
                U[1] = stop_plan
                U[2] = retreat_plan
            else:
                U[0] = best_U
            batch = _simulate(U, x0, lambda0, cfg, beliefs, samples)
            score = self.penalized(batch)
            order = np.argsort(score, kind="stable")
            if score[order[0]] < best_score:
                best_score = float(score[order[0]])
                best_U = U[order[0]].copy()
            elite = U[order[:n_elite]]
            a = cfg.smoothing
            mean = a * elite.mean(axis=0) + (1 - a) * mean
            std = np.maximum(a * elite.std(axis=0) + (1 - a) * std, min_std)

        U = best_U[None]
        batch = _simulate(U, x0, lambda0, cfg, beliefs, samples)
        sol = _solution(batch, U, 0, cfg)
        if not sol.feasible:
            logger.debug("no feasible plan found; returning least-violating candidate")
        self.previous = sol
        return sol


def solve(x0: Configuration, lambda0: float, belief0: ObjectBelief, cfg: OcpConfig,
          rng: np.random.Generator, warm: OcpSolution | None = None) -> OcpSolution:
    """One-off OCP solve without controller state."""
    return PathFollowingMPC(cfg).solve(x0, lambda0, belief0, rng, warm=warm)
