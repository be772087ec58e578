"""Closed-loop scenario runner, the 36-cell experiment matrix and trace I/O."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .controller import ROBUST, STOCHASTIC, OcpConfig, PathFollowingMPC
from .dynamics import EgoInput, InputBounds, advance_lambda, step, tracking_error
from .geometry import ArcPath, Configuration, nearest_lambda
from .prediction import SPREAD_MODES, UNCERTAINTY_LEVELS, ObjectBelief
from .risk import SeverityParams

logger = logging.getLogger(__name__)

CONTROLLERS = {"rmpc": ROBUST, "smpc": STOCHASTIC}
EPSILONS = (0.0, 500.0, 1000.0, 1500.0, 2000.0, 2500.0)
LEVELS = ("low", "medium", "high")

TRACE_COLUMNS = (
    "k", "t_s", "ego_c1", "ego_c2", "ego_theta", "ego_v_applied", "lambda",
    "ref_c1", "ref_c2", "ref_theta", "obj_c1", "obj_c2", "obj_theta", "obj_v",
    "risk_step", "err_norm", "feasible",
)


@dataclass
class ScenarioConfig:
    """All knobs of one closed-loop run.

    Defaults describe the crossing scenario: the ego follows a gentle arc while
    the object drives north across it.
    """

    # reference path
    goal: tuple = (65.0, 5.0, 0.0)
    curvature: float = 0.003
    lambda_0: float = -95.0
    lambda_g: float = 0.0
    # ego vehicle
    ego_init: tuple = (-10.0, 10.0, 0.0)
    r_e: float = 1.5
    m_e: float = 1000.0
    v_ref: float = 4.0
    # object
    obj_init: tuple = (5.0, -5.0, math.pi / 2)
    r_o: float = 1.5
    m_o: float = 1000.0
    obj_input: tuple = (3.0, 0.0001)
    obj_v_lo: float = -5.0
    obj_v_hi: float = 5.0
    # truth motion of the object; None means it follows its prediction model
    obj_truth_input: tuple | None = None
    # uncertainty growth: a named level, optionally overridden per component
    uncertainty: str = "low"
    Q_diag: tuple | None = None
    dq: tuple | None = None
    dv: float | None = None
    spread_mode: str = "variance"
    # controller
    controller: str = "smpc"
    epsilon: float = 0.0
    T: float = 0.5
    N: int = 6
    J: int = 500
    L: int = 40
    w_diag: tuple = (1.0, 1.0, 1.0, 1.0)
    v_bounds: tuple = (-2.0, 10.0)
    omega_bounds: tuple = (-0.5, 0.5)
    u2_bounds: tuple = (-2.0, 10.0)
    population: int = 64
    iterations: int = 30
    # run
    duration_steps: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValueError(f"controller must be one of {sorted(CONTROLLERS)}, got {self.controller!r}")
        if self.uncertainty not in UNCERTAINTY_LEVELS:
            raise ValueError(f"uncertainty must be one of {LEVELS}, got {self.uncertainty!r}")
        if self.spread_mode not in SPREAD_MODES:
            raise ValueError(f"spread_mode must be one of {SPREAD_MODES}, got {self.spread_mode!r}")
        if self.duration_steps < 1:
            raise ValueError("duration_steps must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        conv = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**conv)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def path(self) -> ArcPath:
        return ArcPath(Configuration(*self.goal), self.curvature, self.lambda_0, self.lambda_g)

    def growth(self):
        g = UNCERTAINTY_LEVELS[self.uncertainty]
        return type(g)(
            Q_diag=g.Q_diag if self.Q_diag is None else self.Q_diag,
            dq=g.dq if self.dq is None else self.dq,
            dv=g.dv if self.dv is None else self.dv,
            mode=self.spread_mode,
        )

    def ocp(self) -> OcpConfig:
        return OcpConfig(
            path=self.path(),
            v_ref=self.v_ref,
            N=self.N,
            T=self.T,
            W=np.diag(self.w_diag),
            epsilon=self.epsilon,
            mode=CONTROLLERS[self.controller],
            bounds=InputBounds(*self.v_bounds, *self.omega_bounds, *self.u2_bounds),
            J=self.J,
            L=self.L,
            r_e=self.r_e,
            r_o=self.r_o,
            masses=SeverityParams(self.m_e, self.m_o),
            object_input=EgoInput(*self.obj_input),
            growth=self.growth(),
            population=self.population,
            iterations=self.iterations,
        )


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    rows: list = field(default_factory=list)
    e_acc: float = 0.0
    d_min: float = math.inf
    collided: bool = False
    infeasible_steps: int = 0
    wall_time: float = 0.0

    def summary(self) -> dict:
        return {
            "e_acc": self.e_acc,
            "d_min": self.d_min,
            "collided": self.collided,
            "infeasible_steps": self.infeasible_steps,
            "seed": self.config.seed,
            "config": self.config.to_dict(),
        }


def metrics(rows) -> tuple[float, float]:
    """Accumulated error norm and minimum ego-object center distance over a trace.

    Rows need ``err_norm`` and the ego/object positions; they can be the dicts from
    :func:`run_scenario` or rows read back from a trace CSV.
    """
    if not rows:
        raise ValueError("empty trace")
    e_acc = math.fsum(float(r["err_norm"]) for r in rows)
    d_min = min(
        math.hypot(float(r["ego_c1"]) - float(r["obj_c1"]), float(r["ego_c2"]) - float(r["obj_c2"]))
        for r in rows
    )
    return e_acc, d_min


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Run ``cfg.duration_steps`` closed-loop steps and collect the trace.

    Each step measures the object exactly, solves the OCP, applies the first
    inputs to the ego and the timing law, then moves the object along its truth
    model. Steps where no feasible plan exists are flagged in the trace.
    """
    t0 = time.perf_counter()
    path = cfg.path()
    ocp = cfg.ocp()
    mpc = PathFollowingMPC(ocp)
    rng = np.random.default_rng(cfg.seed)
    obj_u = EgoInput(*cfg.obj_input)
    truth_u = obj_u if cfg.obj_truth_input is None else EgoInput(*cfg.obj_truth_input)

    ego = Configuration(*cfg.ego_init)
    obj = Configuration(*cfg.obj_init)
    lam = nearest_lambda(path, ego)
    result = ScenarioResult(config=cfg)
    for k in range(cfg.duration_steps):
        belief = ObjectBelief.point_mass(obj, obj_u.v, cfg.obj_v_lo, cfg.obj_v_hi)
        sol = mpc.solve(ego, lam, belief, rng)
        u = sol.first_input
        u2 = float(sol.u2_seq[0])
        err = tracking_error(ego, lam, u2, path, cfg.v_ref)
        ref_c1, ref_c2 = path.position(lam)
        result.rows.append({
            "k": k,
            "t_s": k * cfg.T,
            "ego_c1": ego.c1,
            "ego_c2": ego.c2,
            "ego_theta": ego.theta,
            "ego_v_applied": u.v,
            "lambda": lam,
            "ref_c1": float(ref_c1),
            "ref_c2": float(ref_c2),
            "ref_theta": float(path.heading(lam)),
            "obj_c1": obj.c1,
            "obj_c2": obj.c2,
            "obj_theta": obj.theta,
            "obj_v": truth_u.v,
            "risk_step": float(np.max(sol.risks)),
            "err_norm": float(np.linalg.norm(err)),
            "feasible": int(sol.feasible),
        })
        if not sol.feasible:
            result.infeasible_steps += 1
        lam = advance_lambda(lam, u2, ego.theta, float(path.heading(lam)), cfg.T, path)
        ego = step(ego, u, cfg.T)
        obj = step(obj, truth_u, cfg.T)

    result.e_acc, result.d_min = metrics(result.rows)
    result.collided = result.d_min <= cfg.r_e + cfg.r_o
    result.wall_time = time.perf_counter() - t0
    return result


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in TRACE_COLUMNS])
    return buf.getvalue()


def read_trace(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_result(result: ScenarioResult, out_dir, stem: str = "scenario", fmt: str = "csv") -> dict:
    """Write the trace (csv or json) and the json summary; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_path = out / f"{stem}_summary.json"
    if fmt == "csv":
        trace_path = out / f"{stem}_trace.csv"
        trace_path.write_text(trace_csv(result.rows))
    elif fmt == "json":
        trace_path = out / f"{stem}_trace.json"
        trace_path.write_text(json.dumps(result.rows, indent=1) + "\n")
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    summary_path.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n")
    return {"trace": trace_path, "summary": summary_path}


def matrix_configs(base: ScenarioConfig) -> list[ScenarioConfig]:
    cells = []
    for controller in ("rmpc", "smpc"):
        for eps in EPSILONS:
            for level in LEVELS:
                cells.append(base.replace(controller=controller, epsilon=eps, uncertainty=level))
    return cells


def cell_name(cfg: ScenarioConfig) -> str:
    return f"{cfg.controller}_{cfg.uncertainty}_eps{int(round(cfg.epsilon))}"


@dataclass
class MatrixCell:
    config: ScenarioConfig
    result: ScenarioResult | None
    error: str | None = None


def _run_cell(cfg: ScenarioConfig) -> MatrixCell:
    try:
        return MatrixCell(cfg, run_scenario(cfg))
    except Exception as exc:  # one broken cell must not abort the matrix
        logger.exception("cell %s failed", cell_name(cfg))
        return MatrixCell(cfg, None, f"{type(exc).__name__}: {exc}")


def run_matrix(base: ScenarioConfig, workers: int = 1, progress=None) -> list[MatrixCell]:
    """Run all 2 x 6 x 3 cells (controller x epsilon x uncertainty level)."""
    configs = matrix_configs(base)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, configs))
    else:
        cells = []
        for cfg in configs:
            cells.append(_run_cell(cfg))
            if progress is not None:
                progress(cells[-1])
    return cells


def results_table(cells: list[MatrixCell]) -> str:
    """CSV with one row per (controller, epsilon) and e_acc / d_min per uncertainty level."""
    index = {(c.config.controller, c.config.epsilon, c.config.uncertainty): c for c in cells}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["controller", "epsilon"]
    for level in LEVELS:
        header += [f"{level}_e_acc", f"{level}_d_min"]
    writer.writerow(header)
    for controller in ("rmpc", "smpc"):
        for eps in EPSILONS:
            row = [controller, _fmt(eps)]
            for level in LEVELS:
                cell = index.get((controller, eps, level))
                if cell is None or cell.result is None:
                    row += ["nan", "nan"]
                else:
                    row += [f"{cell.result.e_acc:.3f}", f"{cell.result.d_min:.3f}"]
            writer.writerow(row)
    return buf.getvalue()


def write_matrix(cells: list[MatrixCell], out_dir, fmt: str = "csv") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for cell in cells:
        stem = cell_name(cell.config)
        if cell.result is not None:
            write_result(cell.result, out / "cells", stem=stem, fmt=fmt)
        else:
            (out / "cells").mkdir(exist_ok=True)
            (out / "cells" / f"{stem}_error.txt").write_text(cell.error + "\n")
    table = out / "results_table.csv"
    table.write_text(results_table(cells))
    return table
