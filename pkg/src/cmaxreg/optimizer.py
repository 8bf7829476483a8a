"""Composite objective assembly and derivative-free estimation.

The estimation problem is min over theta of  -G(theta) + lambda * R(theta),
where G scores the sharpness of the image of warped events and R is a
collapse penalty.  The solver is deliberately plain: a seeded quasi-random
scan of the bounds box picks the most promising starts, and a bounded
Nelder-Mead simplex polishes the best of them.  Everything is deterministic
given the seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sciopt
from scipy.stats import qmc

from .events import CameraGeometry, EventWindow
from .iwe import Objective, ObjectiveKind, build_iwe, objective_value
from .regularizers import RegKind, RegularizerOptions, reg_event_based, reg_geometric
from .warps import DOF_BY_KIND, SingularWarpError, WarpKind, WarpModel

COLLAPSE_THRESHOLD = 10.0

DEFAULT_LAMBDA = {
    ObjectiveKind.VARIANCE: 1.0,
    ObjectiveKind.GRADIENT_MAGNITUDE: 0.2,
}

# Zoom upper bound sits above the collapse-detector knee (-2 ln 0.005 > 10)
# so that a run that pushes into the barrier is actually flagged.
_ZOOM_BOUNDS = (-2.0, 0.995)
_TRANSLATION_BOUND = 300.0
_ROTATION_RATE_BOUND = 10.0  # rad/s, scaled by window duration
_LINEAR_RATE_BOUND = 2.0  # affine/homography generator entries, per window


def default_bounds(kind: WarpKind, duration: float = 1.0) -> np.ndarray:
    """Per-DOF search box for a warp family, as an (dof, 2) array."""
    w = _ROTATION_RATE_BOUND * duration
    table = {
        WarpKind.TRANSLATION_2D: [(-_TRANSLATION_BOUND, _TRANSLATION_BOUND)] * 2,
        WarpKind.ZOOM_1DOF: [_ZOOM_BOUNDS],
        WarpKind.ROTATION_3DOF: [(-w, w)] * 3,
        WarpKind.SIMILARITY_4DOF: [
            (-_TRANSLATION_BOUND, _TRANSLATION_BOUND),
            (-_TRANSLATION_BOUND, _TRANSLATION_BOUND),
            (-w, w),
            _ZOOM_BOUNDS,
        ],
        WarpKind.AFFINE_6DOF: [(-_LINEAR_RATE_BOUND, _LINEAR_RATE_BOUND)] * 4
        + [(-_TRANSLATION_BOUND, _TRANSLATION_BOUND)] * 2,
        WarpKind.HOMOGRAPHY_8DOF: [(-_LINEAR_RATE_BOUND, _LINEAR_RATE_BOUND)] * 8,
    }
    return np.asarray(table[WarpKind(kind)], dtype=float)


@dataclass
class CompositeProblem:
    """Everything needed to score a parameter vector on one event window."""

    window: EventWindow
    model_kind: WarpKind
    geometry: CameraGeometry
    objective: Objective = Objective()
    reg_kind: RegKind = RegKind.GEOMETRIC
    lam: float | None = None
    reg_options: RegularizerOptions = RegularizerOptions()
    bounds: np.ndarray | None = None

    def __post_init__(self):
        self.model_kind = WarpKind(self.model_kind)
        self.reg_kind = RegKind(self.reg_kind)
        if self.lam is None:
            self.lam = DEFAULT_LAMBDA[self.objective.kind]
        if self.bounds is None:
            self.bounds = default_bounds(self.model_kind)
        self.bounds = np.asarray(self.bounds, dtype=float)
        dof = DOF_BY_KIND[self.model_kind]
        if self.bounds.shape != (dof, 2):
            raise ValueError(f"bounds must have shape ({dof}, 2)")
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ValueError("each bound must satisfy low < high")
        if self.model_kind is WarpKind.ZOOM_1DOF and self.bounds[0, 1] >= 1.0:
            raise ValueError("zoom upper bound must stay below 1")
        if (
            self.model_kind is WarpKind.SIMILARITY_4DOF
            and self.bounds[3, 1] >= 1.0
        ):
            raise ValueError("similarity scale upper bound must stay below 1")

    @property
    def dof(self) -> int:
        return DOF_BY_KIND[self.model_kind]

    def model(self, theta) -> WarpModel:
        return WarpModel(self.model_kind, np.asarray(theta, dtype=float))


def _components(problem: CompositeProblem, theta) -> tuple[float, float]:
    """(objective G, penalty R) at theta; raises SingularWarpError when ill-posed."""
    model = problem.model(theta)
    iwe = build_iwe(problem.window, model, problem.geometry, problem.objective)
    g = objective_value(iwe, problem.objective)
    if problem.reg_kind is RegKind.NONE:
        r = 0.0
    elif problem.reg_kind is RegKind.GEOMETRIC:
        r = reg_geometric(model, problem.geometry, problem.reg_options)
    else:
        r = reg_event_based(
            problem.window, model, problem.geometry, problem.reg_kind, problem.reg_options
        )
    return g, r


def composite_value(problem: CompositeProblem, theta) -> float:
    """-G + lambda R at theta; +inf when the warp is singular inside the box."""
    try:
        g, r = _components(problem, theta)
    except SingularWarpError:
        return float("inf")
    return -g + problem.lam * r


@dataclass
class SolveReport:
    """Outcome of one estimation run."""

    theta_hat: np.ndarray
    value: float
    objective_g: float
    reg_value: float
    geometric_reg: float
    collapsed: bool
    evaluations: int
    wall_time_s: float
    trace: list[tuple[int, float]] = field(repr=False, default_factory=list)

    def to_record(self) -> str:
        """Flat key = value text serialization."""
        lines = [
            f"value = {float(self.value)!r}",
            f"objective_g = {float(self.objective_g)!r}",
            f"reg_value = {float(self.reg_value)!r}",
            f"geometric_reg = {float(self.geometric_reg)!r}",
            f"collapsed = {int(self.collapsed)}",
            f"evaluations = {self.evaluations}",
            f"wall_time_s = {float(self.wall_time_s)!r}",
        ]
        theta = ", ".join(repr(float(v)) for v in self.theta_hat)
        return "\n".join([f"theta_hat = {theta}"] + lines) + "\n"


def minimize_box(fn, bounds: np.ndarray, budget: int, seed: int, top_k: int = 3):
    """Quasi-random multi-start plus simplex refinement inside a box.

    Returns (best_theta, trace) where trace records every evaluation in
    order.  Deterministic for a fixed seed; ties break toward the earliest
    evaluation.
    """
    bounds = np.asarray(bounds, dtype=float)
    d = bounds.shape[0]
    lo, hi = bounds[:, 0], bounds[:, 1]
    trace: list[tuple[int, float]] = []

    def wrapped(theta):
        v = float(fn(np.asarray(theta, dtype=float)))
        trace.append((len(trace), v))
        return v

    n_init = int(2 ** np.floor(np.log2(max(budget // 2, 2 * d + 2))))
    n_init = min(n_init, max(budget - 20 * d, 2 * d + 2))
    sampler = qmc.Sobol(d, scramble=True, seed=seed)
    starts = qmc.scale(sampler.random(n_init), lo, hi)
    starts = np.vstack([0.5 * (lo + hi), starts])
    values = np.array([wrapped(s) for s in starts])
    order = np.argsort(values, kind="stable")[: max(1, top_k)]
    remaining = budget - len(trace)
    best_theta = starts[order[0]].copy()
    best_value = values[order[0]]
    per_start = max(remaining // max(1, len(order)), 0)
    for idx in order:
        if per_start < 2 * d + 2 or not np.isfinite(values[idx]):
            continue
        res = sciopt.minimize(
            wrapped,
            starts[idx],
            method="Nelder-Mead",
            bounds=sciopt.Bounds(lo, hi),
            options={
                "maxfev": per_start,
                "xatol": 1e-7,
                "fatol": 1e-12,
                "adaptive": d > 2,
            },
        )
        if res.fun < best_value:
            best_value = res.fun
            best_theta = np.clip(res.x, lo, hi)
    return best_theta, trace


def solve(problem: CompositeProblem, budget: int = 500, seed: int = 0) -> SolveReport:
    """Estimate warp parameters on one window under an evaluation budget."""
    if budget < 10 * problem.dof:
        raise ValueError("budget must be at least 10 evaluations per DOF")
    t0 = time.perf_counter()
    theta, trace = minimize_box(
        lambda th: composite_value(problem, th), problem.bounds, budget, seed
    )
    if not any(np.isfinite(v) for _, v in trace):
        raise ValueError("composite objective is infeasible everywhere sampled")
    wall = time.perf_counter() - t0
    try:
        g, r = _components(problem, theta)
        value = -g + problem.lam * r
    except SingularWarpError:  # pragma: no cover
        g, r, value = float("nan"), float("nan"), float("inf")
    geo = reg_geometric(problem.model(theta), problem.geometry, problem.reg_options)
    return SolveReport(
        theta_hat=np.asarray(theta, dtype=float),
        value=float(value),
        objective_g=float(g),
        reg_value=float(r),
        geometric_reg=float(geo),
        collapsed=bool(geo > COLLAPSE_THRESHOLD),
        evaluations=len(trace),
        wall_time_s=wall,
        trace=trace,
    )


def landscape_sweep(
    problem: CompositeProblem,
    axis: int = 0,
    grid: int = 100,
    theta_fixed=None,
) -> np.ndarray:
    """Evaluate -G, R and the composite along one parameter axis.

    Returns an array of rows (theta_axis, neg_G, R, composite) over a uniform
    inclusive grid spanning the axis bounds.  Non-swept DOFs sit at
    theta_fixed (zeros by default).
    """
    if not 0 <= axis < problem.dof:
        raise ValueError(f"axis must be in [0, {problem.dof})")
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    base = np.zeros(problem.dof) if theta_fixed is None else np.asarray(theta_fixed, float)
    if base.size != problem.dof:
        raise ValueError("theta_fixed must have one entry per DOF")
    lo, hi = problem.bounds[axis]
    rows = np.empty((grid, 4))
    for i, v in enumerate(np.linspace(lo, hi, grid)):
        theta = base.copy()
        theta[axis] = v
        try:
            g, r = _components(problem, theta)
            comp = -g + problem.lam * r
        except SingularWarpError:
            g, r, comp = np.nan, np.nan, np.inf
        rows[i] = (v, -g, r, comp)
    return rows
