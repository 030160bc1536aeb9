"""Simulation and steering of the bilinear formation dynamics.

With controls held constant on an interval the state map is the exact flow
p -> D(exp(h M)) p with M the weighted sum of edge generators, and D
repeating a matrix once per coordinate. Only the small N-by-N exponential is
ever formed. Steering composes these exact flows and solves the two-point
problem by damped Gauss-Newton shooting on the stacked control values;
tracking replans leg by leg across graph switches.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .configspace import Configuration, parse_configuration_json
from .digraph import Digraph, StructuralKind, parse_graph_text, structural_verdict
from .errors import (
    DimensionMismatch,
    InconsistentSchedule,
    InputFormatError,
    NegativeDuration,
    SegmentFailure,
    StepTooLarge,
    StructuralFailure,
    UnknownEdge,
)
from .larc import larc_passes

__all__ = [
    "GraphSchedule",
    "ControlSchedule",
    "Trajectory",
    "SteerOptions",
    "SteerResult",
    "TrackOptions",
    "TrackResult",
    "flow_constant",
    "simulate",
    "steer",
    "track_path",
    "parse_graph_schedule",
    "parse_waypoints",
    "format_control_schedule_csv",
    "parse_control_schedule_csv",
    "format_trajectory_csv",
    "parse_trajectory_csv",
]

# two time stamps closer than this (relative to the horizon) are one instant
_TIME_EPS = 1e-12


def _close(a: float, b: float, scale: float) -> bool:
    return abs(a - b) <= _TIME_EPS * max(1.0, scale)


@dataclass(frozen=True)
class GraphSchedule:
    """Right-continuous piecewise-constant graph of interaction over [0, horizon]."""

    segments: tuple[tuple[float, Digraph], ...]
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise InconsistentSchedule(f"horizon must be positive, got {self.horizon}")
        if not self.segments:
            raise InconsistentSchedule("schedule needs at least one segment")
        starts = [t for t, _ in self.segments]
        if starts[0] != 0.0:
            raise InconsistentSchedule(f"first segment must start at 0, got {starts[0]}")
        for a, b in zip(starts, starts[1:]):
            if b <= a:
                raise InconsistentSchedule("segment start times must strictly increase")
        if starts[-1] >= self.horizon:
            raise InconsistentSchedule("last segment starts at or after the horizon")
        sizes = {g.num_vertices for _, g in self.segments}
        if len(sizes) != 1:
            raise InconsistentSchedule("all segment graphs must share the vertex count")

    @classmethod
    def constant(cls, g: Digraph, horizon: float) -> "GraphSchedule":
        return cls(((0.0, g),), horizon)

    @property
    def num_vertices(self) -> int:
        return self.segments[0][1].num_vertices

    @property
    def switch_times(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.segments[1:])

    def active(self, t: float) -> Digraph:
        """Graph in force at time t (right-continuous)."""
        if t < 0 or t > self.horizon:
            raise InconsistentSchedule(f"time {t} outside [0, {self.horizon}]")
        current = self.segments[0][1]
        for start, g in self.segments[1:]:
            if t >= start:
                current = g
            else:
                break
        return current


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant edge controls on a grid 0 = t_0 < ... < t_M = T."""

    grid: tuple[float, ...]
    values: tuple[dict[tuple[int, int], float], ...]

    def __post_init__(self):
        if len(self.grid) < 2:
            raise InconsistentSchedule("control grid needs at least two breakpoints")
        for a, b in zip(self.grid, self.grid[1:]):
            if b <= a:
                raise InconsistentSchedule("control grid must strictly increase")
        if len(self.values) != len(self.grid) - 1:
            raise InconsistentSchedule(
                f"{len(self.grid) - 1} intervals but {len(self.values)} value maps")

    @property
    def horizon(self) -> float:
        return self.grid[-1]

    def interval_of(self, t: float) -> int:
        """Index of the interval containing t (right-continuous)."""
        for k in range(len(self.values) - 1, -1, -1):
            if t >= self.grid[k]:
                return k
        return 0

    def validate_against(self, schedule: GraphSchedule) -> None:
        """Grid must refine the switch times; edges must exist when referenced."""
        scale = schedule.horizon
        if not _close(self.grid[0], 0.0, scale) or \
                not _close(self.grid[-1], schedule.horizon, scale):
            raise InconsistentSchedule("control grid must cover [0, horizon] exactly")
        for s in schedule.switch_times:
            if not any(_close(s, t, scale) for t in self.grid):
                raise InconsistentSchedule(
                    f"graph switch at t={s} is not a control breakpoint")
        for k, u in enumerate(self.values):
            g = schedule.active(self.grid[k])
            for e in u:
                if e not in g.edges:
                    raise UnknownEdge(
                        f"control references edge {e[0]}->{e[1]} absent from the "
                        f"graph active at t={self.grid[k]}")


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: states[k] is the configuration at times[k]."""

    times: tuple[float, ...]
    states: tuple[Configuration, ...]

    def __post_init__(self):
        if len(self.times) != len(self.states) or not self.times:
            raise InconsistentSchedule("times and states must align and be nonempty")
        for a, b in zip(self.times, self.times[1:]):
            if b <= a:
                raise InconsistentSchedule("sample times must strictly increase")
        shapes = {(s.n, s.N) for s in self.states}
        if len(shapes) != 1:
            raise InconsistentSchedule("all states must share (n, N)")

    @property
    def final(self) -> Configuration:
        return self.states[-1]


def _control_matrix(g: Digraph, u: Mapping[tuple[int, int], float]) -> np.ndarray | None:
    """Weighted generator sum as an N x N array; None when every weight is zero."""
    m = None
    for (i, j), w in u.items():
        if (i, j) not in g.edges:
            raise UnknownEdge(f"edge {i}->{j} is not in the graph")
        if w == 0.0:
            continue
        if m is None:
            m = np.zeros((g.num_vertices, g.num_vertices))
        m[i - 1, i - 1] -= w
        m[i - 1, j - 1] += w
    return m


def _apply_transition(p: Configuration, e: np.ndarray) -> Configuration:
    """Image of p under the per-coordinate transition matrix e."""
    x = p.coords.reshape(p.n, p.N)
    return Configuration(p.n, p.N, (x @ e.T).reshape(-1))


def flow_constant(g: Digraph, u: Mapping[tuple[int, int], float],
                  p: Configuration, h: float) -> Configuration:
    """Exact flow of the constant-control dynamics over duration h.

    Controls u are keyed by edges of g; missing edges mean zero. The zero
    control map returns p itself, bit for bit.
    """
    if h < 0:
        raise NegativeDuration(f"duration must be nonnegative, got {h}")
    if p.N != g.num_vertices:
        raise DimensionMismatch(
            f"graph has {g.num_vertices} vertices, configuration has {p.N} agents")
    m = _control_matrix(g, u)
    if m is None or h == 0.0:
        return p
    return _apply_transition(p, expm(h * m))


def _sample_grid(breakpoints: Sequence[float], dt: float, horizon: float) -> list[float]:
    """Breakpoints plus the dt lattice, deduplicated and sorted."""
    steps = int(math.floor(horizon / dt + 0.5 * _TIME_EPS))
    candidates = sorted(set(breakpoints) | {k * dt for k in range(steps + 1)} | {0.0, horizon})
    out: list[float] = []
    for t in candidates:
        if t < -_TIME_EPS or t > horizon * (1 + _TIME_EPS):
            continue
        if out and _close(out[-1], t, horizon):
            continue
        out.append(t)
    return out


def simulate(schedule: GraphSchedule,
             controls: ControlSchedule | Callable[[float, Configuration],
                                                  Mapping[tuple[int, int], float]],
             p0: Configuration, dt: float) -> Trajectory:
    """Integrate the switched system, sampling at every breakpoint and every dt.

    A ControlSchedule is piecewise constant and integrates exactly through
    matrix exponentials. A callable is treated as state feedback
    u = controls(t, p) and integrated with classical fourth-order steps of at
    most dt, split so no step straddles a breakpoint.
    """
    if p0.N != schedule.num_vertices:
        raise InconsistentSchedule(
            f"schedule is over {schedule.num_vertices} vertices, "
            f"configuration has {p0.N} agents")
    if dt <= 0:
        raise StepTooLarge(f"dt must be positive, got {dt}")
    breakpoints = [0.0, schedule.horizon]
    breakpoints.extend(schedule.switch_times)
    exact = isinstance(controls, ControlSchedule)
    if exact:
        controls.validate_against(schedule)
        breakpoints.extend(controls.grid)
    breakpoints = sorted(set(breakpoints))
    min_gap = min(b - a for a, b in zip(breakpoints, breakpoints[1:]))
    if dt > min_gap * (1 + 1e-9):
        raise StepTooLarge(
            f"dt={dt} exceeds the smallest breakpoint interval {min_gap}")

    times = _sample_grid(breakpoints, dt, schedule.horizon)
    states = [p0]
    current = p0
    for a, b in zip(times, times[1:]):
        h = b - a
        g = schedule.active(a)
        if exact:
            u = controls.values[controls.interval_of(a + h / 2)]
            current = flow_constant(g, u, current, h)
        else:
            current = _rk4_step(g, controls, current, a, h)
        states.append(current)
    return Trajectory(tuple(times), tuple(states))


def _rk4_step(g: Digraph, feedback, p: Configuration, t: float, h: float) -> Configuration:
    def deriv(tt: float, coords: np.ndarray) -> np.ndarray:
        conf = Configuration(p.n, p.N, coords)
        m = _control_matrix(g, feedback(tt, conf))
        if m is None:
            return np.zeros_like(coords)
        return (coords.reshape(p.n, p.N) @ m.T).reshape(-1)

    y = p.coords
    k1 = deriv(t, y)
    k2 = deriv(t + h / 2, y + h / 2 * k1)
    k3 = deriv(t + h / 2, y + h / 2 * k2)
    k4 = deriv(t + h, y + h * k3)
    return Configuration(p.n, p.N, y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))


# -- steering --------------------------------------------------------------

@dataclass(frozen=True)
class SteerOptions:
    """Gauss-Newton shooting parameters; defaults match the reference runs."""

    tolerance: float = 1e-8
    max_iterations: int = 200
    damping_init: float = 1e-3
    fd_step: float = 1e-6
    multi_start: int = 4
    seed: int = 0
    check_rank_condition: bool = True


@dataclass(frozen=True)
class SteerResult:
    controls: ControlSchedule
    residual: float
    start_index: int
    iterations: int
    no_progress: bool
    warnings: tuple[str, ...] = ()


def _compose_flows(edges: list[tuple[int, int]], g: Digraph, theta: np.ndarray,
                   p0: Configuration, h: float, segments: int) -> Configuration:
    e_count = len(edges)
    p = p0
    for s in range(segments):
        u = dict(zip(edges, theta[s * e_count:(s + 1) * e_count]))
        p = flow_constant(g, u, p, h)
    return p


def steer(g: Digraph, p0: Configuration, p1: Configuration, segments: int,
          T: float, opts: SteerOptions = SteerOptions()) -> SteerResult:
    """Find piecewise-constant controls driving p0 toward p1 over [0, T].

    Single shooting over segments equal intervals: the unknowns are one
    control value per (interval, edge), the objective the final-state
    mismatch. Damped Gauss-Newton with forward-difference Jacobians; a zero
    initialization first, then deterministic random restarts. The first
    start reaching the tolerance wins; otherwise the best residual does,
    ties to the earlier start. A stalled start (improvement below 1e-14 with
    the residual still above tolerance) is reported, not raised.
    """
    if T <= 0:
        raise NegativeDuration(f"horizon must be positive, got {T}")
    if segments < 2:
        raise InconsistentSchedule(f"steering needs at least 2 segments, got {segments}")
    if (p0.n, p0.N) != (p1.n, p1.N):
        raise InconsistentSchedule("endpoint configurations must share (n, N)")
    if p0.N != g.num_vertices:
        raise InconsistentSchedule(
            f"graph has {g.num_vertices} vertices, configurations have {p0.N} agents")
    warns = []
    if opts.check_rank_condition:
        for name, p in (("initial", p0), ("target", p1)):
            if not larc_passes(p, g):
                msg = (f"{name} configuration fails the rank condition on this "
                       "graph; steering may stall")
                warns.append(msg)
                warnings.warn(msg, stacklevel=2)

    edges = sorted(g.edges)
    h = T / segments
    dim = segments * len(edges)
    target = p1.coords

    def objective(theta: np.ndarray) -> np.ndarray:
        return _compose_flows(edges, g, theta, p0, h, segments).coords - target

    best: tuple[float, int, np.ndarray, int, bool] | None = None
    for start in range(max(1, opts.multi_start)):
        if start == 0:
            theta = np.zeros(dim)
        else:
            rng = np.random.default_rng((opts.seed, start))
            theta = rng.uniform(-0.5, 0.5, size=dim)
        theta, res, iters, stalled = _gauss_newton(objective, theta, opts)
        if best is None or res < best[0]:
            best = (res, start, theta, iters, stalled)
        if res <= opts.tolerance:
            break

    res, start, theta, iters, stalled = best
    grid = tuple(k * T / segments for k in range(segments)) + (T,)
    values = tuple(
        dict(zip(edges, map(float, theta[s * len(edges):(s + 1) * len(edges)])))
        for s in range(segments))
    no_progress = stalled and res > opts.tolerance
    return SteerResult(ControlSchedule(grid, values), float(res), start, iters,
                       no_progress, tuple(warns))


def _gauss_newton(objective, theta: np.ndarray, opts: SteerOptions):
    """Damped Gauss-Newton; returns (theta, residual, iterations, stalled)."""
    r = objective(theta)
    res = float(np.linalg.norm(r))
    lam = opts.damping_init
    last_improvement = math.inf
    iters = 0
    while iters < opts.max_iterations and res > opts.tolerance:
        iters += 1
        jac = _fd_jacobian(objective, theta, r, opts.fd_step)
        jtj = jac.T @ jac
        rhs = -jac.T @ r
        try:
            step = np.linalg.solve(jtj + lam * np.eye(len(theta)), rhs)
        except np.linalg.LinAlgError:
            lam *= 10
            continue
        trial = theta + step
        r_trial = objective(trial)
        res_trial = float(np.linalg.norm(r_trial))
        if res_trial < res:
            last_improvement = res - res_trial
            theta, r, res = trial, r_trial, res_trial
            lam = max(lam / 10, 1e-15)
        else:
            lam *= 10
            if lam > 1e12:
                break
    stalled = res > opts.tolerance and last_improvement < 1e-14
    return theta, res, iters, stalled


def _fd_jacobian(objective, theta: np.ndarray, r0: np.ndarray, rel_step: float) -> np.ndarray:
    jac = np.empty((r0.size, theta.size))
    for c in range(theta.size):
        delta = rel_step * max(1.0, abs(theta[c]))
        bumped = theta.copy()
        bumped[c] += delta
        jac[:, c] = (objective(bumped) - r0) / delta
    return jac


# -- waypoint tracking -----------------------------------------------------

@dataclass(frozen=True)
class TrackOptions:
    segments_per_leg: int = 4
    dt: float | None = None
    steer: SteerOptions = field(default_factory=SteerOptions)


@dataclass(frozen=True)
class TrackResult:
    controls: ControlSchedule
    trajectory: Trajectory
    max_deviation: float
    leg_residuals: tuple[float, ...]


def track_path(schedule: GraphSchedule,
               waypoints: Sequence[tuple[float, Configuration]],
               epsilon: float,
               start: Configuration | None = None,
               opts: TrackOptions = TrackOptions()) -> TrackResult:
    """Steer through the waypoints leg by leg, replanning from achieved states.

    Each leg targets residual epsilon/2 under the graph active during the
    leg; the waypoint times must include every switch time, so a leg never
    straddles a switch. Every segment graph in use must pass the structural
    size test. The reported deviation is the largest distance between the
    achieved state and the waypoint, measured at the waypoint times
    (including the start offset when tracking begins off the path).
    """
    if epsilon <= 0:
        raise InconsistentSchedule(f"epsilon must be positive, got {epsilon}")
    wps = list(waypoints)
    if len(wps) < 2:
        raise InconsistentSchedule("tracking needs at least two waypoints")
    times = [t for t, _ in wps]
    if times[0] != 0.0:
        raise InconsistentSchedule(f"first waypoint must sit at t=0, got {times[0]}")
    for a, b in zip(times, times[1:]):
        if b <= a:
            raise InconsistentSchedule("waypoint times must strictly increase")
    if times[-1] > schedule.horizon * (1 + _TIME_EPS):
        raise InconsistentSchedule("waypoints extend past the schedule horizon")
    for s in schedule.switch_times:
        if s < times[-1] and not any(_close(s, t, schedule.horizon) for t in times):
            raise InconsistentSchedule(
                f"graph switch at t={s} must coincide with a waypoint")

    n = wps[0][1].n
    for t, _ in wps[:-1]:
        g = schedule.active(t)
        verdict = structural_verdict(g, n)
        if verdict.kind is not StructuralKind.GENERICALLY_CONTROLLABLE:
            raise StructuralFailure(
                f"graph active at t={t} has verdict {verdict.kind.value}; "
                f"offending maximal components {list(verdict.offending_components)}")

    scale = max(1.0, max(float(np.max(np.abs(p.coords))) for _, p in wps))
    for (ta, pa), (tb, pb) in zip(wps, wps[1:]):
        gap = float(np.linalg.norm(pb.coords - pa.coords))
        if gap > 0.5 * scale:
            warnings.warn(
                f"waypoints at t={ta} and t={tb} are {gap:.3g} apart, above half "
                "the configuration scale; steering legs may struggle", stacklevel=2)

    current = wps[0][1] if start is None else start
    deviations = [float(np.linalg.norm(current.coords - wps[0][1].coords))]
    grid: list[float] = [0.0]
    values: list[dict[tuple[int, int], float]] = []
    leg_residuals = []
    steer_opts = replace(opts.steer, tolerance=epsilon / 2)
    for leg, ((t_a, _), (t_b, p_target)) in enumerate(zip(wps, wps[1:])):
        g = schedule.active(t_a)
        result = steer(g, current, p_target, opts.segments_per_leg, t_b - t_a,
                       steer_opts)
        if result.residual > epsilon / 2:
            raise SegmentFailure(leg, result.residual, epsilon / 2)
        leg_residuals.append(result.residual)
        for k, u in enumerate(result.controls.values):
            grid.append(t_a + result.controls.grid[k + 1])
            values.append(u)
        current = _compose_flows(sorted(g.edges), g, _flatten(result.controls, g),
                                 current, (t_b - t_a) / opts.segments_per_leg,
                                 opts.segments_per_leg)
        deviations.append(float(np.linalg.norm(current.coords - p_target.coords)))

    controls = ControlSchedule(tuple(grid), tuple(values))
    dt = opts.dt
    if dt is None:
        dt = min(b - a for a, b in zip(grid, grid[1:]))
    horizon = times[-1]
    sub_schedule = GraphSchedule(
        tuple((t, g) for t, g in schedule.segments if t < horizon), horizon)
    trajectory = simulate(sub_schedule, controls, wps[0][1] if start is None else start,
                          dt)
    return TrackResult(controls, trajectory, max(deviations), tuple(leg_residuals))


def _flatten(controls: ControlSchedule, g: Digraph) -> np.ndarray:
    edges = sorted(g.edges)
    return np.array([u.get(e, 0.0) for u in controls.values for e in edges])


# -- file formats ----------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def parse_graph_schedule(text: str, horizon: float, base_dir=None) -> GraphSchedule:
    """JSON list [{"t": float, "graph": <path or {"N":., "edges":[[i,j],..]}>}].

    Path entries are resolved against base_dir. The horizon is supplied by
    the caller; it is not part of the file.
    """
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"bad JSON: {exc}") from None
    if not isinstance(items, list) or not items:
        raise InputFormatError("expected a nonempty JSON list of segments")
    segments = []
    for item in items:
        if not isinstance(item, dict) or "t" not in item or "graph" not in item:
            raise InputFormatError('each segment needs keys "t" and "graph"')
        t = item["t"]
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t):
            raise InputFormatError(f'bad segment time {t!r}')
        spec = item["graph"]
        if isinstance(spec, str):
            import os
            path = spec if base_dir is None else os.path.join(base_dir, spec)
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    g = parse_graph_text(fh.read())
            except OSError as exc:
                raise InputFormatError(f"cannot read graph file {spec!r}: {exc}") from None
        elif isinstance(spec, dict) and {"N", "edges"} <= set(spec):
            try:
                g = Digraph(spec["N"], [tuple(e) for e in spec["edges"]])
            except Exception as exc:
                raise InputFormatError(f"bad inline graph: {exc}") from None
        else:
            raise InputFormatError(
                'segment "graph" must be a path or {"N": ..., "edges": [...]}')
        segments.append((float(t), g))
    try:
        return GraphSchedule(tuple(segments), horizon)
    except InconsistentSchedule as exc:
        raise InputFormatError(str(exc)) from None


def parse_waypoints(text: str, base_dir=None) -> list[tuple[float, Configuration]]:
    """JSON list [{"t": float, "config": <path or inline configuration>}]."""
    try:
        items = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"bad JSON: {exc}") from None
    if not isinstance(items, list) or not items:
        raise InputFormatError("expected a nonempty JSON list of waypoints")
    out = []
    for item in items:
        if not isinstance(item, dict) or "t" not in item or "config" not in item:
            raise InputFormatError('each waypoint needs keys "t" and "config"')
        t = item["t"]
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t):
            raise InputFormatError(f"bad waypoint time {t!r}")
        spec = item["config"]
        if isinstance(spec, str):
            import os
            from .configspace import load_configuration
            path = spec if base_dir is None else os.path.join(base_dir, spec)
            try:
                p = load_configuration(path)
            except OSError as exc:
                raise InputFormatError(f"cannot read config file {spec!r}: {exc}") from None
        elif isinstance(spec, dict):
            p = parse_configuration_json(json.dumps(spec))
        else:
            raise InputFormatError('waypoint "config" must be a path or an object')
        out.append((float(t), p))
    return out


def format_control_schedule_csv(controls: ControlSchedule) -> str:
    lines = ["t_start,t_end,i,j,u"]
    for k, u in enumerate(controls.values):
        a, b = controls.grid[k], controls.grid[k + 1]
        for (i, j) in sorted(u):
            lines.append(f"{_fmt(a)},{_fmt(b)},{i},{j},{_fmt(u[(i, j)])}")
    return "\n".join(lines) + "\n"


def parse_control_schedule_csv(text: str) -> ControlSchedule:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("t_start"):
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise InputFormatError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1]),
                         int(parts[2]), int(parts[3]), float(parts[4])))
        except ValueError:
            raise InputFormatError(f"line {lineno}: bad field in {raw!r}") from None
    if not rows:
        raise InputFormatError("empty control schedule")
    intervals: dict[tuple[float, float], dict[tuple[int, int], float]] = {}
    for a, b, i, j, u in rows:
        intervals.setdefault((a, b), {})[(i, j)] = u
    ordered = sorted(intervals)
    grid = [ordered[0][0]]
    values = []
    for (a, b) in ordered:
        if not _close(a, grid[-1], abs(ordered[-1][1])):
            raise InputFormatError(f"interval [{a}, {b}] does not continue the grid")
        grid.append(b)
        values.append(intervals[(a, b)])
    try:
        return ControlSchedule(tuple(grid), tuple(values))
    except InconsistentSchedule as exc:
        raise InputFormatError(str(exc)) from None


def format_trajectory_csv(traj: Trajectory) -> str:
    n = traj.states[0].n
    header = "t,agent," + ",".join(f"x{d}" for d in range(1, n + 1))
    lines = [header]
    for t, state in zip(traj.times, traj.states):
        for i in range(1, state.N + 1):
            coords = ",".join(_fmt(c) for c in state.agent(i))
            lines.append(f"{_fmt(t)},{i},{coords}")
    return "\n".join(lines) + "\n"


def parse_trajectory_csv(text: str) -> Trajectory:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("t,"):
            continue
        parts = line.split(",")
        if len(parts) < 3:
            raise InputFormatError(f"line {lineno}: too few fields")
        try:
            rows.append((float(parts[0]), int(parts[1]),
                         [float(x) for x in parts[2:]]))
        except ValueError:
            raise InputFormatError(f"line {lineno}: bad field in {raw!r}") from None
    if not rows:
        raise InputFormatError("empty trajectory")
    n = len(rows[0][2])
    by_time: dict[float, dict[int, list[float]]] = {}
    for t, agent, coords in rows:
        if len(coords) != n:
            raise InputFormatError("inconsistent coordinate counts")
        by_time.setdefault(t, {})[agent] = coords
    times = sorted(by_time)
    states = []
    for t in times:
        agents = by_time[t]
        if sorted(agents) != list(range(1, len(agents) + 1)):
            raise InputFormatError(f"t={t}: agents must be 1..N")
        states.append(Configuration.from_agents(
            [agents[i] for i in sorted(agents)]))
    try:
        return Trajectory(tuple(times), tuple(states))
    except InconsistentSchedule as exc:
        raise InputFormatError(str(exc)) from None
