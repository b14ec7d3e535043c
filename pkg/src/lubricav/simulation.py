"""Time stepping with the implicit characteristics scheme and run diagnostics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .activeset import PdasConfig, PdasSolution, ReducedSolver, pdas_solve
from .assembly import Assembler, SaddleLcpSystem
from .characteristics import TransportData
from .fem import ElementFamily, MixedSpace, ScalarField, build_mixed_space
from .laws import ConstantSpeed
from .mesh import (
    DEFAULT_SIDE_TAGS,
    SIDES,
    BoundaryTag,
    Mesh,
    build_interval_mesh,
    build_structured_triangular_mesh,
)

log = logging.getLogger(__name__)

CAVITATION_THRESHOLD = 1.0 - 1e-8
THETA_MONITOR_TOL = 1e-8


class InvalidCase(ValueError):
    """A case configuration violates its invariants."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SolverFailure(RuntimeError):
    """The active-set solve of a time step failed; carries the last good state."""

    def __init__(self, message, step, last_state):
        super().__init__(message)
        self.step = step
        self.last_state = last_state


class NonStationary(RuntimeError):
    """The steady-state loop hit its step cap."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class MeshSpec:
    """Interval ``(lower[0], upper[0])`` or rectangle with ``cells`` per axis."""

    dim: int
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    cells: Tuple[int, ...]
    side_tags: Tuple[Tuple[str, BoundaryTag], ...] = tuple(DEFAULT_SIDE_TAGS.items())

    def build(self) -> Mesh:
        if self.dim == 1:
            return build_interval_mesh(self.lower[0], self.upper[0], self.cells[0])
        bbox = (self.lower[0], self.upper[0], self.lower[1], self.upper[1])
        return build_structured_triangular_mesh(bbox, self.cells[0], self.cells[1], dict(self.side_tags))

    @property
    def tags(self):
        if self.dim == 1:
            return {BoundaryTag.INLET, BoundaryTag.OUTLET}
        return {BoundaryTag(t) for _, t in self.side_tags}


@dataclass
class CaseConfig:
    name: str
    mesh: MeshSpec
    viscosity: float
    thickness: Callable
    boundary_pressure: Dict[BoundaryTag, float]
    tau: float
    t_end: float
    t0: float = 0.0
    speed: Callable = field(default_factory=lambda: ConstantSpeed(0.0))
    family: ElementFamily = ElementFamily.RT0_P0
    theta0: Union[float, Callable] = 1.0
    theta_in: float = 1.0
    pdas: PdasConfig = field(default_factory=PdasConfig)
    steady_tol: float = 1e-12
    max_steps: int = 100000
    units: str = "SI"
    quad_degree: Optional[int] = None

    @property
    def n_steps(self):
        """Number of steps covering ``[t0, t_end]``."""
        if self.t_end <= self.t0:
            return 0
        return int(math.ceil((self.t_end - self.t0) / self.tau * (1.0 - 1e-12)))

    def validate(self) -> List[str]:
        """Human-readable invariant violations (empty when valid)."""
        problems = []
        if not self.viscosity > 0:
            problems.append(f"fluid.viscosity: must be positive, got {self.viscosity}")
        if not self.tau > 0:
            problems.append(f"time.tau: must be positive, got {self.tau}")
        if not self.t_end >= self.t0:
            problems.append(f"time.end: must not precede time.t0 ({self.t_end} < {self.t0})")
        if not self.steady_tol > 0:
            problems.append(f"time.steady_tol: must be positive, got {self.steady_tol}")
        if not self.max_steps >= 1:
            problems.append(f"time.max_steps: must be at least 1, got {self.max_steps}")
        if not 0.0 <= self.theta_in <= 1.0:
            problems.append(f"initial.theta_in: must lie in [0, 1], got {self.theta_in}")
        if not callable(self.theta0) and not 0.0 <= float(self.theta0) <= 1.0:
            problems.append(f"initial.theta: must lie in [0, 1], got {self.theta0}")

        spec = self.mesh
        if spec.dim not in (1, 2) or len(spec.lower) != spec.dim or len(spec.upper) != spec.dim:
            problems.append(f"mesh.dim: unsupported mesh description {spec}")
            return problems
        for ax in range(spec.dim):
            if not spec.upper[ax] > spec.lower[ax]:
                problems.append(f"mesh: empty extent along axis {ax} ({spec.lower[ax]} .. {spec.upper[ax]})")
        if any(int(n) != n or n < 1 for n in spec.cells):
            problems.append(f"mesh: cell counts must be positive integers, got {spec.cells}")
        if spec.dim == 2:
            sides = [s for s, _ in spec.side_tags]
            missing = [s for s in SIDES if s not in sides]
            if missing:
                problems.append(f"mesh: sides without a boundary tag: {missing}")
        unknown = [t for t in self.boundary_pressure if BoundaryTag(t) not in spec.tags]
        if unknown:
            problems.append(f"boundary: pressure given for tags not on the mesh: {[BoundaryTag(t).value for t in unknown]}")
        if not self.boundary_pressure:
            problems.append("boundary: at least one boundary part needs a prescribed pressure")
        walls = spec.tags - {BoundaryTag(t) for t in self.boundary_pressure}
        if walls and self.family is not ElementFamily.RT0_P0:
            problems.append("boundary: wall (no pressure) parts are only supported with the rt0 family")
        if problems:
            return problems

        # sample the thickness law over the domain and the time window
        axes = [np.linspace(spec.lower[a], spec.upper[a], min(4 * spec.cells[a] + 1, 4001)) for a in range(spec.dim)]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        steady = getattr(self.thickness, "steady", False)
        times = [self.t0] if steady else np.linspace(self.t0, max(self.t_end, self.t0), 257)
        hmin = min(float(np.min(self.thickness(pts, t))) for t in times)
        if not hmin > 0:
            problems.append(f"thickness: minimum film thickness {hmin:.6g} is not positive (requires 0 < h0 <= h)")
        if callable(self.theta0):
            th = np.asarray(self.theta0(pts), dtype=float)
            if th.min() < 0 or th.max() > 1:
                problems.append(f"initial.theta: values must lie in [0, 1], found [{th.min():.6g}, {th.max():.6g}]")
        return problems

    def check(self):
        problems = self.validate()
        if problems:
            raise InvalidCase(problems)


@dataclass
class FilmState:
    t: float
    U: np.ndarray
    P: np.ndarray
    Lam: np.ndarray
    theta: np.ndarray
    step: int = 0


@dataclass
class StepDiagnostics:
    step: int
    t: float
    iterations: int
    active_count: int
    mass_balance: float
    mass_balance_scale: float
    flux_residual: float
    mass_residual: float
    max_pressure: float
    min_theta: float
    extent: Optional[List[Tuple[float, float]]]
    factorizations: int = 0


@dataclass
class TransientResult:
    final: FilmState
    diagnostics: List[StepDiagnostics]
    states: List[FilmState]


@dataclass
class SteadyResult:
    state: FilmState
    steps: int
    converged: bool
    last_change: float
    diagnostics: List[StepDiagnostics]

    @property
    def fixed_point_step(self):
        """Index of the first step whose result was already stationary."""
        return self.steps - 1


def mass_balance_residual(state: FilmState, system: SaddleLcpSystem) -> float:
    """``|sum(B^T U) + sum(D Lam) - sum(F_q)|``: boundary outflow plus stored minus supplied."""
    return abs(float(np.sum(system.B_csc.T @ state.U) + np.sum(system.D * state.Lam) - np.sum(system.F_q)))


def mass_balance_scale(state: FilmState, system: SaddleLcpSystem) -> float:
    return float(
        np.sum(np.abs(system.B_csc.T @ state.U)) + np.sum(system.D * np.abs(state.Lam)) + np.sum(np.abs(system.F_q))
    )


def cavitation_extent(theta, points, threshold=CAVITATION_THRESHOLD):
    """Per-axis ``(min, max)`` of DOF points with ``theta < threshold``, or ``None``."""
    theta = np.asarray(theta)
    points = np.asarray(points, dtype=float).reshape(theta.size, -1)
    cav = theta < threshold
    if not cav.any():
        return None
    sel = points[cav]
    return [(float(sel[:, a].min()), float(sel[:, a].max())) for a in range(points.shape[1])]


def boundary_pressure_trace(system: SaddleLcpSystem, state: FilmState, space: MixedSpace):
    """Pressure seen weakly on each boundary facet through its flux rows.

    Returns ``(facets, values)``; for RT0 every boundary flux row reads
    ``coef * p_facet = (M U + B P)_i``.
    """
    r = system.M @ state.U + system.B @ state.P
    facets = np.unique(space.bnd_facets)
    pos = np.searchsorted(facets, space.bnd_facets)
    num = np.bincount(pos, weights=space.bnd_coefs * r[space.bnd_dofs], minlength=facets.size)
    den = np.bincount(pos, weights=space.bnd_coefs**2, minlength=facets.size)
    with np.errstate(invalid="ignore", divide="ignore"):
        return facets, num / den


class Simulation:
    """Owns the mesh, space, assembler and factorisation cache of one case."""

    def __init__(self, config: CaseConfig):
        config.check()
        self.config = config
        self.mesh = config.mesh.build()
        self.space = build_mixed_space(self.mesh, config.family, config.quad_degree)
        self.assembler = Assembler(self.space, config.viscosity, config.boundary_pressure)
        self.solver = ReducedSolver(maxsize=4)
        self.last_system: Optional[SaddleLcpSystem] = None
        self.last_solution: Optional[PdasSolution] = None

    @property
    def points(self):
        return self.space.pressure_points

    def thickness_at_dofs(self, t):
        return np.asarray(self.config.thickness(self.points, t), dtype=float)

    def time_of(self, step):
        return self.config.t0 + step * self.config.tau

    def initial_state(self) -> FilmState:
        cfg = self.config
        pts = self.points
        if callable(cfg.theta0):
            theta = np.asarray(cfg.theta0(pts), dtype=float).reshape(-1)
        else:
            theta = np.full(self.space.n_p, float(cfg.theta0))
        lam = self.thickness_at_dofs(cfg.t0) * (1.0 - theta)
        return FilmState(cfg.t0, np.zeros(self.space.n_u), np.zeros(self.space.n_p), lam, theta, 0)

    def step(self, state: FilmState) -> Tuple[FilmState, StepDiagnostics]:
        """Advance by one time step; the first step starts the solver cold."""
        cfg = self.config
        k = state.step + 1
        t_new = self.time_of(k)
        transport = TransportData(
            speed=cfg.speed,
            tau=cfg.tau,
            theta_old=ScalarField(self.space, state.theta),
            thickness=cfg.thickness,
            theta_in=cfg.theta_in,
        )
        system = self.assembler.assemble(cfg.tau, cfg.thickness, transport, t_new, cfg.pdas.c)
        warm = (state.P, state.Lam) if state.step > 0 else None
        pconf = PdasConfig(c=cfg.pdas.c, max_iter=cfg.pdas.max_iter, warm_start=warm)
        nfac = self.solver.factorizations
        try:
            sol = pdas_solve(system, pconf, self.solver)
        except Exception as exc:
            raise SolverFailure(f"step {k} (t={t_new:.17g}): {exc}", k, state) from exc
        if not sol.converged:
            why = "active-set cycle" if sol.cycled else f"no convergence in {cfg.pdas.max_iter} iterations"
            raise SolverFailure(f"step {k} (t={t_new:.17g}): {why}", k, state)

        theta = 1.0 - sol.Lam / self.thickness_at_dofs(t_new)
        new = FilmState(t_new, sol.U, sol.P, sol.Lam, theta, k)
        self.last_system, self.last_solution = system, sol
        res = system.residuals(sol.U, sol.P, sol.Lam)
        diag = StepDiagnostics(
            step=k,
            t=t_new,
            iterations=sol.iterations,
            active_count=int(sol.active.sum()),
            mass_balance=mass_balance_residual(new, system),
            mass_balance_scale=mass_balance_scale(new, system),
            flux_residual=res.flux_rel,
            mass_residual=res.mass_rel,
            max_pressure=float(sol.P.max(initial=0.0)),
            min_theta=float(theta.min(initial=1.0)),
            extent=cavitation_extent(theta, self.points),
            factorizations=self.solver.factorizations - nfac,
        )
        if diag.min_theta < -THETA_MONITOR_TOL:
            log.warning("step %d: saturation undershoots zero (min theta = %.3e)", k, diag.min_theta)
        log.debug("step %d t=%.6g iterations=%d active=%d", k, t_new, diag.iterations, diag.active_count)
        return new, diag

    def run_transient(self, n_steps=None, keep_states=False, callback=None) -> TransientResult:
        n = self.config.n_steps if n_steps is None else int(n_steps)
        state = self.initial_state()
        states = [state] if keep_states else []
        diags = []
        for _ in range(n):
            state, diag = self.step(state)
            diags.append(diag)
            if keep_states:
                states.append(state)
            if callback is not None:
                callback(state, diag)
        return TransientResult(state, diags, states)

    def run_to_steady(self, max_steps=None, strict=False, callback=None) -> SteadyResult:
        """Step until two successive pressures differ by less than ``steady_tol``."""
        cap = self.config.max_steps if max_steps is None else int(max_steps)
        tol = self.config.steady_tol
        state = self.initial_state()
        diags = []
        change = math.inf
        for _ in range(cap):
            new, diag = self.step(state)
            diags.append(diag)
            if callback is not None:
                callback(new, diag)
            change = float(np.max(np.abs(new.P - state.P), initial=0.0)) if state.step > 0 else math.inf
            state = new
            if change < tol:
                return SteadyResult(state, state.step, True, change, diags)
        result = SteadyResult(state, state.step, False, change, diags)
        if strict:
            raise NonStationary(f"no steady state after {cap} steps (last change {change:.3e})", result)
        log.warning("no steady state after %d steps (last change %.3e)", cap, change)
        return result


def step(state: FilmState, config: CaseConfig, simulation: Optional[Simulation] = None):
    """Functional form of :meth:`Simulation.step`."""
    sim = simulation or Simulation(config)
    return sim.step(state)


def run_transient(config: CaseConfig, **kwargs) -> TransientResult:
    return Simulation(config).run_transient(**kwargs)


def run_to_steady(config: CaseConfig, **kwargs) -> SteadyResult:
    return Simulation(config).run_to_steady(**kwargs)
