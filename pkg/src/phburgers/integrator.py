r"""Crank-Nicolson integration with Newton and adaptive time steps.

One step drives the coupled residual of the dynamics row and the
constitutive rows to zero at the end of the step,

    F(v, e, f, e_r) = [ M (v - v_n) - (dt/2) (D e - R e_r + g_n) ]
                      [ M e - N(v)                               ]
                      [ M f - R^T e                              ]
                      [ W(v) e_r - nu M f                        ]

with g_n = (D e - R e_r) evaluated at the stored start-of-step state.
Newton updates all four fields together; the Jacobian is the sparse
block matrix

    [ M        -(dt/2) D   0       (dt/2) R ]
    [ -W(v)     M          0       0        ]
    [ 0        -R^T        M       0        ]
    [ W(e_r)    0         -nu M    W(v)     ]

(the inviscid case keeps only the first two rows).  The linearization
of the weighted mass uses the symmetry of the underlying trilinear
form: W(dv) e_r = W(e_r) dv.  Working on the coupled residual keeps
every evaluation polynomial in the unknowns; no weighted-mass solve
sits on the iteration path, which matters because W(v) is nearly
singular wherever v_d nearly vanishes (the boundary zones of the pulse
data).  The semi-discrete solution set is the same as for the
eliminated one-field iteration.

The step controller shrinks dt on any failure (Newton stagnation,
non-finite residual, singular W) and grows it after a streak of cheap
acceptances, capped at a fixed multiple of the initial step; runs
terminate early when dt falls below its floor, which is how the
inviscid fine-mesh configurations die at the shock.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import diagnostics, fem1d, phsystem
from .diagnostics import PowerLedger
from .fem1d import FeOperators
from .phsystem import State, StepFailure


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation needs; all experiments set alpha, beta, h.

    The mesh is given either by ``n_elems`` or the element width ``h``
    (exactly one).  Time stepping starts at dt0 = alpha h and the
    viscosity is nu = beta h / alpha, recomputed on demand; beta = 0
    selects the inviscid system.  ``fixed_dt`` disables adaptivity for
    order studies.
    """

    n_elems: int | None = None
    h: float | None = None
    alpha: float = 1.0
    beta: float = 0.0
    t_final: float = 0.4
    newton_tol: float = 1e-8
    newton_max_iter: int = 12
    dt_shrink: float = 0.5
    dt_growth: float = 1.5
    dt_cap_factor: float = 8.0
    dt_min_factor: float = 2.0**-12
    growth_streak: int = 5
    growth_iter_limit: int = 3
    n_snapshots: int = 50
    fixed_dt: float | None = None

    def __post_init__(self):
        if (self.n_elems is None) == (self.h is None):
            raise ValueError("specify exactly one of n_elems or h")
        if self.n_elems is not None and self.n_elems < 1:
            raise ValueError(f"n_elems must be positive, got {self.n_elems}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.t_final < 0.0:
            raise ValueError(f"t_final must be nonnegative, got {self.t_final}")
        if self.fixed_dt is not None and self.fixed_dt <= 0.0:
            raise ValueError(f"fixed_dt must be positive, got {self.fixed_dt}")
        if self.h is not None:
            n = round(1.0 / self.h)
            if n < 1 or abs(n * self.h - 1.0) > 1e-9:
                raise ValueError(f"element width {self.h} does not divide (0, 1)")

    @property
    def mesh_elems(self) -> int:
        return self.n_elems if self.n_elems is not None else round(1.0 / self.h)

    @property
    def width(self) -> float:
        return 1.0 / self.mesh_elems

    @property
    def nu(self) -> float:
        return self.beta * self.width / self.alpha

    @property
    def dt0(self) -> float:
        return self.alpha * self.width

    @property
    def dt_cap(self) -> float:
        return self.dt_cap_factor * self.dt0

    @property
    def dt_min(self) -> float:
        return self.dt_min_factor * self.dt0


@dataclass(frozen=True)
class StepOutcome:
    """What one adaptive_advance attempt produced."""

    accepted: bool
    dt_used: float
    newton_iters: int
    failure_reason: str | None = None


def cn_residual(ops: FeOperators, state_n: State, v_trial: np.ndarray, dt: float) -> np.ndarray:
    """Crank-Nicolson residual F(v_trial) for one step from ``state_n``.

    Re-solves the constitutive relations at the trial point, so a
    singular W(v_trial) surfaces as StepFailure.
    """
    g_n = phsystem.structure_apply(ops, state_n)
    trial = phsystem.make_state(ops, v_trial, nu=state_n.nu, t=state_n.t + dt)
    g_t = phsystem.structure_apply(ops, trial)
    return ops.mass @ (trial.v - state_n.v) - 0.5 * dt * (g_t + g_n)


def _newton_matrix(ops: FeOperators, trial: State, dt: float) -> scipy.sparse.csc_matrix:
    """Sparse block system whose first row eliminates to dF/dv."""
    M = ops.mass
    D = ops.convection
    R = ops.gradient
    Wv = fem1d.assemble_weighted_mass(ops.mesh, trial.v)
    if not trial.viscous:
        return scipy.sparse.bmat(
            [[M, -0.5 * dt * D],
             [-Wv, M]], format="csc")
    Wr = fem1d.assemble_weighted_mass(ops.mesh, trial.e_r)
    return scipy.sparse.bmat(
        [[M, -0.5 * dt * D, None, 0.5 * dt * R],
         [-Wv, M, None, None],
         [None, -R.T, M, None],
         [Wr, None, -trial.nu * M, Wv]], format="csc")


def jacobian_apply(ops: FeOperators, state: State, dt: float, w: np.ndarray) -> np.ndarray:
    """Directional derivative dF/dv applied to ``w`` at a consistent state.

    Matrix-free version of the eliminated block system, used to check
    the assembled Newton matrix against finite differences.
    """
    de = ops.solve_mass(fem1d.assemble_weighted_mass(ops.mesh, state.v) @ w)
    g_dir = ops.convection @ de
    if state.viscous:
        df = ops.solve_mass(ops.gradient.T @ de)
        Wr = fem1d.assemble_weighted_mass(ops.mesh, state.e_r)
        _, lu = phsystem.weighted_mass_factor(ops, state.v)
        dr = lu.solve(state.nu * (ops.mass @ df) - Wr @ w)
        g_dir = g_dir - ops.gradient @ dr
    return ops.mass @ w - 0.5 * dt * g_dir


def newton_solve(
    ops: FeOperators, state_n: State, dt: float, config: RunConfig
) -> tuple[State, int]:
    """Solve the step equations starting from the stored state.

    Iterates on the stacked fields (v, e, f_r, e_r) with the coupled
    residual from the module docstring; convergence is declared when its
    norm falls below newton_tol * max(initial residual, |M v_n|).  At
    the consistent starting point the constitutive rows vanish, so the
    initial residual equals the Crank-Nicolson dynamics residual and the
    converged iterate satisfies the one-field convergence criterion a
    fortiori.  Full Newton steps are damped by a backtracking line
    search on |F|: the constitutive relation degenerates wherever v_d
    nearly vanishes (the boundary zones of the pulse data), and an
    undamped update can overshoot through that region even though the
    Jacobian is exact.  Returns the end-of-step state and the iteration
    count.  Raises StepFailure("newton_divergence") on stagnation,
    non-finite residuals, or running out of iterations, and
    StepFailure("singular_weighted_mass") when the block Jacobian
    cannot be factored (its only degeneracy source is W).
    """
    M = ops.mass
    D = ops.convection
    R = ops.gradient
    mesh = ops.mesh
    nu = state_n.nu
    viscous = state_n.viscous
    g_n = phsystem.structure_apply(ops, state_n)

    if viscous:
        def residual(z):
            v, e, f, r = np.split(z, 4)
            return np.concatenate([
                M @ (v - state_n.v) - 0.5 * dt * (D @ e - R @ r + g_n),
                M @ e - fem1d.assemble_quadratic_load(mesh, v),
                M @ f - R.T @ e,
                fem1d.assemble_weighted_mass(mesh, v) @ r - nu * (M @ f),
            ])

        z = np.concatenate([state_n.v, state_n.e, state_n.f_r, state_n.e_r])
    else:
        def residual(z):
            v, e = np.split(z, 2)
            return np.concatenate([
                M @ (v - state_n.v) - 0.5 * dt * (D @ e + g_n),
                M @ e - fem1d.assemble_quadratic_load(mesh, v),
            ])

        z = np.concatenate([state_n.v, state_n.e])

    def unpack(z):
        if viscous:
            v, e, f, r = np.split(z, 4)
        else:
            v, e = np.split(z, 2)
            f = r = np.empty(0)
        return State(t=state_n.t + dt, v=v, e=e, f_r=f, e_r=r, nu=nu)

    F = residual(z)
    res = float(np.linalg.norm(F))
    if not np.isfinite(res):
        raise StepFailure("newton_divergence")
    tol = config.newton_tol * max(res, float(np.linalg.norm(M @ state_n.v)), 1e-300)
    for iters in range(config.newton_max_iter):
        if res <= tol:
            return unpack(z), iters
        A = _newton_matrix(ops, unpack(z), dt)
        try:
            lu = scipy.sparse.linalg.splu(A)
        except RuntimeError as exc:
            raise StepFailure("singular_weighted_mass") from exc
        delta = lu.solve(-F)
        if not np.all(np.isfinite(delta)):
            raise StepFailure("newton_divergence")
        lam = 1.0
        accepted = False
        for _ in range(30):
            F_cand = residual(z + lam * delta)
            res_cand = float(np.linalg.norm(F_cand))
            if np.isfinite(res_cand) and res_cand <= (1.0 - 1e-4 * lam) * res:
                z = z + lam * delta
                F, res = F_cand, res_cand
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            raise StepFailure("newton_divergence")
    if res <= tol:
        return unpack(z), config.newton_max_iter
    raise StepFailure("newton_divergence")


@dataclass
class StepController:
    """Mutable controller state: current dt and the acceptance streak."""

    dt: float
    streak: int = 0


def make_controller(config: RunConfig) -> StepController:
    return StepController(dt=config.fixed_dt if config.fixed_dt else config.dt0)


def adaptive_advance(
    ops: FeOperators,
    state: State,
    config: RunConfig,
    ledger: PowerLedger,
    controller: StepController,
) -> tuple[State, StepOutcome]:
    """Attempt steps from ``state`` until one is accepted or dt underflows.

    Failed attempts halve the controller's dt and retry; an accepted step
    is recorded into the ledger and may trigger dt growth after a streak
    of cheap acceptances.  The final step is clamped to land on t_final
    exactly.  With ``fixed_dt`` set, the first failure ends the run.
    """
    while True:
        clamped = controller.dt >= config.t_final - state.t
        dt = min(controller.dt, config.t_final - state.t)
        try:
            new_state, iters = newton_solve(ops, state, dt, config)
        except StepFailure as fail:
            if config.fixed_dt is not None:
                return state, StepOutcome(False, dt, config.newton_max_iter, fail.reason)
            controller.streak = 0
            controller.dt *= config.dt_shrink
            if controller.dt < config.dt_min:
                return state, StepOutcome(False, dt, config.newton_max_iter, "dt_underflow")
            continue
        if clamped:
            new_state = dataclasses.replace(new_state, t=config.t_final)
        ledger.record(ops.mesh, new_state, dt, iters)
        if config.fixed_dt is None:
            if iters <= config.growth_iter_limit:
                controller.streak += 1
            else:
                controller.streak = 0
            if controller.streak >= config.growth_streak:
                controller.dt = min(controller.dt * config.dt_growth, config.dt_cap)
                controller.streak = 0
        return new_state, StepOutcome(True, dt, iters)


# a balance excursion larger than the initial Hamiltonian itself marks
# a run that left the regime the energetic bookkeeping is meant for
VAR_ANOMALY_THRESHOLD = 1.0


@dataclass(frozen=True)
class RunResult:
    """Everything a finished run reports.

    ``flags`` lists detected anomalies: "early_termination" when the run
    stopped before t_final (dt underflow), "anomalous_variation" when
    Var exceeds VAR_ANOMALY_THRESHOLD.  Stability-boundary cells show up
    through one of these.
    """

    config: RunConfig
    snapshots: list
    ledger: PowerLedger
    var: float
    t_reached: float
    n_steps: int
    termination_reason: str
    flags: tuple = ()


def run_simulation(config: RunConfig, profile=diagnostics.gaussian_pulse) -> RunResult:
    """Integrate the pulse data to t_final (or until dt underflows).

    The initial velocity is the nodal interpolant of ``profile`` at the
    interior P2 nodes; its boundary values are dropped by the
    homogeneous expansion.  Snapshots are taken at the first accepted
    step past each of ``n_snapshots`` uniform target times.
    """
    mesh = fem1d.build_mesh(config.mesh_elems)
    ops = fem1d.assemble_operators(mesh)
    v0 = fem1d.interpolate(mesh, profile)
    state = phsystem.make_state(ops, v0, nu=config.nu, t=0.0)

    ledger = PowerLedger()
    ledger.record(mesh, state, 0.0, 0)
    snapshots = [state]
    if config.n_snapshots > 1 and config.t_final > 0.0:
        targets = np.linspace(0.0, config.t_final, config.n_snapshots)[1:]
    else:
        targets = np.empty(0)
    next_target = 0

    controller = make_controller(config)
    termination = "completed"
    t_tol = 1e-12 * max(config.t_final, 1.0)
    while state.t < config.t_final - t_tol:
        state, outcome = adaptive_advance(ops, state, config, ledger, controller)
        if not outcome.accepted:
            termination = outcome.failure_reason
            break
        while next_target < targets.size and state.t >= targets[next_target] - t_tol:
            next_target += 1
            if snapshots[-1] is not state:
                snapshots.append(state)
    if snapshots[-1] is not state:
        snapshots.append(state)

    var = diagnostics.balance_variation(ledger)
    flags = []
    if termination != "completed":
        flags.append("early_termination")
    if var > VAR_ANOMALY_THRESHOLD:
        flags.append("anomalous_variation")
    return RunResult(
        config=config,
        snapshots=snapshots,
        ledger=ledger,
        var=var,
        t_reached=state.t,
        n_steps=len(ledger) - 1,
        termination_reason=termination,
        flags=tuple(flags),
    )
