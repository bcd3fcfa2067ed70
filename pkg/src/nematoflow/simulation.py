"""Coupled time stepping of density, concentration, order tensor, velocity.

Each step resolves the velocity through a damped Picard iteration: a
candidate coefficient vector drives one step of the three field solvers,
the resulting fields feed the projected momentum balance, and the momentum
solve returns the next candidate.  Convergence is declared on the l2
increment of the coefficient vector; the accepted velocity then advances
the fields once more so the stored state is consistent with it.
"""

from dataclasses import dataclass, field

import numpy as np

from . import galerkin as gk
from . import momentum as mom
from .continuity import ContinuitySolver, face_velocities
from .errors import FixedPointError
from .nematic import q_boundary_faces, step_concentration, step_q


@dataclass
class Physics:
    eps: float = 0.05
    d0: float = 0.25
    gamma: float = 0.25
    c_star: float = 1.0
    b: float = 0.2
    sigma_star: float = 0.1

    def __post_init__(self):
        if not (self.eps > 0 and self.d0 > 0 and self.gamma > 0):
            raise ValueError("eps, D0, Gamma must be positive")


@dataclass
class State:
    t: float
    rho: np.ndarray
    c: np.ndarray
    q: np.ndarray
    v: np.ndarray

    def copy(self):
        return State(self.t, self.rho.copy(), self.c.copy(), self.q.copy(),
                     self.v.copy())


class CoupledStepper:
    def __init__(self, grid, basis, physics, law, pressure_law, bdata, dt,
                 picard_tol=1e-10, picard_max_iter=60, theta=0.5):
        self.grid = grid
        self.basis = basis
        self.physics = physics
        self.law = law
        self.pressure_law = pressure_law
        self.bdata = bdata
        self.dt = float(dt)
        self.picard_tol = float(picard_tol)
        self.picard_max_iter = int(picard_max_iter)
        self.theta = float(theta)
        self.continuity = ContinuitySolver(grid=grid, eps=physics.eps, dt=dt,
                                           bdata=bdata)
        self.q_b_faces = q_boundary_faces(grid, bdata.q_b)
        X, Y, Z = grid.coords()
        self._ub_cc = bdata.u_b(X, Y, Z)
        self._ub_jac_cc = bdata.u_b.jacobian(X, Y, Z)

    # ------------------------------------------------------- field helpers

    def velocity_fields(self, v):
        """Cell-center velocity, Jacobian, and packed skew part for v."""
        u = gk.synthesize(self.basis, v) + self._ub_cc
        J = gk.synthesize_jacobian(self.basis, v) + self._ub_jac_cc
        lam = np.empty(self.grid.shape + (3,))
        lam[..., 0] = 0.5 * (J[..., 0, 1] - J[..., 1, 0])
        lam[..., 1] = 0.5 * (J[..., 0, 2] - J[..., 2, 0])
        lam[..., 2] = 0.5 * (J[..., 1, 2] - J[..., 2, 1])
        return u, J, lam

    def advance_fields(self, state, v):
        """One step of rho, c, Q driven by the velocity for v."""
        fv = face_velocities(self.grid, self.basis, v, self.bdata.u_b)
        rho_new, cont_info = self.continuity.step(state.rho, fv, t=state.t)
        u, J, lam = self.velocity_fields(v)
        c_new = step_concentration(self.grid, state.c, u, self.physics.d0,
                                   self.dt)
        q_new = step_q(self.grid, state.q, u, lam, state.c, self.dt,
                       self.physics.gamma, self.physics.b, self.physics.c_star,
                       self.q_b_faces)
        return rho_new, c_new, q_new, fv, cont_info

    def momentum_rhs(self, rho, v, c, q):
        u, J, _ = self.velocity_fields(v)
        bundle = mom.assemble_stresses(
            self.grid, rho, J, c, q, self.law, self.pressure_law,
            self.q_b_faces, self.physics.c_star, self.physics.sigma_star)
        grad_rho = self.continuity.grad_rho(rho)
        return mom.galerkin_rhs(self.basis, bundle, rho, u, J,
                                self.physics.eps, grad_rho)

    # ------------------------------------------------------------ stepping

    def step(self, state):
        """Advance the coupled state by dt; returns (new_state, info)."""
        v0 = state.v
        v_cur = v0.copy()
        increments = []
        converged = False
        for _ in range(self.picard_max_iter):
            rho_k, c_k, q_k, _, _ = self.advance_fields(state, v_cur)
            rhs = self.momentum_rhs(rho_k, v_cur, c_k, q_k)
            v_next = mom.step_momentum(self.basis, v0, rho_k, rhs, self.dt)
            incr = float(np.linalg.norm(v_next - v_cur))
            increments.append(incr)
            if incr <= self.picard_tol:
                v_cur = v_next
                converged = True
                break
            v_cur = self.theta * v_next + (1.0 - self.theta) * v_cur
        if not converged:
            raise FixedPointError(
                f"coupling iteration did not reach {self.picard_tol:g} in "
                f"{self.picard_max_iter} iterations "
                f"(last increment {increments[-1]:.3e})",
                last_increment=increments[-1])
        rho_f, c_f, q_f, fv, cont_info = self.advance_fields(state, v_cur)
        new_state = State(state.t + self.dt, rho_f, c_f, q_f, v_cur)
        info = {"picard_iters": len(increments), "increments": increments}
        info.update(cont_info)
        info["fv"] = fv
        return new_state, info


@dataclass
class Trajectory:
    """Stored per-step fields for the weak-form and balance checks."""
    grid: object
    stepper: CoupledStepper
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    fvs: list = field(default_factory=list)
    infos: list = field(default_factory=list)

    def record(self, state, fv=None, info=None):
        self.times.append(state.t)
        self.states.append(state.copy())
        self.fvs.append(None if fv is None else [U.copy() for U in fv])
        self.infos.append(info)


def run_coupled(stepper, state0, n_steps, record=True, monitor=None):
    """Drive n_steps of the coupled system.

    monitor: optional callable (state_before, state_after, info) -> None,
    invoked after every accepted step (the energy ledger hooks in here).
    Returns (final_state, trajectory or None).
    """
    traj = Trajectory(grid=stepper.grid, stepper=stepper) if record else None
    state = state0.copy()
    if record:
        fv0 = face_velocities(stepper.grid, stepper.basis, state.v,
                              stepper.bdata.u_b)
        traj.record(state, fv0, None)
    for _ in range(n_steps):
        prev = state
        state, info = stepper.step(state)
        if monitor is not None:
            monitor(prev, state, info)
        if record:
            traj.record(state, info.pop("fv"), info)
    return state, traj
