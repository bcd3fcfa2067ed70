import time

import numpy as np

from nematoflow import domain as dom
from nematoflow import galerkin as gk
from nematoflow import nematic as nem
from nematoflow import pressure as pr
from nematoflow import rheology as rh
from nematoflow import tensors
from nematoflow import weakforms as wf
from nematoflow.simulation import CoupledStepper, Physics, State, run_coupled


def make_stepper(n, m, dt, eps, ub_kind="channel", peak=0.25):
    grid = dom.Grid((1.0, 1.0, 1.0), (n, n, n))
    if ub_kind == "zero":
        ub = dom.BoundaryVelocity("zero", grid)
    else:
        ub = dom.BoundaryVelocity("channel", grid, peak=peak)
    q_b = tensors.uniaxial(0.0, np.array([1.0, 0.0, 0.0]))
    bdata = dom.BoundaryData(ub, 1.0, q_b)
    basis = gk.build_basis(grid, m)
    physics = Physics(eps=eps)
    law = rh.newtonian_law(1.0)
    plaw = pr.isentropic_law(1.0, 2.0)
    return grid, basis, CoupledStepper(grid, basis, physics, law, plaw,
                                       bdata, dt)


def initial_state(grid, basis, kind="rich"):
    X, Y, Z = grid.coords()
    shp = grid.shape
    if kind == "stationary":
        return State(0.0, np.ones(shp), np.ones(shp), np.zeros(shp + (5,)),
                     np.zeros(basis.n))
    rho = 1.0 + 0.05 * np.sin(np.pi * X) * np.cos(np.pi * Y)
    c = 1.0 + 0.2 * np.cos(np.pi * X) * np.sin(np.pi * Z)
    bump = (np.sin(np.pi * X) * np.sin(np.pi * Y) * np.sin(np.pi * Z))
    q = np.zeros(shp + (5,))
    q[..., 0] = 0.1 * bump
    q[..., 3] = -0.05 * bump
    q[..., 1] = 0.06 * bump
    q = tensors.project_s30(tensors.to_matrix(q))
    v = np.zeros(basis.n)
    return State(0.0, rho, c, q, v)


# ---- stationary check
grid, basis, stepper = make_stepper(8, 2, 1e-3, 0.05, ub_kind="zero")
st0 = initial_state(grid, basis, "stationary")
final, traj = run_coupled(stepper, st0, 5, record=True)
rep = wf.weak_residuals_dissipative(traj, stepper)
print("stationary max_abs:", rep["max_abs"])

# ---- channel refinement
results = {}
for lbl, (n, dt, eps, steps) in {
        "coarse": (8, 2e-3, 0.05, 25),
        "fine": (16, 1e-3, 0.025, 50)}.items():
    grid, basis, stepper = make_stepper(n, 2, dt, eps)
    st0 = initial_state(grid, basis)
    t0 = time.time()
    final, traj = run_coupled(stepper, st0, steps, record=True)
    t1 = time.time()
    rep = wf.weak_residuals_dissipative(traj, stepper)
    t2 = time.time()
    results[lbl] = rep
    print(f"{lbl}: run {t1-t0:.1f}s residuals {t2-t1:.1f}s")
    print("   max_abs:", {k: f"{v:.3e}" for k, v in rep["max_abs"].items()})
for eq in ("continuity", "momentum", "concentration", "nematic"):
    r = results["coarse"]["max_abs"][eq] / results["fine"]["max_abs"][eq]
    print(f"ratio {eq}: {r:.3f}")
    for name in results["coarse"][eq]:
        c0, f0 = results["coarse"][eq][name], results["fine"][eq][name]
        print(f"   {name}: coarse {c0:.3e} fine {f0:.3e} "
              f"ratio {abs(c0)/max(abs(f0),1e-30):.2f}")

# ---- lemma two routes
pi = np.pi


def qp_fn(X, Y, Z):
    p = np.zeros(X.shape + (5,))
    p[..., 0] = 0.3 * np.sin(pi * X) * np.cos(pi * Y)
    p[..., 1] = 0.2 * np.cos(pi * X) * np.sin(pi * Z)
    p[..., 2] = -0.25 * np.sin(pi * Y) * np.sin(pi * Z)
    p[..., 3] = 0.15 * np.cos(pi * Y) * np.cos(pi * Z)
    p[..., 4] = 0.1 * np.sin(pi * X) * np.sin(pi * Y)
    return tensors.to_matrix(p)


def lap_q_fn(X, Y, Z):
    p = np.zeros(X.shape + (5,))
    p[..., 0] = -2 * pi**2 * 0.2 * np.sin(pi * X) * np.sin(pi * Y)
    p[..., 1] = -5 * pi**2 * 0.15 * np.sin(2 * pi * X) * np.cos(pi * Z)
    p[..., 2] = -1 * pi**2 * 0.1 * np.cos(pi * Y)
    p[..., 3] = -2 * pi**2 * 0.25 * np.cos(pi * X) * np.sin(pi * Z)
    p[..., 4] = -8 * pi**2 * 0.05 * np.sin(2 * pi * Y) * np.sin(2 * pi * Z)
    return tensors.to_matrix(p)


rng = np.random.default_rng(3)
gaps = []
for n in (8, 16, 32):
    grid = dom.Grid((1.0, 1.0, 1.0), (n, n, n))
    basis = gk.build_basis(grid, 2)
    v = rng.standard_normal(basis.n) if n == 8 else v
    r1, r2, gap = wf.commutator_identity_gap(grid, basis, v, qp_fn, lap_q_fn)
    gaps.append(gap)
    print(f"N={n}: route1 {r1:.6e} route2 {r2:.6e} gap {gap:.3e}")
print("orders:", np.log2(gaps[0] / gaps[1]), np.log2(gaps[1] / gaps[2]))

# ---- Lyapunov descent
n = 8
grid = dom.Grid((1.0, 1.0, 1.0), (n, n, n))
X, Y, Z = grid.coords()
qb = [np.zeros((n, n, 5)) for _ in range(6)]
bump = np.sin(pi * X) * np.sin(pi * Y) * np.sin(pi * Z)
q = np.zeros(grid.shape + (5,))
q[..., 0] = 0.15 * bump
q[..., 1] = 0.1 * bump * np.cos(pi * Z)
q[..., 3] = -0.08 * bump
q[..., 4] = 0.05 * bump * np.cos(pi * X)
q = tensors.project_s30(tensors.to_matrix(q))
c = np.full(grid.shape, 3.0)
u = np.zeros(grid.shape + (3,))
lam = np.zeros(grid.shape + (3,))
gamma, b, c_star, dt = 0.1, 0.5, 1.0, 1e-3
E = [nem.ldg_energy(grid, q, c, b, c_star, qb)]
worst = -np.inf
for k in range(100):
    q = nem.step_q(grid, q, u, lam, c, dt, gamma, b, c_star, qb)
    E.append(nem.ldg_energy(grid, q, c, b, c_star, qb))
    worst = max(worst, E[-1] - E[-2])
print(f"descent: E0 {E[0]:.6f} E100 {E[-1]:.6f} drop {E[0]-E[-1]:.3e} "
      f"worst step increase {worst:.3e}")
