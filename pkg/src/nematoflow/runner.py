"""Scenario driver: coupled time loop, invariant tracking, reporting.

run_scenario advances a scenario from 0 to T, appends one energy-ledger row
per step, tracks the structural invariants along the way (trace and
symmetry of the reconstructed order tensor, solute bounds, density
envelope), writes snapshots at the configured cadence, and closes with a
PASS/FAIL table.  The report object only ever appends; nothing is revised
after the fact.
"""

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import energy as en
from . import scenarios as sn
from . import snapshots as sp
from . import tensors


@dataclass
class RunReport:
    scenario: object
    checks: list = field(default_factory=list)   # (name, passed, detail)
    picard_iters: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    monitor: object = None

    def add_check(self, name, passed, detail=""):
        self.checks.append((name, bool(passed), detail))

    @property
    def all_pass(self):
        return all(p for _, p, _ in self.checks)

    def table(self):
        lines = []
        for name, passed, detail in self.checks:
            mark = "PASS" if passed else "FAIL"
            lines.append(f"{mark}  {name}" + (f"  [{detail}]" if detail
                                              else ""))
        return "\n".join(lines)


def _write_report(path, report):
    with open(path, "w") as fh:
        fh.write(report.table() + "\n")
        if report.picard_iters:
            fh.write(f"picard max {max(report.picard_iters)} "
                     f"mean {np.mean(report.picard_iters):.2f}\n")
        for key, val in report.timings.items():
            fh.write(f"time {key} {val:.3f}s\n")


def run_scenario(sc, out_dir=None, resume_from=None):
    """Run a scenario to completion; returns a RunReport.

    out_dir: where ledger.csv, report.txt, and snapshots go (omit to skip
    all file output).  resume_from: path to a snapshot file; the run
    continues from its state to the scenario's final time, reproducing the
    uninterrupted trajectory exactly.
    """
    setup = sn.build(sc)
    stepper, grid, basis = setup.stepper, setup.grid, setup.basis
    state = setup.state0
    start_step = 0
    if resume_from is not None:
        snap, shape, extents = sp.read_snapshot(resume_from)
        if shape != grid.shape or extents != tuple(grid.extents):
            raise sn.ConfigError(
                "snapshot grid does not match the scenario grid")
        state = snap
        start_step = int(round(snap.t / sc.dt))
    n_steps = sc.n_steps()
    report = RunReport(scenario=sc)
    monitor = en.EnergyMonitor(stepper)
    report.monitor = monitor
    hook = monitor.observe(state)

    c_lo0, c_hi0 = float(state.c.min()), float(state.c.max())
    rho_lo0, rho_hi0 = float(state.rho.min()), float(state.rho.max())
    rho_b_probe = stepper.continuity._geom["rho_faces"]
    rho_hi0 = max([rho_hi0] + [float(rb.max()) for rb in rho_b_probe])
    rho_lo0 = min([rho_lo0] + [float(rb.min()) for rb in rho_b_probe])

    worst = {"tr_q": 0.0, "asym_q": 0.0, "c_lo": c_lo0, "c_hi": c_hi0,
             "rho_envelope": 0.0, "div_inf": 0.0}

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        sp.write_snapshot(sp.snapshot_path(out_dir, start_step), grid, basis,
                          state, stepper._ub_cc)
        report.snapshots.append(start_step)

    t_wall = time.perf_counter()
    tau = 0.0
    for k in range(start_step, n_steps):
        prev = state
        state, info = stepper.step(state)
        hook(prev, state, info)
        report.picard_iters.append(info["picard_iters"])
        worst["div_inf"] = max(worst["div_inf"], info.get("div_inf", 0.0))
        tau += sc.dt
        m = tensors.to_matrix(state.q)
        worst["tr_q"] = max(worst["tr_q"], float(
            np.max(np.abs(m[..., 0, 0] + m[..., 1, 1] + m[..., 2, 2]))))
        worst["asym_q"] = max(worst["asym_q"], float(
            np.max(np.abs(m - np.swapaxes(m, -1, -2)))))
        worst["c_lo"] = min(worst["c_lo"], float(state.c.min()))
        worst["c_hi"] = max(worst["c_hi"], float(state.c.max()))
        env_hi = rho_hi0 * np.exp(tau * worst["div_inf"])
        env_lo = rho_lo0 * np.exp(-tau * worst["div_inf"])
        over = max(float(state.rho.max()) - env_hi * (1 + 1e-6), 0.0)
        under = max(env_lo * (1 - 1e-6) - float(state.rho.min()), 0.0)
        worst["rho_envelope"] = max(worst["rho_envelope"], over, under)
        if out_dir is not None and sc.snapshot_every > 0 \
                and (k + 1) % sc.snapshot_every == 0:
            sp.write_snapshot(sp.snapshot_path(out_dir, k + 1), grid, basis,
                              state, stepper._ub_cc)
            report.snapshots.append(k + 1)
    report.timings["stepping"] = time.perf_counter() - t_wall

    report.add_check("order tensor trace free", worst["tr_q"] == 0.0,
                     f"max |tr Q| = {worst['tr_q']:.3e}")
    report.add_check("order tensor symmetric", worst["asym_q"] == 0.0,
                     f"max asym = {worst['asym_q']:.3e}")
    report.add_check(
        "solute bounds", worst["c_lo"] >= c_lo0 - 1e-12
        and worst["c_hi"] <= c_hi0 + 1e-12,
        f"range [{worst['c_lo']:.6f}, {worst['c_hi']:.6f}]")
    report.add_check("density envelope", worst["rho_envelope"] == 0.0,
                     f"worst excess {worst['rho_envelope']:.3e}")
    rows = monitor.rows
    diss_min = min(min(r[k2] for k2 in ("d_visc", "d_conc", "d_relax",
                                        "d_six")) for r in rows)
    report.add_check("dissipation nonnegative", diss_min >= -1e-14,
                     f"min entry {diss_min:.3e}")
    gap_min = min(r["gap_min"] for r in rows)
    report.add_check("inflow convexity gap", gap_min >= -1e-10,
                     f"min {gap_min:.3e}")
    ineq = monitor.inequality_residual()
    report.add_check("energy inequality", ineq["pass"],
                     f"margin {ineq['margin']:.3e}")

    if out_dir is not None:
        monitor.to_csv(os.path.join(out_dir, "ledger.csv"))
        _write_report(os.path.join(out_dir, "report.txt"), report)
    return report
