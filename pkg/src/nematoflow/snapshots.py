"""Snapshot files: full state at one time level, restartable bit-exactly.

Plain text, one row per cell in C order, columns
    x y z rho u1 u2 u3 c q11 q12 q13 q22 q23
preceded by '#' header lines carrying the time, grid shape, extents, and
the Galerkin coefficient vector.  All floats print with 17 significant
digits, so parsing returns the identical float64 values and a restarted
run reproduces the original trajectory exactly.  The velocity columns are
the synthesized cell-center field (modes plus boundary lift); restart uses
the coefficient vector, not the sampled velocity.
"""

import os

import numpy as np

from . import galerkin as gk
from .errors import ConfigError
from .simulation import State

COLUMNS = "x y z rho u1 u2 u3 c q11 q12 q13 q22 q23"


def snapshot_path(out_dir, step):
    return os.path.join(out_dir, f"snap_{step:06d}.txt")


def write_snapshot(path, grid, basis, state, ub_cc):
    u = gk.synthesize(basis, state.v) + ub_cc
    X, Y, Z = grid.coords()
    cols = [X, Y, Z, state.rho, u[..., 0], u[..., 1], u[..., 2], state.c]
    cols += [state.q[..., i] for i in range(5)]
    data = np.stack([c.reshape(-1) for c in cols], axis=1)
    coeffs = " ".join(f"{x:.17g}" for x in state.v)
    header = (f"t = {state.t:.17g}\n"
              f"cells = {grid.shape[0]} {grid.shape[1]} {grid.shape[2]}\n"
              f"extent = {grid.extents[0]:.17g} {grid.extents[1]:.17g} "
              f"{grid.extents[2]:.17g}\n"
              f"coeffs = {coeffs}\n"
              f"{COLUMNS}")
    np.savetxt(path, data, fmt="%.17g", header=header)


def read_snapshot(path):
    """Returns (state, shape, extents); state.v from the header line."""
    t = None
    shape = None
    extents = None
    v = None
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("t ="):
                t = float(body.partition("=")[2])
            elif body.startswith("cells ="):
                shape = tuple(int(s) for s in body.partition("=")[2].split())
            elif body.startswith("extent ="):
                extents = tuple(
                    float(s) for s in body.partition("=")[2].split())
            elif body.startswith("coeffs ="):
                v = np.array(
                    [float(s) for s in body.partition("=")[2].split()])
    if t is None or shape is None or extents is None or v is None:
        raise ConfigError(f"snapshot {path}: missing header fields")
    data = np.loadtxt(path)
    n_cells = shape[0] * shape[1] * shape[2]
    if data.shape != (n_cells, 13):
        raise ConfigError(
            f"snapshot {path}: expected {n_cells} rows x 13 columns, got "
            f"{data.shape}")
    rho = data[:, 3].reshape(shape)
    c = data[:, 7].reshape(shape)
    q = data[:, 8:13].reshape(shape + (5,))
    state = State(t, rho, c, q, v)
    return state, shape, extents


def read_velocity_fields(path):
    """(rho, u) sampled at cell centers, for the two-grid defect check."""
    state, shape, _ = read_snapshot(path)
    data = np.loadtxt(path)
    u = data[:, 4:7].reshape(shape + (3,))
    return state.rho, u


def latest_snapshot(out_dir):
    snaps = sorted(f for f in os.listdir(out_dir)
                   if f.startswith("snap_") and f.endswith(".txt"))
    if not snaps:
        raise ConfigError(f"no snapshots in {out_dir}")
    return os.path.join(out_dir, snaps[-1])
