"""Flat-file artifact formats: trajectory CSV and result JSON.

Trajectories write as CSV with the header t,x1..xn,u1..uk,noise1..noisek at
12 significant digits; everything else (gains, certificates, learning logs,
metric tables) serializes to JSON with matrices stored row-major next to
their shape.  Writers are deterministic: given identical arrays they emit
identical bytes, which is what makes seeded reruns byte-comparable.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .carleman_lift import MonomialBasis
from .errors import InvalidArgumentError
from .plant_sim import Trajectory
from .policy_iteration import FeedbackGain, LearningLog, PolicyCertificate


def matrix_to_json(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.ravel().tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    return np.array(obj["data"], dtype=float).reshape(obj["shape"])


def write_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def trajectory_to_csv(traj: Trajectory, path) -> None:
    header = (["t"]
              + [f"x{i + 1}" for i in range(traj.n)]
              + [f"u{i + 1}" for i in range(traj.k)]
              + [f"noise{i + 1}" for i in range(traj.k)])
    block = np.hstack([traj.times[:, None], traj.states, traj.inputs,
                       traj.noise])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in block:
            writer.writerow([f"{v:.12g}" for v in row])


def trajectory_from_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    n = sum(1 for name in header if name.startswith("x"))
    k = sum(1 for name in header if name.startswith("u"))
    if header[0] != "t" or len(header) != 1 + n + 2 * k:
        raise InvalidArgumentError(f"unrecognized trajectory header {header}")
    block = np.array(rows, dtype=float)
    return Trajectory(block[:, 0], block[:, 1:1 + n],
                      block[:, 1 + n:1 + n + k], block[:, 1 + n + k:])


def basis_to_json(basis: MonomialBasis) -> dict:
    return {"n": basis.n, "exponents": basis.exponents.tolist()}


def basis_from_json(obj: dict) -> MonomialBasis:
    return MonomialBasis(obj["n"], obj["exponents"])


def gain_to_json(gain: FeedbackGain) -> dict:
    return {"k_matrix": matrix_to_json(gain.k_matrix),
            "basis": basis_to_json(gain.basis),
            "source": gain.source}


def gain_from_json(obj: dict) -> FeedbackGain:
    return FeedbackGain(matrix_from_json(obj["k_matrix"]),
                        basis_from_json(obj["basis"]), obj["source"])


def certificate_to_json(cert: PolicyCertificate) -> dict:
    return {"p_matrix": matrix_to_json(cert.p_matrix),
            "residual": cert.residual,
            "cond": cert.cond,
            "iteration": cert.iteration}


def log_to_json(log: LearningLog) -> dict:
    """Learning history without the trajectory (that one goes to CSV)."""
    return {"p_history": [matrix_to_json(p) for p in log.p_history],
            "k_history": [matrix_to_json(k) for k in log.k_history],
            "delta_history": list(log.delta_history),
            "residual_history": list(log.residual_history),
            "cond_history": list(log.cond_history),
            "iterations": log.iterations,
            "converged": log.converged,
            "stop_reason": log.stop_reason}


def table_to_csv(rows: list[dict], path, fieldnames: list[str] | None = None
                 ) -> None:
    """Uniform list-of-dicts table writer (sweep outputs, comparisons)."""
    if not rows:
        raise InvalidArgumentError("table has no rows")
    if fieldnames is None:
        fieldnames = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: (f"{val:.12g}"
                                   if isinstance(val, float) else val)
                             for key, val in row.items()})


def table_from_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]
