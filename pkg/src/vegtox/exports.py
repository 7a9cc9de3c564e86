"""Delimited/PGM writers and the reproducibility manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np

from . import __version__

__all__ = [
    "Manifest",
    "read_snapshot_1d",
    "read_snapshot_2d",
    "sha256_of",
    "write_branch_csv",
    "write_branch_index",
    "write_csv",
    "write_diagnostics_csv",
    "write_dispersion_csv",
    "write_pgm",
    "write_scan_csv",
    "write_snapshot_1d",
    "write_snapshot_2d",
]


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(x):
    return format(float(x), ".17g")


def write_snapshot_1d(path, x, R, T):
    """Columns x,R,T at cell centers."""
    return write_csv(path, ["x", "R", "T"],
                     ([_fmt(a), _fmt(b), _fmt(c)] for a, b, c in zip(x, R, T)))


def read_snapshot_1d(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 0], data[:, 1], data[:, 2]


def write_snapshot_2d(path, R, T, L):
    """Header rows ``n,L`` then row-major flattened ``R,T`` columns."""
    n = R.shape[0]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "L"])
        writer.writerow([n, _fmt(L)])
        writer.writerow(["R", "T"])
        for r, t in zip(R.ravel(), T.ravel()):
            writer.writerow([_fmt(r), _fmt(t)])
    return path


def read_snapshot_2d(path):
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        n, L = next(reader)
        n, L = int(n), float(L)
        next(reader)
        vals = np.array([[float(a), float(b)] for a, b in reader])
    return vals[:, 0].reshape(n, n), vals[:, 1].reshape(n, n), L


def write_diagnostics_csv(path, trajectory):
    from .solver import DIAG_COLUMNS
    diag = trajectory.diagnostics
    rows = ([_fmt(diag[c][i]) for c in DIAG_COLUMNS]
            for i in range(len(diag["t"])))
    return write_csv(path, list(DIAG_COLUMNS), rows)


def write_dispersion_csv(path, dispersion):
    rows = []
    for m in dispersion.modes:
        g1, g2 = m.growth
        rows.append([m.kappa, _fmt(m.lambda_kappa),
                     _fmt(g1.real), _fmt(g1.imag),
                     _fmt(g2.real), _fmt(g2.imag), m.multiplicity])
    return write_csv(path, ["kappa", "lambda_kappa", "re_growth", "im_growth",
                            "re_growth2", "im_growth2", "multiplicity"], rows)


def write_scan_csv(path, scan):
    """One row per (gamma, s) cell: ``gamma,s,sigma_L,feasible``."""
    rows = []
    for i, gam in enumerate(scan.gammas):
        for j, s in enumerate(scan.ss):
            ok = bool(scan.feasible[i, j])
            val = _fmt(scan.sigma_L[i, j]) if ok else "nan"
            rows.append([_fmt(gam), _fmt(s), val, int(ok)])
    return write_csv(path, ["gamma", "s", "sigma_L", "feasible"], rows)


def write_branch_csv(path, branch):
    """Points in traversal order, then special points flagged at the end."""
    rows = [[_fmt(pt.param), _fmt(pt.l1_R), pt.n_unstable, 0, ""]
            for pt in branch.points]
    for sp in branch.special_points:
        rows.append([_fmt(sp.param), "", -1, 1, sp.kind.value])
    return write_csv(path, ["param", "l1_R", "n_unstable", "is_special",
                            "special_type"], rows)


def write_branch_index(path, names, branches):
    from .continuation import SpecialPointKind
    rows = []
    for name, br in zip(names, branches):
        folds = sum(1 for sp in br.special_points
                    if sp.kind is SpecialPointKind.FOLD)
        bps = sum(1 for sp in br.special_points
                  if sp.kind is SpecialPointKind.BRANCH_POINT)
        rows.append([name, len(br.points), folds, bps, br.termination])
    return write_csv(path, ["file", "n_points", "n_folds", "n_branch_points",
                            "termination"], rows)


def write_pgm(path, field, metadata=None):
    """8-bit binary PGM scaled to the field's min/max, plus a JSON sidecar
    recording the scaling so values can be recovered."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.atleast_2d(np.asarray(field, dtype=float))
    lo, hi = float(np.nanmin(arr)), float(np.nanmax(arr))
    if hi > lo:
        scaled = np.round((arr - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(arr)
    scaled = np.nan_to_num(scaled, nan=0.0).astype(np.uint8)
    h, w = scaled.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(scaled.tobytes())
    side = {"min": lo, "max": hi, "shape": [h, w]}
    side.update(metadata or {})
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def read_pgm(path):
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"not a binary PGM: {magic!r}")
        w, h = map(int, fh.readline().split())
        maxval = int(fh.readline())
        data = np.frombuffer(fh.read(w * h), dtype=np.uint8).reshape(h, w)
    return data, maxval


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Manifest:
    """Run record: resolved configuration echo plus produced-file checksums.

    Re-running the same command with the same config must reproduce every
    listed checksum (serial mode); the manifest itself carries wall-clock
    metadata and is not part of that contract.
    """

    def __init__(self, command, config, out_dir):
        self.command = command
        self.out_dir = Path(out_dir)
        self.started = time.time()
        self.payload = {
            "tool": "vegtox",
            "version": __version__,
            "command": command,
            "seed": config.values.get("simulation.seed"),
            "config": {k: v for k, v in sorted(config.values.items())},
            "defaulted_keys": list(config.defaulted),
            "files": [],
        }

    def add(self, *paths):
        for path in paths:
            path = Path(path)
            self.payload["files"].append({
                "path": str(path.relative_to(self.out_dir)
                            if path.is_relative_to(self.out_dir) else path),
                "sha256": sha256_of(path),
                "bytes": path.stat().st_size,
            })

    def write(self):
        self.payload["wall_clock"] = time.strftime(
            "%Y-%m-%dT%H:%M:%S%z", time.localtime(self.started))
        self.payload["runtime_seconds"] = round(time.time() - self.started, 3)
        self.payload["files"].sort(key=lambda f: f["path"])
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(self.payload, indent=2, sort_keys=True,
                                   default=str) + "\n")
        return path
