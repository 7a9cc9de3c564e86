"""Command-line driver tying the analysis modules into reproducible runs.

Subcommands: ``equilibria``, ``dispersion``, ``turing-scan``, ``simulate``,
``continue``.  Every command writes its delimited outputs (plus rendered
figures unless ``--no-figures``) into the output directory together with a
``manifest.json`` listing checksums of all produced files.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np

from . import __version__, exports, figures
from .config import load_config
from .continuation import SpecialPointKind, bifurcation_diagram, solution_at
from .equilibria import classify_equilibria
from .errors import ConfigError, NumericalError, VegtoxError
from .solver import (
    initial_condition_1d,
    initial_condition_2d,
    convergence_study,
    run,
    split_state,
)
from .turing import dispersion_relation, is_turing_unstable, turing_region_scan


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vegtox",
        description="vegetation-autotoxicity cross-diffusion toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config file")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("--scenario", choices=["i", "ii", "iii", "iv"])
    common.add_argument("--sigma", type=float)
    common.add_argument("--s", type=float, dest="s_value")
    common.add_argument("--gamma", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--dim", type=int, choices=[1, 2])
    common.add_argument("--t-fin", type=float, dest="t_fin")
    common.add_argument("--no-figures", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("equilibria", parents=[common],
                   help="homogeneous steady states and their stability")
    sub.add_parser("dispersion", parents=[common],
                   help="per-mode growth rates about the coexistence state")
    sub.add_parser("turing-scan", parents=[common],
                   help="sigma threshold over a (gamma, s) grid")
    sim = sub.add_parser("simulate", parents=[common],
                         help="time integration of either formulation")
    sim.add_argument("--which", choices=["limit", "fast"])
    sim.add_argument("--epsilon", type=float)
    sim.add_argument("--convergence", metavar="EPS,EPS,...",
                     help="run the fast-vs-limit mismatch study instead")
    sim.add_argument("--t-check", type=float, default=1.0,
                     help="comparison time for --convergence")
    sub.add_parser("continue", parents=[common],
                   help="bifurcation diagram by pseudo-arclength continuation")
    return parser


def _overrides_from(args) -> dict:
    pairs = {
        ("model", "scenario"): args.scenario,
        ("model", "sigma"): args.sigma,
        ("model", "s"): args.s_value,
        ("model", "gamma"): args.gamma,
        ("simulation", "seed"): args.seed,
        ("simulation", "dim"): args.dim,
        ("simulation", "t_fin"): args.t_fin,
        ("output", "dir"): args.out,
    }
    if getattr(args, "which", None) is not None:
        pairs[("simulation", "which")] = args.which
    if getattr(args, "epsilon", None) is not None:
        pairs[("model", "epsilon")] = args.epsilon
    if args.no_figures:
        pairs[("output", "figures")] = "false"
    return {k: str(v) for k, v in pairs.items() if v is not None}


def _outdir(cfg) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_equilibria(cfg) -> int:
    out = _outdir(cfg)
    manifest = exports.Manifest("equilibria", cfg, out)
    eqs = classify_equilibria(cfg.params)
    rows = []
    print(f"{'kind':<12} {'R*':>12} {'T*':>12} {'eigenvalues':>34} {'stable':>7}")
    for eq in eqs:
        ev = eq.eigenvalues
        print(f"{eq.kind.value:<12} {eq.R_star:>12.6g} {eq.T_star:>12.6g} "
              f"{ev[0]:>16.6g} {ev[1]:>16.6g} {str(eq.stable):>7}")
        rows.append([eq.kind.value, f"{eq.R_star:.17g}", f"{eq.T_star:.17g}",
                     f"{ev[0].real:.17g}", f"{ev[0].imag:.17g}",
                     f"{ev[1].real:.17g}", f"{ev[1].imag:.17g}", int(eq.stable)])
    path = exports.write_csv(out / "equilibria.csv",
                             ["kind", "R_star", "T_star", "re_eig1", "im_eig1",
                              "re_eig2", "im_eig2", "stable"], rows)
    manifest.add(path)
    manifest.write()
    return 0


def cmd_dispersion(cfg) -> int:
    out = _outdir(cfg)
    manifest = exports.Manifest("dispersion", cfg, out)
    disp = dispersion_relation(cfg.params, L=cfg.sim["L"],
                               n_modes=cfg.analysis["n_modes"],
                               dim=cfg.sim["dim"])
    check = is_turing_unstable(cfg.params, L=cfg.sim["L"],
                               n_modes=cfg.analysis["n_modes"],
                               dim=cfg.sim["dim"])
    manifest.add(exports.write_dispersion_csv(out / "dispersion.csv", disp))
    if cfg.figures:
        manifest.add(figures.save(figures.dispersion_figure(disp),
                                  out / "dispersion.png"))
    verdict = "unstable" if check.unstable else "stable"
    print(f"coexistence state is {verdict} to heterogeneous perturbations; "
          f"max growth {disp.max_growth:.6g}/year at mode {disp.max_mode}")
    manifest.write()
    return 0


def cmd_turing_scan(cfg) -> int:
    out = _outdir(cfg)
    manifest = exports.Manifest("turing-scan", cfg, out)
    a = cfg.analysis
    scan = turing_region_scan(cfg.params,
                              gamma_range=(a["scan_gamma_min"], a["scan_gamma_max"]),
                              s_range=(a["scan_s_min"], a["scan_s_max"]),
                              resolution=a["scan_resolution"])
    manifest.add(exports.write_scan_csv(out / "scan.csv", scan))
    manifest.add(*exports.write_pgm(out / "scan.pgm", scan.sigma_L,
                                    metadata={"field": "sigma_L",
                                              "ceiling": scan.ceiling}))
    if cfg.figures:
        manifest.add(figures.save(figures.scan_figure(scan), out / "scan.png"))
    feasible = scan.feasible.sum()
    print(f"scanned {scan.sigma_L.size} cells ({feasible} feasible); "
          f"threshold range [{np.nanmin(scan.sigma_L):.4g}, "
          f"{np.nanmax(scan.sigma_L):.4g}], ceiling {scan.ceiling:g}")
    manifest.write()
    return 0


def cmd_simulate(cfg, convergence=None, t_check=1.0) -> int:
    out = _outdir(cfg)
    manifest = exports.Manifest("simulate", cfg, out)
    grid = cfg.make_grid()
    sim_cfg = cfg.make_sim_config(grid)

    if convergence is not None:
        eps_list = [float(v) for v in convergence.split(",") if v.strip()]
        rows = convergence_study(cfg.params, eps_list, t_check, sim_cfg)
        path = exports.write_csv(
            out / "convergence.csv",
            ["epsilon", "sup_R", "sup_T", "l1_R", "l1_T"],
            ([f"{r.epsilon:.17g}", f"{r.sup_R:.17g}", f"{r.sup_T:.17g}",
              f"{r.l1_R:.17g}", f"{r.l1_T:.17g}"] for r in rows))
        manifest.add(path)
        for r in rows:
            print(f"epsilon={r.epsilon:<8g} sup_R={r.sup_R:.3e} l1_R={r.l1_R:.3e}")
        manifest.write()
        return 0

    which = cfg.sim["which"]
    if grid.dim == 1:
        ic2 = initial_condition_1d(grid)
    else:
        ic2 = initial_condition_2d(grid, cfg.sim["seed"])
    ic = split_state(ic2, cfg.params) if which == "fast" else ic2

    traj = run(cfg.params, sim_cfg, which=which, ic=ic)
    manifest.add(exports.write_diagnostics_csv(out / "diagnostics.csv", traj))
    x = grid.cell_centers()
    for snap in traj.snapshots:
        tag = f"t{snap.t:08.2f}".replace(".", "_")
        if grid.dim == 1:
            manifest.add(exports.write_snapshot_1d(
                out / f"snapshot_{tag}.csv", x, snap.R, snap.T))
        else:
            manifest.add(exports.write_snapshot_2d(
                out / f"snapshot_{tag}.csv", snap.R, snap.T, grid.L))
    final = traj.final
    meta = {"t": final.t, "L": grid.L, "n": grid.n, "seed": cfg.sim["seed"]}
    manifest.add(*exports.write_pgm(out / "final_R.pgm", final.R,
                                    metadata={**meta, "field": "R"}))
    manifest.add(*exports.write_pgm(out / "final_T.pgm", final.T,
                                    metadata={**meta, "field": "T"}))
    if cfg.figures:
        if grid.dim == 1:
            fig = figures.profile_figure(x, [(f"t={final.t:g}", final.R, final.T)])
        else:
            fig = figures.fields_figure(final.R, final.T, grid.L)
        manifest.add(figures.save(fig, out / "final_state.png"))
    d = traj.diagnostics
    print(f"advanced to t={final.t:g} ({which}); final std_R={d['std_R'][-1]:.3e}, "
          f"min_R={d['min_R'][-1]:.4g}, max_R={d['max_R'][-1]:.4g}")
    manifest.write()
    return 0


def cmd_continue(cfg) -> int:
    out = _outdir(cfg)
    manifest = exports.Manifest("continue", cfg, out)
    problem = cfg.make_problem()
    p_range = cfg.continuation_range()
    branches = bifurcation_diagram(problem, p_range,
                                   max_branches=cfg.continuation["max_branches"],
                                   step=cfg.step_config())
    names = []
    for i, br in enumerate(branches):
        name = f"branch_{i:03d}.csv"
        names.append(name)
        manifest.add(exports.write_branch_csv(out / name, br))
    manifest.add(exports.write_branch_index(out / "branches_index.csv",
                                            names, branches))
    if cfg.figures:
        if cfg.continuation["parameter"] == "sigma":
            scale, label = 1.0 / cfg.params.d_R, "sigma / d_R"
        else:
            scale, label = 1.0, "extra mortality s (1/year)"
        manifest.add(figures.save(figures.diagram_figure(branches, scale, label),
                                  out / "diagram.png"))
    n_special = sum(len(b.special_points) for b in branches)
    print(f"traced {len(branches)} branch(es) over "
          f"{cfg.continuation['parameter']} in [{p_range[0]:.4g}, {p_range[1]:.4g}]; "
          f"{n_special} special point(s)")
    manifest.write()
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides_from(args))
        if args.command == "equilibria":
            return cmd_equilibria(cfg)
        if args.command == "dispersion":
            return cmd_dispersion(cfg)
        if args.command == "turing-scan":
            return cmd_turing_scan(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, convergence=args.convergence,
                                t_check=args.t_check)
        if args.command == "continue":
            return cmd_continue(cfg)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, VegtoxError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
