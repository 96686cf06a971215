"""Command-line harness: generate chains, solve them, reproduce the tables.

Four subcommands tie the library together:

* ``gen``    writes a benchmark chain as Matrix Market files plus a manifest,
* ``solve``  runs the two-phase solver (or the unpreconditioned baseline),
* ``table``  sweeps problem sizes over the three solver rows,
* ``fov``    emits field-of-values datasets for the diagnostic plots.

All outputs are deterministic for a fixed ``--seed``: JSON is written with
sorted keys, floats use ``repr`` round-tripping, and wall-clock timings are
printed to the console but never stored in files.

Exit codes: 0 success, 2 usage error, 3 numerical failure or
non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bootstrap import run_setup
from .chains import ChainProblem, import_chain, molloy_net, petri_spec_from_json
from .fov import (fov_boundary, fov_to_csv, nu_sidecar, project_range,
                  projected_preconditioned)
from .presets import PRESETS, build_problem, default_setup_config
from .solver import (GmresConfig, SolveReport, VCycleOperator, gmres,
                     report_to_json, residuals_to_csv, solve_steady_state)
from .sparse import save_matrix_market, save_vector

USAGE_ERROR, NUMERICAL_ERROR, IO_ERROR = 2, 3, 4


def _out_dir(args) -> Path:
    base = os.environ.get("MARKOVMG_OUTDIR")
    out = Path(args.out) if args.out else (Path(base) if base else Path("."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _build_from_args(args) -> ChainProblem:
    if getattr(args, "import_path", None):
        if not Path(args.import_path).exists():
            raise FileNotFoundError(f"no such file: {args.import_path}")
        return import_chain(args.import_path)
    family = args.family
    if family is None:
        raise SystemExit("either --family or --import is required")
    if family == "petri":
        if args.petri_spec:
            spec = petri_spec_from_json(Path(args.petri_spec).read_text())
            return build_problem("petri", petri_spec=spec)
        return build_problem("petri", tokens=args.tokens)
    if family == "birth-death":
        return build_problem(family, n=args.n, mu=args.mu)
    if family in ("uniform2d", "tandem"):
        return build_problem(family, n=args.n)
    if family == "planar":
        return build_problem(family, n=args.n, seed=args.seed)
    raise SystemExit(f"unknown family {family!r}")


def _effective_params(args, problem: ChainProblem) -> dict:
    return {
        "family": problem.family,
        "n": problem.n,
        "seed": args.seed,
        "params": problem.params,
    }


def _setup_config_from_args(args, problem: ChainProblem):
    family = problem.family if problem.family in PRESETS else "imported"
    overrides = {}
    if args.caliber is not None:
        from .interp import InterpConfig
        overrides["interp"] = InterpConfig(caliber=args.caliber)
    if args.sweeps is not None:
        from .relax import SmootherConfig
        overrides["smoother"] = SmootherConfig(omega=args.omega,
                                               sweeps_pre=args.sweeps,
                                               sweeps_post=args.sweeps)
    if args.tests is not None:
        overrides["n_tests"] = args.tests
    cfg = default_setup_config(family, cycles=max(args.cycles, 1),
                               seed=args.seed, **overrides)
    return cfg


def _gmres_config(args, preconditioned: bool) -> GmresConfig:
    restart = None if preconditioned else args.restart
    return GmresConfig(restart=restart, max_iters=args.max_iters, rtol=args.rtol)


def cmd_gen(args) -> int:
    problem = _build_from_args(args)
    out = _out_dir(args)
    save_matrix_market(out / "A.mtx", problem.A)
    save_matrix_market(out / "B.mtx", problem.B)
    _write_json(out / "manifest.json", _effective_params(args, problem))
    print(f"wrote {problem.family} chain with n = {problem.n} to {out}")
    return 0


def cmd_solve(args) -> int:
    problem = _build_from_args(args)
    out = _out_dir(args)
    if args.cycles == 0:
        report = solve_steady_state(problem, None, _gmres_config(args, False))
    else:
        cfg = _setup_config_from_args(args, problem)
        report = solve_steady_state(problem, cfg, _gmres_config(args, True))
    doc = report.to_json_dict()
    doc["n"] = problem.n
    doc["family"] = problem.family
    _write_json(out / "report.json", doc)
    save_vector(out / "x.mtx", report.x)
    (out / "residuals.csv").write_text(residuals_to_csv(report))
    manifest = _effective_params(args, problem)
    manifest.update({"cycles": args.cycles, "rtol": args.rtol,
                     "restart": args.restart, "max_iters": args.max_iters})
    _write_json(out / "manifest.json", manifest)
    label = "preconditioned" if args.cycles else "GMRES(50)"
    print(f"{label} solve: {report.iterations} iterations, "
          f"converged={report.converged}, levels={report.levels}, "
          f"o_g={report.o_g:.2f}, o_c={report.o_c:.2f} "
          f"(setup {report.setup_seconds:.2f}s, solve {report.solve_seconds:.2f}s)")
    return 0 if report.converged else NUMERICAL_ERROR


ROW_LABELS = ("GMRES(50)", "BAMG + GMRES", "BAMG^2 + GMRES")


def _table_cell(report: SolveReport, cap: int, with_levels: bool) -> str:
    if not report.converged:
        return f">{cap}"
    cell = str(report.iterations)
    if with_levels:
        cell += f" ({report.levels_reported})"
    return cell


def cmd_table(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise SystemExit("size list may not be empty")
    family = args.family
    with_levels = family == "planar"
    rows = []
    csv_lines = ["family,row,n,iterations,converged,levels,grid_complexity,operator_complexity"]
    for label, cycles in zip(ROW_LABELS, (0, 1, 2)):
        cells = []
        for n in sizes:
            if family == "petri":
                problem = build_problem(family, tokens=n)
            else:
                problem = build_problem(family, n=n, seed=args.seed,
                                        **({"mu": args.mu} if family == "birth-death" else {}))
            if cycles == 0:
                gcfg = GmresConfig(restart=args.restart, max_iters=args.cap, rtol=args.rtol)
                report = solve_steady_state(problem, None, gcfg)
            else:
                cfg = default_setup_config(family, cycles=cycles, seed=args.seed)
                gcfg = GmresConfig(restart=None, max_iters=args.cap, rtol=args.rtol)
                report = solve_steady_state(problem, cfg, gcfg)
            cells.append(_table_cell(report, args.cap, with_levels))
            csv_lines.append(
                f"{family},{label},{problem.n},{report.iterations},{report.converged},"
                f"{report.levels_reported},{report.o_g!r},{report.o_c!r}")
        rows.append((label, cells))

    width = max(len(lbl) for lbl in ROW_LABELS) + 2
    cw = max(12, max(len(c) for _, cells in rows for c in cells) + 2)
    header_label = "tokens" if family == "petri" else "n"
    lines = [f"{header_label:<{width}}" + "".join(f"{n:>{cw}}" for n in sizes)]
    for label, cells in rows:
        lines.append(f"{label:<{width}}" + "".join(f"{c:>{cw}}" for c in cells))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    out = _out_dir(args)
    (out / "table.txt").write_text(text)
    (out / "table.csv").write_text("\n".join(csv_lines) + "\n")
    return 0


def cmd_fov(args) -> int:
    problem = _build_from_args(args)
    out = _out_dir(args)
    cfg = _setup_config_from_args(args, problem)
    setup = run_setup(problem, cfg)
    vop = VCycleOperator(setup.hierarchy, cfg.smoother)

    datasets = {}
    datasets["original"] = fov_boundary(problem.B.toarray(), n_angles=args.angles)
    proj = project_range(problem.B)
    datasets["projected"] = fov_boundary(proj.projected, n_angles=args.angles)
    pre = projected_preconditioned(problem.B, vop)
    datasets["preconditioned"] = fov_boundary(pre.projected, n_angles=args.angles)

    nus = {}
    for name, fov in datasets.items():
        boundary_csv, eig_csv = fov_to_csv(fov)
        (out / f"fov_{name}_boundary.csv").write_text(boundary_csv)
        (out / f"fov_{name}_eigenvalues.csv").write_text(eig_csv)
        nus[f"nu_{name}"] = fov.nu
        print(f"{name}: nu = {fov.nu:.6g}, origin inside = {fov.contains_origin}")
    (out / "nu.json").write_text(nu_sidecar(nus) + "\n")
    manifest = _effective_params(args, problem)
    manifest.update({"angles": args.angles, "cycles": args.cycles})
    _write_json(out / "manifest.json", manifest)
    return 0


def _add_family_options(p: argparse.ArgumentParser, include_import: bool = True):
    p.add_argument("--family", choices=sorted(set(PRESETS) - {"imported"}),
                   help="benchmark chain family")
    p.add_argument("--n", type=int, help="problem size (square for lattices)")
    p.add_argument("--mu", type=float, default=0.96,
                   help="drift parameter of the birth-death chain")
    p.add_argument("--tokens", type=int, default=10,
                   help="initial tokens for the Petri preset")
    p.add_argument("--preset", choices=["molloy"], default="molloy",
                   help="built-in Petri net topology")
    p.add_argument("--petri-spec", help="JSON file describing a custom Petri net")
    p.add_argument("--seed", type=int, default=1, help="seed for all randomized steps")
    if include_import:
        p.add_argument("--import", dest="import_path",
                       help="Matrix Market file holding A or B")


def _add_solver_options(p: argparse.ArgumentParser):
    p.add_argument("--cycles", type=int, default=1, choices=[0, 1, 2],
                   help="setup cycles (0 = plain restarted GMRES)")
    p.add_argument("--rtol", type=float, default=1e-7,
                   help="target scaled residual")
    p.add_argument("--restart", type=int, default=50,
                   help="restart length of the unpreconditioned baseline")
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--omega", type=float, default=0.7, help="Jacobi damping")
    p.add_argument("--sweeps", type=int, help="pre/post smoothing sweeps")
    p.add_argument("--caliber", type=int, help="interpolation caliber")
    p.add_argument("--tests", type=int, help="number of test vectors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovmg",
        description="Steady states of Markov chains via adaptively built "
                    "multigrid preconditioning")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a benchmark chain")
    _add_family_options(p_gen, include_import=False)
    p_gen.add_argument("--out", help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    p_solve = sub.add_parser("solve", help="solve for the steady-state vector")
    _add_family_options(p_solve)
    _add_solver_options(p_solve)
    p_solve.add_argument("--out", help="output directory")
    p_solve.set_defaults(func=cmd_solve)

    p_table = sub.add_parser("table", help="reproduce a benchmark table")
    p_table.add_argument("--family", required=True,
                         choices=sorted(set(PRESETS) - {"imported"}))
    p_table.add_argument("--sizes", required=True,
                         help="comma-separated sizes (token counts for petri)")
    p_table.add_argument("--mu", type=float, default=0.96)
    p_table.add_argument("--seed", type=int, default=1)
    p_table.add_argument("--cap", type=int, default=1000,
                         help="iteration cap; failed cells print as >cap")
    p_table.add_argument("--rtol", type=float, default=1e-7)
    p_table.add_argument("--restart", type=int, default=50)
    p_table.add_argument("--out", help="output directory")
    p_table.set_defaults(func=cmd_table)

    p_fov = sub.add_parser("fov", help="field-of-values datasets")
    _add_family_options(p_fov)
    _add_solver_options(p_fov)
    p_fov.add_argument("--angles", type=int, default=256)
    p_fov.add_argument("--out", help="output directory")
    p_fov.set_defaults(func=cmd_fov)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return IO_ERROR
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return IO_ERROR
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except np.linalg.LinAlgError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
