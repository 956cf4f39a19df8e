"""Command-line entry point: ``ekf-deepc <command> --config FILE --out DIR``.

Commands
    gen-data   N trajectory CSVs sharing one exciting input, plus manifest.json
    average    Hankel blocks of a trajectory directory (first member and average)
    run        one closed-loop run: trajectory CSV and summary JSON
    sweep      lambda grid search, or cost curves over the configured sweep
    baseline   Monte-Carlo cost of the perfect-model MPC
    check      excitation, data-length and conditioning report for a dataset

Exit codes: 0 success, 1 failed check, 2 configuration error,
3 infeasible or failed run, 4 file error.
"""
from __future__ import annotations

import argparse
import glob
import logging
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from . import harness
from .config import ConfigError, SweepSpec, dump_config, load_config
from .deepc import assemble_parametric_qp
from .hankel import (DataBlocks, average_data_blocks, build_block_hankel, excitation_order, numerical_rank,
                     split_past_future)
from .lti_sim import Trajectory, collect_dataset, gaussian_x0_sampler, generate_pe_input
from .qp import InfeasibleError, QpError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4


class RunFailed(RuntimeError):
    pass


def _load(args) -> tuple[harness.ExperimentConfig, SweepSpec]:
    if args.config is None:
        cfg, sweep = harness.ExperimentConfig(), SweepSpec()
    else:
        if not os.path.isfile(args.config):
            raise FileNotFoundError(f"config file not found: {args.config}")
        cfg, sweep = load_config(args.config)
    try:
        if args.seed is not None:
            cfg = replace(cfg, seed=int(args.seed))
        if getattr(args, "variant", None):
            cfg = replace(cfg, variant=args.variant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, sweep


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _read(reader, path):
    try:
        return reader(path)
    except (ValueError, IndexError, KeyError, StopIteration) as exc:
        raise OSError(f"cannot parse {path}: {exc}") from exc


def _trajectory_files(directory: str) -> list[str]:
    files = sorted(glob.glob(os.path.join(directory, "traj_*.csv")))
    if not files:
        raise FileNotFoundError(f"no traj_*.csv files in {directory}")
    return files


def _dataset(cfg: harness.ExperimentConfig, rep: int) -> list[Trajectory]:
    input_ss, data_ss, _ = harness.rep_streams(cfg.seed, rep)
    u = generate_pe_input(cfg.model.m, cfg.T, cfg.pe_order, cfg.input_amplitude, seed=input_ss)
    return collect_dataset(cfg.model, cfg.N, u, gaussian_x0_sampler(cfg.model.n, cfg.x0_variance),
                           cfg.noise, seed=data_ss)


def cmd_gen_data(args) -> int:
    cfg, _ = _load(args)
    out = _out_dir(args)
    trajs = _dataset(cfg, args.rep)
    files = []
    for i, t in enumerate(trajs):
        name = f"traj_{i:03d}.csv"
        t.to_csv(os.path.join(out, name))
        files.append(name)
    manifest = {"seed": cfg.seed, "rep": args.rep, "N": cfg.N, "T": cfg.T, "m": cfg.model.m, "p": cfg.model.p,
                "n": cfg.model.n, "Np": cfg.deepc.Np, "Nf": cfg.deepc.Nf, "pe_order": cfg.pe_order,
                "input_amplitude": cfg.input_amplitude, "sigma_w2": cfg.sigma_w2, "sigma_v2": cfg.sigma_v2,
                "files": files}
    harness.write_json(manifest, os.path.join(out, "manifest.json"))
    print(f"wrote {len(files)} trajectories to {out}")
    return EXIT_OK


def _blocks_from_dir(directory: str, Np: int, Nf: int) -> list[DataBlocks]:
    return [split_past_future(t.inputs, t.outputs, Np, Nf)
            for t in (_read(Trajectory.from_csv, f) for f in _trajectory_files(directory))]


def cmd_average(args) -> int:
    cfg, _ = _load(args)
    out = _out_dir(args)
    blocks = _blocks_from_dir(args.data, cfg.deepc.Np, cfg.deepc.Nf)
    try:
        avg = average_data_blocks(blocks)
    except ValueError as exc:
        raise ConfigError(f"cannot average {args.data}: {exc}") from exc
    blocks[0].to_csv(os.path.join(out, "standard_blocks.csv"))
    avg.to_csv(os.path.join(out, "averaged_blocks.csv"))
    print(f"averaged {len(blocks)} datasets into {os.path.join(out, 'averaged_blocks.csv')}")
    return EXIT_OK


def _result_summary(res: harness.ExperimentResult) -> dict:
    return {"J": res.J, "variant": res.variant, "lambda_y": res.lambda_y, "lambda_g": res.lambda_g,
            "seed": res.seed, "rep": res.rep, "fallbacks": res.fallbacks, "failed": res.failed}


def cmd_run(args) -> int:
    cfg, _ = _load(args)
    out = _out_dir(args)
    data = _read(DataBlocks.from_csv, args.data) if args.data else None
    res = harness.run_closed_loop(cfg, data=data, rep=args.rep)
    stem = os.path.join(out, f"run_{cfg.variant.replace('+', '_')}_rep{args.rep}")
    res.to_csv(stem + ".csv")
    harness.write_json(_result_summary(res), stem + ".json")
    print(f"{cfg.variant}: J = {res.J:.6g}")
    if res.failed:
        raise RunFailed(f"closed-loop run failed (see {stem}.json)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, sweep = _load(args)
    out = _out_dir(args)
    summary = {"seed": cfg.seed, "repetitions": cfg.repetitions}
    if sweep.parameter is not None:
        variants = [args.variant] if args.variant else sweep.variants
        points = harness.sweep_parameter(cfg, sweep.parameter, sweep.grid, variants, n_jobs=args.jobs)
        harness.write_curves_csv(points, os.path.join(out, "curves.csv"), sweep.parameter)
        summary.update(parameter=sweep.parameter, points=[
            {"value": p.value, "variant": p.variant, "mean": p.mean, "std": p.std, "n": p.n, "failed": p.failed,
             "invalid": p.invalid, "lambda_y": p.lambda_y, "lambda_g": p.lambda_g} for p in points])
        print(f"wrote {len(points)} curve points to {os.path.join(out, 'curves.csv')}")
    else:
        res = harness.sweep_lambda(cfg, n_jobs=args.jobs)
        path = os.path.join(out, "lambda_table.csv")
        with open(path, "w") as fh:
            fh.write("lambda_y,lambda_g,mean_J,std_J,n,failed\n")
            for row in res.table:
                fh.write(",".join(repr(v) for v in row) + "\n")
        summary.update(variant=cfg.variant, best_lambda_y=res.best_lambda_y, best_lambda_g=res.best_lambda_g)
        print(f"{cfg.variant}: best lambda_y = {res.best_lambda_y:g}, lambda_g = {res.best_lambda_g:g}")
    harness.write_json(summary, os.path.join(out, "summary.json"))
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg, _ = _load(args)
    out = _out_dir(args)
    mc = harness.monte_carlo(replace(cfg, variant="mpc-oracle"), n_jobs=args.jobs)
    s = mc.stats["mpc-oracle"]
    np.savetxt(os.path.join(out, "baseline_costs.csv"), s.costs, header="J", comments="")
    harness.write_json({"seed": cfg.seed, "repetitions": cfg.repetitions, **mc.summary()},
                       os.path.join(out, "baseline.json"))
    print(f"mpc-oracle: mean J = {s.mean:.6g} over {s.n} runs")
    return EXIT_OK


def check_dataset(cfg: harness.ExperimentConfig, trajs: list[Trajectory]) -> dict:
    """Excitation, data-length and conditioning diagnostics of a dataset."""
    u = trajs[0].inputs
    T, m = u.shape
    n, Np, Nf = cfg.model.n, cfg.deepc.Np, cfg.deepc.Nf
    required = Np + Nf + n
    shared = all(np.array_equal(t.inputs, u) for t in trajs[1:])
    report = {"trajectories": len(trajs), "T": T, "shared_input": shared, "required_order": required}
    achieved = excitation_order(u)
    report["achieved_order"] = achieved
    if required <= T:
        report["rank"] = numerical_rank(build_block_hankel(u, required).data)
    else:
        report["rank"] = None
    report["full_rank"] = m * required
    report["pe_ok"] = achieved >= required
    need = (m + 1) * required + 1
    report["T_bound"] = need
    report["T_ok"] = T >= need
    try:
        blocks = [split_past_future(t.inputs, t.outputs, Np, Nf) for t in trajs]
        data = average_data_blocks(blocks) if shared else blocks[0]
        P = assemble_parametric_qp(data, cfg.deepc).P
        report["P_condition"] = float(np.linalg.cond(P))
    except (ValueError, QpError) as exc:
        report["P_condition"] = None
        report["P_error"] = str(exc)
    return report


def cmd_check(args) -> int:
    cfg, _ = _load(args)
    trajs = ([_read(Trajectory.from_csv, f) for f in _trajectory_files(args.data)] if args.data
             else _dataset(cfg, args.rep))
    rep = check_dataset(cfg, trajs)
    pe = "PASS" if rep["pe_ok"] else "FAIL"
    print(f"excitation: {pe} (order achieved {rep['achieved_order']}, required {rep['required_order']}, "
          f"rank {rep['rank']} of {rep['full_rank']})")
    if rep["T_ok"]:
        print(f"data length: PASS (T={rep['T']} >= {rep['T_bound']})")
    else:
        print(f"data length: WARNING T={rep['T']} is below (m+1)(Np+Nf+n)+1 = {rep['T_bound']}")
    if not rep["shared_input"]:
        print("input: WARNING trajectories do not share one input; averaging is not valid")
    if rep["P_condition"] is not None:
        print(f"Hessian condition number: {rep['P_condition']:.3e}")
    else:
        print(f"Hessian: unavailable ({rep['P_error']})")
    if args.out:
        harness.write_json(rep, os.path.join(_out_dir(args), "check.json"))
    return EXIT_OK if rep["pe_ok"] and rep["T_ok"] else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ekf-deepc", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment file (defaults when omitted)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for Monte-Carlo loops")
    common.add_argument("--variant", choices=harness.VARIANTS, help="controller variant override")
    common.add_argument("--rep", type=int, default=0, help="repetition index for single-dataset commands")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, helptext in [
        ("gen-data", cmd_gen_data, "generate N trajectories sharing one exciting input"),
        ("average", cmd_average, "build standard and averaged Hankel blocks from a trajectory directory"),
        ("run", cmd_run, "single closed-loop run"),
        ("sweep", cmd_sweep, "lambda grid search or parameter sweep"),
        ("baseline", cmd_baseline, "Monte-Carlo cost of the perfect-model MPC"),
        ("check", cmd_check, "excitation and conditioning diagnostics"),
    ]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.set_defaults(func=fn)
        if name in ("average", "check"):
            p.add_argument("--data", required=name == "average", help="directory of traj_*.csv files")
        if name == "run":
            p.add_argument("--data", help="DataBlocks CSV to use instead of freshly generated data")
    sub.add_parser("write-config", help="write the default configuration as YAML").add_argument("path")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "write-config":
        dump_config(harness.ExperimentConfig(), args.path)
        return EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, RunFailed) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
