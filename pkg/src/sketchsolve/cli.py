"""Batch experiment CLI.

Subcommands reproduce the library's error and runtime studies and emit
figure-ready CSV plus a JSON metadata record (config echo, seed, code
version, dataset hashes) sufficient to replay a run. Exit status is
nonzero whenever a run fails.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as exp
from .errors import SketchSolveError
from .matrices import DenseSampleableMatrix
from .pipeline import SolverParams, spawn_rng
from .portfolio import build_markowitz, load_prices, solve_portfolio, \
    synthetic_panel
from .recommend import load_movielens, recommend

DEFAULTS = {
    "sample-bench": {"dims": "100,1000,10000,100000,1000000,10000000",
                     "n_samples": 1000, "repeats": 3, "seed": 0,
                     "out": "sample_bench.csv", "trace_out": None},
    "highdim": {"n_bits": 50, "k": 3, "r": 150, "c": 150, "n_samples": 10000,
                "first_l": 100, "reps": 10, "seed": 0, "sigma": None,
                "beta": None, "exact_v": False, "out": "highdim.csv"},
    "random": {"m": 4000, "n": 2000, "k": 5, "kappa": 5.0, "r": 425, "c": None,
               "n_samples": 10000, "reps": 10, "seed": 0,
               "solution_samples": 500, "sweep_r": None, "sweep_k": None,
               "sweep_kappa": None, "out": "random.csv"},
    "portfolio": {"prices": None, "synthetic": None, "mu": None, "r": 340,
                  "c": 340, "k": 10, "n_samples": 10000, "reps": 10,
                  "seed": 0, "solution_samples": 50, "out": "portfolio.csv"},
    "movielens": {"ratings": None, "user": 0, "r": 450, "c": 4500, "k": 10,
                  "n_samples": 10000, "reps": 10, "seed": 0,
                  "solution_samples": 500, "top_n": 10, "out": "movielens.csv"},
}


def _int_list(text):
    return [int(x) for x in str(text).split(",") if x != ""]


def _float_list(text):
    return [float(x) for x in str(text).split(",") if x != ""]


def _write_csv(path, rows, fieldnames=None):
    if not rows:
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=names, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)


def _write_meta(out, config, seed, datasets=None):
    meta = exp.run_metadata(config, seed, datasets)
    path = Path(str(out) + ".meta.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, default=str)


def _reps_path(out):
    p = Path(out)
    return p.with_name(p.stem + "_reps" + p.suffix)


def _spectrum_path(out):
    p = Path(out)
    return p.with_name(p.stem + "_spectrum" + p.suffix)


def cmd_sample_bench(cfg) -> int:
    dims = _int_list(cfg["dims"])
    trace = [] if cfg["trace_out"] else None
    rows = exp.run_sample_bench(dims, n_samples=cfg["n_samples"],
                                seed=cfg["seed"], repeats=cfg["repeats"],
                                trace=trace)
    _write_csv(cfg["out"], rows, ["dim", "method", "n_samples", "seconds"])
    if trace is not None:
        trace_rows = [{"dim": dim, "method": method, "position": t,
                       "index": int(idx)}
                      for dim, method, indices in trace
                      for t, idx in enumerate(indices)]
        _write_csv(cfg["trace_out"], trace_rows)
    _write_meta(cfg["out"], cfg, cfg["seed"])
    for row in rows:
        print(f"dim={row['dim']:>9d} method={row['method']:<7s} "
              f"seconds={row['seconds']:.6f}")
    return 0


def cmd_highdim(cfg) -> int:
    sigma = _float_list(cfg["sigma"]) if cfg["sigma"] else None
    beta = _float_list(cfg["beta"]) if cfg["beta"] else None
    rows, report, problem = exp.run_highdim(
        n_bits=cfg["n_bits"], k=cfg["k"], r=cfg["r"], c=cfg["c"],
        n_coeff_samples=cfg["n_samples"], first_l=cfg["first_l"],
        n_repetitions=cfg["reps"], seed=cfg["seed"], sigma=sigma, beta=beta,
        use_exact_v=cfg["exact_v"])
    _write_csv(_reps_path(cfg["out"]), rows)
    summary = {"n_bits": cfg["n_bits"], "k": cfg["k"], "r": cfg["r"],
               "c": cfg["c"], "N": cfg["n_samples"], "L": cfg["first_l"],
               "reps": cfg["reps"], **report.summary()}
    _write_csv(cfg["out"], [summary])
    _write_meta(cfg["out"], cfg, cfg["seed"],
                {"problem": json.loads(problem.to_json())})
    for name in ("eta_sigma", "eta_v", "eta_lambda", "eta_x"):
        print(f"{name}: {report.mean(name):.4f} +- {report.std(name):.4f}")
    return 0


def cmd_random(cfg) -> int:
    c_default = cfg["c"]
    points = []
    if cfg["sweep_r"]:
        for ri in _int_list(cfg["sweep_r"]):
            points.append({"k": cfg["k"], "kappa": cfg["kappa"], "r": ri,
                           "c": ri if c_default is None else c_default})
    if cfg["sweep_k"]:
        for ki in _int_list(cfg["sweep_k"]):
            points.append({"k": ki, "kappa": cfg["kappa"], "r": cfg["r"],
                           "c": c_default or cfg["r"]})
    if cfg["sweep_kappa"]:
        for kap in _float_list(cfg["sweep_kappa"]):
            points.append({"k": cfg["k"], "kappa": kap, "r": cfg["r"],
                           "c": c_default or cfg["r"]})
    if not points:
        points.append({"k": cfg["k"], "kappa": cfg["kappa"], "r": cfg["r"],
                       "c": c_default or cfg["r"]})

    all_rows, summaries = [], []
    for key, pt in enumerate(points):
        rows, _ = exp.run_random_point(
            m=cfg["m"], n=cfg["n"], k=pt["k"], kappa=pt["kappa"], r=pt["r"],
            c=pt["c"], n_coeff_samples=cfg["n_samples"],
            n_repetitions=cfg["reps"], seed=cfg["seed"], point_key=key,
            n_solution_samples=cfg["solution_samples"])
        all_rows.extend(rows)
        summaries.append({"m": cfg["m"], "n": cfg["n"], **pt,
                          "N": cfg["n_samples"], **exp.summarize_rows(rows)})
        s = summaries[-1]
        print(f"k={pt['k']} kappa={pt['kappa']} r={pt['r']}: "
              f"eta_sigma={s.get('eta_sigma_mean', float('nan')):.4f} "
              f"eta_x_median={s.get('eta_x_median_mean', float('nan')):.4f}")
    _write_csv(_reps_path(cfg["out"]), all_rows)
    _write_csv(cfg["out"], summaries)
    _write_meta(cfg["out"], cfg, cfg["seed"])
    return 0


def _app_study(dense_factory, solve_rep, cfg, out, datasets, k,
               n_first_sigma=10):
    """Shared repetition loop for the two applications."""
    dense = dense_factory()
    exact = exp.exact_references(dense, k, **solve_rep["exact_kwargs"])
    rows, spectra = [], []
    for rep in range(cfg["reps"]):
        rng = spawn_rng(cfg["seed"], rep)
        run = solve_rep["run"](rng)
        row, spectrum = exp.score_app_run(run, dense, k, exact,
                                          n_first_sigma=n_first_sigma)
        row.update({"rep": rep, "r": cfg["r"], "c": cfg["c"], "k": k,
                    "N": cfg["n_samples"],
                    "t_ls": run.timings.ls, "t_svd_c": run.timings.svd_c,
                    "t_lambda": run.timings.coeff, "t_x": run.timings.solution,
                    "t_total": run.timings.total})
        rows.append(row)
        spectra.append(spectrum)
    baseline = solve_rep["baseline"]()
    for row in rows:
        row.update({"t_svd_a_direct": baseline.timings.svd_a,
                    "t_lambda_direct": baseline.timings.coeff,
                    "t_x_direct": baseline.timings.solution,
                    "t_total_direct": baseline.timings.total})
    spectrum_rows = []
    n_show = len(spectra[0]["sigma_exact"])
    for ell in range(n_show):
        approx_sig = [s["sigma_approx"][ell] for s in spectra
                      if len(s["sigma_approx"]) > ell]
        approx_lam = [s["lambda_approx"][ell] for s in spectra
                      if len(s["lambda_approx"]) > ell]
        spectrum_rows.append({
            "ell": ell + 1,
            "sigma_exact": spectra[0]["sigma_exact"][ell],
            "sigma_approx_mean": float(np.mean(approx_sig)),
            "sigma_approx_std": float(np.std(approx_sig)),
            "lambda_exact": spectra[0]["lambda_exact"][ell],
            "lambda_approx_mean": float(np.mean(approx_lam)),
            "lambda_approx_std": float(np.std(approx_lam)),
        })
    _write_csv(_reps_path(out), rows)
    summary = {"r": cfg["r"], "c": cfg["c"], "k": k, "N": cfg["n_samples"],
               "reps": cfg["reps"], **exp.summarize_rows(rows)}
    _write_csv(out, [summary])
    _write_csv(_spectrum_path(out), spectrum_rows)
    _write_meta(out, cfg, cfg["seed"], datasets)
    for name in ("eta_sigma", "eta_A", "eta_A_plus", "eta_lambda",
                 "eta_x_median"):
        print(f"{name}: {summary[name + '_mean']:.4f} "
              f"+- {summary[name + '_std']:.4f}")
    return 0


def cmd_portfolio(cfg) -> int:
    datasets = {}
    if cfg["prices"]:
        panel = load_prices(cfg["prices"])
        datasets["prices"] = {"path": str(cfg["prices"]),
                              "sha256": exp.file_sha256(cfg["prices"]),
                              "n_assets": len(panel.asset_ids),
                              "n_days": panel.n_days,
                              "n_rejected_rows": panel.n_rejected_rows}
        print(f"panel: {len(panel.asset_ids)} assets x {panel.n_days} days "
              f"({panel.n_rejected_rows} rejected rows)")
    elif cfg["synthetic"]:
        n_assets, n_days = _int_list(cfg["synthetic"])
        panel = synthetic_panel(n_assets, n_days, seed=[cfg["seed"], 13])
        datasets["prices"] = {"synthetic": [n_assets, n_days]}
    else:
        raise SketchSolveError("portfolio needs --prices or --synthetic")
    system = build_markowitz(panel, mu=cfg["mu"])
    params = SolverParams(r=cfg["r"], c=cfg["c"], k=cfg["k"],
                          n_coeff_samples=cfg["n_samples"],
                          n_solution_samples=cfg["solution_samples"])

    def run_one(rng):
        return solve_portfolio(system, params, rng).run

    from .pipeline import run_direct
    solve_rep = {"run": run_one,
                 "baseline": lambda: run_direct(system.A, b=system.b,
                                                k=cfg["k"]),
                 "exact_kwargs": {"b": system.b}}
    return _app_study(lambda: system.A, solve_rep, cfg, cfg["out"], datasets,
                      cfg["k"])


def cmd_movielens(cfg) -> int:
    if not cfg["ratings"]:
        raise SketchSolveError("movielens needs --ratings CSV path")
    prefs = load_movielens(cfg["ratings"])
    A = prefs.matrix
    datasets = {"ratings": {"path": str(cfg["ratings"]),
                            "sha256": exp.file_sha256(cfg["ratings"]),
                            "shape": [A.n_rows, A.n_cols], "nnz": A.nnz,
                            "n_rejected": prefs.n_rejected,
                            "n_duplicates": prefs.n_duplicates}}
    print(f"ratings: {A.n_rows} users x {A.n_cols} movies, {A.nnz} nonzeros")
    dense = A.to_dense()
    full_sigma = np.linalg.svd(dense, compute_uv=False)
    print(f"sigma_max={full_sigma[0]:.1f} sigma_min={full_sigma[-1]:.3g} "
          f"kappa={full_sigma[0] / full_sigma[-1]:.1f}")
    params = SolverParams(r=cfg["r"], c=cfg["c"], k=cfg["k"],
                          n_coeff_samples=cfg["n_samples"],
                          n_solution_samples=cfg["solution_samples"])

    last = {}

    def run_one(rng):
        res = recommend(prefs, cfg["user"], params, rng, top_n=cfg["top_n"])
        last["result"] = res
        return res.run

    from .pipeline import run_direct
    solve_rep = {"run": run_one,
                 "baseline": lambda: run_direct(A, user_row=cfg["user"],
                                                k=cfg["k"]),
                 "exact_kwargs": {"user_row": cfg["user"]}}
    rc = _app_study(lambda: dense, solve_rep, cfg, cfg["out"], datasets,
                    cfg["k"])
    res = last["result"]
    print(f"top-{cfg['top_n']} for user row {cfg['user']} "
          f"(movieId, predicted):")
    for movie_id, value in res.recommended:
        print(f"  {movie_id:>7d}  {value:8.3f}")
    return rc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchsolve",
        description="Benchmark CLI for sketch-and-sample low-rank solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, flags):
        p = sub.add_parser(name, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with defaults for this run")
        for flag, kwargs in flags.items():
            p.add_argument(flag, **kwargs)
        return p

    add("sample-bench", {
        "--dims": {"help": "comma-separated dimensions"},
        "--n-samples": {"type": int, "dest": "n_samples"},
        "--repeats": {"type": int},
        "--seed": {"type": int},
        "--trace-out": {"dest": "trace_out"},
        "--out": {}})
    add("highdim", {
        "--n-bits": {"type": int, "dest": "n_bits"},
        "--k": {"type": int}, "--r": {"type": int}, "--c": {"type": int},
        "--n-samples": {"type": int, "dest": "n_samples"},
        "--first-l": {"type": int, "dest": "first_l"},
        "--reps": {"type": int}, "--seed": {"type": int},
        "--sigma": {}, "--beta": {},
        "--exact-v": {"action": "store_true", "dest": "exact_v"},
        "--out": {}})
    add("random", {
        "--m": {"type": int}, "--n": {"type": int}, "--k": {"type": int},
        "--kappa": {"type": float},
        "--r": {"type": int}, "--c": {"type": int},
        "--n-samples": {"type": int, "dest": "n_samples"},
        "--reps": {"type": int}, "--seed": {"type": int},
        "--solution-samples": {"type": int, "dest": "solution_samples"},
        "--sweep-r": {"dest": "sweep_r"},
        "--sweep-k": {"dest": "sweep_k"},
        "--sweep-kappa": {"dest": "sweep_kappa"},
        "--out": {}})
    add("portfolio", {
        "--prices": {}, "--synthetic": {}, "--mu": {"type": float},
        "--r": {"type": int}, "--c": {"type": int}, "--k": {"type": int},
        "--n-samples": {"type": int, "dest": "n_samples"},
        "--reps": {"type": int}, "--seed": {"type": int},
        "--solution-samples": {"type": int, "dest": "solution_samples"},
        "--out": {}})
    add("movielens", {
        "--ratings": {}, "--user": {"type": int},
        "--r": {"type": int}, "--c": {"type": int}, "--k": {"type": int},
        "--n-samples": {"type": int, "dest": "n_samples"},
        "--reps": {"type": int}, "--seed": {"type": int},
        "--solution-samples": {"type": int, "dest": "solution_samples"},
        "--top-n": {"type": int, "dest": "top_n"},
        "--out": {}})
    return parser


_HANDLERS = {
    "sample-bench": cmd_sample_bench,
    "highdim": cmd_highdim,
    "random": cmd_random,
    "portfolio": cmd_portfolio,
    "movielens": cmd_movielens,
}


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS[command])
    ns = vars(args)
    config_path = ns.pop("config", None)
    if config_path:
        with open(config_path) as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise SketchSolveError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    ns.pop("command", None)
    cfg.update(ns)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        cfg = resolve_config(command, args)
        return _HANDLERS[command](cfg)
    except (SketchSolveError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
