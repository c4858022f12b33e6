"""Command-line entry points.

Four subcommands drive the library: ``run`` (one trajectory),
``ensemble`` (pooled histogram, occupation and transition-order reports),
``exit-study`` (mean exit times vs noise amplitude against the barrier
prediction) and ``landscape`` (grid, gradient, limit-measure and barrier
exports).  Every invocation writes a ``manifest.json`` holding the fully
resolved config, the master seed, the tool version and a digest of each
output file; rerunning from the same manifest reproduces the outputs
byte for byte.  Exit codes: 0 success, 2 configuration error, 3 runtime
abort (NaN or domain escape).
"""

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import build_runtime, dumps_toml, load_config
from .diagnostics import occupation, stationary_histogram, transition_sequence
from .errors import ConfigurationError, DomainEscapeError, NanAbortError
from .landscape import hessian_dets, limit_measure
from .largedev import barrier, exit_rate_fit
from .noise import stream
from .solver import simulate, simulate_ensemble


def _fmt(value):
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_dir, cfg, seed, outputs):
    manifest = {
        "config": _jsonable(cfg),
        "seed": int(seed),
        "version": __version__,
        "outputs": {name: _digest(out_dir / name) for name in outputs},
    }
    _write_json(out_dir / "manifest.json", manifest)


def _ensemble_worker(args):
    cfg_dict, indices, seed, store_states = args
    sim = build_runtime(cfg_dict)
    trajs = simulate_ensemble(sim, master_seed=seed, indices=indices,
                              store_states=store_states)
    return list(zip(indices, trajs))


def _run_ensemble(cfg, sim, n_traj, seed, jobs):
    if jobs <= 1:
        return simulate_ensemble(sim, master_seed=seed, n_traj=n_traj)
    chunks = [list(range(start, n_traj, jobs)) for start in range(jobs)]
    chunks = [c for c in chunks if c]
    results = {}
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for pairs in pool.map(_ensemble_worker,
                              [(cfg, c, seed, False) for c in chunks]):
            for idx, traj in pairs:
                results[idx] = traj
    return [results[i] for i in range(n_traj)]


def cmd_run(cfg, out_dir, seed, jobs):
    sim = build_runtime(cfg)
    traj = simulate(sim, stream(seed, 0))
    x = sim.disc.x
    rows = []
    for i, t in enumerate(traj.times):
        for j in range(sim.disc.n_nodes):
            rows.append((_fmt(t), j, _fmt(x[j]), _fmt(traj.us[i, j]),
                         _fmt(traj.vs[i, j])))
    _write_csv(out_dir / "trajectory.csv", ["t", "node", "x", "u", "v"], rows)
    _write_csv(out_dir / "diagnostics.csv", ["t", "avg_u", "avg_v", "basin"],
               [(_fmt(t), _fmt(au), _fmt(av), int(b))
                for t, au, av, b in zip(traj.times, traj.avg_u, traj.avg_v,
                                        traj.basins)])
    _write_manifest(out_dir, cfg, seed, ["trajectory.csv", "diagnostics.csv"])
    return 0


def cmd_ensemble(cfg, out_dir, seed, jobs, n_traj):
    if n_traj < 1:
        raise ConfigurationError("ensemble needs n >= 1")
    sim = build_runtime(cfg)
    trajs = _run_ensemble(cfg, sim, n_traj, seed, jobs)
    burn_in = float(cfg["run"]["burn_in"])
    dwell = int(cfg["run"]["dwell_steps"])
    n_wells = len(cfg["landscape"]["wells"])

    hist = stationary_histogram(trajs, burn_in=burn_in)
    rows = []
    for channel, counts, edges in (("u", hist.counts_u, hist.edges_u),
                                   ("v", hist.counts_v, hist.edges_v)):
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            rows.append((channel, _fmt(lo), _fmt(hi), int(c)))
    _write_csv(out_dir / "histogram.csv",
               ["channel", "bin_lo", "bin_hi", "count"], rows)

    pooled = np.concatenate([t.basins for t in trajs])
    fractions = np.bincount(pooled, minlength=n_wells) / len(pooled)
    per_traj = np.stack([occupation(t, t.times[-1], n_wells).fractions
                         for t in trajs])
    _write_json(out_dir / "occupation.json", {
        "labels": cfg["landscape"]["labels"],
        "fractions": fractions,
        "per_trajectory_mean": per_traj.mean(axis=0),
        "per_trajectory_std": per_traj.std(axis=0, ddof=1) if n_traj > 1 else np.zeros(n_wells),
        "horizon": float(cfg["run"]["t_end"]),
        "n_traj": n_traj,
    })

    counts = {}
    ordered = ">".join(str(k) for k in range(n_wells))
    for t in trajs:
        key = ">".join(map(str, transition_sequence(t, dwell_steps=dwell)))
        counts[key] = counts.get(key, 0) + 1
    _write_json(out_dir / "transitions.json", {
        "sequences": dict(sorted(counts.items())),
        "n_traj": n_traj,
        "in_order_sequence": ordered,
        "in_order_fraction": counts.get(ordered, 0) / n_traj,
        "dwell_steps": dwell,
        "summary": {
            "mean_u": hist.mean_u, "std_u": hist.std_u,
            "mean_v": hist.mean_v, "std_v": hist.std_v,
            "n_samples": hist.n_samples,
        },
    })
    _write_manifest(out_dir, cfg, seed,
                    ["histogram.csv", "occupation.json", "transitions.json"])
    return 0


def cmd_exit_study(cfg, out_dir, seed, jobs, sigmas, n_per_sigma):
    sigmas = sigmas if sigmas is not None else list(cfg["study"]["sigmas"])
    if not sigmas:
        raise ConfigurationError("exit study needs a non-empty 'study.sigmas'")
    n = n_per_sigma if n_per_sigma is not None else int(cfg["study"]["n_traj"])
    sim = build_runtime(cfg)
    study = exit_rate_fit(sim, sigmas, n, seed,
                          dwell_steps=int(cfg["run"]["dwell_steps"]))
    _write_json(out_dir / "exit_study.json", {
        "sigmas": study.sigmas,
        "mean_exit": [None if not np.isfinite(m) else m for m in study.mean_exit],
        "censoring": study.censoring,
        "n_traj": study.n_traj,
        "fitted_slope": study.fitted_slope,
        "predicted_slope": study.predicted_slope,
        "barrier": study.report.barrier,
        "saddle_point": list(study.report.saddle_point),
        "from_well": study.report.from_well,
        "to_well": study.report.to_well,
        "unreliable": study.unreliable,
    })
    _write_manifest(out_dir, cfg, seed, ["exit_study.json"])
    return 0


def cmd_landscape(cfg, out_dir, seed, jobs):
    sim = build_runtime(cfg)
    land = sim.landscape
    raw = land.source
    rows = []
    for i, u in enumerate(land.us):
        for j, v in enumerate(land.vs):
            rows.append((_fmt(u), _fmt(v), _fmt(land.grid[i, j]),
                         _fmt(land.grad_u[i, j]), _fmt(land.grad_v[i, j])))
    _write_csv(out_dir / "landscape.csv", ["u", "v", "F", "dFdu", "dFdv"], rows)

    barriers = []
    L = sim.disc.domain_length
    for k in range(raw.n_wells):
        for j in range(raw.n_wells):
            if k == j:
                continue
            try:
                rep = barrier(land, k, j, domain_length=L)
            except ConfigurationError:
                continue
            barriers.append({"from": k, "to": j, "barrier": rep.barrier,
                             "saddle_value": rep.saddle_value,
                             "saddle_point": list(rep.saddle_point)})
    _write_json(out_dir / "limit_measure.json", {
        "labels": raw.labels,
        "weights": [w.weight for w in raw.wells],
        "hessian_dets": hessian_dets(raw),
        "limit_weights": limit_measure(raw).weights,
        "barriers": barriers,
    })
    _write_manifest(out_dir, cfg, seed, ["landscape.csv", "limit_measure.json"])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="multiwell",
        description="Stochastic multi-well reaction-diffusion toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "simulate one trajectory"),
                            ("ensemble", "simulate many trajectories"),
                            ("exit-study", "mean exit times vs noise amplitude"),
                            ("landscape", "export the smoothed landscape")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--sigma", type=float, default=None,
                       help="override run.sigma")
        p.add_argument("--t-end", type=float, default=None,
                       help="override run.t_end")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--print-config", action="store_true",
                       help="print the resolved config and exit")
        if name == "ensemble":
            p.add_argument("-n", "--n-traj", type=int, default=100,
                           help="ensemble size")
        if name == "exit-study":
            p.add_argument("--sigmas", default=None,
                           help="comma-separated noise amplitudes")
            p.add_argument("--n-per-sigma", type=int, default=None,
                           help="trajectories per sigma")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        if args.sigma is not None:
            overrides["run.sigma"] = args.sigma
        if args.t_end is not None:
            overrides["run.t_end"] = args.t_end
        if args.seed is not None:
            overrides["run.seed"] = args.seed
        cfg = load_config(args.config, overrides)
        if args.print_config:
            sys.stdout.write(dumps_toml(cfg))
            return 0
        seed = int(cfg["run"]["seed"])
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "run":
            return cmd_run(cfg, out_dir, seed, args.jobs)
        if args.command == "ensemble":
            return cmd_ensemble(cfg, out_dir, seed, args.jobs, args.n_traj)
        if args.command == "exit-study":
            sigmas = None
            if args.sigmas is not None:
                sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
            return cmd_exit_study(cfg, out_dir, seed, args.jobs, sigmas,
                                  args.n_per_sigma)
        if args.command == "landscape":
            return cmd_landscape(cfg, out_dir, seed, args.jobs)
        raise ConfigurationError(f"unknown command {args.command}")
    except ConfigurationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DomainEscapeError, NanAbortError) as err:
        print(f"runtime abort: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
