"""Command-line frontend: single runs, horizon sweeps, formula verification.

Exit codes: 0 success, 1 run or verification failure, 2 usage error.
Traces serialize as CSV (fixed header, one row per step) or a single JSON
document; per-step timing lives only in the manifest so repeated runs of
one configuration stay byte-identical where the contract promises it.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time

import numpy as np

from . import __version__, game, oracle

CSV_HEADER = "t,loss,cum_loss,cum_opt,regret"
_SYNTHETIC = {"sqrt": lambda t: float(np.sqrt(t)), "linear": float}


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permbandit",
        description="Bandit linear optimization over rankings: run games, sweep horizons, verify formulas.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play one repeated game and write the trace")
    _add_game_flags(run)
    run.add_argument("--t", type=int, required=True, help="horizon (rounds)")
    run.add_argument("--seed", type=int, required=True, help="64-bit run seed")
    run.add_argument("--out", help="output path (default: stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="grid of horizons x seeds, aggregated regret and slope")
    _add_game_flags(sweep)
    sweep.add_argument("--t", required=True, help="comma-separated horizons, e.g. 4000,16000,64000")
    sweep.add_argument("--seeds", type=int, default=10, help="replicas per horizon")
    sweep.add_argument("--seed", type=int, default=0, help="base seed; child k uses base XOR k")
    sweep.add_argument("--jobs", type=int, default=1, help="concurrent child runs")
    sweep.add_argument("--out", help="output path for the aggregate JSON (default: stdout)")
    sweep.add_argument(
        "--synthetic",
        choices=sorted(_SYNTHETIC),
        help="self-test: replay an exact regret curve instead of playing games",
    )
    sweep.set_defaults(func=cmd_sweep)

    verify = sub.add_parser("verify", help="enumerate small-n ground truth against every closed form")
    verify.add_argument("--max-n", type=int, default=5, help="largest item count to enumerate (3..7)")
    verify.add_argument("--seed", type=int, default=0, help="seed for the randomized check inputs")
    verify.set_defaults(func=cmd_verify)
    return parser


def _add_game_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=("banditrank", "osmdrank"), required=True)
    p.add_argument("--n", type=int, required=True, help="number of items")
    p.add_argument("--adversary", required=True, help="fixed | noisy-fixed | switch | seasonal[:PERIOD]")
    p.add_argument("--gamma", type=float, help="exploration weight override, in (0, 1]")
    p.add_argument("--eta", type=float, help="step size override, positive")
    p.add_argument("--c-gamma", type=float, help="rescale the default gamma formula")
    p.add_argument("--c-eta", type=float, help="rescale the default eta formula")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return int(exc.code) if exc.code else 0
    try:
        return int(args.func(args))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _game_config(args: argparse.Namespace, t_horizon: int, seed: int) -> game.GameConfig:
    if args.gamma is not None and not (0.0 < args.gamma <= 1.0):
        raise _UsageError(f"--gamma must lie in (0, 1], got {args.gamma}")
    if args.eta is not None and not (args.eta > 0.0 and np.isfinite(args.eta)):
        raise _UsageError(f"--eta must be positive and finite, got {args.eta}")
    try:
        cfg = game.GameConfig(
            n=args.n,
            t_horizon=t_horizon,
            algo=args.algo,
            adversary=args.adversary,
            seed=seed,
            gamma=args.gamma,
            eta=args.eta,
            c_gamma=args.c_gamma,
            c_eta=args.c_eta,
        )
        # reject bad adversary specs before any game state is built
        game.make_adversary(
            cfg.adversary,
            cfg.n,
            cfg.t_horizon,
            game.resolve_regime(cfg.algo, cfg.regime),
            np.random.default_rng(0),
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    return cfg


def _manifest(cfg: game.GameConfig, trace: game.RegretTrace | None, fmt: str) -> dict:
    resolved = game.resolve_params(cfg)
    out = {
        "config": {
            "n": cfg.n,
            "t_horizon": cfg.t_horizon,
            "algo": cfg.algo,
            "adversary": cfg.adversary,
            "seed": int(cfg.seed),
            "gamma": resolved["gamma"],
            "eta": resolved["eta"],
            "c_gamma": cfg.c_gamma,
            "c_eta": cfg.c_eta,
            "regime": game.resolve_regime(cfg.algo, cfg.regime),
        },
        "format": fmt,
        "package_version": __version__,
        "rng": {"family": "PCG64", "numpy": np.__version__},
    }
    if fmt == "csv":
        out["columns"] = CSV_HEADER.split(",")
    if trace is not None:
        out["timing"] = trace.timing_summary()
    return out


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_text(trace: game.RegretTrace) -> str:
    lines = [CSV_HEADER]
    for i in range(trace.steps):
        lines.append(
            f"{i + 1},{float(trace.loss[i])!r},{float(trace.cum_loss[i])!r}"
            f",{float(trace.cum_opt[i])!r},{float(trace.regret[i])!r}"
        )
    return "\n".join(lines) + "\n"


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _game_config(args, args.t, args.seed)
    try:
        trace = game.run_game(cfg)
    except game.LearnerFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    manifest = _manifest(cfg, trace, args.format)
    resolved = game.resolve_params(cfg)
    if args.format == "csv":
        _write(args.out, _csv_text(trace))
        if args.out is not None:
            _write(args.out + ".manifest.json", _dump_json(manifest))
    else:
        summary = {
            "n": cfg.n,
            "t_horizon": cfg.t_horizon,
            "algo": cfg.algo,
            "adversary": cfg.adversary,
            "seed": int(cfg.seed),
            "gamma": resolved["gamma"],
            "eta": resolved["eta"],
            "final_regret": trace.final_regret,
            "steps_per_second": trace.timing_summary()["steps_per_second"],
            "clip_events": trace.clip_events,
        }
        payload = {
            "summary": summary,
            "manifest": manifest,
            "trace": {
                "t": list(range(1, trace.steps + 1)),
                "loss": [float(x) for x in trace.loss],
                "cum_loss": [float(x) for x in trace.cum_loss],
                "cum_opt": [float(x) for x in trace.cum_opt],
                "regret": [float(x) for x in trace.regret],
            },
        }
        _write(args.out, _dump_json(payload))
    return 0


def _sweep_child(cfg: game.GameConfig) -> float:
    return game.run_game(cfg).final_regret


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        horizons = [int(x) for x in str(args.t).split(",") if x]
    except ValueError as exc:
        raise _UsageError(f"bad --t list {args.t!r}") from exc
    if not horizons:
        raise _UsageError("--t needs at least one horizon")
    if args.seeds < 1:
        raise _UsageError(f"--seeds must be at least 1, got {args.seeds}")
    if args.jobs < 1:
        raise _UsageError(f"--jobs must be at least 1, got {args.jobs}")

    children = []
    for ti, t_horizon in enumerate(horizons):
        for k in range(args.seeds):
            child_seed = int(args.seed) ^ (ti * args.seeds + k)
            children.append((t_horizon, child_seed, _game_config(args, t_horizon, child_seed)))

    t0 = time.perf_counter()
    regrets = [0.0] * len(children)
    if args.synthetic is not None:
        curve = _SYNTHETIC[args.synthetic]
        for i, (t_horizon, _, _) in enumerate(children):
            regrets[i] = curve(t_horizon)
    elif args.jobs == 1:
        for i, (_, _, cfg) in enumerate(children):
            try:
                regrets[i] = _sweep_child(cfg)
            except game.LearnerFailure as exc:
                print(f"error: child seed {cfg.seed}: {exc}", file=sys.stderr)
                return 1
        # replicas are independent; any completion order gives the same table
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_sweep_child, cfg): i for i, (_, _, cfg) in enumerate(children)}
            for fut in concurrent.futures.as_completed(futures):
                try:
                    regrets[futures[fut]] = fut.result()
                except game.LearnerFailure as exc:
                    print(f"error: sweep child failed: {exc}", file=sys.stderr)
                    return 1
    elapsed = time.perf_counter() - t0

    per_t = []
    by_t: dict[int, list[float]] = {t: [] for t in horizons}
    for (t_horizon, _, _), r in zip(children, regrets):
        by_t[t_horizon].append(r)
    for t_horizon in horizons:
        vals = np.asarray(by_t[t_horizon])
        per_t.append(
            {
                "t_horizon": t_horizon,
                "mean_regret": float(vals.mean()),
                "std_regret": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            }
        )
    means = np.array([row["mean_regret"] for row in per_t])
    slope = None
    if len(horizons) >= 3 and np.all(means > 0):
        slope = game.regret_slope(np.asarray(horizons, dtype=float), means)

    base = _game_config(args, horizons[0], int(args.seed))
    payload = {
        "sweep": {
            "algo": args.algo,
            "n": args.n,
            "adversary": args.adversary,
            "horizons": horizons,
            "seeds_per_horizon": args.seeds,
            "base_seed": int(args.seed),
            "child_seeds": [seed for _, seed, _ in children],
            "synthetic": args.synthetic,
            "per_horizon": per_t,
            "slope": slope,
            "elapsed_s": elapsed,
        },
        "manifest": _manifest(base, None, "json"),
    }
    _write(args.out, _dump_json(payload))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        rows = oracle.run_verify(max_n=args.max_n, seed=args.seed)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    width = max(len(r.name) for r in rows)
    print(f"{'formula':{width}}  {'max residual':>12}  {'tolerance':>9}  status")
    ok = True
    for r in rows:
        status = "ok" if r.ok else "FAIL"
        ok = ok and r.ok
        print(f"{r.name:{width}}  {r.residual:12.3e}  {r.tol:9.1e}  {status}")
    print(f"{'all formulas verified' if ok else 'VERIFICATION FAILED'} (max n = {args.max_n})")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
