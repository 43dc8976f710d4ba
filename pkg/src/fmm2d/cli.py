"""Batch front end: ``python -m fmm2d <command> ...``.

Exit status is 0 on success, 1 on a domain error (bad parameters or
inputs outside an operation's domain) and 2 on an I/O or file-format error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .calibrate import calibrate
from .config import RunConfig, load_json
from .costmodel import estimate_memory, estimate_work
from .errors import DomainError, InputFormatError
from .evaluator import direct_solve, error_report, fmm_solve
from .fileio import fmt, read_particles, read_vortices, write_particles
from .generate import generate
from .parsim import simulate, sweep, sweep_csv
from .partition import (
    ObjectiveWeights,
    TreeLoadModel,
    initial_partition,
    objective,
    refine_partition,
    work_imbalance,
)
from .quadtree import build_tree
from .vortex import Backend, Vortices, linear_impulse, step, total_circulation, velocities


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _depth(value: str):
    return value if value == "auto" else int(value)


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = cfg.updated(load_json(args.config))
    if getattr(args, "machine", None):
        cfg = cfg.updated({"machine": load_json(args.machine)})
    flags = {}
    for name in ("p", "depth", "s_target", "ranks", "lam", "k", "seed", "mode",
                 "max_iters", "reproducible"):
        v = getattr(args, name, None)
        if v is not None:
            flags[name] = v
    return cfg.updated(flags)


def _load_tree(path, cfg: RunConfig):
    pos, q = read_particles(path)
    return build_tree(pos, q, cfg.depth, cfg.s_target), pos, q


def cmd_generate(args) -> None:
    pos, q = generate(args.dist, args.n, args.seed)
    write_particles(args.out, pos, q)


def cmd_run(args) -> None:
    cfg = resolve_config(args)
    t0 = time.perf_counter()
    tree, pos, q = _load_tree(args.particles, cfg)
    t1 = time.perf_counter()
    result = fmm_solve(tree, cfg.p, cfg.mode, cfg.reproducible)
    t2 = time.perf_counter()
    report = {
        "config": cfg.to_dict(),
        "N": tree.n_particles,
        "depth": tree.depth,
        "p": cfg.p,
        "mode": cfg.mode,
        "memory": estimate_memory(tree, cfg.p).as_dict(),
        "work_total": estimate_work(tree, cfg.p, cfg.cost).total,
        "error": None,
    }
    timings = {"build_s": t1 - t0, "fmm_s": t2 - t1}
    if args.check_direct:
        z = pos[:, 0] + 1j * pos[:, 1]
        exact = direct_solve(z, q, cfg.mode)
        timings["direct_s"] = time.perf_counter() - t2
        if cfg.mode == "potential":
            err = error_report(result.real, exact.real)
        else:
            err = error_report(result, exact)
        report["error"] = err.as_dict()
    if args.timings:
        report["timings"] = timings
    if args.results_out:
        lines = ["re,im"] + [f"{fmt(v.real)},{fmt(v.imag)}" for v in result]
        Path(args.results_out).write_text("\n".join(lines) + "\n")
    _emit(_dump(report), args.out)


def _partition_stats(model, part, cfg: RunConfig) -> dict:
    comm = model.comm(part.as_array(), part.ranks)
    w = model.rank_work(part.as_array(), part.ranks)
    return {
        "J": objective(model, part, ObjectiveWeights(cfg.lam)),
        "max_work": float(w.max()),
        "imbalance": work_imbalance(model, part),
        "comm_bytes": comm.total_bytes,
        "messages": comm.total_messages,
        "makespan_s": simulate(model, part, cfg.machine).makespan,
    }


def cmd_partition(args) -> None:
    cfg = resolve_config(args)
    tree, _, _ = _load_tree(args.particles, cfg)
    model = TreeLoadModel(tree, cfg.p, cfg.cost, cfg.k)
    init = initial_partition(model, cfg.ranks)
    ref = refine_partition(model, init, ObjectiveWeights(cfg.lam), cfg.max_iters)
    report = {
        "config": cfg.to_dict(),
        "depth": tree.depth,
        "total_work": model.total_work,
        "coarse_work": model.coarse_work,
        "initial": init.to_json(),
        "refined": ref.to_json(),
        "stats": {"initial": _partition_stats(model, init, cfg),
                  "refined": _partition_stats(model, ref, cfg)},
    }
    if args.partition_out:
        Path(args.partition_out).write_text(ref.dumps() + "\n")
    _emit(_dump(report), args.out)


def cmd_sweep(args) -> None:
    cfg = resolve_config(args)
    ranks = [int(r) for r in args.ranks_list.split(",") if r.strip()]
    tree, _, _ = _load_tree(args.particles, cfg)
    model = TreeLoadModel(tree, cfg.p, cfg.cost, cfg.k)
    recs = sweep(model, ranks, ObjectiveWeights(cfg.lam), cfg.machine, cfg.max_iters)
    _emit(sweep_csv(recs), args.out)


def cmd_vortex(args) -> None:
    cfg = resolve_config(args)
    if args.steps < 0:
        raise DomainError("steps must be >= 0")
    if not args.dt > 0:
        raise DomainError("dt must be positive")
    pos, gamma = read_vortices(args.vortices)
    state = Vortices(pos, gamma)
    backend = Backend(args.backend, cfg.p, cfg.depth, cfg.s_target, cfg.reproducible)
    g0, i0 = total_circulation(state), linear_impulse(state)
    lines = ["step,id,x,y,u,v"]
    circ_drift = 0.0
    for s in range(args.steps + 1):
        vel = velocities(state, backend)
        for i, ((x, y), (u, v)) in enumerate(zip(state.positions, vel)):
            lines.append(f"{s},{i},{fmt(x)},{fmt(y)},{fmt(u)},{fmt(v)}")
        circ_drift = max(circ_drift, abs(total_circulation(state) - g0))
        if s < args.steps:
            state = step(state, args.dt, backend, vel)
    i1 = linear_impulse(state)
    footer = {
        "config": cfg.to_dict(),
        "backend": args.backend,
        "steps": args.steps,
        "dt": args.dt,
        "total_circulation": g0,
        "max_circulation_drift": circ_drift,
        "impulse_initial": [float(v) for v in i0],
        "impulse_final": [float(v) for v in i1],
    }
    lines.append("# " + json.dumps(footer))
    _emit("\n".join(lines) + "\n", args.out)


def cmd_calibrate(args) -> None:
    cfg = resolve_config(args)
    tree, _, _ = _load_tree(args.particles, cfg)
    params, raw = calibrate(tree, cfg.p, cfg.machine, cfg.mode, args.repeats)
    report = {"config": cfg.to_dict(), "depth": tree.depth, "fitted": params.as_dict(),
              "measurements": raw}
    _emit(_dump(report), args.out)


def _bool(value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {value!r}")


def _add_run_config(p: argparse.ArgumentParser, ranks=False, partition=False) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--machine", help="machine model JSON")
    p.add_argument("--p", type=int, help="expansion order (default 12)")
    p.add_argument("--depth", type=_depth, help="tree depth or 'auto'")
    p.add_argument("--s-target", type=float, dest="s_target")
    p.add_argument("--mode", choices=("potential", "field"))
    p.add_argument("--reproducible", type=_bool)
    if ranks:
        p.add_argument("--ranks", type=int)
    if partition:
        p.add_argument("--lambda", "--lam", type=float, dest="lam")
        p.add_argument("--k", type=int)
        p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmm2d", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a particle CSV")
    g.add_argument("--dist", choices=("uniform", "cluster"), default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="FMM evaluation with optional direct check")
    r.add_argument("particles")
    _add_run_config(r)
    r.add_argument("--check-direct", action="store_true")
    r.add_argument("--timings", action="store_true",
                   help="include wall-clock timings (makes output non-reproducible)")
    r.add_argument("--results-out", help="write per-particle results as CSV")
    r.set_defaults(func=cmd_run)

    pt = sub.add_parser("partition", help="initial and refined rank partitions")
    pt.add_argument("particles")
    _add_run_config(pt, ranks=True, partition=True)
    pt.add_argument("--partition-out", help="write the refined partition JSON")
    pt.set_defaults(func=cmd_partition)

    sw = sub.add_parser("sweep", help="simulated scaling study")
    sw.add_argument("particles")
    _add_run_config(sw, partition=True)
    sw.add_argument("--ranks-list", default="1,2,4,8")
    sw.set_defaults(func=cmd_sweep)

    v = sub.add_parser("vortex", help="point-vortex convection")
    v.add_argument("vortices")
    _add_run_config(v)
    v.add_argument("--steps", type=int, default=10)
    v.add_argument("--dt", type=float, default=0.01)
    v.add_argument("--backend", choices=("direct", "fmm"), default="direct")
    v.set_defaults(func=cmd_vortex)

    c = sub.add_parser("calibrate", help="fit cost constants to measured timings")
    c.add_argument("particles")
    _add_run_config(c)
    c.add_argument("--repeats", type=int, default=3)
    c.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
