"""Benchmark command line: generate instances, run solvers, sweep grids.

Exit codes: 0 success, 2 budget exceeded, 3 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .builder import (
    ConstructionParams,
    assemble_global,
    load_bundle,
    save_bundle,
    verify_certificate,
)
from .lattice import (
    EmbeddingError,
    PatchEmbedding,
    build_heavy_hex,
    build_path,
    count_loose_steps,
    embed_patches,
)
from .matrixfree import (
    DiagRankParams,
    TpmParams,
    TruncArnoldiParams,
    run_diag_ranking,
    run_tpm,
    run_truncated_arnoldi,
)
from .sci import SciParams, TrimParams, run_sci
from .skqd import SkqdParams, run_skqd, support_coverage
from .trace import DEFAULT_DIM_CAP, BudgetExceeded

EXIT_OK = 0
EXIT_BUDGET = 2
EXIT_INVALID = 3

DEFAULT_GENERATE_SEED = 9  # default routing: few distance-2 steps, coupled padding


def _generate(args) -> int:
    mode = args.mode
    path_len = 16 if mode == "main" else 4
    if args.layout == "heavy-hex":
        g = build_heavy_hex(args.rows, args.cols)
        emb = embed_patches(g, args.patches, path_len, seed=args.seed)
        couple = True
    elif args.layout in ("path16", "path16-coupled"):
        if mode != "main" or args.patches != 1:
            print("path16 layouts are single-patch main-mode reductions", file=sys.stderr)
            return EXIT_INVALID
        g = build_path(16)
        emb = PatchEmbedding((tuple(range(16)),), ())
        couple = args.layout == "path16-coupled"
    else:
        print(f"unknown layout {args.layout!r}", file=sys.stderr)
        return EXIT_INVALID

    mask = int(args.obfuscation_mask, 16) if args.obfuscation_mask else None
    params = ConstructionParams(
        m1=args.m1,
        m2=args.m2,
        j1=args.j1,
        mode=mode,
        obfuscation_seed=args.seed,
        obfuscation_mask=mask,
    )
    h, cert = assemble_global(g, emb, params, couple=couple)
    meta = {
        "layout": args.layout,
        "rows": args.rows,
        "cols": args.cols,
        "mode": mode,
        "n_patches": len(emb.paths),
        "path_len": path_len,
        "coupled": couple,
        "params": {"m1": args.m1, "m2": args.m2, "j1": args.j1},
        "seed": args.seed,
        "embedding": emb.to_json_dict(),
        "layout_graph": g.to_json_dict(),
        "loose_steps": count_loose_steps(g, emb),
        "version": __version__,
    }
    digest = save_bundle(args.out, h, cert, meta)
    print(f"wrote {args.out}")
    print(f"  qubits:        {h.n_qubits}")
    print(f"  pauli terms:   {len(h)}")
    print(f"  support size:  {len(cert.support)}")
    print(f"  gamma0^2:      {cert.initial_overlap_sq():.6e}")
    print(f"  instance hash: {digest}")
    return EXIT_OK


def _info(args) -> int:
    h, cert, meta = load_bundle(args.bundle)
    print(json.dumps({
        "n_qubits": h.n_qubits,
        "pauli_terms": len(h),
        "coeff_one_norm": h.coeff_one_norm(),
        "support_size": len(cert.support),
        "gamma0_sq": cert.initial_overlap_sq(),
        "energy": cert.energy,
        "instance_hash": meta.get("instance_hash"),
        "mode": meta.get("mode"),
        "layout": meta.get("layout"),
    }, indent=1))
    return EXIT_OK


def _verify(args) -> int:
    h, cert, _ = load_bundle(args.bundle)
    rep = verify_certificate(h, cert)
    print(f"residual:  {rep.residual:.3e}")
    print(f"tolerance: {rep.tolerance:.3e}  (1e-7 x coefficient 1-norm)")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_INVALID


def _solver_run(h, cert, solver: str, opts: dict, dim_cap: int):
    """Dispatch one solver run; returns a result dict."""
    x0 = cert.initial_config
    t0 = time.perf_counter()
    coverage = None
    shot_record = None
    if solver == "cipsi" or solver == "hci":
        p = SciParams(solver, epsilon=opts["eps"], core_cap=opts.get("core_cap"),
                      max_iters=opts.get("iters", 30), dim_cap=dim_cap)
        eig, trace, basis = run_sci(h, x0, p)
    elif solver == "asci":
        p = SciParams("asci", d_cap=opts["d_cap"], core_cap=opts["core_cap"],
                      max_iters=opts.get("iters", 30), dim_cap=dim_cap)
        eig, trace, basis = run_sci(h, x0, p)
    elif solver == "trimci":
        trim = TrimParams(
            n_subsets=opts["n_subsets"],
            keep_per_subset=opts["keep_per_subset"],
            expansion_factor=opts.get("f"),
            seed=opts.get("seed", 0),
            first_phase=opts.get("first_phase", "cipsi"),
        )
        p = SciParams("trimci", epsilon=opts.get("eps", 0.0), trim=trim,
                      core_cap=opts.get("core_cap"),
                      max_iters=opts.get("iters", 30), dim_cap=dim_cap)
        eig, trace, basis = run_sci(h, x0, p)
    elif solver == "diag-ranking":
        p = DiagRankParams(opts["d"], opts.get("r", 10 * opts["d"]),
                           opts.get("iters", 100), dim_cap=dim_cap)
        eig, trace = run_diag_ranking(h, x0, p)
    elif solver == "tarnoldi":
        p = TruncArnoldiParams(opts["m"], opts.get("iters", 200), dim_cap=dim_cap)
        eig, trace, basis = run_truncated_arnoldi(h, x0, p)
    elif solver == "tpm":
        p = TpmParams(opts["k"], opts.get("iters", 100),
                      mode=opts.get("mode", "diagonalize_support"), dim_cap=dim_cap)
        energy, trace, support = run_tpm(h, x0, p)
        eig = None
    elif solver == "skqd":
        p = SkqdParams(
            krylov_dim=opts["d"],
            shots_per_state=opts["shots"],
            dt_multiplier=opts.get("dt_multiplier", 25.0),
            evolution=opts.get("evolution", "exact"),
            rng_seed=opts.get("seed", 0),
            dim_cap=dim_cap,
        )
        eig, trace, record = run_skqd(h, x0, p)
        coverage = support_coverage(record, cert)
        shot_record = record
    else:
        raise ValueError(f"unknown solver {solver!r}")
    wall = time.perf_counter() - t0
    out = {
        "solver": solver,
        "params": opts,
        "final_energy": trace.final_energy,
        "final_dim": trace.final_dim,
        "status": trace.status,
        "flops": trace.total_flops,
        "wall_s": wall,
    }
    if coverage is not None:
        out["support_coverage"] = int(coverage[-1])
        out["support_size"] = len(cert.support)
    return out, trace, shot_record


_SOLVER_FLAGS = {
    "cipsi": [("--eps", float, True), ("--core-cap", int, False), ("--iters", int, False)],
    "hci": [("--eps", float, True), ("--core-cap", int, False), ("--iters", int, False)],
    "asci": [("--d-cap", int, True), ("--core-cap", int, True), ("--iters", int, False)],
    "trimci": [
        ("--eps", float, False), ("--f", float, False), ("--n-subsets", int, True),
        ("--keep-per-subset", int, True), ("--core-cap", int, False),
        ("--iters", int, False), ("--seed", int, False), ("--first-phase", str, False),
    ],
    "diag-ranking": [("--d", int, True), ("--r", int, False), ("--iters", int, False)],
    "tarnoldi": [("--m", int, True), ("--iters", int, False)],
    "tpm": [("--k", int, True), ("--iters", int, False), ("--mode", str, False)],
    "skqd": [
        ("--d", int, True), ("--shots", int, True), ("--dt-multiplier", float, False),
        ("--evolution", str, False), ("--seed", int, False),
    ],
}


def _solve(args) -> int:
    h, cert, meta = load_bundle(args.bundle)
    opts = {
        k.replace("-", "_"): v
        for k, v in vars(args).items()
        if k not in ("command", "bundle", "out", "solver", "dim_cap", "func") and v is not None
    }
    outdir = Path(args.out) if args.out else Path(args.bundle) / f"run-{args.solver}"
    outdir.mkdir(parents=True, exist_ok=True)
    status_code = EXIT_OK
    try:
        summary, trace, shots = _solver_run(h, cert, args.solver, opts, args.dim_cap)
    except BudgetExceeded as e:
        summary = {
            "solver": args.solver, "params": opts, "final_energy": None,
            "final_dim": None, "status": "budget_exceeded", "error": str(e),
        }
        trace = None
        shots = None
        status_code = EXIT_BUDGET
    summary["instance_hash"] = meta.get("instance_hash")
    summary["version"] = __version__
    summary["seed"] = opts.get("seed", 0)
    (outdir / "summary.json").write_text(json.dumps(summary, indent=1, default=float))
    if trace is not None:
        trace.write_csv(outdir / "trace.csv", with_flops=True)
    if shots is not None:
        (outdir / "shots.json").write_text(json.dumps(shots.to_json_dict(), indent=1))
    print(json.dumps(summary, indent=1, default=float))
    return status_code


def _expand_grid(entry: dict):
    solver = entry["solver"]
    grid = entry.get("grid", {})
    fixed = entry.get("params", {})
    keys = sorted(grid)
    if not keys:
        yield solver, dict(fixed)
        return
    for combo in itertools.product(*(grid[k] for k in keys)):
        opts = dict(fixed)
        opts.update({k.replace("-", "_"): v for k, v in zip(keys, combo)})
        yield solver, opts


def _run_one(job):
    bundle, solver, opts, dim_cap = job
    h, cert, meta = load_bundle(bundle)
    try:
        summary, _, _ = _solver_run(h, cert, solver, opts, dim_cap)
    except BudgetExceeded as e:
        summary = {
            "solver": solver, "params": opts, "final_energy": None,
            "final_dim": None, "status": "budget_exceeded", "flops": None,
            "wall_s": None, "error": str(e),
        }
    except Exception as e:  # a failed grid point must not kill the sweep
        summary = {
            "solver": solver, "params": opts, "final_energy": None,
            "final_dim": None, "status": "error", "flops": None,
            "wall_s": None, "error": f"{type(e).__name__}: {e}",
        }
    summary["instance_hash"] = meta.get("instance_hash")
    return summary


def _sweep(args) -> int:
    spec = json.loads(Path(args.spec).read_text())
    bundle = spec["bundle"]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    dim_cap = int(spec.get("budget", {}).get("dim_cap", DEFAULT_DIM_CAP))
    max_wall = spec.get("budget", {}).get("max_wall_s")
    base_seed = int(spec.get("seed", 0))

    jobs = []
    for entry in spec.get("runs", []):
        for solver, opts in _expand_grid(entry):
            opts.setdefault("seed", base_seed)
            jobs.append((bundle, solver, opts, dim_cap))

    workers = args.workers
    if workers > 1 and jobs:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_one, jobs))
    else:
        summaries = [_run_one(j) for j in jobs]

    for s in summaries:
        if max_wall is not None and s.get("wall_s") and s["wall_s"] > max_wall:
            s["status"] = "wall_budget_exceeded"

    cols = ["solver", "params", "final_energy", "final_dim", "flops", "status",
            "wall_s", "seed", "instance_hash", "version"]
    with open(outdir / "results.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for s in summaries:
            w.writerow([
                s["solver"], json.dumps(s["params"], sort_keys=True),
                s.get("final_energy"), s.get("final_dim"), s.get("flops"),
                s.get("status"), s.get("wall_s"),
                s["params"].get("seed", base_seed),
                s.get("instance_hash"), __version__,
            ])

    for solver in sorted({s["solver"] for s in summaries}):
        rows = [
            (s["final_dim"], s["final_energy"])
            for s in summaries
            if s["solver"] == solver and s.get("final_energy") is not None
        ]
        rows.sort()
        frontier = []
        best = float("inf")
        for dim, e in rows:
            if e < best:
                best = e
                frontier.append((dim, best))
        with open(outdir / f"frontier_{solver}.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["subspace_dim", "best_energy"])
            w.writerows(frontier)

    print(f"{len(summaries)} runs -> {outdir}/results.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsegs",
                                 description="sparse ground-state solver benchmark")
    sub = ap.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="construct an instance bundle")
    gen.add_argument("--out", required=True)
    gen.add_argument("--mode", choices=["main", "warmup"], default="main")
    gen.add_argument("--layout", default="heavy-hex",
                     choices=["heavy-hex", "path16", "path16-coupled"])
    gen.add_argument("--rows", type=int, default=3)
    gen.add_argument("--cols", type=int, default=2)
    gen.add_argument("--patches", type=int, default=3)
    gen.add_argument("--m1", type=float, default=0.1)
    gen.add_argument("--m2", type=float, default=0.01)
    gen.add_argument("--j1", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=DEFAULT_GENERATE_SEED)
    gen.add_argument("--obfuscation-mask", default=None,
                     help="explicit hex mask; overrides the seeded draw")
    gen.set_defaults(func=_generate)

    info = sub.add_parser("info", help="bundle statistics")
    info.add_argument("--bundle", required=True)
    info.set_defaults(func=_info)

    ver = sub.add_parser("verify", help="check the ground-state certificate")
    ver.add_argument("--bundle", required=True)
    ver.set_defaults(func=_verify)

    sol = sub.add_parser("solve", help="run one solver on a bundle")
    sol.add_argument("--bundle", required=True)
    sol.add_argument("--out", default=None)
    sol.add_argument("--dim-cap", type=int, default=DEFAULT_DIM_CAP)
    ssub = sol.add_subparsers(dest="solver", required=True)
    for solver, flags in _SOLVER_FLAGS.items():
        sp = ssub.add_parser(solver)
        for flag, typ, required in flags:
            sp.add_argument(flag, type=typ, required=required)
        sp.set_defaults(func=_solve)

    sw = sub.add_parser("sweep", help="run a hyperparameter grid from a JSON spec")
    sw.add_argument("--spec", required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--workers", type=int, default=1)
    sw.set_defaults(func=_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (EmbeddingError, ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
