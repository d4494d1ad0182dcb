"""Command line entry point ``relipop``.

Exit codes: 0 success, 2 input error, 3 estimation failure (a JSON failure
report is written to stdout).
"""
from __future__ import annotations

import argparse
import json
import secrets
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .coupling import DisconnectedGraphError, sample_connected_batch
from .fixed_size import LadderFailure, check_log_concavity, estimate_fixed_size
from .graph import (
    DirectedMultigraph,
    GraphError,
    GraphFormatError,
    UndirectedGraph,
    bidirect,
    count_arborescences,
    count_spanning_trees,
    load_graph,
    resolve_boundary,
)
from .oracle import InstanceTooLarge, enumerate_reach, enumerate_rel
from .popping import NotRootConnectedError, RoundCapExceeded, sample_reach
from .reliability import EstimationError, estimate_reach, estimate_reliability, highp_estimate
from .rng import DEFAULT_SEED, resolve_threads

EXIT_OK, EXIT_INPUT, EXIT_FAILURE = 0, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input: str
    epsilon: float | None = None
    delta: float | None = None
    t: int | None = None
    samples: int = 1
    seed: int = DEFAULT_SEED
    json: bool = False
    high_p: bool = False
    round_cap: int | None = None
    threads: int = 1
    root: int = 0
    allow_boundary: bool = False
    samples_per_level: int | None = None


def _parse_seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(63)
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer or 'random'")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relipop", description="Cluster-popping samplers and reliability estimators.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("input", help="graph file")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--allow-boundary", action="store_true", help="admit failure probabilities 0 and 1")
        if seed:
            p.add_argument("--seed", type=_parse_seed, default=DEFAULT_SEED, help="64-bit seed or 'random'")
            p.add_argument("--threads", type=int, default=None, help="worker processes (default $RELIPOP_THREADS or 1)")

    p = sub.add_parser("sample-reach", help="root-connected arc subsets by cluster-popping")
    common(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--round-cap", type=int, default=None, help="abort a sample after this many popping rounds")

    p = sub.add_parser("sample-connected", help="connected edge subsets of an undirected graph")
    common(p)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--root", type=int, default=0)

    p = sub.add_parser("estimate", help="approximate reliability / reachability")
    common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--high-p", action="store_true", help="uniform failure probability above 1 - 1/(3m)")

    p = sub.add_parser("count-size", help="approximate number of connected subgraphs with t edges")
    common(p)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--samples-per-level", type=int, default=None)

    p = sub.add_parser("exact", help="brute-force enumeration for small instances")
    common(p, seed=False)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        input=args.input,
        epsilon=getattr(args, "eps", None),
        delta=getattr(args, "delta", None),
        t=getattr(args, "t", None),
        samples=getattr(args, "samples", 1),
        seed=getattr(args, "seed", DEFAULT_SEED),
        json=args.json,
        high_p=getattr(args, "high_p", False),
        round_cap=getattr(args, "round_cap", None),
        threads=resolve_threads(getattr(args, "threads", None)),
        root=getattr(args, "root", 0),
        allow_boundary=args.allow_boundary,
        samples_per_level=getattr(args, "samples_per_level", None),
    )


def _dump(obj, out: TextIO) -> None:
    out.write(json.dumps(obj, sort_keys=True) + "\n")


def _ids(row: np.ndarray) -> list[int]:
    return np.flatnonzero(row).tolist()


def _sample_lines(matrix, per_sample, stats, cfg: RunConfig, out: TextIO, extra: dict) -> None:
    trailer = {"samples": len(matrix), "seed": cfg.seed, **extra, **vars(stats)}
    for i, row in enumerate(matrix):
        ids = _ids(row)
        if cfg.json:
            rec = {"sample": i, "ids": ids}
            if per_sample is not None:
                rec["popped"] = int(per_sample[i])
            _dump(rec, out)
        else:
            out.write((" ".join(map(str, ids)) or "-") + "\n")
    if cfg.json:
        _dump({"stats": trailer}, out)
    else:
        out.write("# " + " ".join(f"{k}={v}" for k, v in trailer.items()) + "\n")


def _require_unit(name: str, x: float | None) -> None:
    if x is None or not 0 < x < 1:
        raise UsageError(f"--{name} must lie in (0,1)")


def _emit_mapping(obj: dict, cfg: RunConfig, out: TextIO) -> None:
    if cfg.json:
        _dump(obj, out)
        return
    for k, v in obj.items():
        out.write(f"{k}: {v}\n")


def _load(cfg: RunConfig):
    g = load_graph(cfg.input, allow_boundary=cfg.allow_boundary)
    if cfg.allow_boundary:
        g = resolve_boundary(g)
    return g


def _cmd_sample_reach(cfg: RunConfig, out: TextIO) -> None:
    g = _load(cfg)
    if isinstance(g, UndirectedGraph):
        g = bidirect(g, cfg.root)
    cap = -1 if cfg.round_cap is None else cfg.round_cap
    matrix, popped, stats = sample_reach(g, cfg.samples, cfg.seed, round_cap=cap, threads=cfg.threads)
    _sample_lines(matrix, popped, stats, cfg, out, {"kind": "arcs"})


def _cmd_sample_connected(cfg: RunConfig, out: TextIO) -> None:
    g = _load(cfg)
    if not isinstance(g, UndirectedGraph):
        raise UsageError("sample-connected needs an undirected graph")
    matrix, _, stats = sample_connected_batch(g, cfg.samples, cfg.seed, root=cfg.root, threads=cfg.threads)
    _sample_lines(matrix, None, stats, cfg, out, {"kind": "edges"})


def _cmd_estimate(cfg: RunConfig, out: TextIO) -> None:
    _require_unit("eps", cfg.epsilon)
    _require_unit("delta", cfg.delta)
    g = _load(cfg)
    if cfg.high_p:
        h = bidirect(g, 0) if isinstance(g, UndirectedGraph) else g
        report = highp_estimate(h, cfg.epsilon, cfg.delta, cfg.seed)
    elif isinstance(g, UndirectedGraph):
        report = estimate_reliability(g, cfg.epsilon, cfg.delta, cfg.seed, threads=cfg.threads)
    else:
        report = estimate_reach(g, cfg.epsilon, cfg.delta, cfg.seed, threads=cfg.threads)
    _emit_mapping({**report.to_dict(), "seed": cfg.seed}, cfg, out)


def _cmd_count_size(cfg: RunConfig, out: TextIO) -> None:
    _require_unit("eps", cfg.epsilon)
    _require_unit("delta", cfg.delta)
    g = _load(cfg)
    if not isinstance(g, UndirectedGraph):
        raise UsageError("count-size needs an undirected graph")
    report = estimate_fixed_size(
        g, cfg.t, cfg.epsilon, cfg.delta, cfg.seed, samples_per_level=cfg.samples_per_level, threads=cfg.threads
    )
    _emit_mapping({**report.to_dict(), "seed": cfg.seed, "t": cfg.t}, cfg, out)


def _cmd_exact(cfg: RunConfig, out: TextIO) -> None:
    g = _load(cfg)
    if isinstance(g, DirectedMultigraph):
        res = enumerate_reach(g)
        obj = {
            "kind": "reach",
            "z_reach": res.z,
            "log_z_by_cluster_count": {str(k): v for k, v in res.z_by_cluster_count.items()},
            "expected_popped_clusters": res.expected_pops if res.z > 0 else None,
            "root_connected_by_size": {str(k): v for k, v in res.counts_by_size.items()},
            "arborescences": count_arborescences(g),
        }
    else:
        res = enumerate_rel(g)
        obj = {
            "kind": "reliability",
            "z_rel": res.z,
            "connected_by_size": {str(k): v for k, v in res.counts_by_size.items()},
            "spanning_trees": count_spanning_trees(g),
            "log_concave": check_log_concavity(g) if g.m <= 20 else None,
        }
    _emit_mapping(obj, cfg, out)


COMMANDS = {
    "sample-reach": _cmd_sample_reach,
    "sample-connected": _cmd_sample_connected,
    "estimate": _cmd_estimate,
    "count-size": _cmd_count_size,
    "exact": _cmd_exact,
}

INPUT_ERRORS = (
    OSError,
    GraphFormatError,
    GraphError,
    InstanceTooLarge,
    NotRootConnectedError,
    DisconnectedGraphError,
    UsageError,
    ValueError,
)


def run(cfg: RunConfig, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        COMMANDS[cfg.command](cfg, out)
    except (EstimationError, RoundCapExceeded) as exc:
        report = {"status": "failure", "command": cfg.command, "reason": str(exc), "seed": cfg.seed}
        report.update(getattr(exc, "details", {}))
        if isinstance(exc, LadderFailure):
            report["branch"] = "ladder"
        _dump(report, out)
        return EXIT_FAILURE
    except INPUT_ERRORS as exc:
        err.write(f"relipop: error: {exc}\n")
        return EXIT_INPUT
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
