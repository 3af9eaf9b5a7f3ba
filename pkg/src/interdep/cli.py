"""Command-line runner: ``python -m interdep <command> [options]``.

Exit status is 0 on success, 2 for configuration or parameter errors and 3
when no percolation transition is bracketed.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis as an
from . import depmap as dm
from .config import ExperimentConfig
from .entropy import ApEnParams, apen_of_map
from .errors import InsufficientDataError, InvalidParameterError, NoTransitionError
from .graphs import write_edgelist

log = logging.getLogger("interdep")

EXIT_OK, EXIT_CONFIG, EXIT_NO_TRANSITION = 0, 2, 3


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes; 1 runs serially")
    common.add_argument("--out", type=Path, help="output file (directory for generate)")
    common.add_argument("--topology", help="lattice, erdos_renyi, watts_strogatz or scale_free")
    common.add_argument("-N", type=int, help="node count")
    common.add_argument("-L", type=int, help="lattice side")
    common.add_argument("--map-kind", dest="map_kind", help="dependency map family")
    common.add_argument("--q", type=_floats, help="comma-separated rewiring probabilities")
    common.add_argument("--r", type=_ints, help="comma-separated block sides or shifts")
    common.add_argument("--p-grid", dest="p_grid", type=_floats, help="comma-separated p values")
    common.add_argument("--realizations", type=int)
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    parser = argparse.ArgumentParser(prog="interdep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write graph and map files")
    sub.add_parser("sweep", parents=[common], help="P_inf and NOI over a p grid")
    sub.add_parser("critical", parents=[common], help="critical points and order boundary")
    sub.add_parser("apen", parents=[common], help="approximate entropy of dependency maps")
    sub.add_parser("noi", parents=[common], help="NOI at p_c for each map value")
    return parser


def load_config(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    for key in ("topology", "N", "L", "map_kind", "q", "r", "p_grid", "realizations"):
        v = getattr(args, key)
        if v is not None:
            base[key] = v
    if args.N is not None and args.L is None:
        base.pop("L", None)
    if args.L is not None and args.N is None:
        base.pop("N", None)
    if args.p_grid is not None:
        base.pop("bisection", None)
    if args.seed is not None:
        base["master_seed"] = args.seed
    if "N" not in base and "L" not in base:
        raise InvalidParameterError("no system size given: set N or L in the config or on the command line")
    return ExperimentConfig.from_dict(base)


def _map_spec(cfg: ExperimentConfig, value) -> an.MapSpec:
    if cfg.map_kind == "rewired":
        return an.MapSpec("rewired", q=float(value))
    if cfg.map_kind == "identity":
        return an.MapSpec("identity")
    return an.MapSpec(cfg.map_kind, r=int(value))


def _graph_kw(cfg):
    return dict(mean_degree=cfg.mean_degree, beta=cfg.beta, exponent=cfg.exponent)


@contextlib.contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = Path(path).open("w", newline="")
    except OSError as exc:
        raise InvalidParameterError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def cmd_generate(cfg: ExperimentConfig, out: Path | None, threads: int) -> list:
    """Write the graph of realization 0 and one map file per map value."""
    out = Path(out or cfg.output_path or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidParameterError(f"cannot create {out}: {exc.strerror}") from None
    written = []
    for k, value in enumerate(cfg.map_values):
        spec = an.SystemSpec(cfg.topology, cfg.N, _map_spec(cfg, value), mode=cfg.mode, **_graph_kw(cfg))
        real = an.Realization(spec, cfg.master_seed, 0)
        if k == 0:
            written.append(write_edgelist(real.graph, out / f"graph_{cfg.topology}_N{cfg.N}.txt"))
        name = f"map_{cfg.map_kind}_{spec.dependency.label:g}_N{cfg.N}.txt"
        written.append(dm.write_map(real.dmap, out / name))
    for path in written:
        log.info("wrote %s", path)
    return written


def cmd_sweep(cfg: ExperimentConfig, out, threads: int) -> list:
    if cfg.p_grid is None:
        raise InvalidParameterError("sweep needs p_grid")
    curves = []
    for value in cfg.map_values:
        log.info("sweep %s %s=%s", cfg.topology, cfg.map_kind, value)
        curves.append(an.sweep_p(cfg.topology, 0.0, cfg.p_grid, cfg.realizations, cfg.N,
                                 cfg.master_seed, dependency=_map_spec(cfg, value),
                                 mode=cfg.mode, threads=threads, **_graph_kw(cfg)))
    with _sink(out or cfg.output_path) as fh:
        an.write_curves(curves, fh, cfg.header())
    return curves


def _critical_points(cfg, threads):
    if cfg.bisection is None:
        raise InvalidParameterError("critical needs a bisection spec")
    b = cfg.bisection
    kw = dict(seed=cfg.master_seed, jump_threshold=cfg.jump_threshold, mode=cfg.mode,
              threads=threads, **_graph_kw(cfg))
    if b.scan == "p":
        pts = []
        for value in cfg.map_values:
            log.info("find_pc %s %s=%s", cfg.topology, cfg.map_kind, value)
            pts.append(an.find_pc(cfg.topology, 0.0, cfg.N, cfg.realizations, b.tol_p,
                                  dependency=_map_spec(cfg, value), **kw))
        return pts, {}
    if b.scan == "q":
        lo = b.lo if b.lo is not None else 0.0
        hi = b.hi if b.hi is not None else 1.0
        est = an.find_qc(cfg.topology, cfg.N, cfg.realizations, q_lo=lo, q_hi=hi,
                         tol_q=b.tol_q, tol_p=b.tol_p, **kw)
    else:
        if cfg.topology != "lattice":
            raise InvalidParameterError("an r scan needs the lattice topology")
        lo = int(b.lo) if b.lo is not None else min(cfg.r or (1,))
        hi = int(b.hi) if b.hi is not None else max(cfg.r or (cfg.L,))
        est = an.find_qc(cfg.topology, cfg.N, cfg.realizations, q_lo=lo, q_hi=hi,
                         tol_p=b.tol_p, kind="block_local", integer=True, **kw)
    log.info("%s boundary %g in [%g, %g]", b.scan, est.q_c, est.lower, est.upper)
    pts = sorted(est.points, key=lambda cp: cp.q)
    return pts, {f"{b.scan}_c": est.q_c, f"{b.scan}_c_lower": est.lower,
                 f"{b.scan}_c_upper": est.upper}


def cmd_critical(cfg: ExperimentConfig, out, threads: int) -> list:
    pts, extra = _critical_points(cfg, threads)
    with _sink(out or cfg.output_path) as fh:
        an.write_critical(pts, fh, {**cfg.header(), **extra})
    return pts


def cmd_noi(cfg: ExperimentConfig, out, threads: int) -> list:
    cfg = replace(cfg, bisection=replace(cfg.bisection, scan="p")) if cfg.bisection else cfg
    return cmd_critical(cfg, out, threads)


def cmd_apen(cfg: ExperimentConfig, out, threads: int) -> list:
    """Mean ApEn over ``apen.seeds`` maps for each map value, one line each."""
    params = ApEnParams(cfg.apen.m, cfg.apen.tolerance_factor)
    side = cfg.L if cfg.topology == "lattice" else None
    rows = []
    for value in cfg.map_values:
        spec = _map_spec(cfg, value)
        vals = []
        for s in range(cfg.apen.seeds):
            ss = an.derive_seed(cfg.master_seed, "apen", cfg.map_kind, spec.label, s)
            map_seed, window_seed = (int(v) for v in ss.generate_state(2, dtype=np.uint32))
            dmap = spec.build(cfg.N, side, map_seed)
            vals.append(apen_of_map(dmap, params, seed=window_seed, length=cfg.apen.length))
        rows.append((spec.label, float(np.mean(vals)), float(np.std(vals)), len(vals)))
        log.info("apen %s=%g done", cfg.map_kind, spec.label)
    n = min(cfg.N, cfg.apen.length)
    key = "r" if cfg.map_kind in ("block_local", "linear", "linear_axis") else "q"
    with _sink(out or cfg.output_path) as fh:
        for label, mean, std, k in rows:
            fh.write(f"ApEn m={params.m} tol={params.tolerance_factor:g} N={n} value={mean:.6f} "
                     f"{key}={label:g} std={std:.6f} seeds={k}\n")
    return rows


COMMANDS = {"generate": cmd_generate, "sweep": cmd_sweep, "critical": cmd_critical,
            "apen": cmd_apen, "noi": cmd_noi}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.WARNING if args.quiet else logging.INFO)
    try:
        if args.threads < 1:
            raise InvalidParameterError(f"--threads must be >= 1, got {args.threads}")
        cfg = load_config(args)
        COMMANDS[args.command](cfg, args.out, args.threads)
    except (InvalidParameterError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoTransitionError as exc:
        print(f"no transition: {exc}", file=sys.stderr)
        return EXIT_NO_TRANSITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
