"""Command-line front end: ``qpot parse | simulate | analyze``.

Exit codes: 0 on success, 1 for bad input (syntax, arguments, preconditions),
2 for numerical failures (nonconvergence, divergence, overflow guards).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

import numpy as np

from . import output
from .errors import InputError, NumericalError
from .network import Network, is_weakly_reversible, load_network, network_to_dict, parse_network

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; here 2 means numerical failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) or v < 0 for v in vals):
        raise argparse.ArgumentTypeError(f"expected nonnegative integers, got {text!r}")
    return [int(v) for v in vals]


def _vector(vals, net: Network, what: str) -> np.ndarray:
    v = np.asarray(vals, dtype=float)
    if v.size == 1 and net.d > 1:
        v = np.full(net.d, float(v[0]))
    if v.size != net.d:
        raise InputError(f"{what} needs {net.d} entries, got {v.size}")
    return v


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--net", metavar="FILE", help="network file")
    src.add_argument("--network", metavar="TEXT", help="inline network text, e.g. 'A <-> 0, k=1, k=1'")
    common.add_argument("--out", metavar="PATH", help="output file (simulate) or directory (analyze); default stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="format for tables (default csv)")
    common.add_argument("--seed", type=_u64, default=0, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1, help="worker cap for parallel parts")
    common.add_argument("--plot", action="store_true", help="also write PNG figures next to --out")

    ap = _Parser(prog="qpot", description="Hamiltonians, quasipotentials and stationary laws of reaction networks.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", parents=[common], help="parse a network and dump it as JSON")
    p.add_argument("file", nargs="?", help="network file (alternative to --net/--network)")
    p.add_argument("--check-weak-reversibility", action="store_true")

    s = sub.add_parser("simulate", parents=[common], help="integrate the ODE, run SSA, or integrate Hamilton's equations")
    s.add_argument("--mode", choices=("ode", "ssa", "hamilton"), required=True)
    s.add_argument("--x0", type=_floats, required=True, help="initial state, comma-separated")
    s.add_argument("--T", type=float, required=True, help="time horizon")
    s.add_argument("--tol", type=float, default=None, help="integrator tolerance (ode 1e-8, hamilton 1e-10)")
    s.add_argument("--n", type=int, default=100, help="scale parameter for ssa")
    s.add_argument("--p0", type=_floats, help="initial momentum for hamilton")
    s.add_argument("--max-jumps", type=int, default=10**8)

    a = sub.add_parser("analyze", parents=[common], help="steady states, balance, quasipotentials, stationary laws")
    a.add_argument("--steady-state", action="store_true")
    a.add_argument("--complex-balance", action="store_true")
    a.add_argument("--hjb-residual", action="store_true")
    a.add_argument("--quasipotential", action="store_true")
    a.add_argument("--stationary", action="store_true")
    a.add_argument("--levelset", action="store_true")
    a.add_argument("--x0", type=_floats, help="state selecting the compatibility class (default all ones)")
    a.add_argument("--grid-points", type=int, default=100)
    a.add_argument("--x-range", type=_floats, default=[0.1, 5.0], help="lo,hi for 1D tables")
    a.add_argument("--target", type=_floats, help="end point for multi-species quasipotential estimates")
    a.add_argument("--ladder", type=_floats, default=[2.0, 5.0, 10.0, 20.0], help="horizons for minimum action")
    a.add_argument("--nodes", type=int, default=64, help="path nodes for minimum action")
    a.add_argument("--n", type=int, default=10, help="scale parameter for --stationary")
    a.add_argument("--caps", type=_ints, help="per-species count caps for --stationary")
    a.add_argument("--method", choices=("truncated", "product-form"), default="truncated")
    a.add_argument("--energies", type=_floats, default=[0.0, 0.5, 1.0])
    return ap


def _load(args) -> Network:
    source = args.net or getattr(args, "file", None)
    if args.network is not None:
        return parse_network(args.network)
    if source is None:
        raise InputError("no network given: use --net FILE or --network TEXT")
    try:
        return load_network(source)
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from exc


def _params(args, *skip) -> dict:
    out = {k: v for k, v in vars(args).items() if k not in ("command", "plot", "out", "threads") + skip}
    return {k: v for k, v in out.items() if v is not None}


class _Sink:
    """Collects named outputs; writes to a directory or concatenates to stdout."""

    def __init__(self, out: str | None, plot: bool):
        self.out = out
        self.plot = plot
        if plot and not out:
            raise InputError("--plot needs --out to know where to put figures")

    def figure_path(self, name: str) -> FsPath:
        base = FsPath(self.out)
        if base.suffix:
            return base.with_suffix(".png") if name == "" else base.with_name(f"{base.stem}_{name}.png")
        base.mkdir(parents=True, exist_ok=True)
        return base / f"{name or 'figure'}.png"

    def write_file(self, text: str):
        if self.out:
            target = FsPath(self.out)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
        else:
            sys.stdout.write(text)

    def write_named(self, name: str, ext: str, text: str):
        if self.out:
            d = FsPath(self.out)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{name}.{ext}").write_text(text)
        else:
            sys.stdout.write(text)


def _table(meta, columns, rows, fmt) -> tuple[str, str]:
    if fmt == "json":
        return "json", output.table_json(meta, columns, rows)
    return "csv", output.csv_text(meta, columns, rows)


# --------------------------------------------------------------------------
# commands


def cmd_parse(args) -> int:
    net = _load(args)
    body = network_to_dict(net)
    body["fingerprint"] = net.fingerprint()
    if args.check_weak_reversibility:
        body["weakly_reversible"] = is_weakly_reversible(net)
    text = json.dumps(body, indent=2) + "\n"
    _Sink(args.out, False).write_file(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .dynamics import integrate_hamilton, integrate_ode
    from .stochastic import ssa_simulate

    net = _load(args)
    sink = _Sink(args.out, args.plot)
    x0 = _vector(args.x0, net, "--x0")
    params = _params(args, "max_jumps" if args.mode != "ssa" else "")
    if args.mode == "ode":
        params.pop("n", None)
        params.pop("seed", None)
        path = integrate_ode(net, x0, args.T, tol=args.tol or 1e-8)
        columns, rows = path.columns(), path.rows()
        params["clipped"] = path.clipped
    elif args.mode == "hamilton":
        params.pop("n", None)
        params.pop("seed", None)
        if args.p0 is None:
            raise InputError("--mode hamilton needs --p0")
        path = integrate_hamilton(net, x0, _vector(args.p0, net, "--p0"), args.T, tol=args.tol or 1e-10)
        columns, rows = path.columns(), path.rows()
    else:
        jp = ssa_simulate(net, args.n, x0, args.T, args.seed, max_jumps=args.max_jumps)
        columns, rows = jp.columns(), jp.rows()
        params.update({"rng": jp.rng, "truncated": jp.truncated})
    meta = output.header(net, params)
    _, text = _table(meta, columns, rows, args.format)
    sink.write_file(text)
    if args.plot:
        from .plotting import plot_path

        plot_path(columns, rows, sink.figure_path(""), title=f"{args.mode} {net}".replace("\n", "; "))
    return EXIT_OK


def _class_state(args, net) -> np.ndarray:
    return np.ones(net.d) if args.x0 is None else _vector(args.x0, net, "--x0")


def cmd_analyze(args) -> int:
    from . import balance, dynamics, quasipot, stochastic

    flags = ("steady_state", "complex_balance", "hjb_residual", "quasipotential", "stationary", "levelset")
    chosen = [f for f in flags if getattr(args, f)]
    if not chosen:
        raise InputError("analyze needs at least one of --" + ", --".join(f.replace("_", "-") for f in flags))
    net = _load(args)
    sink = _Sink(args.out, args.plot)
    x0 = _class_state(args, net)
    base = {"x0": x0.tolist()}
    steady = None

    def need_steady():
        nonlocal steady
        if steady is None:
            steady = dynamics.find_steady_state(net, x0)
        return steady

    for flag in chosen:
        name = flag.replace("_", "-")
        if flag == "steady_state":
            meta = output.header(net, {**base, "analysis": name})
            sink.write_named(name, "json", output.json_text(meta, need_steady().to_dict()))
        elif flag == "complex_balance":
            ok, rep = balance.is_complex_balanced_network(net, x0)
            meta = output.header(net, {**base, "analysis": name})
            sink.write_named(name, "json", output.json_text(meta, rep.to_dict()))
        elif flag == "hjb_residual":
            c = need_steady().c
            pts = balance.class_interior_grid(net, c, args.grid_points, seed=args.seed)
            grad = balance.horn_jackson_gradient(net, c)
            res = np.array([balance.hjb_residual(net, grad, x) for x in pts])
            cols = [f"x_{i + 1}" for i in range(net.d)] + ["residual"]
            meta = output.header(net, {**base, "analysis": name, "c": c, "grid_points": args.grid_points, "seed": args.seed})
            ext, text = _table(meta, cols, np.column_stack([pts, res]), args.format)
            sink.write_named(name, ext, text)
        elif flag == "quasipotential":
            c = need_steady().c
            if net.d == 1:
                lo, hi = args.x_range
                xs = np.linspace(lo, hi, args.grid_points)
                qp = quasipot.solve_1d_zero_level(net, c[0], grid=np.geomspace(min(lo, c[0]) / 2, max(hi, c[0]) * 2, 801))
                rows = np.array([(x, qp.p(x), qp.Q(x)) for x in xs])
                meta = output.header(net, {"analysis": name, "c": c, "x_range": [lo, hi], "grid_points": args.grid_points})
                ext, text = _table(meta, ["x", "p", "Q"], rows, args.format)
                sink.write_named(name, ext, text)
                if args.plot:
                    from .plotting import plot_quasipotential

                    plot_quasipotential(rows, sink.figure_path(name))
            else:
                if args.target is None:
                    raise InputError("--quasipotential on a multi-species network needs --target")
                target = _vector(args.target, net, "--target")
                est = quasipot.estimate_quasipotential(net, c, target, args.ladder, args.nodes, workers=args.threads)
                body = est.to_dict()
                body["horn_jackson_V"] = balance.lyapunov_V(c, target)
                meta = output.header(net, {**base, "analysis": name, "c": c, "target": target, "ladder": args.ladder, "nodes": args.nodes})
                sink.write_named(name, "json", output.json_text(meta, body))
        elif flag == "stationary":
            caps = args.caps
            if args.method == "product-form":
                c = need_steady().c
                dist = stochastic.product_form_stationary(net, args.n, c, caps=caps, anchor=None if args.x0 is None else x0)
            else:
                if caps is None:
                    raise InputError("--stationary with the truncated method needs --caps")
                anchor = x0 if args.x0 is not None else None
                dist = stochastic.stationary_truncated(net, args.n, caps, anchor=anchor)
            params = {**base, "analysis": name, "method": args.method, "n": args.n, "caps": list(dist.caps)}
            params["normalizer"] = dist.normalizer
            meta = output.header(net, params)
            ext, text = _table(meta, dist.columns(), dist.rows(), args.format)
            sink.write_named(name, ext, text)
            if args.plot:
                from .plotting import plot_distribution

                plot_distribution(dist.lattice, dist.prob, sink.figure_path(name))
        elif flag == "levelset":
            lo, hi = args.x_range
            xs = np.linspace(lo, hi, args.grid_points)
            rows = quasipot.hamiltonian_level_sets(net, args.energies, xs)
            meta = output.header(net, {"analysis": name, "energies": args.energies, "x_range": [lo, hi], "grid_points": args.grid_points})
            ext, text = _table(meta, ["energy", "x", "p", "branch"], rows, args.format)
            sink.write_named(name, ext, text)
            if args.plot:
                from .plotting import plot_levelsets

                plot_levelsets(rows, sink.figure_path(name))
    return EXIT_OK


COMMANDS = {"parse": cmd_parse, "simulate": cmd_simulate, "analyze": cmd_analyze}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"qpot: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"qpot: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
