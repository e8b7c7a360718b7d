"""Experiment runner: subcommands, config files, JSON reports, CSV series,
and companion figures.

Config files are flat ``key = value`` INI text with one section per
subcommand; command-line flags override file values.  Reports are written
as schema-versioned JSON with sorted keys so identical config and seed
reproduce identical bytes.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import cqwitness, horocycle, liealg, plots, sigmamodel, skewflow
from .flows import FlowSpec, group_dist  # noqa: F401  (re-exported for scripts)
from .reporting import dump_json, emit_plot_data

SUBCOMMANDS = ("chain-basis", "gr", "cq-verify", "horo-shear", "sigma-model",
               "heis-shear", "cf", "witness")

FAILURE_EXCEPTIONS = (
    cqwitness.NoQualifyingChain, cqwitness.WindowOutOfRange,
    horocycle.NoCrossing, horocycle.OutOfChart,
    sigmamodel.NoCrossing, sigmamodel.DegenerateInput,
    skewflow.NotFound, skewflow.WindowFail, skewflow.PrecisionExhausted,
    liealg.NotNilpotent, liealg.ExpmOverflow,
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="INI config file; the [subcommand] section supplies defaults")
    common.add_argument("--out", type=str, default="parashear_out",
                        help="output directory for report.json and data files")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for randomized sweeps; echoed into the report")
    common.add_argument("--samples", type=int, default=1000,
                        help="samples per window or per time grid")
    common.add_argument("--paper-literal", action="store_true",
                        help="use the strict exponent schedule for kappa/delta "
                             "instead of the scaled defaults")
    common.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering next to the CSV output")

    p = argparse.ArgumentParser(prog="parashear",
                                description="numerical shearing-witness laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    for name in ("chain-basis", "gr"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--algebra", default="sl2sl2",
                        help="sl2 | sl2sl2 | sl3 | file:<json>")

    sp = sub.add_parser("cq-verify", parents=[common])
    sp.add_argument("--algebra", default="sl2sl2", help="sl2sl2 | sl3 | file:<json>")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--N", type=int, default=100, dest="n_param")
    sp.add_argument("--L-grid", type=int, default=20, dest="l_grid")

    sp = sub.add_parser("horo-shear", parents=[common])
    sp.add_argument("--a", type=float, default=0.0)
    sp.add_argument("--b", type=float, default=0.0)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--t-max", type=float, default=None,
                    help="default: the admissible range min(1/|b|, 1/sqrt|c|)")

    sp = sub.add_parser("sigma-model", parents=[common])
    sp.add_argument("--a", type=float, default=0.0)
    sp.add_argument("--b", type=float, default=0.0)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--model", default="default", choices=("default", "perturbed"))

    sp = sub.add_parser("heis-shear", parents=[common])
    sp.add_argument("--alpha", default="golden")
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--roof", default="default",
                    help="'default' or a file of m n re im coefficient rows")
    sp.add_argument("--x", type=float, default=0.1)
    sp.add_argument("--y", type=float, default=0.2)
    sp.add_argument("--dx", type=float, default=0.0)
    sp.add_argument("--dy", type=float, default=0.0)
    sp.add_argument("--epsilon", type=float, default=0.3)
    sp.add_argument("--q", type=float, default=None,
                    help="shear threshold; default scales with the perturbation "
                         "so the first crossing stays at desk scale")
    sp.add_argument("--series-max", type=int, default=200000,
                    help="max length of the emitted a_n series")

    sp = sub.add_parser("cf", parents=[common])
    sp.add_argument("--alpha", default="golden")
    sp.add_argument("--depth", type=int, default=30)

    sp = sub.add_parser("witness", parents=[common])
    # config-driven: the [witness] section names the experiment and its keys
    return p


def _read_config(path: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str        # preserve case: flag names like --N
    if not cp.read(path):
        print(f"config file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    return cp


def _inject_config(argv: list[str]) -> list[str]:
    """Turn the [subcommand] config section into flags before user flags."""
    if not argv or argv[0].startswith("-"):
        return argv
    command = argv[0]
    if command == "witness":    # witness consumes the config file itself
        return argv
    path = None
    it = iter(range(len(argv)))
    for i in it:
        tok = argv[i]
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return argv
    cp = _read_config(path)
    if command not in cp:
        return argv
    flags: list[str] = []
    for key, value in cp[command].items():
        flag = "--" + key.replace("_", "-")
        if value.strip().lower() in ("true", "false"):
            if value.strip().lower() == "true":
                flags.append(flag)
        else:
            flags.extend([flag, value])
    return [command] + flags + argv[1:]


def _load_algebra(name: str):
    """(generator, ambient basis) for a named or file-defined algebra."""
    if name == "sl2":
        return liealg.sl2_triple()[0], liealg.sl2_basis()
    if name == "sl2sl2":
        return liealg.sl2sl2_generator(), liealg.sl2sl2_basis()
    if name == "sl3":
        return liealg.sl3_regular_nilpotent(), liealg.sl3_basis()
    if name.startswith("file:"):
        with open(name[5:]) as fh:
            obj = json.load(fh)
        return (liealg.matrix_from_json(obj["generator"]),
                [liealg.matrix_from_json(m) for m in obj["basis"]])
    raise ValueError(f"unknown algebra {name!r}")


def _echo_config(args) -> dict:
    skip = {"command"}
    out = {}
    for key, val in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = val if not isinstance(val, Path) else str(val)
    return out


def _load_roof(name: str) -> skewflow.RoofFunction:
    if name == "default":
        return skewflow.default_roof()
    rows = []
    with open(name) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            m, n, re_, im_ = line.replace(",", " ").split()
            rows.append((int(m), int(n), float(re_), float(im_)))
    return skewflow.RoofFunction.from_rows(rows)


# ---------------------------------------------------------------------------
# handlers
# ---------------------------------------------------------------------------

def _run_chain_basis(args, outdir: Path) -> tuple[int, dict]:
    gen, basis = _load_algebra(args.algebra)
    cb = liealg.chain_basis(gen, basis)
    ok = (cb.residuals["bracket"] < 1e-10 and cb.residuals["sigma_min"] > 1e-8)
    report = {
        "experiment": args.command,
        "inputs": _echo_config(args),
        "chain_basis": liealg.chain_basis_to_json(cb),
        "lengths": list(cb.lengths),
        "gr_invariant": liealg.gr_invariant(cb),
        "pass": bool(ok),
    }
    if args.command == "gr":
        report.pop("chain_basis")
    return (0 if ok else 1), report


def _run_cq_verify(args, outdir: Path) -> tuple[int, dict]:
    gen, basis = _load_algebra(args.algebra)
    cb = liealg.chain_basis(gen, basis)
    schedule = cqwitness.make_schedule(gen, cb, args.epsilon, args.n_param)
    rep = cqwitness.cq_window_sweep(schedule, np.eye(gen.shape[0]),
                                    n_windows=args.l_grid, samples=args.samples)
    rep.inputs.update(_echo_config(args))
    emit_plot_data({"L": [w.L for w in rep.windows],
                    "shift": [w.shift for w in rep.windows],
                    "max_distance": [w.max_distance for w in rep.windows],
                    "fraction": [w.fraction for w in rep.windows]},
                   outdir / "windows.csv")
    if not args.no_figures:
        plots.window_figure(rep.windows, schedule.epsilon, outdir / "windows.png")
    return (0 if rep.passed else 1), rep.to_dict()


def _run_horo_shear(args, outdir: Path) -> tuple[int, dict]:
    coords = horocycle.UXVCoords(a=args.a, b=args.b, c=args.c)
    t_cap = min(1.0 / abs(args.b) if args.b else math.inf,
                1.0 / math.sqrt(abs(args.c)) if args.c else math.inf)
    t_max = args.t_max if args.t_max is not None else min(t_cap, 1e6)
    if not math.isfinite(t_max):
        t_max = 1e4
    t_grid = np.linspace(t_max / args.samples, t_max, args.samples)
    rep, series = horocycle.verify_horocycle_divergence(np.eye(2), coords, t_grid)
    rep.inputs.update(_echo_config(args))
    emit_plot_data(series, outdir / "divergence.csv")
    if not args.no_figures:
        plots.divergence_figure(series, outdir / "divergence.png")
    status = 0 if rep.passed else 1
    if args.b ** 2 + args.c ** 2 > 0.0:
        cfg = horocycle.WitnessConfig(paper_literal=args.paper_literal)
        witness = horocycle.strong_r_witness(args.a, args.b, args.c,
                                             args.epsilon, cfg)
        f1 = horocycle.check_f1_window_stability(witness)
        rep.extra["witness"] = {
            "M": witness.M, "c0": witness.c0, "kappa": witness.kappa,
            "t_max": witness.t_max, "f1_max_variation": f1,
            "terminal_offset": witness.p_of_L(witness.M),
        }
        if f1 > args.epsilon ** 2:
            status = 1
    return status, rep.to_dict()


def _run_sigma_model(args, outdir: Path) -> tuple[int, dict]:
    model = sigmamodel.get_model(args.model)
    axioms = sigmamodel.check_axioms(model, epsilon=args.epsilon)
    axioms_ok = (axioms["scaling"] < 1e-9 and axioms["zero_at_zero"] < 1e-12
                 and axioms["window_stability_margin"] <= 1e-12
                 and axioms["halving_margin"] <= 1e-12
                 and axioms["monotone_margin"] <= 1e-12)
    rep = sigmamodel.variable_strong_r_witness(model, args.a, args.b, args.c,
                                               args.epsilon)
    rep.inputs.update(_echo_config(args))
    rep.extra["axioms"] = {k: float(v) for k, v in axioms.items()}
    rep.passed = bool(rep.passed and axioms_ok)
    return (0 if rep.passed else 1), rep.to_dict()


def _auto_threshold(dist: float) -> float:
    # first crossing of the threshold scales like (q / dist)^2 base steps;
    # 2000 * dist keeps that near 4e6 regardless of how close the pair is
    return min(1.0, max(2000.0 * dist, 1e-6))


def _run_heis_shear(args, outdir: Path) -> tuple[int, dict]:
    ss = skewflow.SkewShift(args.alpha, args.beta)
    roof = _load_roof(args.roof)
    p1 = (args.x % 1.0, args.y % 1.0)
    p2 = ((args.x + args.dx) % 1.0, (args.y + args.dy) % 1.0)
    dist = max(skewflow.circle_dist(p1[0], p2[0]),
               skewflow.circle_dist(p1[1], p2[1]))
    if dist == 0.0:
        print("FAIL: perturbation is zero", file=sys.stderr)
        return 1, {"experiment": "heis-shear", "pass": False,
                   "error": "zero perturbation"}
    q = args.q if args.q is not None else (
        1.0 if args.paper_literal else _auto_threshold(dist))
    scan = skewflow.ShearScan(ss, roof, p1, p2)
    r1 = skewflow.heis_r1prime_witness(
        ss, roof, p1, p2, args.epsilon, q=q, delta=max(10.0 * dist, 1e-6),
        paper_literal=args.paper_literal, scan=scan)
    s_height = 0.35 * float(roof(*p1))
    lift = skewflow.lift_strong_r(
        ss, roof, skewflow.SpecialFlowPoint(p1[0], p1[1], s_height),
        skewflow.SpecialFlowPoint(p2[0], p2[1], s_height),
        args.epsilon, r1, samples=args.samples, strict=False, scan=scan)
    lift.inputs.update(_echo_config(args))
    lift.inputs["q"] = q            # echo the resolved threshold, not the flag
    lift.extra["r1prime"] = r1.to_dict()

    n_series = int(min(r1.M, args.series_max * 8))
    decimate = max(1, n_series // args.series_max)
    ns, avals, rmax = skewflow.shear_sequence(ss, roof, p1, p2, n_series,
                                              decimate=decimate)
    series = {"n": ns.tolist(), "a_n": avals.tolist(),
              "running_max": rmax.tolist()}
    emit_plot_data(series, outdir / "shear.csv")
    emit_plot_data({"L": [w.L for w in lift.windows],
                    "shift": [w.shift for w in lift.windows],
                    "max_distance": [w.max_distance for w in lift.windows],
                    "fraction": [w.fraction for w in lift.windows]},
                   outdir / "windows.csv")
    if not args.no_figures:
        plots.shear_series_figure(series, outdir / "shear.png", envelope=q)
        plots.window_figure(lift.windows, args.epsilon, outdir / "windows.png")
    return (0 if (r1.passed and lift.passed) else 1), lift.to_dict()


def _run_cf(args, outdir: Path) -> tuple[int, dict]:
    cf = skewflow.continued_fraction(args.alpha, depth=args.depth)
    report = {
        "experiment": "cf",
        "inputs": _echo_config(args),
        "partial_quotients": cf.partial_quotients,
        "denominators": [str(q) for q in cf.denominators],
        "max_quotient": cf.max_quotient,
        "bounded_type_at": {str(c): cf.is_bounded_type(c) for c in (1, 2, 5, 10, 100)},
        "pass": True,
    }
    emit_plot_data({"n": list(range(len(cf.denominators))),
                    "q_n": [float(q) for q in cf.denominators]},
                   outdir / "denominators.csv")
    if not args.no_figures:
        plots.denominator_figure(cf.denominators, outdir / "denominators.png")
    return 0, report


def _run_witness(args, outdir: Path) -> tuple[int, dict]:
    if args.config is None:
        print("witness requires --config with a [witness] section", file=sys.stderr)
        raise SystemExit(2)
    cp = _read_config(args.config)
    if "witness" not in cp or "experiment" not in cp["witness"]:
        print("config must name an experiment under [witness]", file=sys.stderr)
        raise SystemExit(2)
    experiment = cp["witness"]["experiment"]
    if experiment not in ("cq-verify", "horo-shear", "sigma-model", "heis-shear"):
        print(f"unknown witness experiment {experiment!r}", file=sys.stderr)
        raise SystemExit(2)
    flags = []
    for key, value in cp["witness"].items():
        if key == "experiment":
            continue
        flag = "--" + key.replace("_", "-")
        if value.strip().lower() in ("true", "false"):
            if value.strip().lower() == "true":
                flags.append(flag)
        else:
            flags.extend([flag, value])
    flags.extend(["--out", str(outdir), "--seed", str(args.seed)])
    if args.no_figures:
        flags.append("--no-figures")
    return main([experiment] + flags), {"experiment": "witness",
                                        "dispatched": experiment, "pass": True}


HANDLERS = {
    "chain-basis": _run_chain_basis,
    "gr": _run_chain_basis,
    "cq-verify": _run_cq_verify,
    "horo-shear": _run_horo_shear,
    "sigma-model": _run_sigma_model,
    "heis-shear": _run_heis_shear,
    "cf": _run_cf,
    "witness": _run_witness,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    argv = _inject_config(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    handler = HANDLERS[args.command]
    try:
        status, report = handler(args, outdir)
    except FAILURE_EXCEPTIONS as exc:
        print(f"FAIL [{type(exc).__name__}] {exc}", file=sys.stderr)
        dump_json({"schema": 1, "experiment": args.command,
                   "inputs": _echo_config(args), "pass": False,
                   "error": {"kind": type(exc).__name__, "message": str(exc)}},
                  outdir / "report.json")
        return 1
    if args.command != "witness":
        report.setdefault("schema", 1)
        dump_json(report, outdir / "report.json")
    verdict = "PASS" if status == 0 else "FAIL"
    print(f"{verdict} {args.command} -> {outdir / 'report.json'}")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
