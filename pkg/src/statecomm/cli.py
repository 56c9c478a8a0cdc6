"""Command-line front end.

Subcommands: ``curve`` (capacity-distortion curves, closed-form or
numeric), ``simulate`` (block Markov Monte Carlo), ``cardtrick``
(encode/decode/verify), ``lossless`` (feasibility report).  Every data
file a command emits references a run manifest carrying the command echo,
parameters, seed, tool version and wall-clock duration; timestamps live
only in the manifest so data files are byte-identical across reruns with
the same seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .blockmarkov import CodeRates, SimReport, TypicalityParams, simulate
from .cardtrick import (
    Arrangement,
    CardTrickInstance,
    decode_trick,
    encode_trick,
    verify_roundtrip,
)
from .cdsolve import SolverOptions, lossless_feasible, solve_cd_curve, uncertainty_reduction_rate
from .closedform import (
    BscParams,
    GaussianParams,
    bsc_causal_curve,
    bsc_sc_curve,
    flat_curve,
    gaussian_sc_curve,
    injective_capacity,
)
from .errors import ParseError, StatecommError, ValidationError
from .estimator import DistortionTable
from .fileformats import parse_design, parse_distortion
from .presets import lossless_preset, sim_preset, state_identity_design
from .probcore import bsc_channel, channel_from_map, gaussian_capacity_fn, parse_channel

MODES = {"sc": "strictly-causal", "c": "causal"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 2
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StatecommError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="statecomm",
        description="capacity-distortion tradeoffs for channels with state at the encoder",
    )
    parser.add_argument("--version", action="version", version=f"statecomm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="compute a capacity-distortion curve")
    p.add_argument("--preset", choices=["bsc", "gaussian", "gaussian-noiseless", "xor"])
    p.add_argument("--channel", help="channel file (see README for the format)")
    p.add_argument("--distortion", help="distortion table file (default: Hamming)")
    p.add_argument("--mode", choices=["sc", "c"], default="sc")
    p.add_argument("--closed-form", action="store_true",
                   help="evaluate the closed form instead of running the solver")
    p.add_argument("--p", type=float, default=0.25, help="bsc noise crossover")
    p.add_argument("--q", type=float, default=0.25, help="bsc/xor state bias")
    p.add_argument("--P", type=float, default=1.0, help="gaussian transmit power")
    p.add_argument("--Q", type=float, default=1.0, help="gaussian state variance")
    p.add_argument("--N", type=float, default=1.0, help="gaussian noise variance")
    p.add_argument("--points", type=int, default=41, help="closed-form grid size")
    _solver_flags(p)
    p.add_argument("--output", required=True, help="output prefix (writes .csv/.json/.manifest.json)")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="run the block Markov simulator")
    p.add_argument("--preset", choices=["noiseless-xor", "lossless-bsc", "overdriven-bsc"])
    p.add_argument("--channel", help="channel file")
    p.add_argument("--design", help="design file (input pmf + test channel)")
    p.add_argument("--distortion", help="distortion table file (default: Hamming)")
    p.add_argument("-n", type=int, help="blocklength")
    p.add_argument("--n-sweep", help="comma-separated blocklengths; one CSV row each")
    p.add_argument("-b", type=int, help="number of blocks")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rate-r", type=float, help="message rate R")
    p.add_argument("--rate-rs", type=float, help="bin-index rate R_s")
    p.add_argument("--rate-rst", type=float, help="description rate R_s_tilde")
    p.add_argument("--epsilon", type=float, help="decoder typicality slack")
    p.add_argument("--epsilon-prime", type=float, help="encoder covering slack")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cardtrick", help="the K-card trick")
    tsub = p.add_subparsers(dest="trick_command", required=True)
    for name in ("encode", "decode", "verify"):
        tp = tsub.add_parser(name)
        tp.add_argument("--n", type=int, required=True, help="deck size")
        tp.add_argument("--k", type=int, required=True, help="hand size")
        if name == "encode":
            tp.add_argument("--hand", required=True, help="comma-separated cards")
        if name == "decode":
            tp.add_argument("--arrangement", required=True, help="comma-separated cards, pile order")
        tp.set_defaults(func=cmd_cardtrick, trick_command=name)

    p = sub.add_parser("lossless", help="lossless state-communication feasibility")
    p.add_argument("--preset", choices=["corollary1-feasible", "corollary1-infeasible"])
    p.add_argument("--channel", help="channel file")
    p.add_argument("--output", help="optional output prefix for a JSON report")
    p.set_defaults(func=cmd_lossless)
    return parser


def _solver_flags(p):
    p.add_argument("--restarts", type=int, help="multistart count per lambda")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--lambda-step", type=float)
    p.add_argument("--card-u", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver-config", help="key/value options file")


def _load_channel(path):
    return parse_channel(Path(path).read_text())


def _solver_options(args):
    opts = SolverOptions(seed=args.seed)
    if args.solver_config:
        opts = SolverOptions.from_text(Path(args.solver_config).read_text(), base=opts)
    overrides = {}
    if args.restarts is not None:
        overrides["multistart"] = args.restarts
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    if args.lambda_max is not None:
        overrides["lambda_max"] = args.lambda_max
    if args.lambda_step is not None:
        overrides["lambda_step"] = args.lambda_step
    if args.card_u is not None:
        overrides["card_u"] = args.card_u
    if overrides:
        opts = SolverOptions.from_mapping(overrides, base=opts)
    return opts


def cmd_curve(args) -> int:
    t0 = time.monotonic()
    mode = MODES[args.mode]
    if args.preset is None and args.channel is None:
        raise ValidationError("curve needs --preset or --channel")

    if args.preset == "gaussian":
        if args.mode != "sc":
            raise ValidationError("the causal gaussian curve has no known closed form")
        g = GaussianParams(args.P, args.Q, args.N)
        if args.N == 0:
            print("capacity is unbounded for zero noise variance (reported: inf)")
            raise ValidationError("cannot tabulate an unbounded curve; use N > 0")
        curve = gaussian_sc_curve(g, args.points)
        params = {"preset": "gaussian", "P": args.P, "Q": args.Q, "N": args.N}
    elif args.preset == "gaussian-noiseless":
        if args.Q <= 0:
            raise ValidationError("gaussian-noiseless needs Q > 0")
        cap = gaussian_capacity_fn(args.P / args.Q)
        curve = flat_curve(cap, 1.0, {"family": "gaussian-noiseless", "P": args.P, "Q": args.Q})
        params = {"preset": "gaussian-noiseless", "P": args.P, "Q": args.Q}
    elif args.preset == "xor":
        ymap = np.array([[0, 1], [1, 0]])
        ch = channel_from_map(ymap, [1.0 - args.q, args.q])
        cap = injective_capacity(ch, ymap)
        curve = flat_curve(cap, max(2 * args.q, 0.1), {"family": "xor", "q": args.q})
        params = {"preset": "xor", "q": args.q}
    else:
        if args.preset == "bsc":
            channel = bsc_channel(args.p, args.q)
            params = {"preset": "bsc", "p": args.p, "q": args.q}
        else:
            channel = _load_channel(args.channel)
            params = {"channel": args.channel}
        params["mode"] = args.mode
        if args.closed_form:
            if args.preset != "bsc":
                raise ValidationError("--closed-form requires the bsc or gaussian preset")
            b = BscParams(args.p, args.q)
            curve = bsc_sc_curve(b, args.points) if args.mode == "sc" else bsc_causal_curve(
                b, args.points
            )
            params["closed_form"] = True
        else:
            d = _load_distortion(args, channel.card_s)
            opts = _solver_options(args)
            curve = solve_cd_curve(channel, d, mode, opts)
            params["solver"] = {
                "multistart": opts.multistart,
                "max_iters": opts.max_iters,
                "lambda_grid": [float(v) for v in opts.resolved_lambda_grid()],
                "card_u": opts.card_u,
            }

    manifest_name = Path(args.output).name + ".manifest.json"
    files = {
        args.output + ".csv": curve.to_csv_text(manifest_name),
        args.output + ".json": curve.to_json_text(manifest_name),
    }
    _write_outputs(args.output, files, params, getattr(args, "seed", None), t0)
    print(f"wrote {args.output}.csv, {args.output}.json ({len(curve)} points)")
    return 0


def _load_distortion(args, card_s):
    if getattr(args, "distortion", None):
        return parse_distortion(Path(args.distortion).read_text())
    return DistortionTable.hamming(card_s)


def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    if args.preset:
        bundle = sim_preset(args.preset)
        channel = bundle["channel"]
        design = bundle["design"]
        d = bundle["distortion"]
        rates = bundle["rates"]
        typ = bundle["typ"]
        n, b, trials = bundle["n"], bundle["b"], bundle["trials"]
        params_echo = {"preset": args.preset}
    elif args.channel and args.design:
        channel = _load_channel(args.channel)
        design = parse_design(Path(args.design).read_text(), channel.card_x, channel.card_s)
        d = _load_distortion(args, channel.card_s)
        rates = CodeRates(0.0, 0.0, 0.0)
        typ = TypicalityParams()
        n, b, trials = 12, 6, 20
        params_echo = {"channel": args.channel, "design": args.design}
    else:
        raise ValidationError("simulate needs --preset or both --channel and --design")

    if args.rate_r is not None or args.rate_rs is not None or args.rate_rst is not None:
        rates = CodeRates(
            rates.R if args.rate_r is None else args.rate_r,
            rates.R_s if args.rate_rs is None else args.rate_rs,
            rates.R_s_tilde if args.rate_rst is None else args.rate_rst,
        )
    if args.epsilon is not None or args.epsilon_prime is not None:
        typ = TypicalityParams(
            typ.epsilon if args.epsilon is None else args.epsilon,
            typ.epsilon_prime if args.epsilon_prime is None else args.epsilon_prime,
        )
    if args.b is not None:
        b = args.b
    if args.trials is not None:
        trials = args.trials
    ns = [int(v) for v in args.n_sweep.split(",")] if args.n_sweep else [args.n or n]

    reports = [
        simulate(channel, design, d, ni, b, rates, typ, trials, args.seed) for ni in ns
    ]
    manifest_name = Path(args.output).name + ".manifest.json"
    csv_lines = ["# manifest: " + manifest_name, SimReport.CSV_HEADER]
    csv_lines += [rep.to_csv_row() for rep in reports]
    files = {args.output + ".csv": "\n".join(csv_lines) + "\n"}
    if len(reports) == 1:
        files[args.output + ".json"] = reports[0].to_json_text(manifest_name)
    else:
        payload = {
            "schema": "statecomm.simreport-sweep.v1",
            "manifest": manifest_name,
            "reports": [rep.to_json_obj(manifest_name) for rep in reports],
        }
        files[args.output + ".json"] = json.dumps(payload, indent=2) + "\n"
    params_echo.update(
        {
            "n_values": ns,
            "b": b,
            "trials": trials,
            "rates": {"R": rates.R, "R_s": rates.R_s, "R_s_tilde": rates.R_s_tilde},
            "epsilon": typ.epsilon,
            "epsilon_prime": typ.epsilon_prime,
        }
    )
    _write_outputs(args.output, files, params_echo, args.seed, t0)
    for ni, rep in zip(ns, reports):
        print(
            f"n={ni}: distortion={rep.empirical_distortion:.5f} "
            f"decoded_blocks={rep.decoded_blocks}/{rep.state_blocks} "
            f"E1={rep.e1_count} E2={rep.e2_count} E3={rep.e3_count}"
        )
    return 0


def cmd_cardtrick(args) -> int:
    inst = CardTrickInstance(args.n, args.k)
    if args.trick_command == "encode":
        hand = [int(v) for v in args.hand.split(",")]
        hidden, arr = encode_trick(inst, hand)
        print(f"hidden {hidden}")
        print("arrangement " + ",".join(str(c) for c in arr.retained))
    elif args.trick_command == "decode":
        cards = tuple(int(v) for v in args.arrangement.split(","))
        print(f"hidden {decode_trick(inst, Arrangement(cards))}")
    else:
        ok, total = verify_roundtrip(inst)
        print(f"{ok}/{total} ok")
        if ok != total:
            return 1
    return 0


def cmd_lossless(args) -> int:
    t0 = time.monotonic()
    if args.preset:
        channel = lossless_preset(args.preset)
        params = {"preset": args.preset}
    elif args.channel:
        channel = _load_channel(args.channel)
        params = {"channel": args.channel}
    else:
        raise ValidationError("lossless needs --preset or --channel")
    report = lossless_feasible(channel)
    urr = uncertainty_reduction_rate(channel)
    print(f"delta_star {report.delta_star:.6f}")
    print(f"h_s {report.h_s:.6f}")
    print(f"feasible {'yes' if report.feasible else 'no'}")
    print(f"uncertainty_reduction_rate {urr:.6f}")
    if args.output:
        manifest_name = Path(args.output).name + ".manifest.json"
        payload = {
            "schema": "statecomm.lossless.v1",
            "manifest": manifest_name,
            "delta_star": report.delta_star,
            "h_s": report.h_s,
            "feasible": report.feasible,
            "uncertainty_reduction_rate": urr,
        }
        files = {args.output + ".json": json.dumps(payload, indent=2) + "\n"}
        _write_outputs(args.output, files, params, None, t0)
    return 0


def _write_outputs(prefix, files, params, seed, t0):
    """Write data files plus the manifest that each of them references."""
    out = Path(prefix)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    for path, text in files.items():
        Path(path).write_text(text)
    manifest = {
        "schema": "statecomm.manifest.v1",
        "tool": f"statecomm {__version__}",
        "command": " ".join(sys.argv) if sys.argv else "",
        "parameters": params,
        "seed": seed,
        "outputs": [Path(p).name for p in sorted(files)],
        "duration_seconds": round(time.monotonic() - t0, 3),
    }
    Path(prefix + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    sys.exit(main())
