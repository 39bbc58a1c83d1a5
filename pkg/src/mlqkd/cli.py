"""Command-line front end.

Exit codes: 0 success, 1 verification or computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import shlex
import sys

import numpy as np

from . import __version__
from .channel import ChannelModel, K_valid, honest_stats, max_K
from .keyrate import (asymptotic_gain, finite_rate, optimize_gamma, optimize_mu, scan_eps,
                      threshold_eps)
from .montecarlo import SimConfig, compare, simulate
from .protocol import ProtocolParams, verify_closed_forms
from .source import angular_weights, fock_oracle_weights, poisson_dist, verify_state_consistency

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class UsageError(ValueError):
    pass


def _eps_range(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("n must be >= 1")
    return np.linspace(a, b, n)


def _mu_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mu must be a number or 'auto', got {text!r}")


def _k_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"K must be an integer or 'auto', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with flag values (flags win)")
    common.add_argument("--output", "-o", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="output format")

    ap = argparse.ArgumentParser(prog="mlqkd", description="(M, L) polarization QKD key-rate toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="operator and state identity checks")
    p.add_argument("--M", type=int, nargs="+", default=[4, 5, 6, 8])
    p.add_argument("--L", type=int, nargs="+", default=[1, 2])
    p.add_argument("--nmax", type=int, default=6)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)

    p = sub.add_parser("rate", parents=[common], help="finite-loss key rate")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--K", type=_k_arg, default="auto")
    p.add_argument("--mu", type=_mu_arg, default="auto")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--optimize-mu", action="store_true")
    p.add_argument("--scan-phi", action="store_true")
    p.add_argument("--double-even", action="store_true")

    p = sub.add_parser("asymptotic", parents=[common], help="scaling-limit gain")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--K", type=_k_arg, default="auto")
    p.add_argument("--eps", type=float, default=0.0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=float)
    g.add_argument("--optimize", action="store_true")
    p.add_argument("--double-even", action="store_true")

    p = sub.add_parser("scan", parents=[common], help="optimized gain over a noise range")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--K", type=_k_arg, default="auto")
    p.add_argument("--eps-range", type=_eps_range, required=True)
    p.add_argument("--double-even", action="store_true")

    p = sub.add_parser("threshold", parents=[common], help="threshold channel noise")
    p.add_argument("--K", type=_k_arg)
    p.add_argument("--Theta", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--L", type=int)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo of the honest protocol")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--pulses", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--compare", action="store_true")
    p.add_argument("--double-even", action="store_true")
    p.add_argument("--event-log")
    return ap


def _load_config(path: str, command: str, parser: argparse.ArgumentParser) -> dict:
    """Top-level keys plus a table named after the subcommand; keys use flag names."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    values = {k: v for k, v in doc.items() if not isinstance(v, dict)}
    values.update(doc.get(command, {}))
    sub = parser._subparsers._group_actions[0].choices[command]
    known = {a.dest: a for a in sub._actions}
    out = {}
    for key, val in values.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise UsageError(f"unknown config key {key!r} for {command}")
        action = known[dest]
        if isinstance(val, str) and action.type is not None:
            val = action.type(val)
        out[dest] = val
    return out


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    sub_choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in sub_choices), None)
    if known.config and command:
        try:
            defaults = _load_config(known.config, command, parser)
        except (OSError, tomllib.TOMLDecodeError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"cannot use config file: {exc}")
        sub = sub_choices[command]
        sub.set_defaults(**defaults)
        for a in sub._actions:
            if a.dest in defaults:
                a.required = False
    return parser.parse_args(argv)


def _resolved(args: argparse.Namespace) -> dict:
    out = {}
    for k, v in vars(args).items():
        if isinstance(v, np.ndarray):
            v = v.tolist()
        out[k] = v
    return out


def _params(args, double: bool = False) -> ProtocolParams:
    try:
        return ProtocolParams(args.M, args.L, double)
    except ValueError as exc:
        raise UsageError(str(exc))


def _resolve_K(args, params: ProtocolParams) -> int:
    K = max_K(params.M, params.L) if args.K in (None, "auto") else args.K
    if not K_valid(params.M, params.L, K):
        raise UsageError(f"K={K} is not valid for (M, L) = ({params.M}, {params.L})")
    args.K = K
    return K


def _emit_json(doc: dict, args) -> str:
    return json.dumps(doc, indent=2, default=float) + "\n"


def _emit_csv(rows: list[dict], columns: list[str], argv: list[str]) -> str:
    buf = io.StringIO()
    buf.write(f"# mlqkd {__version__} invocation: mlqkd {shlex.join(argv)}\n")
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_verify(args, argv) -> tuple[int, str]:
    rows = []
    ok = True
    for M in args.M:
        for L in args.L:
            if 2 * L > M:
                continue
            params = _params(argparse.Namespace(M=M, L=L))
            rep = verify_closed_forms(params, np.linspace(0, np.pi, 4)[:-1] + 0.1, args.perturb)
            st_dev, tk_dev = 0.0, 0.0
            for mu in (0.2, 0.5):
                dist = poisson_dist(mu)
                st = verify_state_consistency(params, dist, args.nmax, args.perturb)
                st_dev = max(st_dev, st.max_deviation)
                T = angular_weights(dist, M)
                Tf = fock_oracle_weights(dist, M, args.nmax)
                excess = np.max(np.abs(T.T - Tf.T)) - Tf.truncation_error_bound
                tk_dev = max(tk_dev, float(excess))
            passed = rep.passed and st_dev <= 1e-10 and tk_dev <= 1e-12
            ok &= passed
            rows.append({"M": M, "L": L, "closed_form_dev": rep.max_deviation,
                         "leakage": rep.max_leakage, "state_dev": st_dev,
                         "weights_excess": tk_dev, "passed": passed})
    cols = ["M", "L", "closed_form_dev", "leakage", "state_dev", "weights_excess", "passed"]
    if args.format == "json":
        text = _emit_json({"config": _resolved(args), "rows": rows, "passed": ok}, args)
    else:
        text = _emit_csv(rows, cols, argv)
    return (0 if ok else 1), text


def cmd_rate(args, argv) -> tuple[int, str]:
    params = _params(args, args.double_even)
    K = _resolve_K(args, params)
    try:
        channel = ChannelModel(args.eta, args.eps)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.optimize_mu or args.mu == "auto":
        res = optimize_mu(params, channel, K, args.scan_phi)
    else:
        if args.mu <= 0:
            raise UsageError("mu must be positive")
        res = finite_rate(params, args.mu, channel, K, args.scan_phi)
    return 0, _emit_json({"config": _resolved(args), "result": res.to_dict()}, args)


def cmd_asymptotic(args, argv) -> tuple[int, str]:
    params = _params(args, args.double_even)
    K = _resolve_K(args, params)
    if not 0 <= args.eps <= 1:
        raise UsageError("eps must be in [0, 1]")
    if args.gamma is not None and not args.optimize:
        if args.gamma < 0:
            raise UsageError("gamma must be nonnegative")
        res = asymptotic_gain(params.M, params.L, K, args.gamma, args.eps, args.double_even)
    else:
        _, res = optimize_gamma(params.M, params.L, K, args.eps, args.double_even)
    return 0, _emit_json({"config": _resolved(args), "result": res.to_dict()}, args)


def cmd_scan(args, argv) -> tuple[int, str]:
    params = _params(args, args.double_even)
    K = _resolve_K(args, params)
    eps = args.eps_range
    if np.any(eps < 0) or np.any(eps > 1):
        raise UsageError("eps range must lie in [0, 1]")
    rows = scan_eps(params.M, params.L, K, eps, args.double_even)
    if args.format == "json":
        return 0, _emit_json({"config": _resolved(args), "rows": rows}, args)
    return 0, _emit_csv(rows, ["eps", "gamma_star", "bracket", "gain"], argv)


def cmd_threshold(args, argv) -> tuple[int, str]:
    if args.M is not None and args.L is not None:
        params = _params(args)
        K = _resolve_K(args, params)
        Theta = params.theta
    elif args.K not in (None, "auto") and args.Theta is not None:
        K, Theta = args.K, args.Theta
        if K < 1 or math.cos((K - 1) * Theta) <= 0:
            raise UsageError("need K >= 1 and cos((K-1) Theta) > 0")
    else:
        raise UsageError("threshold needs --M and --L, or --K and --Theta")
    row = {"K": K, "Theta": Theta, "eps_star": threshold_eps(K, Theta)}
    if args.format == "json":
        return 0, _emit_json({"config": _resolved(args), "rows": [row]}, args)
    return 0, _emit_csv([row], ["K", "Theta", "eps_star"], argv)


def cmd_simulate(args, argv) -> tuple[int, str]:
    params = _params(args, args.double_even)
    try:
        channel = ChannelModel(args.eta, args.eps)
        config = SimConfig(params, args.mu, channel, args.pulses, args.seed, args.offset)
    except ValueError as exc:
        raise UsageError(str(exc))
    res = simulate(config, args.event_log)
    doc = json.loads(res.to_json())
    doc["config"] = _resolved(args)
    code = 0
    if args.compare:
        rep = compare(res, honest_stats(params, args.mu, channel))
        doc["compare"] = rep.to_dict()
        code = 0 if rep.passed else 1
    return code, _emit_json(doc, args)


COMMANDS = {"verify": cmd_verify, "rate": cmd_rate, "asymptotic": cmd_asymptotic,
            "scan": cmd_scan, "threshold": cmd_threshold, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        code, text = COMMANDS[args.command](args, argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"mlqkd: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"mlqkd: failed: {exc}", file=sys.stderr)
        return 1
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
