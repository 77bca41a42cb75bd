"""Command-line surface: single-point rates, rate-distance curves, decoy
bounds, Monte Carlo runs and parameter optimization, emitting JSON or
CSV with all floats in 12-significant-digit scientific notation so
outputs are byte-stable across runs.

Exit codes: 0 ok, 2 configuration/validation failure, 3 computation
failure (degenerate decoys, insufficient data, ...); errors are emitted
as a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

from .core import ChannelParams, ProtocolParams, transmittance
from .decoy import rate_lower
from .errors import ParameterError, PMQCCError
from .interference import exact_branch_average
from .keyrate import RateReport, rate_pmqcc, rate_pmqcc_star, rate_reduced
from .montecarlo import SimConfig, estimate, run_rounds
from .optimize import optimize_decoys, optimize_signal

__all__ = ["main"]

CONFIG_KEYS = {
    "parties",
    "distance_km",
    "alpha_db_per_km",
    "detector_efficiency",
    "dark_count",
    "f",
    "slices",
    "mu",
    "decoys",
    "signal_phase_misalignment",
    "boundaries",
    "seed",
    "rounds",
    "mode",
}

PROTOCOLS = ("pmqcc", "pmqcc-star", "reduced", "decoy-lower")

CSV_HEADER = "L_km,rate,gain,qber_max,phase_error,mu,M,flag"


def _fmt(x) -> str:
    """12-significant-digit scientific notation (a valid JSON number)."""
    return f"{float(x):.11e}"


def _dump_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats via ``_fmt``."""
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad_in}{json.dumps(str(k))}: {_dump_json(v, indent + 1)}"
            for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad_in}{_dump_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    return json.dumps(obj)


class ConfigError(ParameterError):
    """Configuration file failed validation."""


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return raw


def _require(cfg: dict, keys) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"config is missing required keys: {missing}")


def build_channel(cfg: dict) -> ChannelParams:
    _require(cfg, ["distance_km", "alpha_db_per_km", "detector_efficiency", "dark_count"])
    return ChannelParams(
        loss_rate=float(cfg["alpha_db_per_km"]),
        distance=float(cfg["distance_km"]),
        detector_efficiency=float(cfg["detector_efficiency"]),
        dark_count=float(cfg["dark_count"]),
    )


def build_protocol(cfg: dict) -> ProtocolParams:
    _require(cfg, ["parties", "mu", "slices", "f"])
    return ProtocolParams(
        n_parties=int(cfg["parties"]),
        signal_intensity=float(cfg["mu"]),
        slice_count=int(cfg["slices"]),
        ec_efficiency=float(cfg["f"]),
        decoy_intensities=tuple(float(x) for x in cfg.get("decoys", ())),
        signal_phase_misalignment=float(cfg.get("signal_phase_misalignment", 0.0)),
    )


def parse_boundaries(cfg: dict) -> tuple:
    marks = cfg.get("boundaries", ["right"])
    if not isinstance(marks, list) or any(m not in ("left", "right") for m in marks):
        raise ConfigError('boundaries must be a list drawn from ["left", "right"]')
    return ("left" in marks, "right" in marks)


def compute_rate(protocol: str, pp: ProtocolParams, ch: ChannelParams, cfg: dict) -> RateReport:
    if protocol == "pmqcc":
        return rate_pmqcc(pp, ch)
    if protocol == "pmqcc-star":
        return rate_pmqcc_star(pp, ch)
    if protocol == "reduced":
        return rate_reduced(pp, ch, parse_boundaries(cfg))
    return rate_lower(pp, ch)


def report_dict(report: RateReport) -> dict:
    return {
        "rate": report.rate,
        "gain": report.gain,
        "marginal_qbers": list(report.marginal_qbers),
        "phase_error": report.phase_error,
        "sifting_prefactor": report.sifting_prefactor,
        "clamped": report.clamped,
    }


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_rate(args) -> int:
    cfg = load_config(args.config)
    pp = build_protocol(cfg)
    ch = build_channel(cfg)
    report = compute_rate(args.protocol, pp, ch, cfg)
    payload = {"protocol": args.protocol, **report_dict(report), "config": cfg}
    _emit(_dump_json(payload) + "\n", args.out)
    return 0


def _curve_row(length: float, protocol: str, cfg: dict, optimize: str) -> str:
    ch = ChannelParams(
        loss_rate=float(cfg["alpha_db_per_km"]),
        distance=length,
        detector_efficiency=float(cfg["detector_efficiency"]),
        dark_count=float(cfg["dark_count"]),
    )
    try:
        if optimize == "none":
            pp = build_protocol(cfg)
        else:
            objective = protocol if protocol != "decoy-lower" else "pmqcc"
            result = optimize_signal(
                ch,
                int(cfg["parties"]),
                objective,
                ec_efficiency=float(cfg["f"]),
                signal_phase_misalignment=float(cfg.get("signal_phase_misalignment", 0.0)),
                boundaries=parse_boundaries(cfg),
            )
            if result.flagged_zero:
                return f"{_fmt(length)},{_fmt(0)},{_fmt(0)},{_fmt(0)},{_fmt(0)},{_fmt(0)},0,infeasible"
            pp = result.best_params
            if protocol == "decoy-lower" and optimize == "signal":
                # keep the configured decoy set alongside the optimized signal
                pp = dataclasses.replace(
                    pp, decoy_intensities=tuple(float(x) for x in cfg.get("decoys", ()))
                )
            if protocol == "decoy-lower" and optimize == "signal+decoys":
                dec = optimize_decoys(
                    ch,
                    pp.n_parties,
                    pp.signal_intensity,
                    pp.slice_count,
                    ec_efficiency=pp.ec_efficiency,
                )
                if dec.flagged_zero:
                    return f"{_fmt(length)},{_fmt(0)},{_fmt(0)},{_fmt(0)},{_fmt(0)},{_fmt(pp.signal_intensity)},{pp.slice_count},infeasible"
                pp = dec.best_params
        report = compute_rate(protocol, pp, ch, cfg)
    except PMQCCError as exc:
        return f"{_fmt(length)},{_fmt(0)},{_fmt(0)},{_fmt(0)},{_fmt(0)},{_fmt(0)},0,error:{type(exc).__name__}"
    flag = "clamped" if report.clamped else "ok"
    return (
        f"{_fmt(length)},{_fmt(report.rate)},{_fmt(report.gain)},"
        f"{_fmt(max(report.marginal_qbers))},{_fmt(report.phase_error)},"
        f"{_fmt(pp.signal_intensity)},{pp.slice_count},{flag}"
    )


def cmd_curve(args) -> int:
    cfg = load_config(args.config)
    _require(cfg, ["parties", "alpha_db_per_km", "detector_efficiency", "dark_count", "f"])
    if args.l_min > args.l_max or args.l_step <= 0:
        raise ConfigError("need l-min <= l-max and a positive l-step")
    if args.optimize == "none":
        _require(cfg, ["mu", "slices"])
    lines = [CSV_HEADER]
    length = args.l_min
    while length <= args.l_max + 1e-9:
        lines.append(_curve_row(length, args.protocol, cfg, args.optimize))
        length += args.l_step
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    _require(cfg, ["parties", "mu", "slices", "seed", "rounds"])
    cfg.setdefault("f", 1.16)
    pp = build_protocol(cfg)
    ch = build_channel(cfg)
    sc = SimConfig(
        rounds=int(cfg["rounds"]),
        seed=int(cfg["seed"]),
        mode=cfg.get("mode", "forced-matching"),
    )
    tally = run_rounds(pp, ch, sc, workers=args.workers)
    est = estimate(tally)

    arrival = transmittance(ch) * pp.signal_intensity
    n = pp.n_parties
    branch = exact_branch_average(arrival, ch.dark_count, pp.slice_count, reference_offset=0.0)
    gain_analytic = branch.gain ** (n - 1)

    def sigma(emp: float, ana: float, trials: int) -> float:
        se = math.sqrt(ana * (1.0 - ana) / trials)
        return abs(emp - ana) / se if se > 0.0 else 0.0

    comparison = {
        "gain": {
            "analytic": gain_analytic,
            "empirical": est.gain,
            "sigma": sigma(est.gain, gain_analytic, tally.sifted),
        },
        "pair_qber": {},
    }
    for m in range(2, n + 1):
        ana = (1.0 - (1.0 - 2.0 * branch.qber) ** (m - 1)) / 2.0
        comparison["pair_qber"][str(m)] = {
            "analytic": ana,
            "empirical": est.pair_qbers[m],
            "sigma": sigma(est.pair_qbers[m], ana, tally.success),
        }
    payload = {"config": cfg, "tally": tally.to_dict(), "comparison": comparison}
    _emit(_dump_json(payload) + "\n", args.out)
    return 0


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    _require(cfg, ["parties", "f"])
    ch = build_channel(cfg)
    if args.target == "signal":
        result = optimize_signal(
            ch,
            int(cfg["parties"]),
            args.protocol,
            ec_efficiency=float(cfg["f"]),
            signal_phase_misalignment=float(cfg.get("signal_phase_misalignment", 0.0)),
            boundaries=parse_boundaries(cfg),
        )
    else:
        _require(cfg, ["mu", "slices"])
        result = optimize_decoys(
            ch,
            int(cfg["parties"]),
            float(cfg["mu"]),
            int(cfg["slices"]),
            ec_efficiency=float(cfg["f"]),
        )
    payload = {
        "target": args.target,
        "best_rate": result.best_rate,
        "evaluations": result.evaluations,
        "flagged_zero": result.flagged_zero,
    }
    if result.best_params is not None:
        payload["mu"] = result.best_params.signal_intensity
        payload["M"] = result.best_params.slice_count
        payload["decoys"] = list(result.best_params.decoy_intensities)
    _emit(_dump_json(payload) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmqcc",
        description="Phase-matching quantum conferencing: rates, bounds, simulation, optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rate = sub.add_parser("rate", help="single-point rate report (JSON)")
    p_rate.add_argument("config")
    p_rate.add_argument("--protocol", choices=PROTOCOLS, default="pmqcc")
    p_rate.add_argument("--out", default=None)
    p_rate.set_defaults(func=cmd_rate)

    p_curve = sub.add_parser("curve", help="rate-distance curve (CSV)")
    p_curve.add_argument("config")
    p_curve.add_argument("--protocol", choices=PROTOCOLS, default="pmqcc")
    p_curve.add_argument("--l-min", type=float, required=True)
    p_curve.add_argument("--l-max", type=float, required=True)
    p_curve.add_argument("--l-step", type=float, required=True)
    p_curve.add_argument("--optimize", choices=("none", "signal", "signal+decoys"), default="none")
    p_curve.add_argument("--out", default=None)
    p_curve.set_defaults(func=cmd_curve)

    p_sim = sub.add_parser("simulate", help="round-level Monte Carlo run (JSON)")
    p_sim.add_argument("config")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_opt = sub.add_parser("optimize", help="parameter optimization (JSON)")
    p_opt.add_argument("config")
    p_opt.add_argument("--target", choices=("signal", "decoys"), default="signal")
    p_opt.add_argument("--protocol", choices=("pmqcc", "pmqcc-star", "reduced"), default="pmqcc")
    p_opt.add_argument("--out", default=None)
    p_opt.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(_dump_json({"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 2
    except ParameterError as exc:
        sys.stderr.write(_dump_json({"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 2
    except PMQCCError as exc:
        sys.stderr.write(_dump_json({"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
