"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 verification failure,
3 infeasible parameters.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import experiments as ex
from .hidden_direction import HiddenDirectionInstance, PackInfeasible, reference_null_sampler, sample_labeled, stream_rng
from .massart_measures import LARGE_ETA, STANDARD, BandCheckError, ConstructionParams, build_pair, verify_properties
from .presets import PRESETS
from .serialization import (
    code_digest,
    dumps_config,
    load_config,
    read_bundle,
    read_dataset,
    to_jsonable,
    write_bundle,
    write_dataset,
    write_json,
)
from .sq_harness import InfeasibleParameters, PlannerConstants, moment_test_battery, plan_parameters
from .veronese_ptf import MAX_DEGREE_CAP, MonomialBasis, build_target, embed

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_INFEASIBLE = 0, 1, 2, 3

PARAM_FLAGS = ("s", "eps", "eta", "C", "variant", "m0", "r_trunc", "ratio_floor", "m0_cap_factor")


class UsageError(Exception):
    pass


class Infeasible(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _doc(command: str, config: dict, body: dict) -> dict:
    return {"command": command, "config": config, "code_digest": code_digest(), **body}


def _check_opt(value: str) -> float:
    x = float(value)
    if not 0 < x <= 0.01:
        raise argparse.ArgumentTypeError("--opt must lie in (0, 0.01]")
    return x


def _check_tau(value: str) -> float:
    x = float(value)
    if not 0 < x < 0.1:
        raise argparse.ArgumentTypeError("--tau must lie in (0, 0.1)")
    return x


def cmd_plan(args) -> int:
    consts = PlannerConstants(C_plan=args.c_plan, c_k=args.c_k, eta=args.eta, ratio_floor=args.ratio_floor)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            planned = plan_parameters(args.opt, args.tau, consts)
        except InfeasibleParameters as err:
            raise Infeasible(str(err)) from err
    for note in planned.warnings:
        print(f"warning: {note}", file=sys.stderr)
    config = {"plan": {"opt": args.opt, "tau": args.tau, "c_plan": args.c_plan, "c_k": args.c_k,
                       "eta": args.eta, "ratio_floor": args.ratio_floor}}
    doc = _doc("plan", config, {"planned": to_jsonable(planned), "feasible": planned.feasible,
                                "binom_le_m_pow_2d": planned.M <= planned.m ** (2 * planned.d)})
    _emit(json.dumps(to_jsonable(doc), sort_keys=True, indent=1) + "\n", args.out)
    return EXIT_OK


def _resolve_build_config(args) -> dict:
    construction = {}
    instance = {"m": 6, "d": None, "seed": 0}
    if args.config:
        cfg = load_config(args.config)
        construction.update(cfg.get("construction", {}))
        instance.update(cfg.get("instance", {}))
    if args.preset:
        construction = {**PRESETS[args.preset], **construction}
    for name in PARAM_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            construction[name] = val
    for name in ("m", "d", "seed"):
        val = getattr(args, name, None)
        if val is not None:
            instance[name] = val
    missing = [k for k in ("s", "eps", "eta") if k not in construction]
    if missing:
        raise UsageError(f"missing construction parameters: {', '.join(missing)} (use --preset or flags)")
    return {"construction": construction, "instance": instance}


def _build(config: dict):
    try:
        params = ConstructionParams(**config["construction"])
        pair = build_pair(params)
    except BandCheckError as err:
        lines = [str(err)] + [f"  [{a:.6g}, {b:.6g}] ratio {r:.6g}" for a, b, r in err.violations[:20]]
        raise Infeasible("\n".join(lines)) from err
    except (ValueError, TypeError) as err:
        raise Infeasible(str(err)) from err
    return pair


def cmd_build(args) -> int:
    config = _resolve_build_config(args)
    pair = _build(config)
    inst_cfg = config["instance"]
    v = ex.hidden_direction(int(inst_cfg["m"]), int(inst_cfg["seed"]))
    target = None
    if inst_cfg.get("d") is not None:
        d = int(inst_cfg["d"])
        if 2 * d > MAX_DEGREE_CAP:
            raise Infeasible(f"2d = {2 * d} exceeds the degree cap {MAX_DEGREE_CAP}")
        try:
            target = build_target(v, pair.J, MonomialBasis(len(v), 2 * d))
        except ValueError as err:
            raise Infeasible(str(err)) from err
    report = verify_properties(pair)
    resolved = {"construction": dataclasses.asdict(pair.params), "instance": inst_cfg}
    pre = {**to_jsonable(report), "checks": report.checks(), "all_pass": report.all_pass}
    write_bundle(args.out, pair, pre, resolved, v, target)
    if args.write_config:
        Path(args.write_config).write_text(dumps_config(resolved))
    print(f"bundle written to {args.out}: {len(pair.plus)} plus pieces, {len(pair.minus)} minus pieces, "
          f"{len(pair.J)} J intervals, C = {pair.params.C:.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    bundle = read_bundle(args.bundle)
    pair = bundle.pair
    report = verify_properties(pair, t_check=args.t_check)
    checks = report.checks()
    herm = ex.hermite_summary(pair, args.k)
    checks["correlation_lemma"] = herm["plus"]["correlation_lemma_ok"] and herm["minus"]["correlation_lemma_ok"]
    checks["digest"] = bundle.digest_ok
    ok = all(checks.values())
    doc = _doc("verify", {"verify": {"bundle": str(args.bundle), "t_check": args.t_check, "k": args.k},
                          "bundle_config": bundle.config},
               {"report": to_jsonable(report), "hermite": herm, "checks": checks, "all_pass": ok})
    if args.out:
        write_json(args.out, doc)
    for name, passed in checks.items():
        print(f"{'PASS' if passed else 'FAIL'} {name}")
    return EXIT_OK if ok else EXIT_FAIL


def _dataset_header(command, bundle, args, p, v, extra=None):
    head = {"command": command, "params": bundle.config, "seed": args.seed, "stream": args.stream,
            "p": p, "bundle_digest": bundle.digest, "direction": v.tolist()}
    head.update(extra or {})
    return head


def cmd_sample(args) -> int:
    bundle = read_bundle(args.bundle)
    v = bundle.direction
    rng = stream_rng(args.seed, args.stream)
    if args.null:
        data = reference_null_sampler(len(v), bundle.pair.p, args.n, rng)
    else:
        data = sample_labeled(HiddenDirectionInstance.from_pair(bundle.pair, v), args.n, rng)
    head = _dataset_header("sample", bundle, args, bundle.pair.p, v, {"null": bool(args.null)})
    write_dataset(args.out, data, head)
    print(f"{args.n} samples written to {args.out}")
    return EXIT_OK


def cmd_lift(args) -> int:
    bundle = read_bundle(args.bundle)
    v = bundle.direction
    d = args.d if args.d is not None else (bundle.target.basis.degree_cap // 2 if bundle.target else None)
    if d is None:
        raise UsageError("no lift degree: pass --d or build the bundle with --d")
    try:
        target, rep = ex.lift_experiment(bundle.pair, v, d, args.check_points, args.seed)
    except ValueError as err:
        raise Infeasible(str(err)) from err
    data = sample_labeled(HiddenDirectionInstance.from_pair(bundle.pair, v), args.n,
                          stream_rng(args.seed, args.stream))
    basis = target.basis
    extra = {"lifted": True, "compact": bool(args.compact), "basis": basis.descriptor()}
    head = _dataset_header("lift", bundle, args, bundle.pair.p, v, extra)

    def rows(chunk=256):
        for start in range(0, len(data), chunk):
            yield from embed(data.x[start : start + chunk], basis)

    write_dataset(args.out, data, head, None if args.compact else rows())
    doc = _doc("lift", {"lift": {"bundle": str(args.bundle), "d": d, "n": args.n, "seed": args.seed,
                                 "stream": args.stream, "check_points": args.check_points}},
               {"report": to_jsonable(rep), "ok": rep.ok})
    if args.report:
        write_json(args.report, doc)
    print(f"lifted dataset (M = {basis.M}) written to {args.out}; agreement {rep.agreement:.6f}, "
          f"max flip {rep.max_flip:.6g}, opt error {rep.opt_error:.6g}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def _csv_text(rows: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "value"])
    for k, val in rows.items():
        w.writerow([k, repr(val) if isinstance(val, float) else val])
    return buf.getvalue()


def cmd_floor(args) -> int:
    bundle = read_bundle(args.bundle)
    table = ex.floor_experiment(bundle.pair, bundle.direction, args.n, args.seed, args.k)
    doc = _doc("floor", {"floor": {"bundle": str(args.bundle), "n": args.n, "seed": args.seed, "k": args.k}},
               {"table": table})
    if args.out:
        write_json(args.out, doc)
    if args.csv:
        Path(args.csv).write_text(_csv_text(table))
    for key in ("constant_error", "battery_error", "target_error", "error_floor", "opt_error"):
        print(f"{key:16s} {table[key]:.6g}")
    return EXIT_OK


def cmd_battery(args) -> int:
    header, data = read_dataset(args.dataset)
    if header.get("lifted") and not header.get("compact"):
        raise UsageError("battery expects unlifted or compact datasets")
    probe = None
    degrees = tuple(args.probe_degrees or ())
    if degrees:
        probe = np.asarray(header["direction"], dtype=float)
    rep = moment_test_battery(data, args.degree_cap, args.directions, args.seed, probe, degrees)
    body = {"n": rep.n, "degree_cap": rep.degree_cap, "max_abs_z": rep.max_abs_z, "argmax": rep.argmax,
            "n_statistics": rep.n_statistics, "detects": rep.detects,
            "probe_z": {str(k): z for k, z in rep.probe_z.items()}, "probe_detects": rep.probe_detects}
    doc = _doc("battery", {"battery": {"dataset": str(args.dataset), "degree_cap": args.degree_cap,
                                       "directions": args.directions, "seed": args.seed,
                                       "probe_degrees": list(degrees)}},
               {"dataset_header": header, "battery": body})
    if args.out:
        write_json(args.out, doc)
    if args.csv:
        Path(args.csv).write_text(_csv_text({k: v for k, v in body.items() if k != "probe_z"}))
    print(f"max |z| = {rep.max_abs_z:.4g} at {rep.argmax} over {rep.n_statistics} statistics")
    for n, z in rep.probe_z.items():
        print(f"probe h{n}(v.x): z = {z:.4g}")
    return EXIT_OK


def _flatten(prefix, obj, out):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list) and len(obj) <= 16 and all(not isinstance(x, (dict, list)) for x in obj):
        out[prefix] = " ".join(str(x) for x in obj)
    elif not isinstance(obj, list):
        out[prefix] = obj


def cmd_report(args) -> int:
    lines = []
    for path in args.inputs:
        doc = json.loads(Path(path).read_text())
        flat = {}
        skip = {"measures", "J", "config", "direction", "target", "dataset_header", "bundle_config"}
        _flatten("", {k: v for k, v in doc.items() if k not in skip}, flat)
        lines.append(f"== {path} ({doc.get('command', doc.get('format', 'document'))})")
        lines.extend(f"{k:48s} {v}" for k, v in flat.items())
    text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _add_param_flags(p):
    p.add_argument("--s", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--C", type=float)
    p.add_argument("--variant", choices=(STANDARD, LARGE_ETA))
    p.add_argument("--m0", type=int)
    p.add_argument("--r-trunc", dest="r_trunc", type=float)
    p.add_argument("--ratio-floor", dest="ratio_floor", type=float)
    p.add_argument("--m0-cap-factor", dest="m0_cap_factor", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="massart-sq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="derive parameters from target error and tolerance")
    p.add_argument("--opt", type=_check_opt, required=True)
    p.add_argument("--tau", type=_check_tau, required=True)
    p.add_argument("--c-plan", dest="c_plan", type=float, default=1.0)
    p.add_argument("--c-k", dest="c_k", type=float, default=0.25)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--ratio-floor", dest="ratio_floor", type=float, default=20.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("build", help="construct measures, J and optionally the lifted target")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    _add_param_flags(p)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--write-config", dest="write_config")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="run the property suite on a bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--t-check", dest="t_check", type=int, default=6)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    for name, func, helptext in (("sample", cmd_sample, "draw a labeled dataset"),
                                 ("lift", cmd_lift, "draw a Veronese-lifted dataset")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--bundle", required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stream", type=int, default=1)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)
        if name == "sample":
            p.add_argument("--null", action="store_true", help="sample the independent-label null instead")
        else:
            p.add_argument("--d", type=int)
            p.add_argument("--compact", action="store_true", help="store unlifted x with a basis descriptor")
            p.add_argument("--check-points", dest="check_points", type=int, default=10_000)
            p.add_argument("--report")

    p = sub.add_parser("floor", help="compare constant, low-degree and target hypotheses")
    p.add_argument("--bundle", required=True)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_floor)

    p = sub.add_parser("battery", help="label-correlation moment tests on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--degree-cap", dest="degree_cap", type=int, required=True)
    p.add_argument("--directions", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probe-degrees", dest="probe_degrees", type=int, nargs="*")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_battery)

    p = sub.add_parser("report", help="print a readable summary of JSON outputs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (Infeasible, PackInfeasible) as err:
        print(f"infeasible parameters: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FileNotFoundError, json.JSONDecodeError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
