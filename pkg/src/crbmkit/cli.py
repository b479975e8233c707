"""Batch command-line front end with machine-readable output.

Subcommands: bounds, table1, pack, compile, dim, divergence, mrf, ltn,
verify-all.  Randomized subcommands require an explicit --seed.  Output is
JSON (CSV for table1) to stdout or --out; relative --out paths resolve
against $CRBMKIT_OUT_DIR when set.  Every JSON payload carries a versioned
schema tag and is validated before emission.  Exit codes: 0 success,
1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np
import jsonschema

from . import bounds as bounds_mod
from . import packing as packing_mod
from .compiler import (
    compile_common_support,
    compile_partition,
    compile_support_points,
    compile_universal,
    divergence_witness,
)
from .crbm import eval_conditional
from .dimension import certify_dimension
from .distributions import ConditionalTable, random_conditional, tv_row_distance
from .errors import CrbmKitError
from .ltn import ThresholdNet, embed_ltn_in_crbm, ltn_table, parity_net
from .mrf import (
    MrfModel,
    SimplicialComplex,
    compile_conditional_mrf,
    compile_mrf_to_rbm,
    mrf_distribution,
)
from .verify import verify_all

_BASE_SCHEMA = {"type": "object",
                "properties": {"schema": {"type": "string"}},
                "required": ["schema"]}

SCHEMAS = {
    "crbmkit-bounds/1": _BASE_SCHEMA | {
        "required": ["schema", "k", "n", "universal"]},
    "crbmkit-pack/1": _BASE_SCHEMA | {
        "required": ["schema", "k", "r", "stars", "resets", "valid"]},
    "crbmkit-compile/1": _BASE_SCHEMA | {
        "required": ["schema", "params", "report"]},
    "crbmkit-dim/1": _BASE_SCHEMA | {
        "required": ["schema", "k", "n", "m", "expected_value", "numeric"]},
    "crbmkit-divergence/1": _BASE_SCHEMA | {
        "required": ["schema", "divergence", "params"]},
    "crbmkit-mrf/1": _BASE_SCHEMA | {
        "required": ["schema", "params", "verification_tv"]},
    "crbmkit-ltn/1": _BASE_SCHEMA | {
        "required": ["schema", "params", "verification_tv"]},
    "crbmkit-verify/1": _BASE_SCHEMA | {
        "required": ["schema", "all_passed", "criteria"]},
}


def _round_floats(obj):
    if isinstance(obj, float):
        return float(format(obj, ".17g"))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _emit(payload: dict, out: str | None) -> None:
    jsonschema.validate(payload, SCHEMAS[payload["schema"]])
    text = json.dumps(_round_floats(payload), sort_keys=True, indent=2) + "\n"
    _write(text, out)


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    base = os.environ.get("CRBMKIT_OUT_DIR", "")
    path = out if os.path.isabs(out) or not base else os.path.join(base, out)
    with open(path, "w") as fh:
        fh.write(text)


def _params_obj(params) -> dict:
    return json.loads(params.to_json())


def _cmd_bounds(args) -> int:
    rep = bounds_mod.universal_m_table(args.k, args.n)
    payload = {
        "schema": "crbmkit-bounds/1",
        "k": args.k, "n": args.n,
        "universal": rep.to_json_obj(),
        "deterministic": dict(zip(("sufficient", "necessary"),
                                  bounds_mod.deterministic_m_bounds(
                                      max(args.k, 1), args.n))),
    }
    if args.m is not None:
        value, regime = bounds_mod.expected_dim(args.k, args.n, args.m)
        payload["expected_dim"] = {"value": value, "regime": regime}
        payload["divergence_upper"] = bounds_mod.divergence_upper(
            args.k, args.n, args.m)
    _emit(payload, args.out)
    return 0


def _cmd_table1(args) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["r", "coef", "F", "R", "K", "P"])
    for r in range(1, args.rmax + 1):
        v = packing_mod.seq_values(r)
        writer.writerow([r, format(2.0 ** -v.S, ".17g"), v.F, v.resets_needed,
                         format(v.K, ".17g"), format(v.P, ".17g")])
    _write(buf.getvalue(), args.out)
    return 0


def _cmd_pack(args) -> int:
    seq = packing_mod.build_packing(args.k, args.r)
    report = packing_mod.validate_packing(seq)
    payload = {
        "schema": "crbmkit-pack/1",
        "k": args.k, "r": args.r,
        "stars": [{
            "center": star.ball.center.index,
            "fixed_mask": star.cylinder.fixed_mask,
            "fixed_values": star.cylinder.fixed_values,
        } for star in seq.stars],
        "resets": [{"position": pos, "fixed_mask": cyl.fixed_mask,
                    "fixed_values": cyl.fixed_values}
                   for pos, cyl in seq.resets],
        "star_count": report.star_count,
        "reset_count": report.reset_count,
        "valid": report.ok,
        "violations": list(report.violations),
    }
    _emit(payload, args.out)
    return 0


def _random_target(args) -> ConditionalTable:
    k, n = args.k, args.n
    if args.mode == "universal":
        return random_conditional(k, n, args.seed)
    rng = np.random.default_rng(args.seed)
    if args.mode == "support":
        d = args.d if args.d is not None else min(2, (1 << k) * ((1 << n) - 1))
        extras = rng.choice((1 << k) * (1 << n), size=d, replace=False)
        rows = np.zeros(((1 << k), (1 << n)))
        for x in range(1 << k):
            rows[x, rng.integers(0, 1 << n)] = 1.0
        for e in extras:
            rows[e // (1 << n), e % (1 << n)] += 1.0
        rows *= rng.uniform(0.5, 1.5, size=rows.shape)
        rows /= rows.sum(axis=1, keepdims=True)
        return ConditionalTable(k, n, rows)
    if args.mode == "common":
        size = args.support_size
        support = sorted(rng.choice(1 << n, size=size, replace=False).tolist())
        rows = np.zeros(((1 << k), (1 << n)))
        rows[:, support] = rng.dirichlet(np.ones(size), size=1 << k)
        return ConditionalTable(k, n, rows)
    # partition
    l = args.l if args.l is not None else max(n - 1, 0)
    masses = rng.dirichlet(np.ones(1 << l), size=1 << k)
    rows = np.zeros(((1 << k), (1 << n)))
    for z in range(1 << l):
        block = [y for y in range(1 << n) if (y & ((1 << l) - 1)) == z]
        rows[:, block] = (masses[:, z] / len(block))[:, None]
    return ConditionalTable(k, n, rows)


def _cmd_compile(args) -> int:
    target = _random_target(args)
    if args.mode == "universal":
        params, report = compile_universal(target, args.r, args.eps)
    elif args.mode == "support":
        params, report = compile_support_points(target, args.d, args.eps)
    elif args.mode == "common":
        params, report = compile_common_support(target, args.r, args.eps)
    else:
        l = args.l if args.l is not None else max(args.n - 1, 0)
        params, report = compile_partition(target, l, args.r, args.eps)
    payload = {
        "schema": "crbmkit-compile/1",
        "seed": args.seed,
        "mode": args.mode,
        "target": json.loads(target.to_json()),
        "params": _params_obj(params),
        "report": report.to_json_obj(),
    }
    _emit(payload, args.out)
    return 0


def _cmd_dim(args) -> int:
    rep = certify_dimension(args.k, args.n, args.m, trials=args.trials,
                            seed=args.seed)
    payload = {"schema": "crbmkit-dim/1"} | rep.to_json_obj()
    _emit(payload, args.out)
    return 0


def _cmd_divergence(args) -> int:
    target = random_conditional(args.k, args.n, args.seed)
    params, div = divergence_witness(target, args.m)
    payload = {
        "schema": "crbmkit-divergence/1",
        "seed": args.seed,
        "k": args.k, "n": args.n, "m_budget": args.m,
        "divergence": div,
        "divergence_upper": bounds_mod.divergence_upper(args.k, args.n, args.m),
        "params": _params_obj(params),
    }
    _emit(payload, args.out)
    return 0


def _load_json_arg(text: str):
    if os.path.exists(text):
        with open(text) as fh:
            return json.load(fh)
    return json.loads(text)


def _cmd_mrf(args) -> int:
    spec = _load_json_arg(args.complex)
    n = spec["n"]
    generators = [sum(1 << (i - 1) for i in face) for face in spec["faces"]]
    complex_ = SimplicialComplex.from_generators(n, generators)
    theta_entries = _load_json_arg(args.theta)
    theta = {sum(1 << (i - 1) for i in face): float(v)
             for face, v in theta_entries}
    model = MrfModel(complex_, theta)
    if args.k:
        params = compile_conditional_mrf(model, args.k)
        from .distributions import conditional_of_joint
        want = conditional_of_joint(mrf_distribution(model), args.k)
        tv = tv_row_distance(want, eval_conditional(params))
    else:
        params, correction = compile_mrf_to_rbm(model)
        from .crbm import eval_joint_rbm
        from .distributions import hadamard
        lhs = hadamard(mrf_distribution(model), correction)
        tv = float(np.abs(lhs.probs - eval_joint_rbm(params).probs).sum())
    payload = {
        "schema": "crbmkit-mrf/1",
        "n": n, "k": args.k,
        "hidden_units": params.m,
        "params": _params_obj(params),
        "verification_tv": tv,
    }
    _emit(payload, args.out)
    return 0


def _cmd_ltn(args) -> int:
    if args.mode == "parity":
        net = parity_net(args.k)
    else:
        rng = np.random.default_rng(args.seed)
        net = ThresholdNet(args.k, args.m, args.n,
                           rng.standard_normal((args.m, args.k)),
                           rng.standard_normal(args.m) + 0.1,
                           rng.standard_normal((args.m, args.n)),
                           rng.standard_normal(args.n) + 0.05)
    params, t_used = embed_ltn_in_crbm(net, args.eps)
    tv = tv_row_distance(eval_conditional(params), ltn_table(net))
    payload = {
        "schema": "crbmkit-ltn/1",
        "mode": args.mode,
        "k": net.k, "m": net.m, "n": net.n,
        "scale": t_used,
        "params": _params_obj(params),
        "verification_tv": tv,
    }
    _emit(payload, args.out)
    return 0


def _cmd_verify_all(args) -> int:
    results = verify_all(seed_offset=args.seed)
    # no timings in the payload: identical seeds must give identical bytes
    payload = {
        "schema": "crbmkit-verify/1",
        "seed": args.seed,
        "all_passed": all(r.passed for r in results),
        "criteria": [{
            "name": r.name, "claim": r.claim, "passed": r.passed,
            "detail": r.detail,
        } for r in results],
    }
    _emit(payload, args.out)
    return 0 if payload["all_passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crbmkit",
        description="Constructive CRBM compilation and certification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="closed-form bound report")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_bounds)

    p = sub.add_parser("table1", help="counting-sequence table as CSV")
    p.add_argument("--rmax", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_table1)

    p = sub.add_parser("pack", help="build and validate a star packing")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_pack)

    p = sub.add_parser("compile", help="compile a random target table")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=["universal", "support", "common",
                                      "partition"], default="universal")
    p.add_argument("--d", type=int, default=None,
                   help="support budget (support mode)")
    p.add_argument("--support-size", type=int, default=2,
                   help="|T| for common mode")
    p.add_argument("--l", type=int, default=None,
                   help="block width (partition mode)")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_compile)

    p = sub.add_parser("dim", help="dimension certification report")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_dim)

    p = sub.add_parser("divergence", help="divergence witness for a budget")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_divergence)

    p = sub.add_parser("mrf", help="compile a random field into (C)RBM weights")
    p.add_argument("--complex", required=True,
                   help='JSON {"n": 3, "faces": [[1,2],[2,3]]} or a file path')
    p.add_argument("--theta", required=True,
                   help='JSON [[[1,2], 0.5], ...] or a file path')
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_mrf)

    p = sub.add_parser("ltn", help="embed a threshold network")
    p.add_argument("--mode", choices=["parity", "embed"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_ltn)

    p = sub.add_parser("verify-all", help="run the acceptance suite")
    p.add_argument("--seed", type=int, default=0,
                   help="offset for the randomized criteria's draws")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_verify_all)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CrbmKitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
