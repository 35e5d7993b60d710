"""Command-line front end.

Exit status is 0 on success, 1 when a model fails to parse or validate, and
2 on usage errors.  Numbers are printed with six decimals; ``--sidecar``
writes the full-precision results as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import catalog
from .equations import build_system
from .improvement import audit_fairness, strategy_improve
from .model import Rcsg, validate
from .modelfile import ModelFormatError, dump, load, parse_rational
from .qualitative import almost_sure_report, zero_set
from .reductions import csg_quant_to_rcsg_qual, derandomize, sqrt_sum_instance
from .simulate import DEFAULT_MAX_STEPS, DEFAULT_SAMPLES, estimate_termination
from .solver import DEFAULT_MAX_ITER, DEFAULT_TOL, certify_bounds, value_iterate


class CliError(Exception):
    """Reported on stderr with exit status 1."""


def _read(spec: str) -> Rcsg:
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name not in catalog.BUILTIN:
            raise CliError(f"unknown builtin model {name!r}; choose from {', '.join(catalog.BUILTIN)}")
        return catalog.BUILTIN[name]()
    try:
        return load(spec)
    except OSError as exc:
        raise CliError(f"cannot read {spec}: {exc.strerror}") from None
    except ModelFormatError as exc:
        raise CliError(f"{spec}: {exc}") from None


def _load(spec: str, single_exit: bool = True) -> Rcsg:
    model = _read(spec)
    rep = validate(model, require_single_exit=single_exit)
    if not rep.ok:
        raise CliError(f"{spec} is not a valid model:\n{rep}")
    return model


def _sidecar(args, payload: dict) -> None:
    if getattr(args, "sidecar", None):
        Path(args.sidecar).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _strategy_json(strat) -> dict:
    return {u: s.as_dict() for u, s in strat.items()}


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return conv


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ModelFormatError:
        raise argparse.ArgumentTypeError(f"expected a rational p/q, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    model = _read(args.model)
    rep = validate(model, require_single_exit=args.single_exit)
    print(rep)
    _sidecar(args, {"ok": rep.ok, "violations": [vars(v) for v in rep.violations]})
    return 0 if rep.ok else 1


def cmd_solve(args) -> int:
    model = _load(args.model)
    res = value_iterate(build_system(model), args.tol, args.max_iter)
    for u, x in res.as_dict().items():
        print(f"{u} = {x:.6f}")
    print(f"iterations = {res.iterations}")
    print(f"residual = {res.residual:.6e}")
    print(f"converged = {str(res.converged).lower()}")
    _sidecar(args, {"values": res.as_dict(), "iterations": res.iterations,
                    "residual": res.residual, "converged": res.converged})
    return 0


def cmd_improve(args) -> int:
    model = _load(args.model)
    sigma, trace, res = strategy_improve(model, eps=args.eps, max_rounds=args.max_rounds,
                                         max_iter=args.max_iter)
    print("strategy:")
    for u, s in sigma.items():
        print(f"  {u}: {s}")
    print(f"rounds = {len(trace)}")
    print(f"exhausted = {str(trace.exhausted).lower()}")
    print(f"sandwich = {str(trace.sandwich).lower()}")
    problems = audit_fairness(trace)
    print(f"fair = {str(not problems).lower()}")
    print("values:")
    for u, x in res.as_dict().items():
        print(f"  {u} = {x:.6f}")
    if args.trace:
        Path(args.trace).write_text(trace.to_text())
    _sidecar(args, {"strategy": _strategy_json(sigma), "values": res.as_dict(), "rounds": len(trace),
                    "exhausted": trace.exhausted, "sandwich": trace.sandwich, "fairness": problems})
    return 0


def cmd_zeroset(args) -> int:
    model = _load(args.model)
    z = zero_set(model)
    members = [u for u in model.vertices if u in z]
    for u in members:
        print(u)
    _sidecar(args, {"zero_set": members, "iterations": z.iterations})
    return 0


def cmd_bounds(args) -> int:
    model = _load(args.model)
    sys_ = build_system(model)
    res = value_iterate(sys_, args.tol, args.max_iter)
    cert = certify_bounds(sys_, res.values, args.tol, args.max_iter)
    rep = almost_sure_report(model, args.tol)
    print(f"upper certified = {str(cert.upper_certified).lower()}")
    print(f"gap = {cert.gap:.6e}")
    print(rep.to_text(), end="")
    _sidecar(args, {
        "upper_certified": cert.upper_certified,
        "lower": sys_.as_dict(cert.lower),
        "upper": sys_.as_dict(cert.upper),
        "witness_sigma": _strategy_json(cert.witness_sigma),
        "witness_tau": _strategy_json(cert.witness_tau),
        "verdicts": {u: v.value for u, v in rep.verdicts().items()},
    })
    return 0


def cmd_simulate(args) -> int:
    model = _load(args.model)
    start = args.start or _default_start(model)
    sys_ = build_system(model)
    res = value_iterate(sys_, args.tol, args.max_iter)
    cert = certify_bounds(sys_, res.values, args.tol, args.max_iter)
    est = estimate_termination(model, cert.witness_sigma, cert.witness_tau, start,
                               args.samples, args.max_steps, args.seed)
    print(f"start = {start}")
    print(f"estimate = {est.estimate:.6f}")
    print(f"stderr = {est.stderr:.6f}")
    print(f"terminated = {est.terminated}/{est.samples}")
    print(f"censored = {est.step_censored}")
    print(f"dead = {est.dead}")
    print(f"solver value = {res[start]:.6f}")
    _sidecar(args, {"start": start, "samples": est.samples, "terminated": est.terminated,
                    "censored": est.step_censored, "dead": est.dead, "estimate": est.estimate,
                    "stderr": est.stderr, "seed": args.seed, "solver_value": res[start],
                    "witness_sigma": _strategy_json(cert.witness_sigma),
                    "witness_tau": _strategy_json(cert.witness_tau)})
    return 0


def _default_start(model: Rcsg) -> str:
    for comp in model.components:
        if comp.entries:
            return comp.entries[0]
    raise CliError("model has no entry node; pass --start")


def cmd_gadget(args) -> int:
    if any(a <= 1 for a in args.a) or not args.a:
        raise CliError("--a needs integers greater than 1")
    inst = sqrt_sum_instance(args.a, args.k)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump(inst.model, out / "instance.model")
    record = inst.record()
    (out / "instance.json").write_text(json.dumps(record, indent=2) + "\n")
    print(f"wrote {out / 'instance.model'} and {out / 'instance.json'}")
    print(f"D = {float(inst.D):.6f}")
    print(f"E = {float(inst.E):.6f}")
    print(f"threshold D+{inst.k}E = {float(inst.threshold):.6f}")
    print(f"query: {inst.query()}")
    _sidecar(args, record)
    return 0


def cmd_reduce(args) -> int:
    if args.kind == "derandomize":
        model = _load(args.model, single_exit=False)
        new = derandomize(model)
        dump(new, args.out)
        print(f"wrote {args.out} ({len(new.vertices)} vertices, was {len(model.vertices)})")
        _sidecar(args, {"vertices": len(new.vertices), "original_vertices": len(model.vertices)})
        return 0
    model = _load(args.model)
    if args.start is None:
        args.start = _default_start(model)
    if args.p is None:
        raise CliError("csg-to-rcsg needs --p")
    try:
        red = csg_quant_to_rcsg_qual(model, args.start, args.p)
    except (ValueError, KeyError) as exc:
        raise CliError(str(exc)) from None
    if red.value_zero:
        print(f"start {args.start} has value 0 < {red.p}; no model written")
    else:
        dump(red.model, args.out)
        print(f"wrote {args.out} with entry {red.start}")
    _sidecar(args, {"start": red.start, "p": f"{red.p.numerator}/{red.p.denominator}",
                    "value_zero": red.value_zero, "removed": sorted(red.removed), "notes": list(red.notes)})
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcsg", description="Termination games on 1-exit recursive concurrent stochastic games.")
    sub = p.add_subparsers(dest="command", required=True)

    def model_cmd(name, fn, helptext):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("model", help="model file, or builtin:NAME")
        sp.add_argument("--sidecar", help="write full-precision JSON results here")
        sp.set_defaults(func=fn)
        return sp

    def solver_flags(sp):
        sp.add_argument("--tol", type=_positive(float), default=DEFAULT_TOL)
        sp.add_argument("--max-iter", type=_positive(int), default=DEFAULT_MAX_ITER)

    sp = model_cmd("validate", cmd_validate, "check a model file")
    sp.add_argument("--single-exit", action="store_true", help="also require one exit per component")

    solver_flags(model_cmd("solve", cmd_solve, "value iteration"))

    sp = model_cmd("improve", cmd_improve, "strategy improvement for player 1")
    sp.add_argument("--eps", type=_positive(float), default=1e-6)
    sp.add_argument("--max-rounds", type=_positive(int), default=10_000)
    sp.add_argument("--max-iter", type=_positive(int), default=DEFAULT_MAX_ITER)
    sp.add_argument("--trace", help="write the improvement trace here")

    model_cmd("zeroset", cmd_zeroset, "vertices with value exactly 0")

    solver_flags(model_cmd("bounds", cmd_bounds, "strategy-derived bounds and value-1 verdicts"))

    sp = model_cmd("simulate", cmd_simulate, "Monte-Carlo estimate under the solver's witness strategies")
    solver_flags(sp)
    sp.add_argument("--start")
    sp.add_argument("--samples", type=_positive(int), default=DEFAULT_SAMPLES)
    sp.add_argument("--max-steps", type=_positive(int), default=DEFAULT_MAX_STEPS)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("gadget", help="square-root-sum instances")
    sp.add_argument("kind", choices=["sqrt-sum"])
    sp.add_argument("--a", type=_int_list, required=True, help="comma-separated integers > 1")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--sidecar")
    sp.set_defaults(func=cmd_gadget)

    sp = sub.add_parser("reduce", help="model transformations")
    sp.add_argument("kind", choices=["derandomize", "csg-to-rcsg"])
    sp.add_argument("model", help="model file, or builtin:NAME")
    sp.add_argument("--out", required=True)
    sp.add_argument("--start")
    sp.add_argument("--p", type=_rational)
    sp.add_argument("--sidecar")
    sp.set_defaults(func=cmd_reduce)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
