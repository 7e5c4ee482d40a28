"""``amc``: command-line front end.

Exit codes: 0 success or true verdict, 1 false verdict or refutation,
2 usage or data error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from . import equivalence, kbridge, model, proof, semantics
from .syntax import FormulaSyntaxError, parse, to_text

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("AMC_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"AMC_SEED must be an integer, got {raw!r}") from None


def _read_text(arg: str) -> str:
    if arg.startswith("@"):
        try:
            return Path(arg[1:]).read_text(encoding="utf-8").strip()
        except OSError as e:
            raise UsageError(f"cannot read {arg[1:]}: {e.strerror}") from None
    return arg


def _formula(arg: str):
    return parse(_read_text(arg))


def _resolve(path: str) -> Path:
    # bundled fixtures may be named without a directory
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("aleatoric.fixtures").joinpath(p.name)
    if p.parent == Path(".") and bundled.is_file():
        return Path(str(bundled))
    raise UsageError(f"no such file: {path}")


def _load_model(path: str):
    return model.load_path(_resolve(path))


def _load_kripke(path: str):
    return model.load_kripke_path(_resolve(path))


def _pretty(obj, indent="") -> str:
    lines = []
    width = max((len(str(k)) for k in obj), default=0)
    for k, v in obj.items():
        if isinstance(v, dict):
            lines.append(f"{indent}{k}:")
            lines.append(_pretty(v, indent + "  "))
        elif isinstance(v, list) and any(isinstance(e, dict) for e in v):
            lines.append(f"{indent}{k}:")
            lines += [f"{indent}  " + "  ".join(map(str, e.values())) for e in v]
        elif isinstance(v, list):
            lines.append(f"{indent}{str(k).ljust(width)}  " + (", ".join(map(str, v)) or "-"))
        else:
            lines.append(f"{indent}{str(k).ljust(width)}  {v}")
    return "\n".join(lines)


def _emit(args, obj):
    if getattr(args, "pretty", False):
        print(_pretty(obj))
    else:
        print(json.dumps(obj, ensure_ascii=False))


def _value_doc(value, exact, digits):
    doc = {"value": str(value)}
    if not exact:
        doc["decimal"] = semantics.format_decimal(value, digits)
    return doc


# ---------------------------------------------------------------------------
# Subcommands


def cmd_eval(args):
    m = _load_model(args.model)
    value = semantics.evaluate(m, args.world, _formula(args.formula))
    _emit(args, _value_doc(value, args.exact, args.digits))
    return EXIT_OK


def cmd_estimate(args):
    m = _load_model(args.model)
    seed = _default_seed() if args.seed is None else args.seed
    est = semantics.estimate(m, args.world, _formula(args.formula), args.n, seed=seed,
                             workers=args.workers, max_rejections=args.max_rejections)
    doc = {"estimate": str(est), "decimal": semantics.format_decimal(est, args.digits),
           "n": args.n, "seed": seed}
    if args.compare:
        exact = semantics.evaluate(m, args.world, _formula(args.formula))
        doc["exact"] = str(exact)
        doc["error"] = semantics.format_decimal(abs(est - exact), args.digits)
    _emit(args, doc)
    return EXIT_OK


def cmd_equiv(args):
    phi, psi = _formula(args.formula), _formula(args.other)
    seed = _default_seed() if args.seed is None else args.seed
    result = equivalence.decide_equiv(phi, psi, seed=seed)
    _emit(args, result.certificate())
    return EXIT_OK if result.equivalent else EXIT_FALSE


def cmd_prove(args):
    phi, psi = _formula(args.formula), _formula(args.other)
    trace = proof.prove_equiv(phi, psi, budget=args.budget)
    if trace is None:
        _emit(args, {"found": False, "refuted": True})
        return EXIT_FALSE
    text = trace.to_jsonl()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        _emit(args, {"found": True, "steps": len(trace), "output": args.output})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check(args):
    try:
        text = Path(args.trace).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {args.trace}: {e.strerror}") from None
    trace = proof.ProofTrace.from_jsonl(text)
    result = proof.check(trace)
    doc = {"ok": result.ok, "steps": len(trace)}
    if not result.ok:
        doc["failed_step"] = result.failed_step
        doc["reason"] = result.reason
    _emit(args, doc)
    return EXIT_OK if result.ok else EXIT_FALSE


def cmd_normalize(args):
    phi = _formula(args.formula)
    doc = {"formula": to_text(phi)}
    try:
        tree = equivalence.to_tree_form(phi, budget=args.budget)
    except equivalence.TreeBudgetExceeded as e:
        doc["tree"] = None
        doc["note"] = str(e)
    else:
        top, bot = equivalence.paths(tree)
        doc["tree"] = str(tree)
        doc["top"] = [" ".join(map(str, p)) for p in sorted(top, key=equivalence.path_key)]
        doc["bot"] = [" ".join(map(str, p)) for p in sorted(bot, key=equivalence.path_key)]
    doc["polynomial"] = str(equivalence.polynomial(phi))
    _emit(args, doc)
    return EXIT_OK


def cmd_translate_k(args):
    if not args.kripke and not args.formula:
        raise UsageError("translate-k needs -k KRIPKE and/or -f K-FORMULA")
    seed = _default_seed() if args.seed is None else args.seed
    doc = {}
    phi = kbridge.parse_k(_read_text(args.formula)) if args.formula else None
    if phi is not None:
        doc["formula"] = to_text(kbridge.lambda_formula(phi))
    if args.kripke:
        k = _load_kripke(args.kripke)
        pm = kbridge.lambda_model(k, args.choice, seed)
        doc["model"] = json.loads(model.save(pm))
        if phi is not None and args.world:
            v = kbridge.generalisation_check(k, args.world, phi, args.choice, seed)
            doc["holds"] = v.holds
            doc["value"] = str(v.value)
            doc["agree"] = v.agree
    _emit(args, doc)
    return EXIT_OK


def cmd_validate(args):
    if bool(args.model) == bool(args.kripke):
        raise UsageError("validate needs exactly one of -m MODEL or -k KRIPKE")
    if args.model:
        violations = model.validate(_load_model(args.model))
    else:
        violations = model.validate_kripke(_load_kripke(args.kripke), enforce_12=args.enforce_12)
    doc = {"valid": not violations,
           "violations": [{"kind": v.kind, "where": v.where, "detail": v.detail} for v in violations]}
    _emit(args, doc)
    return EXIT_OK if not violations else EXIT_FALSE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="amc", description="Exact model checking and proofs "
                                  "for the (modal) aleatoric calculus.")
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--pretty", action="store_true", help="human-readable table")
        p.set_defaults(func=func)
        return p

    def formula_args(p, two=False):
        p.add_argument("-f", "--formula", required=True, help="formula text or @file")
        if two:
            p.add_argument("-g", "--other", required=True, help="second formula text or @file")

    p = add("eval", cmd_eval, "exact expectation at a world")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("-w", "--world", required=True)
    formula_args(p)
    p.add_argument("--exact", action="store_true", help="omit the decimal rendering")
    p.add_argument("--digits", type=int, default=6, help="significant digits (default 6)")

    p = add("estimate", cmd_estimate, "Monte-Carlo estimate by repeated sampling")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("-w", "--world", required=True)
    formula_args(p)
    p.add_argument("-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=None, help="default: $AMC_SEED or 0")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-rejections", type=int, default=semantics.DEFAULT_MAX_REJECTIONS)
    p.add_argument("--compare", action="store_true", help="also report the exact value")
    p.add_argument("--digits", type=int, default=6)

    p = add("equiv", cmd_equiv, "decide equivalence of two pure formulas")
    formula_args(p, two=True)
    p.add_argument("--seed", type=int, default=None)

    p = add("prove", cmd_prove, "emit an axiom-level proof trace")
    formula_args(p, two=True)
    p.add_argument("--budget", type=int, default=proof.DEFAULT_BUDGET)
    p.add_argument("-o", "--output", help="write the trace here instead of stdout")

    p = add("check", cmd_check, "verify a proof trace file")
    p.add_argument("trace")

    p = add("normalize", cmd_normalize, "tree form, paths and polynomial")
    formula_args(p)
    p.add_argument("--budget", type=int, default=equivalence.DEFAULT_TREE_BUDGET)

    p = add("translate-k", cmd_translate_k, "translate K formulas and Kripke models")
    p.add_argument("-k", "--kripke")
    p.add_argument("-f", "--formula", help="K formula text or @file")
    p.add_argument("-w", "--world", help="also compare both semantics at this world")
    p.add_argument("--choice", choices=("uniform", "random"), default="uniform")
    p.add_argument("--seed", type=int, default=None)

    p = add("validate", cmd_validate, "lint a probability or Kripke model")
    p.add_argument("-m", "--model")
    p.add_argument("-k", "--kripke")
    p.add_argument("--enforce-12", action="store_true",
                   help="also require euclidean and transitive relations")
    return top


def _error(msg) -> int:
    print(json.dumps({"error": msg}, ensure_ascii=False), file=sys.stderr)
    return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (proof.ProofBudgetExceeded, semantics.RejectionBudgetExceeded,
            equivalence.TreeBudgetExceeded) as e:
        print(json.dumps({"error": str(e), "budget_exhausted": True}), file=sys.stderr)
        return EXIT_BUDGET
    except FormulaSyntaxError as e:
        return _error(f"syntax error: {e}")
    except (UsageError, model.ModelError, semantics.EvaluationError, equivalence.NotPureAC,
            kbridge.KripkeError, proof.ProofError, ValueError) as e:
        return _error(str(e))


if __name__ == "__main__":
    sys.exit(main())
