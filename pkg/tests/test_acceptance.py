"""Acceptance criteria, one test each.

Every test prints a single ``criterion N PASS|FAIL`` line (outside pytest's
capture) before asserting, so ``pytest -v`` output doubles as the report.
"""

import json
import math
import random
import time
from collections import defaultdict
from fractions import Fraction

from aleatoric.cli import main
from aleatoric.equivalence import decide_equiv, polynomial
from aleatoric.kbridge import eval_k, lambda_formula, lambda_model
from aleatoric.model import ProbModel
from aleatoric.proof import (
    AC_AXIOMS, MAC_AXIOMS, atom_sequence, check, commutativity_trace, duality_trace,
    normal_form_trace, prove_equiv,
)
from aleatoric.semantics import estimate, evaluate, evaluate_all
from aleatoric.syntax import Repeat, desugar, parse

from helpers import (
    brute, ite_formulas, random_formula, random_instance, random_k_formula, random_kripke,
    random_model, valuation_model,
)


def report(capsys, n, title, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {n} {status}: {title} | {detail} | {elapsed:.2f}s (limit {limit}s)")
    assert ok, detail
    assert within, f"took {elapsed:.1f}s, limit {limit}s"


def cli_value(capsys, fixture, world, text):
    code = main(["eval", "-m", fixture, "-w", world, "-f", text, "--exact"])
    out = capsys.readouterr().out
    assert code == 0
    return Fraction(json.loads(out)["value"])


# ---------------------------------------------------------------------------


def test_criterion_1_dice_values(capsys, dice):
    t0 = time.perf_counter()
    got = {w: cli_value(capsys, "dice.json", w, "p1^{1/2}") for w in ("w4", "w6")}
    lib = {w: evaluate(dice, w, parse("p1^{1/2}")) for w in ("w4", "w6")}
    want = {"w4": Fraction(7, 16), "w6": Fraction(11, 36)}
    ok = got == lib == want
    report(capsys, 1, "dice p1^{1/2} exact", ok,
           f"w4={got['w4']} w6={got['w6']}", time.perf_counter() - t0, 1)


def test_criterion_2_pig_case_study(capsys, pig, dice):
    t0 = time.perf_counter()
    formulas = {
        "bust": ("(gt2 ? F : odd)", Fraction(3, 20)),
        "four": ("(odd ? F : gt2)", Fraction(7, 20)),
        "think-4-1": ("[ (gt2?F:odd) | (odd?F:gt2) ]@a", Fraction(123, 520)),
        "thinkBust": ("[ (gt2?F:odd) | T ]@a", Fraction(6, 25)),
        "rollAgain": ("([ (gt2?F:odd) | T ]@a^{1/2} ? risk : T)", Fraction(493, 625)),
    }
    lines, ok = [], True
    for name, (text, want) in formulas.items():
        got = cli_value(capsys, "pig.json", "biased", text)
        oracle = brute(pig, "biased", desugar(parse(text)))
        ok &= got == want == oracle
        lines.append(f"{name}={got}")
    ok &= round(float(formulas["think-4-1"][1]), 3) == 0.237
    # derived replacement for the printed conditional value
    dice_cond = cli_value(capsys, "dice.json", "w4", "[p1 | p1]@a")
    ok &= dice_cond == brute(dice, "w4", desugar(parse("[p1 | p1]@a"))) == Fraction(13, 60)
    lines.append(f"dice [p1|p1]={dice_cond}")
    report(capsys, 2, "pig case study exact", ok, " ".join(lines), time.perf_counter() - t0, 1)


def test_criterion_3_axiom_soundness(capsys):
    t0 = time.perf_counter()
    failures, cases = [], 0
    for name, ax in {**AC_AXIOMS, **MAC_AXIOMS}.items():
        rng = random.Random(f"soundness:{name}")
        for _ in range(500):
            lhs, rhs = random_instance(rng, ax)
            m = random_model(rng)
            cases += 1
            for w in m.worlds:
                if evaluate(m, w, lhs) != evaluate(m, w, rhs):
                    failures.append((name, str(lhs), str(rhs)))
                    break
    report(capsys, 3, "axiom soundness (7 AC + A0-A4)", not failures,
           f"{cases} instances, {len(failures)} failures", time.perf_counter() - t0, 60)


def _valuations(rng, n):
    out = []
    for _ in range(n):
        val = {}
        for x in ("x", "y"):
            d = rng.randint(2, 97)
            val[x] = Fraction(rng.randint(1, d - 1), d)
        out.append(val)
    return out


def test_criterion_4_completeness_at_desk_scale(capsys):
    t0 = time.perf_counter()
    forms = ite_formulas(3)
    problems = []

    # decision: the polynomial partition equals the partition by exact values
    # on 25 random valuations, so the two relations agree on every pair
    keys = [polynomial(f) for f in forms]
    vals = _valuations(random.Random(25), 25)
    worlds = [f"v{k}" for k in range(len(vals))]
    m = ProbModel(worlds, (), {}, dict(zip(worlds, vals)), ("x", "y"))
    vecs = []
    for f in forms:
        ev = evaluate_all(m, f)
        vecs.append(tuple(ev[w] for w in worlds))
    vec_of, key_of = {}, {}
    for f, k, v in zip(forms, keys, vecs):
        if vec_of.setdefault(k, v) != v:
            problems.append(f"same polynomial, different values: {f}")
        if key_of.setdefault(v, k) != k:
            problems.append(f"same values, different polynomial: {f}")
    classes = defaultdict(list)
    for f, k in zip(forms, keys):
        classes[k].append(f)
    equivalent_pairs = sum(len(c) ** 2 for c in classes.values())

    # decide_equiv itself on sampled pairs, with witnesses replayed
    rng = random.Random(4)
    multi = [c for c in classes.values() if len(c) > 1]
    for _ in range(2000):
        phi, psi = rng.sample(rng.choice(multi), 2)
        if not decide_equiv(phi, psi):
            problems.append(f"decide_equiv missed {phi} == {psi}")
    for _ in range(2000):
        phi, psi = rng.sample(forms, 2)
        r = decide_equiv(phi, psi)
        if bool(r) != (polynomial(phi) == polynomial(psi)):
            problems.append(f"decide_equiv wrong on {phi}, {psi}")
        elif not r and r.witness is not None:
            wm = valuation_model(r.witness)
            if evaluate(wm, "w", phi) == evaluate(wm, "w", psi):
                problems.append(f"witness does not separate {phi}, {psi}")

    # proofs: for an equivalent pure pair prove_equiv returns
    #   nf(phi) . bridge(S_phi -> S) . bridge(S_psi -> S)^-1 . nf(psi)^-1
    # with S the merged atom sequence.  Check every nf trace, that canonical
    # forms are unique per (class, sequence), and every bridge the pairs need.
    canon, seqs = {}, defaultdict(set)
    steps = 0
    for f, k in zip(forms, keys):
        tr = normal_form_trace(f)
        steps += len(tr)
        res = check(tr)
        if not res:
            problems.append(f"normal form trace of {f} fails at step {res.failed_step}")
        s = tuple(atom_sequence(tr.end))
        if canon.setdefault((k, s), tr.end) != tr.end:
            problems.append(f"two canonical forms for {f}")
        seqs[k].add(s)
    bridges = 0
    for k, group in seqs.items():
        group = sorted(group, key=str)
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                c1, c2 = canon[k, group[a]], canon[k, group[b]]
                target = atom_sequence(c1, c2)
                ends = []
                for c, s in ((c1, group[a]), (c2, group[b])):
                    if list(s) == target:
                        ends.append(c)
                        continue
                    tr = normal_form_trace(c, seq=target)
                    bridges += 1
                    if not check(tr):
                        problems.append(f"bridge from {c} fails")
                    ends.append(tr.end)
                if ends[0] != ends[1]:
                    problems.append(f"bridges disagree for class {k}")

    # prove_equiv end to end on sampled pairs
    for _ in range(500):
        phi, psi = rng.sample(rng.choice(multi), 2)
        tr = prove_equiv(phi, psi)
        if tr is None or not check(tr):
            problems.append(f"prove_equiv failed on {phi} == {psi}")
    for _ in range(500):
        phi, psi = rng.sample(forms, 2)
        if (prove_equiv(phi, psi) is not None) != (polynomial(phi) == polynomial(psi)):
            problems.append(f"prove_equiv verdict wrong on {phi}, {psi}")

    detail = (f"{len(forms)} formulas, {len(classes)} classes, {equivalent_pairs} equivalent "
              f"ordered pairs, {len(canon)} canonical forms, {bridges} bridges, "
              f"{steps} checked steps, {len(problems)} problems")
    if problems:
        detail += "; first: " + problems[0]
    report(capsys, 4, "AC completeness, <=3 ite over {x,y}", not problems, detail,
           time.perf_counter() - t0, 600)


def test_criterion_5_derivations_replay(capsys):
    results = []
    for name, make in (("commutativity", commutativity_trace), ("duality", duality_trace)):
        t0 = time.perf_counter()
        tr = make()
        ok = bool(check(tr))
        results.append((name, ok, len(tr), time.perf_counter() - t0))
    ok = all(r[1] for r in results) and all(r[3] < 1 for r in results)
    detail = ", ".join(f"{n}: {'ok' if k else 'bad'} in {s} steps" for n, k, s, _ in results)
    report(capsys, 5, "worked derivations check", ok, detail, max(r[3] for r in results), 1)


def test_criterion_6_binomial_identity(capsys):
    t0 = time.perf_counter()
    rng = random.Random(6)
    failures = 0
    for _ in range(100):
        m = random_model(rng)
        phi = random_formula(rng, 3)
        b = rng.randint(0, 6)
        a = rng.randint(0, b)
        for w in m.worlds:
            p = evaluate(m, w, phi)
            tail = sum((math.comb(b, k) * p**k * (1 - p) ** (b - k) for k in range(a, b + 1)),
                       Fraction(0))
            failures += evaluate(m, w, Repeat(phi, a, b)) != tail
    report(capsys, 6, "repeat equals binomial tail", failures == 0,
           f"100 cases, {failures} failures", time.perf_counter() - t0, 30)


def test_criterion_7_k_generalisation(capsys):
    t0 = time.perf_counter()
    rng = random.Random(7)
    failures, checks = 0, 0
    for n in range(500):
        k = random_kripke(rng, closed=n % 2 == 0)
        phis = [random_k_formula(rng, 4) for _ in range(3)]
        for choice in ("uniform", "random"):
            m = lambda_model(k, choice, seed=n)
            for phi in phis:
                truth = eval_k(k, phi)
                for w in k.worlds:
                    v = evaluate(m, w, lambda_formula(phi))
                    checks += 1
                    failures += v not in (0, 1) or (w in truth) != (v == 1)
    report(capsys, 7, "K satisfaction transfer", failures == 0,
           f"500 models, {checks} world checks, {failures} failures",
           time.perf_counter() - t0, 120)


def test_criterion_8_monte_carlo(capsys, dice, pig):
    t0 = time.perf_counter()
    cases = [
        (dice, "w4", "p1^{1/2}"),
        (dice, "w6", "p1^{1/2}"),
        (dice, "w4", "[p1 | p1]@a"),
        (pig, "biased", "(gt2 ? F : odd)"),
        (pig, "biased", "(odd ? F : gt2)"),
        (pig, "biased", "[ (gt2?F:odd) | (odd?F:gt2) ]@a"),
        (pig, "biased", "([ (gt2?F:odd) | T ]@a^{1/2} ? risk : T)"),
    ]
    n = 10**5
    summary, ok = [], True
    for m, w, text in cases:
        phi = parse(text)
        p = evaluate(m, w, phi)
        bound = 3 * math.sqrt(p * (1 - p) / n)
        hits = sum(abs(float(estimate(m, w, phi, n, seed=seed) - p)) <= bound
                   for seed in range(10))
        ok &= hits >= 9
        summary.append(f"{hits}/10")
    report(capsys, 8, "estimates within 3 sigma", ok, " ".join(summary),
           time.perf_counter() - t0, 120)


def test_criterion_9_no_scaling_claims(capsys):
    t0 = time.perf_counter()
    floor = [f"test_criterion_{k}" for k in range(3, 9)]
    present = [name for name in floor if any(g.startswith(name) for g in globals())]
    report(capsys, 9, "no full-scale experiments to reproduce", present == floor,
           "acceptance floor is criteria 3-8", time.perf_counter() - t0, 1)
