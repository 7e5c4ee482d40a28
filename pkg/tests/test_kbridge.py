import random
from fractions import Fraction

import pytest
from hypothesis import given

from aleatoric.kbridge import (
    KAnd, KBox, KNot, KripkeError, Prop, eval_k, generalisation_check, k_to_text,
    lambda_formula, lambda_model, parse_k,
)
from aleatoric.model import KripkeModel, validate
from aleatoric.semantics import evaluate
from aleatoric.syntax import FormulaSyntaxError, parse, to_text

from helpers import random_k_formula, random_kripke, seeds

q = Prop("q")


def single(valued=True):
    return KripkeModel(["w"], {"i": {("w", "w")}}, {"q": {"w"} if valued else set()})


def test_parse_k():
    assert parse_k("box@i q & ~r") == KAnd(KBox("i", q), KNot(Prop("r")))
    assert parse_k("box@i (q & r)") == KBox("i", KAnd(q, Prop("r")))
    assert parse_k("q & r & q") == KAnd(KAnd(q, Prop("r")), q)
    for text in ("box@i (q & r)", "~~q", "q & (r & q)", "box@a box@b ~q"):
        assert k_to_text(parse_k(text)) == text
    with pytest.raises(FormulaSyntaxError):
        parse_k("q | r")
    with pytest.raises(FormulaSyntaxError):
        parse_k("(q & r")


def test_eval_k_examples():
    k = single()
    assert eval_k(k, KBox("i", q)) == {"w"}
    assert eval_k(k, KNot(q)) == set()
    two = KripkeModel(["w", "u"], {"i": {("w", "u"), ("u", "u")}}, {"q": {"u"}})
    assert eval_k(two, KBox("i", q)) >= {"w"}
    with pytest.raises(KripkeError):
        eval_k(k, Prop("nope"))


def test_lambda_formula_examples():
    assert to_text(lambda_formula(q)) == "x_q"
    assert lambda_formula(KNot(q)) == parse("(x_q ? F : T)")
    assert lambda_formula(KBox("i", q)) == parse("[F | (x_q ? F : T)]@i")
    assert lambda_formula(KAnd(q, q)) == parse("(x_q ? x_q : F)")


def test_lambda_model_examples(kripke):
    m = lambda_model(single())
    assert m.row("i", "w") == {"w": 1}
    assert m.f["w"]["x_q"] == 1
    m = lambda_model(kripke)
    assert m.row("i", "w") == {"u": Fraction(1, 2), "v": Fraction(1, 2)}
    assert validate(m) == []
    empty = lambda_model(single(valued=False))
    assert empty.f["w"]["x_q"] == 0


def test_lambda_model_random_choice(kripke):
    m = lambda_model(kripke, "random", seed=4)
    row = m.row("i", "w")
    assert set(row) == {"u", "v"} and sum(row.values()) == 1
    assert lambda_model(kripke, "random", seed=4) == m
    with pytest.raises(ValueError):
        lambda_model(kripke, "greedy")


def test_lambda_model_needs_seriality():
    k = KripkeModel(["w", "u"], {"i": {("w", "u")}}, {})
    with pytest.raises(KripkeError):
        lambda_model(k)


def test_generalisation_examples():
    v = generalisation_check(single(), "w", KBox("i", q))
    assert v.holds and v.value == 1 and v
    v = generalisation_check(single(valued=False), "w", KBox("i", q))
    assert not v.holds and v.value == 0 and v
    with pytest.raises(KripkeError):
        generalisation_check(single(), "u", q)


def test_generalisation_on_fixture(kripke):
    for text in ("box@i q", "box@i r", "~box@i ~r", "box@i (q & ~r)"):
        phi = parse_k(text)
        for w in kripke.worlds:
            assert generalisation_check(kripke, w, phi)


@given(seeds)
def test_satisfaction_transfer(seed):
    rng = random.Random(seed)
    k = random_kripke(rng, closed=rng.random() < 0.5)
    phi = random_k_formula(rng, 4)
    truth = eval_k(k, phi)
    for choice in ("uniform", "random"):
        m = lambda_model(k, choice, seed)
        for w in k.worlds:
            value = evaluate(m, w, lambda_formula(phi))
            assert value in (0, 1)
            assert (w in truth) == (value == 1)


@given(seeds)
def test_lambda_is_injective(seed):
    rng = random.Random(seed)
    a, b = random_k_formula(rng, 4), random_k_formula(rng, 4)
    assert (to_text(lambda_formula(a)) == to_text(lambda_formula(b))) == (a == b)
    assert parse_k(k_to_text(a)) == a
