"""Exact model checking, canonical forms and equational proofs for the
aleatoric calculus and its modal extension."""

from .equivalence import decide_equiv, polynomial, to_tree_form
from .model import KripkeModel, ProbModel, load, load_kripke, save
from .proof import ProofTrace, check, prove_equiv
from .semantics import estimate, evaluate, expectation, sample
from .syntax import Formula, desugar, parse, substitute, to_text, variables

__all__ = [
    "Formula", "parse", "to_text", "desugar", "substitute", "variables",
    "ProbModel", "KripkeModel", "load", "save", "load_kripke",
    "evaluate", "expectation", "sample", "estimate",
    "polynomial", "to_tree_form", "decide_equiv",
    "ProofTrace", "check", "prove_equiv",
]
