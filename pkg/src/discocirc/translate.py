"""Translation from CCG derivations to typed linear lambda-terms.

Slash categories map to function types (both ``a\\b`` and ``a/b`` become
``b -> a``); head sets are snapshotted from the co-index store after the whole
derivation has been unified, so the resulting types carry concrete referents.
Administrative redexes introduced by composition and type raising are
normalized away before the term is returned.
"""

from __future__ import annotations

from .ccg import AtomCat, Backward, CcgCategory, CoindexStore, DerivationNode, Forward, Leaf, Unary
from .terms import (
    Abstraction,
    Application,
    Atom,
    Constant,
    FreshNames,
    FunctionType,
    Kind,
    LambdaTerm,
    LambdaType,
    beta_normalize,
)


def ccg_type_to_lambda(cat: CcgCategory, store: CoindexStore) -> LambdaType:
    if isinstance(cat, AtomCat):
        return Atom(cat.kind, store.heads(cat.coindex))
    return FunctionType(
        ccg_type_to_lambda(cat.argument, store),
        ccg_type_to_lambda(cat.result, store),
    )


def _raw_term(node: DerivationNode, store: CoindexStore, fresh: FreshNames) -> LambdaTerm:
    if isinstance(node, Leaf):
        return Constant(node.token, ccg_type_to_lambda(node.category, store))
    if isinstance(node, Unary):
        a = _raw_term(node.child, store, fresh)
        # \f. f(a) with f typed from the raised category's argument
        f_type = ccg_type_to_lambda(node.category.argument, store)
        f = fresh.var(f_type, "f")
        return Abstraction((f,), Application(f, a))
    rule = node.rule.code
    left = _raw_term(node.left, store, fresh)
    right = _raw_term(node.right, store, fresh)
    if rule == "fa":
        return Application(left, right)
    if rule == "ba":
        return Application(right, left)
    if rule in ("fc", "fx"):
        f, g, g_cat = left, right, node.right.category
    elif rule in ("bc", "bx"):
        f, g, g_cat = right, left, node.left.category
    elif rule == "gfc":
        return _generalized(left, right, node.right.category, node.rule.arity, store, fresh)
    elif rule == "gbc":
        return _generalized(right, left, node.left.category, node.rule.arity, store, fresh)
    else:
        raise ValueError(f"rule without a semantics: {node.rule}")
    x = fresh.var(ccg_type_to_lambda(g_cat.argument, store), "x")
    return Abstraction((x,), Application(f, Application(g, x)))


def _generalized(f, g, g_cat, arity: int, store: CoindexStore, fresh: FreshNames) -> LambdaTerm:
    # f : B0 -> A, g : Bn -> ... -> B0   =>   \xn...\x1. f(g(xn)...(x1))
    arg_cats = []
    spine = g_cat
    for _ in range(arity):
        arg_cats.append(spine.argument)
        spine = spine.result
    xs = [fresh.var(ccg_type_to_lambda(c, store), "x") for c in arg_cats]
    body = g
    for x in xs:
        body = Application(body, x)
    body = Application(f, body)
    for x in reversed(xs):
        body = Abstraction((x,), body)
    return body


def derivation_to_lambda(
    node: DerivationNode, store: CoindexStore, fresh: FreshNames
) -> LambdaTerm:
    """The (normalized) lambda-term of a validated derivation."""
    return beta_normalize(_raw_term(node, store, fresh))
