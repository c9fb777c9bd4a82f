"""Rewrites raw lambda-terms into circuit form.

The pipeline order is fixed: beta-expansion frees nominals from abstraction
scopes, dragging out lifts them above higher-order frames, noun-coordination
expansion promotes coordinators of noun phrases to frames, then n-type and
s-type expansion replace multi-referent wires by products of per-referent
noun wires.
"""

from __future__ import annotations

from dataclasses import replace
from enum import Enum

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
    ListTerm,
    ProductType,
    Provenance,
    TypeMismatch,
    Variable,
    apply_chain,
    chain_parts,
    free_nominals,
    function_type,
    is_noun_type,
    product_type,
    replace_subterm,
    show_term,
    show_type,
    substitute,
    type_atoms,
    type_of,
    types_equal,
    uncurry,
)


class ArityTooSmall(Exception):
    pass


class HeadUnresolved(Exception):
    pass


class MultipleSOutputs(Exception):
    pass


class OrderClass(Enum):
    STATE = "state"
    GATE = "gate"
    FRAME = "frame"


def _input_order(t: LambdaType) -> int:
    """0 for noun wires, 1 for anything that must sit inside a hole."""
    if isinstance(t, FunctionType):
        return 1
    if isinstance(t, Atom):
        return 0 if t.kind is Kind.N else 1  # s counts as inherently 1st-order
    return max(_input_order(f) for f in t.factors)


def classify_order(t: LambdaType) -> OrderClass:
    if not isinstance(t, FunctionType):
        return OrderClass.STATE if is_noun_type(t) else OrderClass.GATE
    inputs, _ = uncurry(t)
    if any(_input_order(i) >= 1 for i in inputs):
        return OrderClass.FRAME
    return OrderClass.GATE


def diagram_noun_inputs(inputs: list[LambdaType]) -> list[Atom]:
    """Noun atoms of the curried inputs in diagram order (last applied leftmost)."""
    out: list[Atom] = []
    for t in reversed(inputs):
        if isinstance(t, Atom) and t.kind is Kind.N:
            out.append(t)
        elif isinstance(t, ProductType) and is_noun_type(t):
            out.extend(type_atoms(t))
    return out


# --- beta-expansion -------------------------------------------------------

def beta_expand(term: LambdaTerm, fresh: FreshNames) -> LambdaTerm:
    """Extracts noun constants and free noun variables from abstraction scopes.

    ``\\x.M`` with nominal ``f`` inside becomes the beta-equivalent
    ``(\\y.\\x.M[y/f])(f)``, leaves to root.
    """
    if isinstance(term, (Variable, Constant)):
        return term
    if isinstance(term, Application):
        return Application(beta_expand(term.function, fresh), beta_expand(term.argument, fresh))
    if isinstance(term, ListTerm):
        return ListTerm(tuple(beta_expand(e, fresh) for e in term.elements))
    t: LambdaTerm = Abstraction(term.bound, beta_expand(term.body, fresh))
    noms = free_nominals(t)
    dummies = [fresh.var(type_of(n), "y") for n in noms]
    for nom, d in zip(noms, dummies):
        t = replace_subterm(t, nom, d)
    for d in dummies:
        t = Abstraction((d,), t)
    for nom in reversed(noms):
        t = Application(t, nom)
    return t


# --- combinators ----------------------------------------------------------

def _b_wrapper(f_type, g_type, x_type, fresh: FreshNames) -> LambdaTerm:
    # B = \f.\g.\x. f(g(x))
    f = fresh.var(f_type, "f")
    g = fresh.var(g_type, "g")
    x = fresh.var(x_type, "h")
    return Abstraction((f,), Abstraction((g,), Abstraction((x,), Application(f, Application(g, x)))))


def _c_wrapper(prefix_type, b_types, a_type, fresh: FreshNames) -> LambdaTerm:
    # Cn = \h.\b1...\bn.\a. h(a)(b1)...(bn)
    h = fresh.var(prefix_type, "f")
    bs = [fresh.var(bt, "g") for bt in b_types]
    a = fresh.var(a_type, "h")
    body = apply_chain(h, a, *bs)
    body = Abstraction((a,), body)
    for b in reversed(bs):
        body = Abstraction((b,), body)
    return Abstraction((h,), body)


def _retype_inputs(c: Constant, new_inputs, provenance: Provenance) -> Constant:
    _, output = uncurry(c.type)
    return Constant(c.occurrence, function_type(new_inputs, output), provenance)


def _permute_chain(term: Application, i: int, fresh: FreshNames, retain: bool):
    """Moves chain argument ``i`` to the outermost position with a generalized C.

    Returns None when the permutation is impossible in forgotten mode (the
    chain head is not a constant and so cannot be retyped).
    """
    head, args = chain_parts(term)
    if i == len(args) - 1:
        return term
    if retain:
        prefix = apply_chain(head, *args[:i])
        wrapper = _c_wrapper(
            type_of(prefix),
            [type_of(a) for a in args[i + 1 :]],
            type_of(args[i]),
            fresh,
        )
        return apply_chain(Application(wrapper, prefix), *args[i + 1 :], args[i])
    if not isinstance(head, Constant):
        return None
    inputs, _ = uncurry(head.type)
    new_inputs = inputs[:i] + inputs[i + 1 : len(args)] + [inputs[i]] + inputs[len(args) :]
    head2 = _retype_inputs(head, new_inputs, Provenance.C_FORGOTTEN)
    return apply_chain(head2, *args[:i], *args[i + 1 :], args[i])


def apply_cn(term: LambdaTerm, k: int, fresh: FreshNames | None = None, retain: bool = False) -> LambdaTerm:
    """Shifts the first input of the chain's head function ``k`` places down."""
    if k == 0:
        return term
    if not isinstance(term, Application):
        raise ArityTooSmall("not an application chain")
    head, args = chain_parts(term)
    inputs, _ = uncurry(type_of(head))
    if len(inputs) < k + 1 or len(args) < k + 1:
        raise ArityTooSmall(f"need {k + 1} arguments, chain has {len(args)}")
    fresh = fresh or FreshNames()
    rest = apply_chain(head, *args[: k + 1])
    moved = _permute_chain(rest, 0, fresh, retain)
    if moved is None:
        raise ArityTooSmall("chain head is not a retypable constant")
    return apply_chain(moved, *args[k + 1 :])


# --- dragging out ----------------------------------------------------------

def _b_conditions(function: LambdaTerm, argument: LambdaTerm) -> bool:
    if not isinstance(argument, Application):
        return False
    if classify_order(type_of(function)) is not OrderClass.FRAME:
        return False
    return is_noun_type(type_of(argument.argument))


def b_condition_sites(term: LambdaTerm) -> list[LambdaTerm]:
    """Every application subterm satisfying all four drag-out trigger conditions."""
    sites = []

    def walk(t):
        if isinstance(t, Application):
            if _b_conditions(t.function, t.argument):
                sites.append(t)
            walk(t.function)
            walk(t.argument)
        elif isinstance(t, Abstraction):
            walk(t.body)
        elif isinstance(t, ListTerm):
            for e in t.elements:
                walk(e)

    walk(term)
    return sites


def _drag_step(term: Application, fresh: FreshNames, retain: bool):
    head, args = chain_parts(term)
    for j in range(len(args)):
        F = apply_chain(head, *args[:j])
        if classify_order(type_of(F)) is not OrderClass.FRAME:
            continue
        A = args[j]
        if not isinstance(A, Application):
            continue
        _, a_args = chain_parts(A)
        for i in range(len(a_args) - 1, -1, -1):  # outermost argument first
            if not is_noun_type(type_of(a_args[i])):
                continue
            permuted = _permute_chain(A, i, fresh, retain)
            if permuted is None:
                continue
            G, X = permuted.function, permuted.argument
            if retain:
                wrapper = _b_wrapper(type_of(F), type_of(G), type_of(X), fresh)
                new_f = apply_chain(Application(wrapper, F), G, X)
            else:
                if not isinstance(head, Constant):
                    continue
                inputs, _ = uncurry(head.type)
                new_inputs = inputs[:j] + [type_of(G), type_of(X)] + inputs[j + 1 :]
                head2 = _retype_inputs(head, new_inputs, Provenance.B_FORGOTTEN)
                new_f = apply_chain(head2, *args[:j], G, X)
            return apply_chain(new_f, *args[j + 1 :])
    return None


def drag_out(term: LambdaTerm, fresh: FreshNames, retain: bool = False) -> LambdaTerm:
    """Lifts noun arguments out of frame interiors, bottom-up to a fixpoint.

    In the default mode the B and C combinators are forgotten: the frame and
    chain-head constants are retyped in place (provenance records the move).
    With ``retain=True`` explicit combinator terms are kept so the result stays
    beta-equivalent to the input.
    """
    if isinstance(term, (Variable, Constant)):
        return term
    if isinstance(term, ListTerm):
        return ListTerm(tuple(drag_out(e, fresh, retain) for e in term.elements))
    if isinstance(term, Abstraction):
        return Abstraction(term.bound, drag_out(term.body, fresh, retain))
    t = Application(drag_out(term.function, fresh, retain), drag_out(term.argument, fresh, retain))
    while True:
        stepped = _drag_step(t, fresh, retain)
        if stepped is None:
            return t
        t = stepped


# --- noun-coordination expansion -------------------------------------------

def noun_coordination_expand(term: LambdaTerm) -> LambdaTerm:
    """Promotes coordinators of multi-head noun phrases to frames.

    An application argument triggers when it is n-typed, not a leaf, carries
    several head co-indices, and its innermost function is still first-order:
    that function (the coordinator) is rebuilt as a frame wrapping the consumer.
    """
    if isinstance(term, (Variable, Constant)):
        return term
    if isinstance(term, Abstraction):
        return Abstraction(term.bound, noun_coordination_expand(term.body))
    if isinstance(term, ListTerm):
        return ListTerm(tuple(noun_coordination_expand(e) for e in term.elements))
    f = noun_coordination_expand(term.function)
    a = noun_coordination_expand(term.argument)
    ta = type_of(a)
    if (
        isinstance(a, Application)
        and isinstance(ta, Atom)
        and ta.kind is Kind.N
        and len(ta.heads) >= 2
    ):
        chead, cargs = chain_parts(a)
        if isinstance(chead, Constant) and classify_order(chead.type) is not OrderClass.FRAME:
            tf = type_of(f)
            frame_type = FunctionType(tf, function_type([type_of(b) for b in cargs], tf.result))
            coordinator = Constant(chead.occurrence, frame_type, chead.provenance)
            return noun_coordination_expand(apply_chain(coordinator, f, *cargs))
    return Application(f, a)


# --- n-type expansion --------------------------------------------------------

def _widen_constant(c: Constant) -> Constant:
    t = c.type
    if not isinstance(t, FunctionType):
        return c
    inputs, output = uncurry(t)
    if not (isinstance(output, Atom) and output.kind is Kind.N and len(output.heads) == 1):
        return c
    in_atoms = diagram_noun_inputs(inputs)
    if not in_atoms:
        return c
    remaining = list(in_atoms)
    for a in remaining:
        if a.heads == output.heads:
            remaining.remove(a)
            break
    else:
        return c  # the head wire is not among the inputs
    if not remaining:
        return c  # nothing hidden behind this output
    return Constant(c.occurrence, function_type(inputs, product_type(in_atoms)), c.provenance)


def _pad_consumer(f: LambdaTerm, a: LambdaTerm, fresh: FreshNames) -> LambdaTerm:
    """Parallel-composes ``f`` with identities so it can consume a widened wire."""
    tf = type_of(f)
    expected = tf.argument
    factors = type_atoms(type_of(a))
    try:
        h = next(i for i, fa in enumerate(factors) if fa.heads == expected.heads)
    except StopIteration:
        raise HeadUnresolved(
            f"no factor of {show_type(type_of(a))} matches head wire {show_type(expected)}"
        )
    vs = [fresh.var(fa, "p") for fa in factors]
    rest, _ = uncurry(tf.result)
    zs = [fresh.var(r, "z") for r in rest]
    core = apply_chain(f, vs[h], *zs)
    elements: list[LambdaTerm] = [v for v in vs]
    elements[h] = core
    body: LambdaTerm = ListTerm(tuple(elements))
    for z in reversed(zs):
        body = Abstraction((z,), body)
    return Application(Abstraction(tuple(vs), body), a)


def n_type_expand(term: LambdaTerm, fresh: FreshNames) -> LambdaTerm:
    """Widens single-head noun outputs that hide extra referents.

    Constants whose noun inputs carry heads missing from their noun output are
    rewritten to output one wire per referent; consumers of a widened argument
    are padded with identities (and implicit permutations) on the extra wires.
    """
    if isinstance(term, Constant):
        return _widen_constant(term)
    if isinstance(term, Variable):
        return term
    if isinstance(term, Abstraction):
        return Abstraction(term.bound, n_type_expand(term.body, fresh))
    if isinstance(term, ListTerm):
        return ListTerm(tuple(n_type_expand(e, fresh) for e in term.elements))
    old_arg_type = type_of(term.argument)
    f = n_type_expand(term.function, fresh)
    a = n_type_expand(term.argument, fresh)
    new_arg_type = type_of(a)
    if (
        isinstance(old_arg_type, Atom)
        and old_arg_type.kind is Kind.N
        and isinstance(new_arg_type, ProductType)
    ):
        return _pad_consumer(f, a, fresh)
    return Application(f, a)


# --- s-type expansion --------------------------------------------------------

def s_expand_type(t: LambdaType) -> LambdaType:
    """Replaces each single s output by the product of noun inputs missing
    from the outputs, recursing into higher-order inputs first."""
    if isinstance(t, Atom):
        return t
    if isinstance(t, ProductType):
        return product_type(s_expand_type(f) for f in t.factors)
    inputs, output = uncurry(t)
    inputs = [s_expand_type(i) for i in inputs]
    factors = [output] if isinstance(output, Atom) else list(output.factors)
    factors = [s_expand_type(f) if isinstance(f, FunctionType) else f for f in factors]
    s_positions = [i for i, f in enumerate(factors) if isinstance(f, Atom) and f.kind is Kind.S]
    if len(s_positions) > 1:
        raise MultipleSOutputs(show_type(t))
    if s_positions:
        noun_inputs = diagram_noun_inputs(inputs)
        available = [f.heads for f in factors if isinstance(f, Atom) and f.kind is Kind.N]
        missing = []
        for a in noun_inputs:
            if a.heads in available:
                available.remove(a.heads)
            else:
                missing.append(a)
        if missing:
            pos = s_positions[0]
            factors = factors[:pos] + missing + factors[pos + 1 :]
    return function_type(inputs, product_type(factors))


def _is_merge_frame(c: Constant) -> bool:
    if not isinstance(c.type, FunctionType) or not isinstance(c.type.argument, FunctionType):
        return False
    hole_inputs, _ = uncurry(c.type.argument)
    return any(
        isinstance(i, Atom) and i.kind is Kind.N and len(i.heads) >= 2 for i in hole_inputs
    )


def _expand_merge_frame(c: Constant, actual_hole: LambdaType) -> Constant:
    """Expands a coordinator frame against the actual type of its hole content.

    The locally unknowable part is the hole's output (the content may thread
    extra referent wires through the frame), so the expanded type adopts the
    content's type wholesale and splits the merged atom in its final output
    back into the frame's own input wires.
    """
    inputs, _ = uncurry(c.type)
    hole_inputs, _ = uncurry(inputs[0])
    merged = next(
        i for i in hole_inputs if isinstance(i, Atom) and i.kind is Kind.N and len(i.heads) >= 2
    )
    rest = [s_expand_type(r) for r in inputs[1:]]
    sources = [
        r
        for r in rest
        if isinstance(r, Atom) and r.kind is Kind.N and frozenset(r.heads) <= frozenset(merged.heads)
    ]
    _, hole_out = uncurry(actual_hole)
    factors = list(type_atoms(hole_out))
    try:
        pos = next(i for i, f in enumerate(factors) if f.heads == merged.heads)
    except StopIteration:
        raise TypeMismatch(
            f"coordinator frame {c.surface}: merged wire {show_type(merged)} missing from "
            f"hole output {show_type(hole_out)}"
        )
    factors = factors[:pos] + list(reversed(sources)) + factors[pos + 1 :]
    new_type = function_type([actual_hole] + rest, product_type(factors))
    return Constant(c.occurrence, new_type, c.provenance)


def s_type_expand(term: LambdaTerm) -> LambdaTerm:
    """Rewrites every leaf type into s-expanded form and recombines the tree.

    Coordinator frames are expanded against the actual type of their content
    rather than locally; any other disagreement raises TypeMismatch naming the
    offending subterm.
    """

    def rec(t: LambdaTerm) -> LambdaTerm:
        if isinstance(t, Constant):
            return Constant(t.occurrence, s_expand_type(t.type), t.provenance)
        if isinstance(t, Variable):
            return Variable(t.name, s_expand_type(t.type))
        if isinstance(t, Abstraction):
            bound = tuple(Variable(v.name, s_expand_type(v.type)) for v in t.bound)
            return Abstraction(bound, rec(t.body))
        if isinstance(t, ListTerm):
            return ListTerm(tuple(rec(e) for e in t.elements))
        a = rec(t.argument)
        if isinstance(t.function, Constant) and _is_merge_frame(t.function):
            f = _expand_merge_frame(t.function, type_of(a))
        else:
            f = rec(t.function)
        tf = type_of(f)
        if not isinstance(tf, FunctionType) or not types_equal(tf.argument, type_of(a)):
            raise TypeMismatch(
                "s-expansion locality failed at "
                f"{show_term(t)}: function expects "
                f"{show_type(tf.argument) if isinstance(tf, FunctionType) else show_type(tf)}, "
                f"argument is {show_type(type_of(a))}"
            )
        return Application(f, a)

    result = rec(term)
    type_of(result)
    return result
