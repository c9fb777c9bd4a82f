"""Typed linear lambda-terms: the intermediate representation of the whole pipeline.

Types are built from the atoms ``n`` (noun) and ``s`` (sentence) with function
and finite-product formers.  Atoms carry *head* annotations (token occurrences)
that identify which discourse referents a wire stands for; head sets are
ignored by type equality but preserved by every operation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Union


class Kind(Enum):
    N = "n"
    S = "s"


@dataclass(frozen=True, order=True)
class OccurrenceId:
    """A concrete token in the document; two uses of one word are distinct."""

    sentence: int
    token: int
    surface: str = field(compare=False)

    def __str__(self) -> str:
        return self.surface


@dataclass(frozen=True)
class Atom:
    kind: Kind
    heads: tuple[OccurrenceId, ...] = ()


@dataclass(frozen=True)
class FunctionType:
    argument: "LambdaType"
    result: "LambdaType"


@dataclass(frozen=True)
class ProductType:
    factors: tuple["LambdaType", ...]


LambdaType = Union[Atom, FunctionType, ProductType]


def n_type(*heads: OccurrenceId) -> Atom:
    return Atom(Kind.N, tuple(heads))


def s_type(*heads: OccurrenceId) -> Atom:
    return Atom(Kind.S, tuple(heads))


def product_type(factors) -> LambdaType:
    """Smart constructor: flattens nested products and collapses singletons."""
    flat: list[LambdaType] = []
    for f in factors:
        if isinstance(f, ProductType):
            flat.extend(f.factors)
        else:
            flat.append(f)
    if not flat:
        raise ValueError("empty product")
    if len(flat) == 1:
        return flat[0]
    return ProductType(tuple(flat))


def function_type(arguments, result: LambdaType) -> LambdaType:
    t = result
    for a in reversed(list(arguments)):
        t = FunctionType(a, t)
    return t


def strip_heads(t: LambdaType) -> LambdaType:
    if isinstance(t, Atom):
        return Atom(t.kind)
    if isinstance(t, FunctionType):
        return FunctionType(strip_heads(t.argument), strip_heads(t.result))
    return ProductType(tuple(strip_heads(f) for f in t.factors))


def types_equal(a: LambdaType, b: LambdaType) -> bool:
    """Structural equality modulo head annotations."""
    return strip_heads(a) == strip_heads(b)


def uncurry(t: LambdaType) -> tuple[list[LambdaType], LambdaType]:
    """Splits A1 -> ... -> Ak -> O into ([A1..Ak], O) with O non-functional."""
    inputs = []
    while isinstance(t, FunctionType):
        inputs.append(t.argument)
        t = t.result
    return inputs, t


def type_atoms(t: LambdaType) -> tuple[Atom, ...]:
    """Atom leaves of an atom or product type, in product order."""
    if isinstance(t, Atom):
        return (t,)
    if isinstance(t, ProductType):
        return tuple(itertools.chain.from_iterable(type_atoms(f) for f in t.factors))
    raise ValueError(f"function type has no atom spelling: {show_type(t)}")


def is_noun_type(t: LambdaType) -> bool:
    """True for an n atom or a product consisting of n atoms only."""
    if isinstance(t, FunctionType):
        return False
    return all(a.kind is Kind.N for a in type_atoms(t))


class TermError(Exception):
    pass


class TypeMismatch(TermError):
    def __init__(self, message: str, path: tuple[str, ...] = ()):
        super().__init__(f"{message} (at {'/'.join(path) or 'root'})")
        self.path = path


class VarNotFound(TermError):
    pass


class Provenance(Enum):
    LEXICAL = "lexical"
    B_FORGOTTEN = "b-forgotten"
    C_FORGOTTEN = "c-forgotten"
    INTRODUCED = "introduced"


@dataclass(frozen=True)
class Variable:
    name: str
    type: LambdaType


@dataclass(frozen=True)
class Constant:
    occurrence: OccurrenceId
    type: LambdaType
    provenance: Provenance = Provenance.LEXICAL

    @property
    def surface(self) -> str:
        return self.occurrence.surface


@dataclass(frozen=True)
class Application:
    function: "LambdaTerm"
    argument: "LambdaTerm"


@dataclass(frozen=True)
class Abstraction:
    bound: tuple[Variable, ...]
    body: "LambdaTerm"

    def __post_init__(self):
        if not self.bound:
            raise ValueError("abstraction needs at least one bound variable")


@dataclass(frozen=True)
class ListTerm:
    elements: tuple["LambdaTerm", ...]


LambdaTerm = Union[Variable, Constant, Application, Abstraction, ListTerm]


def binder_type(bound: tuple[Variable, ...]) -> LambdaType:
    if len(bound) == 1:
        return bound[0].type
    return product_type([v.type for v in bound])


def type_of(term: LambdaTerm, _path: tuple[str, ...] = ()) -> LambdaType:
    """The unique type of a term; raises TypeMismatch on ill-typed applications."""
    if isinstance(term, (Variable, Constant)):
        return term.type
    if isinstance(term, Application):
        tf = type_of(term.function, _path + ("fn",))
        ta = type_of(term.argument, _path + ("arg",))
        if not isinstance(tf, FunctionType):
            raise TypeMismatch(
                f"applied a non-function of type {show_type(tf)}", _path
            )
        if not types_equal(tf.argument, ta):
            raise TypeMismatch(
                f"expected argument {show_type(tf.argument)}, got {show_type(ta)}",
                _path,
            )
        return tf.result
    if isinstance(term, Abstraction):
        return FunctionType(binder_type(term.bound), type_of(term.body, _path + ("body",)))
    if isinstance(term, ListTerm):
        return product_type(type_of(e, _path + (str(i),)) for i, e in enumerate(term.elements))
    raise TypeError(f"not a term: {term!r}")


def subterms(term: LambdaTerm) -> Iterator[LambdaTerm]:
    """Pre-order traversal (function before argument, list elements in order)."""
    yield term
    if isinstance(term, Application):
        yield from subterms(term.function)
        yield from subterms(term.argument)
    elif isinstance(term, Abstraction):
        yield from subterms(term.body)
    elif isinstance(term, ListTerm):
        for e in term.elements:
            yield from subterms(e)


def free_variables(term: LambdaTerm) -> set[str]:
    if isinstance(term, Variable):
        return {term.name}
    if isinstance(term, Constant):
        return set()
    if isinstance(term, Application):
        return free_variables(term.function) | free_variables(term.argument)
    if isinstance(term, Abstraction):
        return free_variables(term.body) - {v.name for v in term.bound}
    return set.union(set(), *(free_variables(e) for e in term.elements))


def free_nominals(term: LambdaTerm) -> tuple[LambdaTerm, ...]:
    """Constants and free variables of atomic noun type, left to right."""

    out: list[LambdaTerm] = []

    def walk(t: LambdaTerm, bound: frozenset[str]):
        if isinstance(t, Constant):
            if isinstance(t.type, Atom) and t.type.kind is Kind.N:
                out.append(t)
        elif isinstance(t, Variable):
            if t.name not in bound and isinstance(t.type, Atom) and t.type.kind is Kind.N:
                out.append(t)
        elif isinstance(t, Application):
            walk(t.function, bound)
            walk(t.argument, bound)
        elif isinstance(t, Abstraction):
            walk(t.body, bound | {v.name for v in t.bound})
        elif isinstance(t, ListTerm):
            for e in t.elements:
                walk(e, bound)

    walk(term, frozenset())
    return tuple(out)


def _count_var(term: LambdaTerm, name: str) -> int:
    if isinstance(term, Variable):
        return 1 if term.name == name else 0
    if isinstance(term, Constant):
        return 0
    if isinstance(term, Application):
        return _count_var(term.function, name) + _count_var(term.argument, name)
    if isinstance(term, Abstraction):
        if any(v.name == name for v in term.bound):
            return 0
        return _count_var(term.body, name)
    return sum(_count_var(e, name) for e in term.elements)


def check_linear(term: LambdaTerm) -> bool:
    """True iff every bound variable occurs exactly once in its abstraction body."""
    if isinstance(term, (Variable, Constant)):
        return True
    if isinstance(term, Application):
        return check_linear(term.function) and check_linear(term.argument)
    if isinstance(term, Abstraction):
        return all(_count_var(term.body, v.name) == 1 for v in term.bound) and check_linear(
            term.body
        )
    return all(check_linear(e) for e in term.elements)


def substitute(term: LambdaTerm, var: Variable, replacement: LambdaTerm) -> LambdaTerm:
    """Replaces the (by linearity single) occurrence of ``var``."""
    if not types_equal(var.type, type_of(replacement)):
        raise TypeMismatch(
            f"substituting {show_type(type_of(replacement))} for variable of type "
            f"{show_type(var.type)}"
        )
    found, result = _subst(term, var.name, replacement)
    if not found:
        raise VarNotFound(var.name)
    return result


def _subst(term, name: str, replacement) -> tuple[bool, LambdaTerm]:
    if isinstance(term, Variable):
        if term.name == name:
            return True, replacement
        return False, term
    if isinstance(term, Constant):
        return False, term
    if isinstance(term, Application):
        hit, f = _subst(term.function, name, replacement)
        if hit:
            return True, Application(f, term.argument)
        hit, a = _subst(term.argument, name, replacement)
        return hit, Application(term.function, a)
    if isinstance(term, Abstraction):
        if any(v.name == name for v in term.bound):
            return False, term
        hit, b = _subst(term.body, name, replacement)
        return hit, Abstraction(term.bound, b)
    new = []
    hit_any = False
    for e in term.elements:
        if hit_any:
            new.append(e)
            continue
        hit_any, e2 = _subst(e, name, replacement)
        new.append(e2)
    return hit_any, ListTerm(tuple(new))


def replace_subterm(term: LambdaTerm, old: LambdaTerm, new: LambdaTerm) -> LambdaTerm:
    """Replaces the first occurrence of ``old`` (structural equality)."""
    hit, result = _replace(term, old, new)
    if not hit:
        raise VarNotFound(f"subterm not found: {show_term(old)}")
    return result


def _replace(term, old, new) -> tuple[bool, LambdaTerm]:
    if term == old:
        return True, new
    if isinstance(term, Application):
        hit, f = _replace(term.function, old, new)
        if hit:
            return True, Application(f, term.argument)
        hit, a = _replace(term.argument, old, new)
        return hit, Application(term.function, a)
    if isinstance(term, Abstraction):
        hit, b = _replace(term.body, old, new)
        return hit, Abstraction(term.bound, b)
    if isinstance(term, ListTerm):
        out = []
        hit_any = False
        for e in term.elements:
            if hit_any:
                out.append(e)
                continue
            hit_any, e2 = _replace(e, old, new)
            out.append(e2)
        return hit_any, ListTerm(tuple(out))
    return False, term


def beta_normalize(term: LambdaTerm) -> LambdaTerm:
    """Contracts redexes until none remain.

    Multi-variable abstractions applied to list terms of matching arity are
    contracted component-wise; applied to anything else they are stuck and
    kept as structure (the pipeline uses such stuck redexes as wiring nodes).
    """
    if isinstance(term, (Variable, Constant)):
        return term
    if isinstance(term, ListTerm):
        return ListTerm(tuple(beta_normalize(e) for e in term.elements))
    if isinstance(term, Abstraction):
        return Abstraction(term.bound, beta_normalize(term.body))
    f = beta_normalize(term.function)
    a = beta_normalize(term.argument)
    if isinstance(f, Abstraction):
        if len(f.bound) == 1:
            return beta_normalize(substitute(f.body, f.bound[0], a))
        if isinstance(a, ListTerm) and len(a.elements) == len(f.bound):
            body = f.body
            for v, e in zip(f.bound, a.elements):
                body = substitute(body, v, e)
            return beta_normalize(body)
    return Application(f, a)


def alpha_equivalent(a: LambdaTerm, b: LambdaTerm) -> bool:
    """Equality up to consistent renaming of bound variables.

    Constants compare by occurrence; all types compare modulo head sets.
    """
    return _alpha(a, b, {}, {})


def _alpha(a, b, fw: dict, bw: dict) -> bool:
    if isinstance(a, Variable) and isinstance(b, Variable):
        if a.name in fw or b.name in bw:
            return fw.get(a.name) == b.name and bw.get(b.name) == a.name
        return a.name == b.name and types_equal(a.type, b.type)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return a.occurrence == b.occurrence
    if isinstance(a, Application) and isinstance(b, Application):
        return _alpha(a.function, b.function, fw, bw) and _alpha(a.argument, b.argument, fw, bw)
    if isinstance(a, Abstraction) and isinstance(b, Abstraction):
        if len(a.bound) != len(b.bound):
            return False
        if not all(types_equal(x.type, y.type) for x, y in zip(a.bound, b.bound)):
            return False
        fw2, bw2 = dict(fw), dict(bw)
        for x, y in zip(a.bound, b.bound):
            fw2[x.name] = y.name
            bw2[y.name] = x.name
        return _alpha(a.body, b.body, fw2, bw2)
    if isinstance(a, ListTerm) and isinstance(b, ListTerm):
        return len(a.elements) == len(b.elements) and all(
            _alpha(x, y, fw, bw) for x, y in zip(a.elements, b.elements)
        )
    return False


def apply_chain(function: LambdaTerm, *arguments: LambdaTerm) -> LambdaTerm:
    t = function
    for a in arguments:
        t = Application(t, a)
    return t


def chain_parts(term: LambdaTerm) -> tuple[LambdaTerm, list[LambdaTerm]]:
    """Splits ``h(a1)...(am)`` into head ``h`` (non-application) and [a1..am]."""
    args: list[LambdaTerm] = []
    while isinstance(term, Application):
        args.append(term.argument)
        term = term.function
    args.reverse()
    return term, args


class FreshNames:
    """Document-scoped supply of variable names; never collides by counter."""

    def __init__(self):
        self._next = 0

    def name(self, hint: str = "x") -> str:
        n = f"{hint}{self._next}"
        self._next += 1
        return n

    def var(self, type: LambdaType, hint: str = "x") -> Variable:
        return Variable(self.name(hint), type)


def show_heads(atom: Atom) -> str:
    if not atom.heads:
        return ""
    labels = [o.surface for o in sorted(atom.heads)]
    return "{" + ",".join(labels) + "}"


def show_type(t: LambdaType) -> str:
    if isinstance(t, Atom):
        return t.kind.value + show_heads(t)
    if isinstance(t, FunctionType):
        left = show_type(t.argument)
        if isinstance(t.argument, (FunctionType, ProductType)):
            left = f"({left})"
        return f"{left} -> {show_type(t.result)}"
    parts = []
    for f in t.factors:
        s = show_type(f)
        if isinstance(f, FunctionType):
            s = f"({s})"
        parts.append(s)
    return " x ".join(parts)


def show_term(term: LambdaTerm) -> str:
    if isinstance(term, Variable):
        return term.name
    if isinstance(term, Constant):
        return term.surface
    if isinstance(term, Application):
        f = show_term(term.function)
        if isinstance(term.function, Abstraction):
            f = f"({f})"
        return f"{f}({show_term(term.argument)})"
    if isinstance(term, Abstraction):
        if len(term.bound) == 1:
            head = term.bound[0].name
        else:
            head = "(" + ",".join(v.name for v in term.bound) + ")"
        return f"\\{head}.{show_term(term.body)}"
    return "(" + ", ".join(show_term(e) for e in term.elements) + ")"
