"""CCG categories with co-indexing, the rule schemata, and the derivation format.

Derivations arrive in the ``discocirc-derivation/1`` file format documented in
``docs/derivation-format.md``; every internal node is recomputed with
``apply_rule`` on load, so a document cannot claim an unsound parse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .terms import Kind, OccurrenceId

DERIVATION_FORMAT = "discocirc-derivation/1"


class CcgError(Exception):
    pass


class RuleMismatch(CcgError):
    pass


class FormatError(CcgError):
    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{message}{f' [{where}]' if where else ''}")
        self.where = where


class ValidationError(CcgError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{message} [node {path}]")
        self.path = path


@dataclass(frozen=True)
class AtomCat:
    kind: Kind
    coindex: int


@dataclass(frozen=True)
class Forward:
    result: "CcgCategory"
    argument: "CcgCategory"


@dataclass(frozen=True)
class Backward:
    result: "CcgCategory"
    argument: "CcgCategory"


CcgCategory = Union[AtomCat, Forward, Backward]


class CoindexStore:
    """Union-find over co-index variables, each resolving to a set of heads."""

    def __init__(self):
        self._parent: dict[int, int] = {}
        self._heads: dict[int, tuple[OccurrenceId, ...]] = {}
        self._next = 0

    def fresh(self) -> int:
        i = self._next
        self._next += 1
        self._parent[i] = i
        self._heads[i] = ()
        return i

    def find(self, i: int) -> int:
        root = i
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[i] != root:
            self._parent[i], i = root, self._parent[i]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        merged = self._heads[ra] + tuple(h for h in self._heads[rb] if h not in self._heads[ra])
        self._parent[rb] = ra
        self._heads[ra] = merged
        self._heads[rb] = ()

    def add_head(self, i: int, occ: OccurrenceId) -> None:
        r = self.find(i)
        if occ not in self._heads[r]:
            self._heads[r] = self._heads[r] + (occ,)

    def heads(self, i: int) -> tuple[OccurrenceId, ...]:
        return tuple(sorted(self._heads[self.find(i)]))


def unify_coindex(store: CoindexStore, a: int, b: int) -> None:
    """Identifies two co-index variables, merging their head sets."""
    store.union(a, b)


def unify_categories(a: CcgCategory, b: CcgCategory, store: Optional[CoindexStore]) -> None:
    if isinstance(a, AtomCat) and isinstance(b, AtomCat):
        if a.kind is not b.kind:
            raise RuleMismatch(f"cannot unify {a.kind.value} with {b.kind.value}")
        if store is not None:
            store.union(a.coindex, b.coindex)
        return
    if type(a) is type(b) and isinstance(a, (Forward, Backward)):
        unify_categories(a.result, b.result, store)
        unify_categories(a.argument, b.argument, store)
        return
    raise RuleMismatch(f"shape mismatch: {show_category(a)} vs {show_category(b)}")


@dataclass(frozen=True)
class RuleName:
    """One of the combinatory rules; ``arity`` parametrizes generalized composition."""

    code: str  # fa ba fc bc fx bx tr> tr< gfc gbc
    arity: int = 1

    def __str__(self) -> str:
        if self.code in ("gfc", "gbc"):
            return f"{self.code}{self.arity}"
        return self.code


BINARY_RULES = ("fa", "ba", "fc", "bc", "fx", "bx", "gfc", "gbc")
UNARY_RULES = ("tr>", "tr<")


def parse_rule(text: str) -> RuleName:
    if text in ("fa", "ba", "fc", "bc", "fx", "bx", "tr>", "tr<"):
        return RuleName(text)
    for code in ("gfc", "gbc"):
        if text.startswith(code) and text[len(code):].isdigit():
            n = int(text[len(code):])
            if n < 1:
                raise FormatError(f"bad generalized-composition arity in {text!r}")
            return RuleName(code, n)
    raise FormatError(f"unknown rule {text!r}")


def _peel_forward(cat: CcgCategory, n: int) -> tuple[CcgCategory, list[CcgCategory]]:
    args = []
    for _ in range(n):
        if not isinstance(cat, Forward):
            raise RuleMismatch("generalized composition needs a forward spine")
        args.append(cat.argument)
        cat = cat.result
    return cat, args


def _peel_backward(cat: CcgCategory, n: int) -> tuple[CcgCategory, list[CcgCategory]]:
    args = []
    for _ in range(n):
        if not isinstance(cat, Backward):
            raise RuleMismatch("generalized composition needs a backward spine")
        args.append(cat.argument)
        cat = cat.result
    return cat, args


def apply_rule(
    rule: RuleName,
    children: Sequence[CcgCategory],
    store: Optional[CoindexStore] = None,
) -> CcgCategory:
    """Returns the conclusion category, unifying co-indices in ``store``.

    With ``store=None`` the rule is applied structurally (used by the chart
    parser, which re-derives the chosen parse with a real store afterwards).
    """

    def fresh() -> int:
        return store.fresh() if store is not None else -1

    code = rule.code
    if code in UNARY_RULES:
        (x,) = children
        v = fresh()
        s = AtomCat(Kind.S, v)
        if code == "tr>":
            return Forward(s, Backward(s, x))
        return Backward(s, Forward(s, x))

    left, right = children
    if code == "fa":
        if not isinstance(left, Forward):
            raise RuleMismatch("forward application needs X/Y on the left")
        unify_categories(left.argument, right, store)
        return left.result
    if code == "ba":
        if not isinstance(right, Backward):
            raise RuleMismatch("backward application needs X\\Y on the right")
        unify_categories(right.argument, left, store)
        return right.result
    if code == "fc":
        if not (isinstance(left, Forward) and isinstance(right, Forward)):
            raise RuleMismatch("forward composition needs X/Y and Y/Z")
        unify_categories(left.argument, right.result, store)
        return Forward(left.result, right.argument)
    if code == "bc":
        if not (isinstance(left, Backward) and isinstance(right, Backward)):
            raise RuleMismatch("backward composition needs Y\\Z and X\\Y")
        unify_categories(right.argument, left.result, store)
        return Backward(right.result, left.argument)
    if code == "fx":
        if not (isinstance(left, Forward) and isinstance(right, Backward)):
            raise RuleMismatch("forward crossed composition needs X/Y and Y\\Z")
        unify_categories(left.argument, right.result, store)
        return Backward(left.result, right.argument)
    if code == "bx":
        if not (isinstance(left, Forward) and isinstance(right, Backward)):
            raise RuleMismatch("backward crossed composition needs Y/Z and X\\Y")
        unify_categories(right.argument, left.result, store)
        return Forward(right.result, left.argument)
    if code == "gfc":
        if not isinstance(left, Forward):
            raise RuleMismatch("generalized forward composition needs X/Y on the left")
        spine, args = _peel_forward(right, rule.arity)
        unify_categories(left.argument, spine, store)
        out = left.result
        for a in reversed(args):
            out = Forward(out, a)
        return out
    if code == "gbc":
        if not isinstance(right, Backward):
            raise RuleMismatch("generalized backward composition needs X\\Y on the right")
        spine, args = _peel_backward(left, rule.arity)
        unify_categories(right.argument, spine, store)
        out = right.result
        for a in reversed(args):
            out = Backward(out, a)
        return out
    raise FormatError(f"unknown rule {code!r}")


# --- category strings ---------------------------------------------------

def parse_category(
    text: str,
    store: Optional[CoindexStore] = None,
    _names: Optional[dict[str, int]] = None,
) -> tuple[CcgCategory, frozenset[int]]:
    """Parses ``cat := s | n | cat/cat | cat\\cat | (cat)`` with left-assoc slashes.

    Atoms may carry a co-index label in braces, e.g. ``(n{x}\\n{x})/(s{w}\\n{x})``;
    atoms sharing a label share one co-index variable.  Returns the category and
    the set of variables that were introduced by an explicit label.
    """
    names: dict[str, int] = {} if _names is None else _names
    pos = 0

    def error(msg: str):
        raise FormatError(msg, where=f"column {pos} of {text!r}")

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def fresh() -> int:
        return store.fresh() if store is not None else -1

    def parse_atom_or_group() -> CcgCategory:
        nonlocal pos
        skip_ws()
        if pos >= len(text):
            error("unexpected end of category")
        ch = text[pos]
        if ch == "(":
            pos += 1
            inner = parse_cat()
            skip_ws()
            if pos >= len(text) or text[pos] != ")":
                error("missing ')'")
            pos += 1
            return inner
        if ch in ("s", "n"):
            pos += 1
            kind = Kind.S if ch == "s" else Kind.N
            if pos < len(text) and text[pos] == "{":
                end = text.find("}", pos)
                if end < 0:
                    error("missing '}'")
                label = text[pos + 1 : end]
                if not label:
                    error("empty co-index label")
                pos = end + 1
                if label not in names:
                    names[label] = fresh()
                return AtomCat(kind, names[label])
            return AtomCat(kind, fresh())
        error(f"expected atom or '(', got {ch!r}")

    def parse_cat() -> CcgCategory:
        nonlocal pos
        cat = parse_atom_or_group()
        while True:
            skip_ws()
            if pos < len(text) and text[pos] in "/\\":
                slash = text[pos]
                pos += 1
                arg = parse_atom_or_group()
                cat = Forward(cat, arg) if slash == "/" else Backward(cat, arg)
            else:
                return cat

    cat = parse_cat()
    skip_ws()
    if pos != len(text):
        error("trailing input after category")
    return cat, frozenset(names.values())


def show_category(cat: CcgCategory, store: Optional[CoindexStore] = None) -> str:
    def go(c: CcgCategory, parenthesize: bool) -> str:
        if isinstance(c, AtomCat):
            s = c.kind.value
            if store is not None:
                heads = store.heads(c.coindex)
                if heads:
                    s += "{" + ",".join(h.surface for h in heads) + "}"
            return s
        slash = "/" if isinstance(c, Forward) else "\\"
        inner = f"{go(c.result, True)}{slash}{go(c.argument, True)}"
        return f"({inner})" if parenthesize else inner

    return go(cat, False)


def category_atoms(cat: CcgCategory) -> tuple[AtomCat, ...]:
    if isinstance(cat, AtomCat):
        return (cat,)
    return category_atoms(cat.result) + category_atoms(cat.argument)


# --- derivations ---------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    token: OccurrenceId
    category: CcgCategory


@dataclass(frozen=True)
class Unary:
    rule: RuleName
    child: "DerivationNode"
    category: CcgCategory


@dataclass(frozen=True)
class Binary:
    rule: RuleName
    left: "DerivationNode"
    right: "DerivationNode"
    category: CcgCategory


DerivationNode = Union[Leaf, Unary, Binary]


def node_category(node: DerivationNode) -> CcgCategory:
    return node.category


def seed_heads(cat: CcgCategory, named: frozenset[int], token: OccurrenceId, store: CoindexStore):
    """Seeds lexical heads: a bare unnamed n atom gets its token as head, and
    unnamed s atoms along the result spine of a functor get the token (the verb
    projecting the clause).  Labelled atoms are left to unification."""
    if isinstance(cat, AtomCat):
        if cat.kind is Kind.N and cat.coindex not in named:
            store.add_head(cat.coindex, token)
        return
    spine = cat
    while isinstance(spine, (Forward, Backward)):
        spine = spine.result
    if spine.kind is Kind.S and spine.coindex not in named:
        store.add_head(spine.coindex, token)


def instantiate_lexical(
    template: str, token: OccurrenceId, store: CoindexStore
) -> CcgCategory:
    cat, named = parse_category(template, store)
    seed_heads(cat, named, token, store)
    return cat


def validate_derivation(node: DerivationNode, store: Optional[CoindexStore] = None) -> bool:
    """Recomputes every internal node with apply_rule and compares structurally."""
    if isinstance(node, Leaf):
        return True
    if isinstance(node, Unary):
        if not validate_derivation(node.child, store):
            return False
        redo = apply_rule(node.rule, [node.child.category], None)
        return _same_shape(redo, node.category)
    if not (validate_derivation(node.left, store) and validate_derivation(node.right, store)):
        return False
    redo = apply_rule(node.rule, [node.left.category, node.right.category], None)
    return _same_shape(redo, node.category)


def _same_shape(a: CcgCategory, b: CcgCategory) -> bool:
    if isinstance(a, AtomCat) and isinstance(b, AtomCat):
        return a.kind is b.kind
    if type(a) is type(b) and isinstance(a, (Forward, Backward)):
        return _same_shape(a.result, b.result) and _same_shape(a.argument, b.argument)
    return False


@dataclass
class SentenceParse:
    tokens: list[str]
    derivation: DerivationNode


@dataclass
class DerivationDocument:
    sentences: list[SentenceParse]
    coref: Optional[list] = None  # raw coref section; resolved by compose.load_coref
    store: CoindexStore = None  # type: ignore[assignment]


def _load_node(node, tokens: list[OccurrenceId], store: CoindexStore, path: str) -> DerivationNode:
    if not isinstance(node, dict):
        raise FormatError("derivation node must be an object", path)
    if "lexical" in node:
        lex = node["lexical"]
        try:
            idx = lex["token"]
            template = lex["cat"]
        except (TypeError, KeyError) as e:
            raise FormatError(f"lexical node needs 'token' and 'cat': {e}", path)
        if not isinstance(idx, int) or not 0 <= idx < len(tokens):
            raise FormatError(f"token index {idx} out of range", path)
        cat = instantiate_lexical(template, tokens[idx], store)
        return Leaf(tokens[idx], cat)
    if "rule" in node:
        rule = parse_rule(node["rule"])
        children = node.get("children")
        if not isinstance(children, list):
            raise FormatError("'children' must be a list", path)
        if rule.code in UNARY_RULES:
            if len(children) != 1:
                raise FormatError(f"rule {rule} takes one child", path)
            child = _load_node(children[0], tokens, store, path + "/0")
            try:
                cat = apply_rule(rule, [child.category], store)
            except RuleMismatch as e:
                raise ValidationError(str(e), path)
            return Unary(rule, child, cat)
        if len(children) != 2:
            raise FormatError(f"rule {rule} takes two children", path)
        left = _load_node(children[0], tokens, store, path + "/0")
        right = _load_node(children[1], tokens, store, path + "/1")
        try:
            cat = apply_rule(rule, [left.category, right.category], store)
        except RuleMismatch as e:
            raise ValidationError(str(e), path)
        return Binary(rule, left, right, cat)
    raise FormatError("node needs 'lexical' or 'rule'", path)


def parse_derivation_document(data) -> DerivationDocument:
    """Loads a ``discocirc-derivation/1`` document from bytes, str, or dict."""
    if isinstance(data, (bytes, str)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise FormatError(f"not valid JSON: {e}")
    if not isinstance(data, dict):
        raise FormatError("document must be a JSON object")
    if data.get("format") != DERIVATION_FORMAT:
        raise FormatError(f"expected format {DERIVATION_FORMAT!r}, got {data.get('format')!r}")
    sentences_json = data.get("sentences")
    if not isinstance(sentences_json, list):
        raise FormatError("'sentences' must be a list")
    store = CoindexStore()
    sentences = []
    for si, sent in enumerate(sentences_json):
        where = f"sentences/{si}"
        if not isinstance(sent, dict):
            raise FormatError("sentence must be an object", where)
        tokens_raw = sent.get("tokens")
        if not isinstance(tokens_raw, list) or not all(isinstance(t, str) for t in tokens_raw):
            raise FormatError("'tokens' must be a list of strings", where)
        occs = [OccurrenceId(si, ti, t) for ti, t in enumerate(tokens_raw)]
        node = _load_node(sent.get("derivation"), occs, store, where + "/derivation")
        sentences.append(SentenceParse(list(tokens_raw), node))
    coref = data.get("coref")
    if coref is not None and not isinstance(coref, list):
        raise FormatError("'coref' must be a list of chains")
    return DerivationDocument(sentences=sentences, coref=coref, store=store)


def show_derivation(node: DerivationNode, store=None, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(node, Leaf):
        return f"{pad}{node.token.surface} := {show_category(node.category, store)}"
    if isinstance(node, Unary):
        return (
            f"{pad}{node.rule} => {show_category(node.category, store)}\n"
            + show_derivation(node.child, store, indent + 1)
        )
    return (
        f"{pad}{node.rule} => {show_category(node.category, store)}\n"
        + show_derivation(node.left, store, indent + 1)
        + "\n"
        + show_derivation(node.right, store, indent + 1)
    )
