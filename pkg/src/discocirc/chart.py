"""A small CKY chart parser over the combinatory rule schemata.

This exists so the repository runs end to end on desk-scale sentences without
an external statistical parser.  Chart items carry structure-only categories;
the winning derivation is re-derived with a live co-index store by the
document loader, which also revalidates every rule application.

Normal-form filtering (Eisner-style) keeps the enumeration free of spurious
composition/type-raising detours: the output of a forward composition never
feeds a forward rule as its functor (mirrored backward), and a type-raised
item may only act as a composition functor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .ccg import (
    AtomCat,
    Backward,
    CcgCategory,
    FormatError,
    Forward,
    RuleMismatch,
    RuleName,
    apply_rule,
    parse_category,
)
from .terms import Kind


class UnknownToken(Exception):
    def __init__(self, word: str):
        super().__init__(f"no lexicon entry for {word!r}")
        self.word = word


class NoParse(Exception):
    pass


@dataclass(frozen=True)
class Lexicon:
    """Word -> category-string templates (named co-indices allowed)."""

    entries: dict[str, tuple[str, ...]]

    def __post_init__(self):
        for word, templates in self.entries.items():
            for t in templates:
                parse_category(t)  # raises FormatError on a bad template

    @classmethod
    def from_json(cls, data) -> "Lexicon":
        if isinstance(data, (bytes, str)):
            data = json.loads(data)
        if not isinstance(data, dict):
            raise FormatError("lexicon must be a JSON object")
        entries = {}
        for word, cats in data.items():
            if word.startswith("_"):
                continue
            if not isinstance(cats, list) or not all(isinstance(c, str) for c in cats):
                raise FormatError(f"lexicon entry for {word!r} must be a list of strings")
            entries[word] = tuple(cats)
        return cls(entries)

    def lookup(self, word: str) -> tuple[str, ...]:
        if word not in self.entries:
            raise UnknownToken(word)
        return self.entries[word]


@dataclass(frozen=True)
class Item:
    category: CcgCategory  # structure-only (coindex = -1 everywhere)
    skeleton: dict = field(compare=False, hash=False)  # derivation-document node
    produced_by: str = "lex"  # lex | fa | ba | fc | bc | fx | bx | gfc | gbc | tr
    raised: bool = False


def _binary_rules(max_gen_comp: int, allow_crossed: bool) -> list[RuleName]:
    rules = [RuleName("fa"), RuleName("ba"), RuleName("fc"), RuleName("bc")]
    if allow_crossed:
        rules += [RuleName("fx"), RuleName("bx")]
    for n in range(2, max_gen_comp + 1):
        rules.append(RuleName("gfc", n))
        rules.append(RuleName("gbc", n))
    return rules


def _normal_form_ok(rule: RuleName, left: Item, right: Item) -> bool:
    if rule.code in ("fa", "fc", "gfc"):
        if left.produced_by in ("fc", "gfc"):
            return False
        if left.raised and rule.code == "fa":
            return False
    if rule.code in ("ba", "bc", "gbc"):
        if right.produced_by in ("bc", "gbc"):
            return False
        if right.raised and rule.code == "ba":
            return False
    return True


def cky_parse(
    tokens: list[str],
    lexicon: Lexicon,
    max_gen_comp: int = 4,
    allow_crossed: bool = False,
    allow_type_raise: bool = True,
) -> list[dict]:
    """All normal-form derivations whose root is ``s`` (or ``n`` as fallback).

    Returns derivation nodes in the document format, deterministically ordered:
    spans bottom-up, shorter left subspan first, rules in schema order.
    """
    if not tokens:
        raise NoParse("empty sentence")
    rules = _binary_rules(max_gen_comp, allow_crossed)
    n = len(tokens)
    chart: dict[tuple[int, int], list[Item]] = {}

    def add_raised(cell: list[Item], item: Item):
        # restricted type raising: n => s/(s\n) and n => s\(s/n), once per item
        if not allow_type_raise or item.raised:
            return
        if not (isinstance(item.category, AtomCat) and item.category.kind is Kind.N):
            return
        for code in ("tr>", "tr<"):
            cat = apply_rule(RuleName(code), [item.category], None)
            cell.append(
                Item(cat, {"rule": code, "children": [item.skeleton]}, "tr", True)
            )

    for i, word in enumerate(tokens):
        cell: list[Item] = []
        for template in lexicon.lookup(word):
            cat, _ = parse_category(template)
            cell.append(Item(cat, {"lexical": {"token": i, "cat": template}}))
        for item in list(cell):
            add_raised(cell, item)
        chart[(i, i + 1)] = cell

    for width in range(2, n + 1):
        for start in range(0, n - width + 1):
            end = start + width
            cell: list[Item] = []
            for split in range(start + 1, end):
                for left in chart[(start, split)]:
                    for right in chart[(split, end)]:
                        for rule in rules:
                            if not _normal_form_ok(rule, left, right):
                                continue
                            try:
                                cat = apply_rule(rule, [left.category, right.category], None)
                            except RuleMismatch:
                                continue
                            cell.append(
                                Item(
                                    cat,
                                    {"rule": str(rule), "children": [left.skeleton, right.skeleton]},
                                    rule.code,
                                )
                            )
            for item in list(cell):
                add_raised(cell, item)
            chart[(start, end)] = cell

    full = chart[(0, n)]

    def roots(kind: Kind) -> list[dict]:
        return [
            it.skeleton
            for it in full
            if isinstance(it.category, AtomCat) and it.category.kind is kind
        ]

    found = roots(Kind.S) or roots(Kind.N)
    if not found:
        raise NoParse(f"no derivation for {' '.join(tokens)!r}")
    return found


def select_derivation(derivations: list[dict]) -> dict:
    """The first derivation under the documented enumeration order."""
    if not derivations:
        raise NoParse("no derivations to select from")
    return derivations[0]
