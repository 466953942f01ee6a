"""Synthetic concept world: object/attribute/compositional registries and
the clause grammar with its deterministic text rendering.

Clauses are ordered tuples of registry entries. The grammar is the minimal
template grammar used by the benchmark generators:

  * an attribute binds to the object immediately after it,
  * a location term binds to the object immediately before it,
  * a relation or negation term sits between two object groups,
  * adjacent object groups with nothing between them render joined by "and".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

from .errors import ConfigInvalid, Ungrammatical, UnknownToken

# Fixed compositional vocabulary: (name, surface text, kind).
RELATION_TERMS = [
    ("left_of", "left of"),
    ("right_of", "right of"),
    ("above", "above"),
    ("below", "below"),
]
LOCATION_TERMS = [
    ("to_the_left", "to the left"),
    ("to_the_right", "to the right"),
    ("at_top", "at top"),
    ("at_bottom", "at bottom"),
]
NEGATION_TERMS = [
    ("but_not", "but not"),
    ("and_no", "and no"),
    ("without", "without"),
]

ANTONYM_PAIRS = [
    ("left_of", "right_of"),
    ("above", "below"),
    ("to_the_left", "to_the_right"),
    ("at_top", "at_bottom"),
]

CONJUNCTION = "and"


@dataclass(frozen=True)
class ConceptId:
    index: int
    name: str


@dataclass(frozen=True)
class AttributeId:
    index: int
    name: str


@dataclass(frozen=True)
class CompositionalId:
    index: int
    name: str
    kind: str  # "location" | "relation" | "negation"
    surface: str


ClauseElement = Union[ConceptId, AttributeId, CompositionalId]
Clause = tuple


@dataclass(frozen=True)
class Token:
    """One lexical unit of a rendered clause.

    kind is one of obj/attr/relation/location/negation/conj/eos; name is the
    registry name ("" for conj and eos).
    """

    kind: str
    name: str


EOS = Token("eos", "")
AND = Token("conj", CONJUNCTION)


@dataclass(frozen=True)
class WorldConfig:
    num_objects: int = 16
    num_attributes: int = 8
    dimension: int = 64
    seed: int = 0


class ConceptWorld:
    """Immutable registries plus render/tokenize over the clause grammar."""

    def __init__(self, cfg: WorldConfig):
        if cfg.num_objects < 2 or cfg.num_attributes < 2:
            raise ConfigInvalid("need at least 2 objects and 2 attributes")
        if cfg.num_objects > cfg.dimension:
            raise ConfigInvalid(
                f"M={cfg.num_objects} objects exceed dimension N={cfg.dimension}"
            )
        self.cfg = cfg
        self.objects = [ConceptId(i, f"obj{i:02d}") for i in range(cfg.num_objects)]
        self.attributes = [
            AttributeId(i, f"attr{i:02d}") for i in range(cfg.num_attributes)
        ]
        terms = (
            [(n, s, "relation") for n, s in RELATION_TERMS]
            + [(n, s, "location") for n, s in LOCATION_TERMS]
            + [(n, s, "negation") for n, s in NEGATION_TERMS]
        )
        self.compositional = [
            CompositionalId(i, name, kind, surface)
            for i, (name, surface, kind) in enumerate(terms)
        ]

        self._objects_by_name = {o.name: o for o in self.objects}
        self._attrs_by_name = {a.name: a for a in self.attributes}
        self._comp_by_name = {c.name: c for c in self.compositional}
        self.antonyms = {}
        for a, b in ANTONYM_PAIRS:
            self.antonyms[a] = b
            self.antonyms[b] = a
        # One functional-row class per term, except the negation words which
        # share a single class.
        self.synonym_class = {
            c.name: ("negation" if c.kind == "negation" else c.name)
            for c in self.compositional
        }

    # -- lookups ---------------------------------------------------------

    def object(self, ref) -> ConceptId:
        if isinstance(ref, ConceptId):
            return ref
        if isinstance(ref, int):
            return self.objects[ref]
        return self._objects_by_name[ref]

    def attribute(self, ref) -> AttributeId:
        if isinstance(ref, AttributeId):
            return ref
        if isinstance(ref, int):
            return self.attributes[ref]
        return self._attrs_by_name[ref]

    def term(self, name: str) -> CompositionalId:
        return self._comp_by_name[name]

    def antonym(self, term) -> CompositionalId:
        name = term.name if isinstance(term, CompositionalId) else term
        return self._comp_by_name[self.antonyms[name]]

    @property
    def fr_classes(self):
        return sorted(set(self.synonym_class.values()))

    # -- grammar ---------------------------------------------------------

    def _segment(self, clause: Clause):
        """Split a clause into object groups separated by rel/neg terms.

        Returns (groups, separators) where each group is a list of
        (attributes..., object) possibly followed by a location term, and
        separators[i] sits between groups[i] and groups[i+1] (None for a
        bare "and" join).
        """
        if not clause:
            raise Ungrammatical("empty clause")

        def has_object(group):
            return any(isinstance(g, ConceptId) for g in group)

        groups = [[]]
        seps = []
        pending_attr = False
        for el in clause:
            if isinstance(el, AttributeId):
                if has_object(groups[-1]):
                    groups.append([el])  # implicit "and" before a new group
                    seps.append(None)
                else:
                    groups[-1].append(el)
                pending_attr = True
            elif isinstance(el, ConceptId):
                if has_object(groups[-1]):
                    groups.append([el])
                    seps.append(None)
                else:
                    groups[-1].append(el)
                pending_attr = False
            elif isinstance(el, CompositionalId):
                if pending_attr:
                    raise Ungrammatical("attribute must precede an object")
                if not has_object(groups[-1]):
                    raise Ungrammatical(f"{el.name} lacks a preceding object")
                if el.kind == "location":
                    if isinstance(groups[-1][-1], CompositionalId):
                        raise Ungrammatical("two compositional terms in a row")
                    groups[-1].append(el)
                else:  # relation or negation: starts a new group
                    groups.append([])
                    seps.append(el)
            else:
                raise Ungrammatical(f"unknown clause element {el!r}")
        if pending_attr:
            raise Ungrammatical("trailing attribute")
        if not has_object(groups[-1]):
            raise Ungrammatical("clause ends without an object")
        return groups, seps

    def render(self, clause: Clause) -> str:
        """Deterministic template text for a grammatical clause."""
        groups, seps = self._segment(clause)
        parts = []
        for i, group in enumerate(groups):
            words = []
            for el in group:
                words.append(el.surface if isinstance(el, CompositionalId) else el.name)
            parts.append(" ".join(words))
            if i < len(seps):
                sep = seps[i]
                parts.append(CONJUNCTION if sep is None else sep.surface)
        return " ".join(parts)

    def tokenize(self, text: str) -> list:
        """One token per registry name or functional phrase, plus EOS.

        Multiword functional phrases collapse to a single token; greedy
        longest match disambiguates "and no" (negation) from bare "and".
        """
        words = text.split()
        phrases = sorted(
            ((c.surface.split(), c) for c in self.compositional),
            key=lambda p: -len(p[0]),
        )
        tokens = []
        i = 0
        while i < len(words):
            matched = None
            for phrase, term in phrases:
                if words[i : i + len(phrase)] == phrase:
                    matched = (len(phrase), Token(term.kind, term.name))
                    break
            if matched:
                i += matched[0]
                tokens.append(matched[1])
            elif words[i] == CONJUNCTION:
                tokens.append(AND)
                i += 1
            elif words[i] in self._objects_by_name:
                tokens.append(Token("obj", words[i]))
                i += 1
            elif words[i] in self._attrs_by_name:
                tokens.append(Token("attr", words[i]))
                i += 1
            else:
                raise UnknownToken(f"unknown word {words[i]!r}")
        tokens.append(EOS)
        return tokens

    def parse_tokens(self, tokens) -> Clause:
        """Inverse of render∘tokenize on the template grammar."""
        clause = []
        for tok in tokens:
            if tok.kind == "eos" or tok.kind == "conj":
                continue
            if tok.kind == "obj":
                clause.append(self._objects_by_name[tok.name])
            elif tok.kind == "attr":
                clause.append(self._attrs_by_name[tok.name])
            else:
                clause.append(self._comp_by_name[tok.name])
        self._segment(tuple(clause))  # validate
        return tuple(clause)

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": {
                    "num_objects": self.cfg.num_objects,
                    "num_attributes": self.cfg.num_attributes,
                    "dimension": self.cfg.dimension,
                    "seed": self.cfg.seed,
                },
                "objects": [o.name for o in self.objects],
                "attributes": [a.name for a in self.attributes],
                "compositional": [
                    {"name": c.name, "kind": c.kind, "surface": c.surface}
                    for c in self.compositional
                ],
                "antonyms": ANTONYM_PAIRS,
                "synonym_classes": self.synonym_class,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ConceptWorld":
        data = json.loads(text)
        cfg = WorldConfig(**data["config"])
        return cls(cfg)


def build_world(cfg: WorldConfig) -> ConceptWorld:
    return ConceptWorld(cfg)
