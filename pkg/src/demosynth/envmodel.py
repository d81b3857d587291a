"""Symbolic household world: vocabulary, immutable environment values and
data-driven action rules.

An environment is a value. Actions never mutate their input; internally the
interpreter and the partial evaluator work on a mutable ``World`` that is
thawed from an ``Environment`` once and frozen back at the end.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ActionPrecondition, ValidationError

LOC_R = "loc_r"
ANY = "any"

GUARD_KINDS = ("prop", "not-prop", "rel", "not-rel")
EFFECT_KINDS = ("add-prop", "del-prop", "add-rel", "del-rel", "clear-rel", "carry", "move-to")


def _check_name(name: str, what: str) -> None:
    if not isinstance(name, str) or not name or any(c.isspace() for c in name):
        raise ValidationError(f"invalid {what} name: {name!r}")


@dataclass(frozen=True)
class ActionRule:
    """Guarded update rule. Parameters are referenced by 0-based index.

    guard atoms: ("prop", p, i), ("not-prop", p, i), ("rel", r, i, j), ("not-rel", r, i, j)
    effects: ("add-prop", p, i), ("del-prop", p, i), ("add-rel", r, i, j),
             ("del-rel", r, i, j), ("clear-rel", r, i) drops every (r, o_i, *),
             ("carry", i) moves o_i to loc_r, ("move-to", i, j) moves o_i to o_j's location.
    """

    name: str
    arity: int
    param_types: tuple[str, ...]
    guard: tuple[tuple, ...] = ()
    effects: tuple[tuple, ...] = ()

    def __post_init__(self):
        _check_name(self.name, "action")
        if self.arity not in (1, 2):
            raise ValidationError(f"action {self.name}: arity must be 1 or 2")
        if len(self.param_types) != self.arity:
            raise ValidationError(f"action {self.name}: paramTypes length != arity")
        for atom in self.guard:
            if atom[0] not in GUARD_KINDS:
                raise ValidationError(f"action {self.name}: unknown guard kind {atom[0]!r}")
            self._check_params(atom[2:])
        for eff in self.effects:
            if eff[0] not in EFFECT_KINDS:
                raise ValidationError(f"action {self.name}: unknown effect kind {eff[0]!r}")
            self._check_params(eff[1:] if eff[0] in ("carry", "move-to") else eff[2:])

    def _check_params(self, idxs) -> None:
        for i in idxs:
            if not isinstance(i, int) or not 0 <= i < self.arity:
                raise ValidationError(f"action {self.name}: parameter index {i!r} out of range")

    def fact_names(self) -> set[str]:
        names = {a[1] for a in self.guard}
        names.update(e[1] for e in self.effects if e[0] not in ("carry", "move-to"))
        return names

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "arity": self.arity,
            "paramTypes": list(self.param_types),
            "guard": [list(a) for a in self.guard],
            "effects": [list(e) for e in self.effects],
        }

    @staticmethod
    def from_json(d: dict) -> "ActionRule":
        try:
            return ActionRule(
                name=d["name"],
                arity=int(d["arity"]),
                param_types=tuple(d.get("paramTypes", [ANY] * int(d["arity"]))),
                guard=tuple(tuple(a) for a in d.get("guard", [])),
                effects=tuple(tuple(e) for e in d.get("effects", [])),
            )
        except KeyError as exc:
            raise ValidationError(f"action entry missing field {exc}") from None


def default_actions() -> tuple[ActionRule, ...]:
    """The shipped action registry."""
    return (
        ActionRule("open", 1, (ANY,), effects=(("add-prop", "opened", 0), ("del-prop", "closed", 0))),
        ActionRule("close", 1, (ANY,), effects=(("add-prop", "closed", 0), ("del-prop", "opened", 0))),
        ActionRule(
            "grab",
            1,
            (ANY,),
            effects=(
                ("carry", 0),
                ("clear-rel", "on-top-of", 0),
                ("clear-rel", "inside-of", 0),
                ("clear-rel", "next-to", 0),
            ),
        ),
        ActionRule(
            "put-in",
            2,
            (ANY, ANY),
            guard=(("prop", "opened", 1),),
            effects=(("del-prop", "empty", 1), ("add-rel", "inside-of", 0, 1), ("move-to", 0, 1)),
        ),
        ActionRule("put-on", 2, (ANY, ANY), effects=(("add-rel", "on-top-of", 0, 1), ("move-to", 0, 1))),
        ActionRule("pour-into", 2, (ANY, ANY), effects=(("add-prop", "empty", 0), ("del-prop", "empty", 1))),
        ActionRule("scrub-with", 2, (ANY, ANY), effects=(("del-prop", "dirty", 0), ("add-prop", "clean", 0))),
        ActionRule("sweep", 1, (ANY,), effects=(("del-prop", "dirty", 0), ("add-prop", "clean", 0))),
        ActionRule("wash", 1, (ANY,), effects=(("del-prop", "dirty", 0), ("add-prop", "clean", 0))),
        ActionRule("turn-off", 1, (ANY,), effects=(("del-prop", "on", 0), ("add-prop", "off", 0))),
        ActionRule("turn-on", 1, (ANY,), effects=(("del-prop", "off", 0), ("add-prop", "on", 0))),
    )


DEFAULT_PROPERTIES = ("dirty", "clean", "opened", "closed", "empty", "on", "off")
DEFAULT_RELATIONS = ("on-top-of", "inside-of", "next-to")


@dataclass(frozen=True)
class Vocabulary:
    location_types: tuple[str, ...]
    object_types: tuple[str, ...]
    properties: tuple[str, ...]
    relations: tuple[str, ...]
    actions: tuple[ActionRule, ...] = field(default_factory=default_actions)

    def __post_init__(self):
        for what, names in (
            ("location type", self.location_types),
            ("object type", self.object_types),
            ("property", self.properties),
            ("relation", self.relations),
        ):
            for n in names:
                _check_name(n, what)
            if len(set(names)) != len(names):
                raise ValidationError(f"duplicate {what} names")
        if set(self.location_types) & set(self.object_types):
            raise ValidationError("location and object types overlap")
        if set(self.properties) & set(self.relations):
            raise ValidationError("property and relation names overlap")
        if len({a.name for a in self.actions}) != len(self.actions):
            raise ValidationError("duplicate action names")
        known = set(self.properties) | set(self.relations)
        for a in self.actions:
            missing = a.fact_names() - known
            if missing:
                raise ValidationError(f"action {a.name} mentions undeclared names {sorted(missing)}")
            for t in a.param_types:
                if t != ANY and t not in self.object_types:
                    raise ValidationError(f"action {a.name}: unknown parameter type {t!r}")

    @property
    def unary_actions(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions if a.arity == 1)

    @property
    def binary_actions(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.actions if a.arity == 2)

    @cached_property
    def _rules(self) -> dict[str, ActionRule]:
        return {a.name: a for a in self.actions}

    def rule(self, name: str) -> ActionRule:
        try:
            return self._rules[name]
        except KeyError:
            raise ValidationError(f"unknown action {name!r}") from None

    def to_json(self) -> dict:
        return {
            "locationTypes": list(self.location_types),
            "objectTypes": list(self.object_types),
            "properties": list(self.properties),
            "relations": list(self.relations),
            "unaryActions": list(self.unary_actions),
            "binaryActions": list(self.binary_actions),
            "actions": [a.to_json() for a in self.actions],
        }

    @staticmethod
    def from_json(d: dict) -> "Vocabulary":
        try:
            actions = tuple(ActionRule.from_json(a) for a in d["actions"]) if "actions" in d else default_actions()
            vocab = Vocabulary(
                tuple(d["locationTypes"]),
                tuple(d["objectTypes"]),
                tuple(d["properties"]),
                tuple(d["relations"]),
                actions,
            )
        except KeyError as exc:
            raise ValidationError(f"vocabulary missing field {exc}") from None
        for key, names in (("unaryActions", vocab.unary_actions), ("binaryActions", vocab.binary_actions)):
            if key in d and sorted(d[key]) != sorted(names):
                raise ValidationError(f"vocabulary field {key} disagrees with the action rules")
        return vocab


@dataclass(frozen=True)
class Environment:
    """E = (L, O, l, I). Tuple order is scan order."""

    vocab: Vocabulary
    locations: tuple[tuple[str, str], ...]
    objects: tuple[tuple[str, str, str], ...]
    current_loc: str
    props: tuple[tuple[str, str], ...] = ()
    rels: tuple[tuple[str, str, str], ...] = ()

    @cached_property
    def loc_types(self) -> dict[str, str]:
        return dict(self.locations)

    @cached_property
    def obj_types(self) -> dict[str, str]:
        return {o: t for o, t, _ in self.objects}

    @cached_property
    def obj_locs(self) -> dict[str, str]:
        return {o: l for o, _, l in self.objects}

    @cached_property
    def prop_set(self) -> frozenset:
        return frozenset(self.props)

    @cached_property
    def rel_set(self) -> frozenset:
        return frozenset(self.rels)

    @cached_property
    def cells(self) -> dict[tuple[str, str], tuple[str, ...]]:
        out: dict[tuple[str, str], list[str]] = {}
        for o, t, l in self.objects:
            out.setdefault((l, t), []).append(o)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def interp(self) -> dict[str, set]:
        out: dict[str, set] = {p: set() for p in self.vocab.properties}
        out.update({r: set() for r in self.vocab.relations})
        for p, o in self.props:
            out[p].add(o)
        for r, a, b in self.rels:
            out[r].add((a, b))
        return out

    def has_prop(self, p: str, o: str) -> bool:
        return (p, o) in self.prop_set

    def has_rel(self, r: str, a: str, b: str) -> bool:
        return (r, a, b) in self.rel_set

    def type_of(self, ident: str) -> str:
        t = self.obj_types.get(ident) or self.loc_types.get(ident)
        if t is None:
            raise ValidationError(f"unknown id {ident!r}")
        return t

    def validate(self) -> "Environment":
        v = self.vocab
        seen: set[str] = set()
        for lid, lt in self.locations:
            _check_name(lid, "location id")
            if lid in seen or lid == LOC_R:
                raise ValidationError(f"duplicate or reserved location id {lid!r}")
            if lt not in v.location_types:
                raise ValidationError(f"location {lid}: unknown location type {lt!r}")
            seen.add(lid)
        locs = set(seen)
        for oid, ot, ol in self.objects:
            _check_name(oid, "object id")
            if oid in seen:
                raise ValidationError(f"duplicate id {oid!r}")
            if ot not in v.object_types:
                raise ValidationError(f"object {oid}: unknown object type {ot!r}")
            if ol not in locs and ol != LOC_R:
                raise ValidationError(f"object {oid}: unknown location {ol!r}")
            seen.add(oid)
        if self.current_loc not in locs:
            raise ValidationError(f"currentLoc {self.current_loc!r} is not a declared location")
        objs = self.obj_types
        for p, o in self.props:
            if p not in v.properties:
                raise ValidationError(f"unknown property {p!r}")
            if o not in objs:
                raise ValidationError(f"property {p} references undeclared object {o!r}")
        for r, a, b in self.rels:
            if r not in v.relations:
                raise ValidationError(f"unknown relation {r!r}")
            for o in (a, b):
                if o not in objs:
                    raise ValidationError(f"relation {r} references undeclared object {o!r}")
        if len(set(self.props)) != len(self.props) or len(set(self.rels)) != len(self.rels):
            raise ValidationError("duplicate interpretation facts")
        return self


def objs(env: Environment, loc: str, tau: str) -> list[str]:
    if loc != LOC_R and loc not in env.loc_types:
        raise ValidationError(f"unknown location {loc!r}")
    if tau not in env.vocab.object_types:
        raise ValidationError(f"unknown object type {tau!r}")
    return list(env.cells.get((loc, tau), ()))


def locs(env: Environment, tau: str) -> list[str]:
    if tau not in env.vocab.location_types:
        raise ValidationError(f"unknown location type {tau!r}")
    return [l for l, t in env.locations if t == tau]


class World:
    """Mutable working copy of an environment, used by the interpreters."""

    __slots__ = ("vocab", "locations", "loc_types", "obj_types", "obj_loc", "rank", "_next", "cells",
                 "current_loc", "props", "rels")

    def __init__(self, env: Environment | None = None):
        if env is None:
            return
        self.vocab = env.vocab
        self.locations = env.locations
        self.loc_types = env.loc_types
        self.obj_types = env.obj_types
        self.obj_loc = dict(env.obj_locs)
        self.rank = {o: i for i, (o, _, _) in enumerate(env.objects)}
        self._next = len(env.objects)
        self.cells = {k: list(v) for k, v in env.cells.items()}
        self.current_loc = env.current_loc
        self.props = dict.fromkeys(env.props)
        self.rels = dict.fromkeys(env.rels)

    def copy(self) -> "World":
        w = World()
        w.vocab = self.vocab
        w.locations = self.locations
        w.loc_types = self.loc_types
        w.obj_types = self.obj_types
        w.obj_loc = dict(self.obj_loc)
        w.rank = dict(self.rank)
        w._next = self._next
        w.cells = {k: list(v) for k, v in self.cells.items()}
        w.current_loc = self.current_loc
        w.props = dict(self.props)
        w.rels = dict(self.rels)
        return w

    def freeze(self) -> Environment:
        order = sorted(self.obj_loc, key=self.rank.__getitem__)
        objects = tuple((o, self.obj_types[o], self.obj_loc[o]) for o in order)
        return Environment(self.vocab, self.locations, objects, self.current_loc,
                           tuple(self.props), tuple(self.rels))

    def scan_obj(self, tau: str) -> list[str]:
        return list(self.cells.get((self.current_loc, tau), ()))

    def scan_loc(self, tau: str) -> list[str]:
        return [l for l, t in self.locations if t == tau]

    def move(self, o: str, dest: str) -> None:
        src = self.obj_loc[o]
        if src == dest:
            return
        t = self.obj_types[o]
        self.cells[(src, t)].remove(o)
        self.cells.setdefault((dest, t), []).append(o)
        self.obj_loc[o] = dest
        self.rank[o] = self._next
        self._next += 1

    def guard_atom_holds(self, atom: tuple, args: Sequence[str]) -> bool:
        kind, name = atom[0], atom[1]
        if kind in ("prop", "not-prop"):
            val = (name, args[atom[2]]) in self.props
        else:
            val = (name, args[atom[2]], args[atom[3]]) in self.rels
        return val if kind in ("prop", "rel") else not val

    def check_args(self, rule: ActionRule, args: Sequence[str]) -> None:
        if len(args) != rule.arity:
            raise ValidationError(f"action {rule.name} expects {rule.arity} argument(s), got {len(args)}")
        for a, t in zip(args, rule.param_types):
            ot = self.obj_types.get(a)
            if ot is None:
                raise ValidationError(f"action {rule.name}: {a!r} is not an object")
            if t != ANY and ot != t:
                raise ValidationError(f"action {rule.name}: {a} has type {ot}, expected {t}")

    def apply(self, rule: ActionRule, args: Sequence[str], check_guard: bool = True) -> None:
        if check_guard:
            for atom in rule.guard:
                if not self.guard_atom_holds(atom, args):
                    raise ActionPrecondition(rule.name, format_atom(atom, args))
        for eff in rule.effects:
            kind = eff[0]
            if kind == "add-prop":
                self.props.setdefault((eff[1], args[eff[2]]), None)
            elif kind == "del-prop":
                self.props.pop((eff[1], args[eff[2]]), None)
            elif kind == "add-rel":
                self.rels.setdefault((eff[1], args[eff[2]], args[eff[3]]), None)
            elif kind == "del-rel":
                self.rels.pop((eff[1], args[eff[2]], args[eff[3]]), None)
            elif kind == "clear-rel":
                o = args[eff[2]]
                for key in [k for k in self.rels if k[0] == eff[1] and k[1] == o]:
                    del self.rels[key]
            elif kind == "carry":
                self.move(args[eff[1]], LOC_R)
            elif kind == "move-to":
                self.move(args[eff[1]], self.obj_loc[args[eff[2]]])


def format_atom(atom: tuple, args: Sequence[str]) -> str:
    kind, name = atom[0], atom[1]
    neg = "not " if kind.startswith("not-") else ""
    if kind.endswith("prop"):
        return f"{neg}{name}({args[atom[2]]})"
    return f"{neg}{name}({args[atom[2]]}, {args[atom[3]]})"


def apply_action(env: Environment, a: str, args: Sequence[str]) -> Environment:
    rule = env.vocab.rule(a)
    w = World(env)
    w.check_args(rule, args)
    w.apply(rule, args)
    return w.freeze()


def make_env(vocab: Vocabulary, locations: Iterable, objects: Iterable, current_loc: str,
             props: Iterable = (), rels: Iterable = ()) -> Environment:
    """Build and validate an environment from plain iterables."""
    return Environment(
        vocab,
        tuple(tuple(x) for x in locations),
        tuple(tuple(x) for x in objects),
        current_loc,
        tuple(tuple(x) for x in props),
        tuple(tuple(x) for x in rels),
    ).validate()


def env_to_json(env: Environment) -> dict:
    return {
        "vocabulary": env.vocab.to_json(),
        "locations": [{"id": l, "type": t} for l, t in env.locations],
        "objects": [{"id": o, "type": t, "loc": l} for o, t, l in env.objects],
        "currentLoc": env.current_loc,
        "properties": [list(p) for p in env.props],
        "relations": [list(r) for r in env.rels],
    }


def env_from_json(d: dict, vocab: Vocabulary | None = None) -> Environment:
    if not isinstance(d, dict):
        raise ValidationError("environment file must contain a JSON object")
    try:
        if vocab is None:
            vocab = Vocabulary.from_json(d["vocabulary"])
        locations = [(x["id"], x["type"]) for x in d["locations"]]
        objects = [(x["id"], x["type"], x["loc"]) for x in d["objects"]]
        current = d["currentLoc"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"environment missing or malformed field {exc}") from None
    props = d.get("properties", [])
    rels = d.get("relations", [])
    for i, p in enumerate(props):
        if not (isinstance(p, list) and len(p) == 2):
            raise ValidationError(f"properties[{i}]: expected [prop, objId]")
    for i, r in enumerate(rels):
        if not (isinstance(r, list) and len(r) == 3):
            raise ValidationError(f"relations[{i}]: expected [rel, objId, objId]")
    return make_env(vocab, locations, objects, current, props, rels)


def save_env(env: Environment, path) -> None:
    Path(path).write_text(json.dumps(env_to_json(env), indent=1) + "\n", encoding="utf-8")


def load_env(path) -> Environment:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    try:
        return env_from_json(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
