"""Unrealizability check for partial programs.

A partial program is first specialized against the concrete initial
environment: everything whose outcome is certain is executed, loops over
known scans are unrolled and arguments are narrowed to the ids they can
still take. The residual program is then over-approximated by a regex
whose loops are counted with an abstract environment. If that regex
rejects the abstracted demonstration, no completion can reproduce it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .dsl import (ActBinary, ActUnary, And, CheckProp, CheckRel, Choice, Const, Demonstration, Foreach,
                  Goto, HoleName, HoleVar, If, Let, Node, Not, Or, ScanLoc, Seq, Skip, Var, make_seq,
                  print_program)
from .envmodel import LOC_R, Environment, World
from .regexcore import (Eps, Opt, Power, Regex, StarPower, Tok, act_tok, alt, abstract_trace, concat,
                        goto_tok, matches, regex_print)

STAR = "*"  # unknown loop count marker inside card sets
CARD_CAP = 16


@dataclass(frozen=True)
class Infeasible(Node):
    """Residue of a program that fails on every completion."""
    reason: str = ""


class _Fail(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# ---------------------------------------------------------------- partial evaluation

class _PE:
    def __init__(self, env: Environment, max_index: int):
        self.env = env
        self.w = World(env)
        self.max_index = max_index
        self.loc_known = True
        self.dirty_facts: set = set()
        self.dirty_cells: set = set()
        self.moved: set = set()
        self.uncertain = 0
        self.objs_of_type: dict = {}
        for o, t, _ in env.objects:
            self.objs_of_type.setdefault(t, []).append(o)
        self.locs_of_type: dict = {}
        for l, t in env.locations:
            self.locs_of_type.setdefault(t, []).append(l)
        self.cell_locs = [l for l, _ in env.locations] + [LOC_R]

    # state snapshots ------------------------------------------------
    def snap(self):
        return (self.loc_known, frozenset(self.dirty_facts), frozenset(self.dirty_cells), frozenset(self.moved))

    def restore(self, s) -> None:
        self.loc_known = s[0]
        self.dirty_facts = set(s[1])
        self.dirty_cells = set(s[2])
        self.moved = set(s[3])

    # helpers --------------------------------------------------------
    def type_of(self, i: str) -> str:
        return self.w.obj_types.get(i) or self.w.loc_types[i]

    def all_of(self, t: str) -> frozenset:
        if t in self.locs_of_type or t in self.env.vocab.location_types:
            return frozenset(self.locs_of_type.get(t, ()))
        return frozenset(self.objs_of_type.get(t, ()))

    def scan_known(self, scan) -> list | None:
        t = scan.type
        if not isinstance(t, str):
            return None
        if isinstance(scan, ScanLoc):
            return self.w.scan_loc(t)
        if not self.loc_known or (self.w.current_loc, t) in self.dirty_cells:
            return None
        return self.w.scan_obj(t)

    def scan_possible(self, scan) -> tuple:
        """(type or None, candidate set or None) for a scan whose result is unknown."""
        t = scan.type
        if not isinstance(t, str):
            return None, None
        return t, self.all_of(t)

    def resolve(self, arg, scope: dict) -> frozenset:
        if isinstance(arg, Const):
            return frozenset((arg.value,))
        if isinstance(arg, Choice):
            return arg.values
        if isinstance(arg, Var):
            t, c = scope[arg.name]
            if c is not None:
                return c
            if t is not None:
                return self.all_of(t)
            return frozenset(self.w.obj_types) | frozenset(self.w.loc_types)
        if isinstance(arg, HoleVar):
            out: set = set()
            found = False
            for t, c in scope.values():
                if t == arg.type:
                    found = True
                    out |= c if c is not None else self.all_of(t)
                elif t is None:
                    found = True
                    out |= self.all_of(arg.type) if c is None else {x for x in c if self.type_of(x) == arg.type}
            if not found:
                raise _Fail(f"no variable of type {arg.type} in scope")
            return frozenset(out)
        raise _Fail(f"bad argument {arg!r}")

    @staticmethod
    def residual_arg(arg, cands: frozenset, types: dict):
        if len(cands) == 1:
            return Const(next(iter(cands)))
        if isinstance(arg, HoleVar):
            return Choice(arg.type, cands)
        ts = {types[c] for c in cands}
        return Choice(ts.pop() if len(ts) == 1 else "", cands)

    def fact_key(self, atom, args) -> tuple:
        return (atom[1], args[atom[2]])

    def guard_status(self, rule, args) -> str:
        """'true', 'false' or 'unknown' for a concrete argument tuple."""
        status = "true"
        for atom in rule.guard:
            if self.fact_key(atom, args) in self.dirty_facts:
                status = "unknown"
                continue
            if not self.w.guard_atom_holds(atom, args):
                return "false"
        return status

    # statements -----------------------------------------------------
    def block(self, items, scope: dict) -> list:
        out = []
        scope = dict(scope)
        for it in items:
            if isinstance(it, Let):
                r, scope = self.let(it, scope)
            else:
                r = self.stmt(it, scope)
            out.append(r)
        return out

    def stmt(self, node, scope: dict):
        if isinstance(node, Seq):
            return make_seq(self.block(node.items, scope))
        if isinstance(node, Let):
            return self.let(node, scope)[0]
        if isinstance(node, Skip):
            return node
        if isinstance(node, Goto):
            return self.goto(node, scope)
        if isinstance(node, (ActUnary, ActBinary)):
            return self.act(node, scope)
        if isinstance(node, If):
            return self.if_(node, scope)
        if isinstance(node, Foreach):
            return self.foreach(node, scope)
        raise _Fail(f"unexpected node {node!r}")

    def let(self, node: Let, scope: dict):
        scope = dict(scope)
        items = self.scan_known(node.scan)
        t = node.scan.type if isinstance(node.scan.type, str) else None
        if items is not None:
            if isinstance(node.index, int):
                if node.index >= len(items):
                    raise _Fail("getNth index out of range")
                cands = frozenset((items[node.index],))
            else:
                if not items:
                    raise _Fail("getNth on an empty scan")
                cands = frozenset(items[:self.max_index + 1])
            scope[node.var] = (t, cands)
            return Skip(), scope
        t, cands = self.scan_possible(node.scan)
        if cands is not None and not cands:
            raise _Fail(f"no {t} exists")
        scope[node.var] = (t, cands)
        return node, scope

    def goto(self, node: Goto, scope: dict):
        cands = self.resolve(node.arg, scope)
        cands = frozenset(c for c in cands if c in self.w.loc_types)
        if not cands:
            raise _Fail("goto without a location")
        if len(cands) == 1 and not self.uncertain:
            self.w.current_loc = next(iter(cands))
            self.loc_known = True
        else:
            self.loc_known = False
        return Goto(self.residual_arg(node.arg, cands, self.w.loc_types))

    def act(self, node, scope: dict):
        rule = self.env.vocab.rule(node.action)
        raw = [node.arg] if isinstance(node, ActUnary) else [node.arg1, node.arg2]
        sets = []
        for a in raw:
            c = frozenset(x for x in self.resolve(a, scope) if x in self.w.obj_types)
            if not c:
                raise _Fail(f"{node.action} has no possible object")
            sets.append(c)
        res_args = [self.residual_arg(a, c, self.w.obj_types) for a, c in zip(raw, sets)]
        residual = ActUnary(node.action, *res_args) if len(raw) == 1 else ActBinary(node.action, *res_args)
        certain = all(len(c) == 1 for c in sets) and not self.uncertain
        n_combos = 1
        for c in sets:
            n_combos *= len(c)
        if rule.guard and n_combos <= 64:
            combos = list(itertools.product(*[sorted(c) for c in sets]))
            if all(self.guard_status(rule, list(cmb)) == "false" for cmb in combos):
                raise _Fail(f"precondition of {node.action} never holds")
        if certain:
            args = [next(iter(c)) for c in sets]
            self.apply_certain(rule, args)
        else:
            self.apply_uncertain(rule, sets)
        return residual

    def apply_certain(self, rule, args) -> None:
        w = self.w
        for eff in rule.effects:
            kind = eff[0]
            if kind in ("add-prop", "del-prop"):
                self.dirty_facts.discard((eff[1], args[eff[2]]))
            elif kind == "clear-rel":
                self.dirty_facts.discard((eff[1], args[eff[2]]))
            elif kind == "carry":
                o = args[eff[1]]
                self.moved.discard(o)
            elif kind == "move-to":
                o, tgt = args[eff[1]], args[eff[2]]
                if tgt in self.moved:
                    self.mark_moved(o)
                else:
                    self.moved.discard(o)
        w.apply(rule, args, check_guard=False)

    def mark_moved(self, o: str) -> None:
        self.moved.add(o)
        t = self.w.obj_types[o]
        for l in self.cell_locs:
            self.dirty_cells.add((l, t))

    def apply_uncertain(self, rule, sets) -> None:
        for eff in rule.effects:
            kind = eff[0]
            if kind in ("add-prop", "del-prop", "add-rel", "del-rel", "clear-rel"):
                for o in sets[eff[2]]:
                    self.dirty_facts.add((eff[1], o))
            else:
                for o in sets[eff[1]]:
                    self.mark_moved(o)

    def cond_value(self, c, scope: dict):
        """True/False when determined, None otherwise."""
        if isinstance(c, (CheckProp, CheckRel)):
            if isinstance(c.name, HoleName):
                return None
            args = [c.arg] if isinstance(c, CheckProp) else [c.a, c.b]
            vals = []
            for a in args:
                try:
                    s = self.resolve(a, scope)
                except _Fail:
                    return None
                if len(s) != 1:
                    return None
                vals.append(next(iter(s)))
            if (c.name, vals[0]) in self.dirty_facts:
                return None
            if isinstance(c, CheckProp):
                return (c.name, vals[0]) in self.w.props
            return (c.name, vals[0], vals[1]) in self.w.rels
        if isinstance(c, Not):
            v = self.cond_value(c.cond, scope)
            return None if v is None else not v
        if isinstance(c, (And, Or)):
            a = self.cond_value(c.left, scope)
            b = self.cond_value(c.right, scope)
            if isinstance(c, And):
                if a is False or b is False:
                    return False
                return True if a and b else None
            if a is True or b is True:
                return True
            return False if a is False and b is False else None
        return None

    def if_(self, node: If, scope: dict):
        v = self.cond_value(node.cond, scope)
        if v is True:
            return self.stmt(node.body, scope)
        if v is False:
            return Skip()
        s = self.snap()
        self.uncertain += 1
        try:
            body = self.stmt(node.body, scope)
        except _Fail:
            self.restore(s)
            return Skip()
        finally:
            self.uncertain -= 1
        return If(node.cond, body)

    def foreach(self, node: Foreach, scope: dict):
        items = self.scan_known(node.scan)
        t = node.scan.type if isinstance(node.scan.type, str) else None
        if items is not None:
            out = []
            for x in items:
                sc = dict(scope)
                sc[node.var] = (t, frozenset((x,)))
                out.append(self.stmt(node.body, sc))
            return make_seq(out)
        t, cands = self.scan_possible(node.scan)
        sc = dict(scope)
        sc[node.var] = (t, cands)
        start = self.snap()
        self.uncertain += 1
        try:
            while True:
                before = self.snap()
                try:
                    body = self.stmt(node.body, sc)
                except _Fail:
                    self.restore(start)
                    return Skip()
                if self.snap() == before:
                    break
        finally:
            self.uncertain -= 1
        return Foreach(node.var, node.scan, body)


def partial_eval(prog, env: Environment, max_index: int = 2):
    """Specialize prog against env. Returns the residual program or an Infeasible node."""
    pe = _PE(env, max_index)
    try:
        return pe.stmt(prog, {})
    except _Fail as exc:
        return Infeasible(exc.reason)


# ---------------------------------------------------------------- abstract environments

class _Top:
    __slots__ = ()

    def __repr__(self) -> str:
        return "TOP"


TOP = _Top()


@dataclass(frozen=True)
class Cell:
    must: frozenset
    may: frozenset


@dataclass
class AbstractEnvironment:
    """Over-approximates where the robot may be and which objects each (location, type) cell holds.

    A cell maps to Cell(must, may): every object in `must` is certainly there,
    nothing outside `may` can be. TOP means nothing is known.
    """

    cur_locs: frozenset
    locs_by_type: dict
    cells: dict
    types: dict = field(default_factory=dict, compare=False)

    def cell(self, loc: str, t: str):
        return self.cells.get((loc, t), _EMPTY)

    def copy(self) -> "AbstractEnvironment":
        return AbstractEnvironment(self.cur_locs, self.locs_by_type, dict(self.cells), self.types)

    def canonical(self) -> tuple:
        cells = {k: v for k, v in self.cells.items() if v is TOP or v.may}
        return self.cur_locs, tuple(sorted((k, v if v is TOP else (tuple(sorted(v.must)), tuple(sorted(v.may))))
                                           for k, v in cells.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, AbstractEnvironment) and self.canonical() == other.canonical()


_EMPTY = Cell(frozenset(), frozenset())


def alpha(env: Environment) -> AbstractEnvironment:
    locs_by_type: dict = {}
    for l, t in env.locations:
        locs_by_type.setdefault(t, []).append(l)
    for t in env.vocab.location_types:
        locs_by_type.setdefault(t, [])
    cells = {k: Cell(frozenset(v), frozenset(v)) for k, v in env.cells.items()}
    types = dict(env.obj_types)
    types.update(env.loc_types)
    return AbstractEnvironment(frozenset((env.current_loc,)),
                               {k: tuple(v) for k, v in locs_by_type.items()}, cells, types)


def leq(a: AbstractEnvironment, b: AbstractEnvironment) -> bool:
    if not a.cur_locs <= b.cur_locs:
        return False
    for k in set(a.cells) | set(b.cells):
        ca, cb = a.cells.get(k, _EMPTY), b.cells.get(k, _EMPTY)
        if cb is TOP:
            continue
        if ca is TOP:
            return False
        if not (ca.may <= cb.may and ca.must >= cb.must):
            return False
    return True


def join(a: AbstractEnvironment, b: AbstractEnvironment) -> AbstractEnvironment:
    cells = {}
    for k in set(a.cells) | set(b.cells):
        ca, cb = a.cells.get(k, _EMPTY), b.cells.get(k, _EMPTY)
        if ca is TOP or cb is TOP:
            cells[k] = TOP
        else:
            cells[k] = Cell(ca.must & cb.must, ca.may | cb.may)
    return AbstractEnvironment(a.cur_locs | b.cur_locs, a.locs_by_type, cells, a.types or b.types)


def _cap(cards: set) -> frozenset:
    nums = sorted(c for c in cards if c != STAR)
    if len(cards) > CARD_CAP and nums:
        return frozenset({nums[0], nums[-1], STAR})
    return frozenset(cards)


def scan_cards(e: AbstractEnvironment, scan, object_types: Sequence[str] = ()) -> frozenset:
    """Possible lengths of a scan's result; STAR stands for an unknown count."""
    if isinstance(scan, ScanLoc):
        if isinstance(scan.type, str):
            return frozenset({len(e.locs_by_type.get(scan.type, ()))})
        return _cap({len(v) for v in e.locs_by_type.values()} or {0})
    types = [scan.type] if isinstance(scan.type, str) else (
        list(object_types) or sorted({t for (_, t) in e.cells}))
    out: set = set()
    for l in e.cur_locs:
        for t in types:
            c = e.cell(l, t)
            if c is TOP:
                out.add(STAR)
            else:
                out.update(range(len(c.must), len(c.may) + 1))
    if not isinstance(scan.type, str) and object_types and not out:
        out.add(0)
    return _cap(out or {0})


def _arg_values(arg, e: AbstractEnvironment, kind: str) -> frozenset:
    if isinstance(arg, Const):
        return frozenset((arg.value,))
    if isinstance(arg, Choice):
        return arg.values
    if isinstance(arg, HoleVar):
        if kind == "loc":
            return frozenset(e.locs_by_type.get(arg.type, ()))
        return frozenset(o for o, t in e.types.items() if t == arg.type and (o not in _loc_ids(e)))
    raise ValueError(f"residual argument expected, got {arg!r}")


def _loc_ids(e: AbstractEnvironment) -> set:
    return {l for ls in e.locs_by_type.values() for l in ls}


def _cells_with(e: AbstractEnvironment, o: str) -> list:
    t = e.types.get(o)
    return [k for k, c in e.cells.items() if k[1] == t and (c is TOP or o in c.may)]


def _move(e: AbstractEnvironment, objs: frozenset, dest_locs: set, definite: bool) -> None:
    for o in objs:
        t = e.types[o]
        for k in _cells_with(e, o):
            c = e.cells[k]
            if c is TOP:
                continue
            if definite and k[0] not in dest_locs:
                e.cells[k] = Cell(c.must - {o}, c.may - {o})
            elif not definite:
                e.cells[k] = Cell(c.must - {o}, c.may)
        for l in dest_locs:
            c = e.cell(l, t)
            if c is TOP:
                continue
            e.cells[(l, t)] = Cell(c.must | {o} if definite else c.must, c.may | {o})


def update_abs_env(e: AbstractEnvironment, stmt, vocab=None) -> AbstractEnvironment:
    if isinstance(stmt, Goto):
        locs = _arg_values(stmt.arg, e, "loc")
        out = e.copy()
        out.cur_locs = e.cur_locs | locs
        return out
    if isinstance(stmt, (ActUnary, ActBinary)):
        if vocab is None:
            return e
        rule = vocab.rule(stmt.action)
        raw = [stmt.arg] if isinstance(stmt, ActUnary) else [stmt.arg1, stmt.arg2]
        sets = [_arg_values(a, e, "obj") for a in raw]
        out = e.copy()
        for eff in rule.effects:
            if eff[0] == "carry":
                objs = sets[eff[1]]
                _move(out, objs, {LOC_R}, len(objs) == 1)
            elif eff[0] == "move-to":
                objs = sets[eff[1]]
                dest: set = set()
                certain_target = len(sets[eff[2]]) == 1
                for tgt in sets[eff[2]]:
                    ks = _cells_with(out, tgt)
                    dest |= {k[0] for k in ks}
                    if len(ks) != 1 or out.cells[ks[0]] is TOP or tgt not in out.cells[ks[0]].must:
                        certain_target = False
                if not dest:
                    continue
                _move(out, objs, dest, len(objs) == 1 and certain_target and len(dest) == 1)
        return out
    return e


def _widen(prev: AbstractEnvironment, nxt: AbstractEnvironment) -> AbstractEnvironment:
    cells = dict(nxt.cells)
    for k in set(prev.cells) | set(nxt.cells):
        if prev.cells.get(k, _EMPTY) != nxt.cells.get(k, _EMPTY):
            cells[k] = TOP
    return AbstractEnvironment(nxt.cur_locs, nxt.locs_by_type, cells, nxt.types)


class _Abstractor:
    def __init__(self, vocab, widen_after: int = 8):
        self.vocab = vocab
        self.widen_after = widen_after

    def tokens(self, stmt, e: AbstractEnvironment) -> Regex:
        if isinstance(stmt, Goto):
            vals = _arg_values(stmt.arg, e, "loc")
            types = sorted({e.types[v] for v in vals}) if not isinstance(stmt.arg, HoleVar) else [stmt.arg.type]
            return alt([Tok(goto_tok(t)) for t in types])
        raw = [stmt.arg] if isinstance(stmt, ActUnary) else [stmt.arg1, stmt.arg2]
        type_sets = []
        for a in raw:
            if isinstance(a, HoleVar):
                type_sets.append([a.type])
            else:
                type_sets.append(sorted({e.types[v] for v in _arg_values(a, e, "obj")}))
        return alt([Tok(act_tok(stmt.action, *ts)) for ts in itertools.product(*type_sets)])

    def run(self, node, e: AbstractEnvironment) -> tuple:
        if isinstance(node, Seq):
            parts = []
            for it in node.items:
                r, e = self.run(it, e)
                parts.append(r)
            return concat(parts), e
        if isinstance(node, (Skip, Let)):
            return Eps(), e
        if isinstance(node, (Goto, ActUnary, ActBinary)):
            return self.tokens(node, e), update_abs_env(e, node, self.vocab)
        if isinstance(node, If):
            r, e2 = self.run(node.body, e)
            return Opt(r), join(e, e2)
        if isinstance(node, Foreach):
            inv = self.invariant(e, node.body)
            r, _ = self.run(node.body, inv)
            cards = scan_cards(e, node.scan, self.vocab.object_types)
            nums = sorted(c for c in cards if c != STAR)
            opts = [Power(r, n) if n != 1 else r for n in nums]
            opts = [Eps() if isinstance(o, Power) and o.n == 0 else o for o in opts]
            if STAR in cards:
                opts.append(StarPower(r))
            return alt(opts), inv
        if isinstance(node, Infeasible):
            raise ValueError("infeasible residue has no regex")
        raise ValueError(f"unexpected node {node!r}")

    def invariant(self, e: AbstractEnvironment, body) -> AbstractEnvironment:
        cur = e
        i = 0
        while True:
            _, after = self.run(body, cur)
            nxt = join(cur, after)
            if nxt == cur:
                return cur
            i += 1
            if i >= self.widen_after:
                nxt = _widen(cur, nxt)
                _, after = self.run(body, nxt)
                final = join(nxt, after)
                if final == nxt:
                    return nxt
                return _widen(nxt, final)
            cur = nxt


def loop_invariant(e: AbstractEnvironment, body, vocab=None, widen_after: int = 8) -> AbstractEnvironment:
    return _Abstractor(vocab, widen_after).invariant(e, body)


def prog_to_regex(prog, e: AbstractEnvironment, vocab=None, widen_after: int = 8) -> Regex:
    return _Abstractor(vocab, widen_after).run(prog, e)[0]


# ---------------------------------------------------------------- verdict

class Pruner:
    """Compatible check against a fixed demonstration set, with per-demo caches."""

    def __init__(self, demos: Sequence[Demonstration], max_index: int = 2, widen_after: int = 8,
                 dump=None):
        self.demos = list(demos)
        self.max_index = max_index
        self.widen_after = widen_after
        self.alphas = [alpha(d.env) for d in self.demos]
        self.strings = [abstract_trace(d.trace, d.env) for d in self.demos]
        self.dump = dump

    def explain(self, prog, i: int = 0) -> tuple:
        d = self.demos[i]
        res = partial_eval(prog, d.env, self.max_index)
        if isinstance(res, Infeasible):
            return res, None
        return res, prog_to_regex(res, self.alphas[i], d.env.vocab, self.widen_after)

    def compatible(self, prog) -> bool:
        for i in range(len(self.demos)):
            res, r = self.explain(prog, i)
            if self.dump is not None:
                self.dump.write(print_program(prog))
                self.dump.write("=> " + (regex_print(r) if r is not None else f"infeasible: {res.reason}") + "\n\n")
            if r is None or not matches(r, self.strings[i]):
                return False
        return True


def compatible(prog, demos: Sequence[Demonstration], max_index: int = 2, widen_after: int = 8) -> bool:
    return Pruner(demos, max_index, widen_after).compatible(prog)
