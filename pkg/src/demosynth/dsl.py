"""Robot policy language: AST, holes, concrete syntax, scoping and interpreter.

One AST covers complete programs, sketches and partial programs. Holes are
ordinary nodes and are addressed by their path from the root, so two holes
with the same expected type are still distinct positions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterator, Sequence, Union

from .envmodel import Environment, World
from .errors import (ActionPrecondition, HoleEncountered, IndexOutOfRange, ParseError,
                     UnboundVariable, ValidationError)


class Node:
    __slots__ = ()


# arguments

@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Const(Node):
    """A concrete id standing where a variable used to be (partial evaluation residue)."""
    value: str


@dataclass(frozen=True)
class Choice(Node):
    """A hole whose possible values are known to be one of a finite set."""
    type: str
    values: frozenset


# holes

@dataclass(frozen=True)
class HoleVar(Node):
    type: str


@dataclass(frozen=True)
class HoleObjType(Node):
    pass


@dataclass(frozen=True)
class HoleLocType(Node):
    pass


@dataclass(frozen=True)
class HoleCond(Node):
    pass


@dataclass(frozen=True)
class HoleIndex(Node):
    pass


@dataclass(frozen=True)
class HoleName(Node):
    kind: str  # "prop" or "rel"


HOLE_TYPES = (HoleVar, HoleObjType, HoleLocType, HoleCond, HoleIndex, HoleName)


def is_hole(x) -> bool:
    return isinstance(x, HOLE_TYPES)


# scans

@dataclass(frozen=True)
class ScanObj(Node):
    type: Union[str, HoleObjType]


@dataclass(frozen=True)
class ScanLoc(Node):
    type: Union[str, HoleLocType]


# conditions

@dataclass(frozen=True)
class CheckProp(Node):
    name: Union[str, HoleName]
    arg: Node


@dataclass(frozen=True)
class CheckRel(Node):
    name: Union[str, HoleName]
    a: Node
    b: Node


@dataclass(frozen=True)
class And(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Or(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Not(Node):
    cond: Node


# statements

@dataclass(frozen=True)
class ActUnary(Node):
    action: str
    arg: Node


@dataclass(frozen=True)
class ActBinary(Node):
    action: str
    arg1: Node
    arg2: Node


@dataclass(frozen=True)
class Goto(Node):
    arg: Node


@dataclass(frozen=True)
class If(Node):
    cond: Node
    body: Node


@dataclass(frozen=True)
class Skip(Node):
    pass


@dataclass(frozen=True)
class Foreach(Node):
    var: str
    scan: Node
    body: Node


@dataclass(frozen=True)
class Let(Node):
    var: str
    scan: Node
    index: Union[int, HoleIndex]


@dataclass(frozen=True)
class Seq(Node):
    items: tuple


STMT_TYPES = (ActUnary, ActBinary, Goto, If, Skip, Foreach, Let, Seq)


def make_seq(items: Sequence[Node]) -> Node:
    """Flatten nested sequences; 0 items gives Skip, 1 item gives the item."""
    flat: list[Node] = []
    for it in items:
        if isinstance(it, Seq):
            flat.extend(it.items)
        else:
            flat.append(it)
    if not flat:
        return Skip()
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def stmts(node: Node) -> tuple:
    """Statement list view of a block."""
    return node.items if isinstance(node, Seq) else (node,)


# ---------------------------------------------------------------- paths

Path_ = tuple


def children(node) -> Iterator[tuple]:
    if isinstance(node, Seq):
        yield from enumerate(node.items)
        return
    if not isinstance(node, Node) or isinstance(node, (Choice,)):
        return
    for f in fields(node):
        v = getattr(node, f.name)
        if isinstance(v, Node):
            yield f.name, v


def get_at(node, path: Path_):
    for k in path:
        node = node.items[k] if isinstance(k, int) else getattr(node, k)
    return node


def replace_at(node, path: Path_, new):
    if not path:
        return new
    k, rest = path[0], path[1:]
    if isinstance(k, int):
        items = list(node.items)
        items[k] = replace_at(items[k], rest, new)
        if isinstance(items[k], Seq):
            return make_seq(items)
        return Seq(tuple(items))
    return replace(node, **{k: replace_at(getattr(node, k), rest, new)})


def iter_nodes(node, path: Path_ = ()) -> Iterator[tuple]:
    """Preorder (path, node) pairs, including non-statement nodes."""
    yield path, node
    for k, ch in children(node):
        yield from iter_nodes(ch, path + (k,))


def iter_holes(node) -> Iterator[tuple]:
    for path, n in iter_nodes(node):
        if is_hole(n):
            yield path, n


def count_holes(node) -> int:
    return sum(1 for _ in iter_holes(node))


def is_complete(node) -> bool:
    for _, n in iter_nodes(node):
        if is_hole(n) or isinstance(n, Choice):
            return False
    return True


def scan_type(scan) -> str | None:
    t = scan.type
    return t if isinstance(t, str) else None


def scope_at(root, path: Path_) -> dict:
    """Variables in scope at `path`, mapped to their type (None if still a hole), in binding order."""
    scope: dict = {}
    node = root
    for k in path:
        if isinstance(node, Seq):
            for it in node.items[:k]:
                if isinstance(it, Let):
                    scope.pop(it.var, None)
                    scope[it.var] = scan_type(it.scan)
        elif isinstance(node, Foreach) and k == "body":
            scope.pop(node.var, None)
            scope[node.var] = scan_type(node.scan)
        node = node.items[k] if isinstance(k, int) else getattr(node, k)
    return scope


def binders(node) -> list:
    """Binding nodes (Foreach and Let) in preorder."""
    return [n for _, n in iter_nodes(node) if isinstance(n, (Foreach, Let))]


def check_scope(root) -> None:
    """Raise UnboundVariable for any variable used outside the scope of its binder."""
    def walk(node, scope: frozenset):
        if isinstance(node, Var):
            if node.name not in scope:
                raise UnboundVariable(f"variable {node.name} is not in scope")
            return
        if isinstance(node, Seq):
            cur = scope
            for it in node.items:
                walk(it, cur)
                if isinstance(it, Let):
                    cur = cur | {it.var}
            return
        if isinstance(node, Foreach):
            walk(node.scan, scope)
            walk(node.body, scope | {node.var})
            return
        for _, ch in children(node):
            walk(ch, scope)
    walk(root, frozenset())


def rename_vars(root, mapping: dict):
    """Rename binders and uses according to mapping (names not in mapping are kept)."""
    def r(node):
        if isinstance(node, Var):
            return Var(mapping.get(node.name, node.name))
        if isinstance(node, Seq):
            return Seq(tuple(r(i) for i in node.items))
        if not isinstance(node, Node):
            return node
        kw = {}
        for f in fields(node):
            v = getattr(node, f.name)
            if f.name == "var" and isinstance(node, (Foreach, Let)):
                kw["var"] = mapping.get(v, v)
            elif isinstance(v, Node):
                kw[f.name] = r(v)
        return replace(node, **kw) if kw else node
    return r(root)


# ---------------------------------------------------------------- traces

@dataclass(frozen=True)
class GotoEv:
    loc: str

    def __str__(self) -> str:
        return f"goto {self.loc}"


@dataclass(frozen=True)
class ActEv:
    action: str
    args: tuple

    def __str__(self) -> str:
        return "act " + " ".join((self.action,) + tuple(self.args))


Event = Union[GotoEv, ActEv]


def format_trace(trace: Sequence[Event]) -> str:
    return "".join(f"{e}\n" for e in trace)


def parse_trace(text: str) -> list:
    out: list = []
    for n, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "goto" and len(parts) == 2:
            out.append(GotoEv(parts[1]))
        elif parts[0] == "act" and len(parts) in (3, 4):
            out.append(ActEv(parts[1], tuple(parts[2:])))
        else:
            raise ParseError(f"bad trace event {line.strip()!r}", n, 1)
    return out


def load_trace(path) -> list:
    return parse_trace(Path(path).read_text(encoding="utf-8"))


def save_trace(trace, path) -> None:
    Path(path).write_text(format_trace(trace), encoding="utf-8")


@dataclass(frozen=True)
class Demonstration:
    env: Environment
    trace: tuple

    def __post_init__(self):
        object.__setattr__(self, "trace", tuple(self.trace))
        for e in self.trace:
            ids = (e.loc,) if isinstance(e, GotoEv) else e.args
            for i in ids:
                if i not in self.env.obj_types and i not in self.env.loc_types:
                    raise ValidationError(f"trace mentions unknown id {i!r}")
            if isinstance(e, ActEv) and len(e.args) != self.env.vocab.rule(e.action).arity:
                raise ValidationError(f"event {e}: wrong number of arguments")


# ---------------------------------------------------------------- evaluation

def _arg_value(arg, sigma: dict) -> str:
    if isinstance(arg, Var):
        try:
            return sigma[arg.name]
        except KeyError:
            raise UnboundVariable(f"variable {arg.name} is unbound") from None
    if isinstance(arg, Const):
        return arg.value
    raise HoleEncountered(f"cannot evaluate {arg}")


def _eval(c, props, rels, sigma: dict) -> bool:
    if isinstance(c, CheckProp):
        if not isinstance(c.name, str):
            raise HoleEncountered("property hole in condition")
        return (c.name, _arg_value(c.arg, sigma)) in props
    if isinstance(c, CheckRel):
        if not isinstance(c.name, str):
            raise HoleEncountered("relation hole in condition")
        return (c.name, _arg_value(c.a, sigma), _arg_value(c.b, sigma)) in rels
    if isinstance(c, And):
        return _eval(c.left, props, rels, sigma) and _eval(c.right, props, rels, sigma)
    if isinstance(c, Or):
        return _eval(c.left, props, rels, sigma) or _eval(c.right, props, rels, sigma)
    if isinstance(c, Not):
        return not _eval(c.cond, props, rels, sigma)
    raise HoleEncountered("condition hole")


def eval_bool(c, env: Environment, sigma: dict) -> bool:
    return _eval(c, env.prop_set, env.rel_set, sigma)


class _Diverged(Exception):
    pass


class _Runner:
    def __init__(self, world: World, expected):
        self.w = world
        self.trace: list = []
        self.expected = expected

    def emit(self, ev) -> None:
        if self.expected is not None:
            n = len(self.trace)
            if n >= len(self.expected) or self.expected[n] != ev:
                raise _Diverged()
        self.trace.append(ev)

    def scan(self, scan) -> list:
        t = scan.type
        if not isinstance(t, str):
            raise HoleEncountered("scan type hole")
        if isinstance(scan, ScanObj):
            if t not in self.w.vocab.object_types:
                raise ValidationError(f"unknown object type {t!r}")
            return self.w.scan_obj(t)
        if t not in self.w.vocab.location_types:
            raise ValidationError(f"unknown location type {t!r}")
        return self.w.scan_loc(t)

    def exec(self, node, sigma: dict) -> None:
        w = self.w
        if isinstance(node, Seq):
            saved: dict = {}
            for it in node.items:
                if isinstance(it, Let) and it.var not in saved:
                    saved[it.var] = sigma.get(it.var)
                self.exec(it, sigma)
            for k, v in saved.items():
                if v is None:
                    sigma.pop(k, None)
                else:
                    sigma[k] = v
        elif isinstance(node, ActUnary) or isinstance(node, ActBinary):
            args = [_arg_value(node.arg, sigma)] if isinstance(node, ActUnary) else \
                [_arg_value(node.arg1, sigma), _arg_value(node.arg2, sigma)]
            rule = w.vocab.rule(node.action)
            w.check_args(rule, args)
            ev = ActEv(node.action, tuple(args))
            if self.expected is not None:
                self.emit(ev)
                w.apply(rule, args)
            else:
                w.apply(rule, args)
                self.emit(ev)
        elif isinstance(node, Goto):
            loc = _arg_value(node.arg, sigma)
            if loc not in w.loc_types:
                raise ValidationError(f"goto target {loc!r} is not a location")
            self.emit(GotoEv(loc))
            w.current_loc = loc
        elif isinstance(node, If):
            if _eval(node.cond, w.props, w.rels, sigma):
                self.exec(node.body, sigma)
        elif isinstance(node, Foreach):
            items = self.scan(node.scan)
            old = sigma.get(node.var)
            for x in items:
                sigma[node.var] = x
                self.exec(node.body, sigma)
            if old is None:
                sigma.pop(node.var, None)
            else:
                sigma[node.var] = old
        elif isinstance(node, Let):
            items = self.scan(node.scan)
            if not isinstance(node.index, int):
                raise HoleEncountered("index hole")
            if node.index >= len(items):
                raise IndexOutOfRange(f"getNth index {node.index} but scan returned {len(items)} item(s)")
            sigma[node.var] = items[node.index]
        elif isinstance(node, Skip):
            pass
        elif is_hole(node):
            raise HoleEncountered(f"hole {node}")
        else:
            raise ValidationError(f"not a statement: {node!r}")


def run(prog, env: Environment, expected=None) -> tuple:
    """Execute a complete program. Returns (trace, final environment).

    When `expected` is given, execution stops with `None` as soon as the
    produced trace departs from it (used for fast consistency checks).
    """
    r = _Runner(World(env), expected)
    try:
        r.exec(prog, {})
    except _Diverged:
        return None, None
    return r.trace, r.w.freeze()


def matches_trace(prog, demo: Demonstration) -> bool:
    r = _Runner(World(demo.env), demo.trace)
    try:
        r.exec(prog, {})
    except (_Diverged, ActionPrecondition, HoleEncountered, IndexOutOfRange, UnboundVariable, ValidationError):
        return False
    return len(r.trace) == len(demo.trace)


def consistent(prog, demos: Sequence[Demonstration]) -> bool:
    return all(matches_trace(prog, d) for d in demos)


# ---------------------------------------------------------------- concrete syntax

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<hole>\?\?(:[A-Za-z_][\w\-]*)+)
  | (?P<choice>\?\?\{[^}]*\}:[A-Za-z_][\w\-]*)
  | (?P<const>@[A-Za-z_][\w\-]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][\w]*(?:-[A-Za-z_\d][\w]*)*)
  | (?P<op>:=|&&|\|\||[(){},;!])
""", re.VERBOSE)


class _Parser:
    def __init__(self, text: str):
        self.toks: list = []
        pos, line, col = 0, 1, 1
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            val = m.group()
            if kind != "ws":
                self.toks.append((kind, val, line, col))
            nl = val.count("\n")
            if nl:
                line += nl
                col = len(val) - val.rfind("\n")
            else:
                col += len(val)
            pos = m.end()
        self.toks.append(("eof", "", line, col))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str):
        _, val, line, col = self.peek()
        raise ParseError(f"{msg}, found {val!r}" if val else f"{msg}, found end of input", line, col)

    def expect(self, val: str):
        if self.peek()[1] != val:
            self.error(f"expected {val!r}")
        return self.next()

    def ident(self) -> str:
        if self.peek()[0] != "ident":
            self.error("expected identifier")
        return self.next()[1]

    def program(self):
        items = self.block_items(("eof",))
        return make_seq(items)

    def block_items(self, stop) -> list:
        items = []
        while self.peek()[0] not in stop and self.peek()[1] not in stop:
            items.append(self.stmt())
        return items

    def block(self):
        self.expect("{")
        items = self.block_items(("}",))
        self.expect("}")
        return make_seq(items)

    def stmt(self):
        kind, val, _, _ = self.peek()
        if kind != "ident":
            self.error("expected statement")
        if val == "foreach":
            self.next()
            self.expect("(")
            var = self.ident()
            if self.ident() != "in":
                self.i -= 1
                self.error("expected 'in'")
            scan = self.scan()
            self.expect(")")
            return Foreach(var, scan, self.block())
        if val == "if":
            self.next()
            self.expect("(")
            c = self.cond()
            self.expect(")")
            return If(c, self.block())
        if val == "let":
            self.next()
            var = self.ident()
            self.expect(":=")
            if self.ident() != "getNth":
                self.i -= 1
                self.error("expected getNth")
            self.expect("(")
            scan = self.scan()
            self.expect(",")
            if self.peek()[0] == "num":
                idx = int(self.next()[1])
            elif self.peek()[1] == "??:index":
                self.next()
                idx = HoleIndex()
            else:
                self.error("expected index")
            self.expect(")")
            self.expect(";")
            return Let(var, scan, idx)
        if val == "goto":
            self.next()
            self.expect("(")
            a = self.arg()
            self.expect(")")
            self.expect(";")
            return Goto(a)
        if val in ("actUnary", "actBinary"):
            self.next()
            self.expect("(")
            name = self.ident()
            self.expect(",")
            a1 = self.arg()
            if val == "actBinary":
                self.expect(",")
                a2 = self.arg()
            self.expect(")")
            self.expect(";")
            return ActUnary(name, a1) if val == "actUnary" else ActBinary(name, a1, a2)
        if val == "skip":
            self.next()
            self.expect(";")
            return Skip()
        self.error("expected statement")

    def scan(self):
        name = self.ident()
        if name not in ("scanObj", "scanLoc"):
            self.i -= 1
            self.error("expected scanObj or scanLoc")
        self.expect("(")
        kind, val, _, _ = self.peek()
        if kind == "hole":
            want = "??:objtype" if name == "scanObj" else "??:loctype"
            if val != want:
                self.error(f"expected type or {want}")
            self.next()
            t = HoleObjType() if name == "scanObj" else HoleLocType()
        else:
            t = self.ident()
        self.expect(")")
        return ScanObj(t) if name == "scanObj" else ScanLoc(t)

    def arg(self):
        kind, val, _, _ = self.peek()
        if kind == "ident":
            self.next()
            return Var(val)
        if kind == "const":
            self.next()
            return Const(val[1:])
        if kind == "hole":
            parts = val.split(":")
            if len(parts) == 3 and parts[1] == "var":
                self.next()
                return HoleVar(parts[2])
        if kind == "choice":
            self.next()
            inner, typ = val[3:].split("}:")
            vals = frozenset(v.strip() for v in inner.split(",") if v.strip())
            return Choice(typ, vals)
        self.error("expected argument")

    def cond(self):
        c = self.cand()
        while self.peek()[1] == "||":
            self.next()
            c = Or(c, self.cand())
        return c

    def cand(self):
        c = self.cunary()
        while self.peek()[1] == "&&":
            self.next()
            c = And(c, self.cunary())
        return c

    def cunary(self):
        kind, val, _, _ = self.peek()
        if val == "!":
            self.next()
            return Not(self.cunary())
        if val == "(":
            self.next()
            c = self.cond()
            self.expect(")")
            return c
        if val == "??:cond":
            self.next()
            return HoleCond()
        if val in ("checkProp", "checkRel"):
            self.next()
            self.expect("(")
            if self.peek()[1] in ("??:prop", "??:rel"):
                name = HoleName(self.next()[1][3:])
            else:
                name = self.ident()
            self.expect(",")
            a = self.arg()
            if val == "checkRel":
                self.expect(",")
                b = self.arg()
                self.expect(")")
                return CheckRel(name, a, b)
            self.expect(")")
            return CheckProp(name, a)
        self.error("expected condition")


def parse_program(text: str):
    return _Parser(text).program()


def parse_cond(text: str):
    p = _Parser(text)
    c = p.cond()
    if p.peek()[0] != "eof":
        p.error("trailing input after condition")
    return c


def print_arg(a) -> str:
    if isinstance(a, Var):
        return a.name
    if isinstance(a, Const):
        return "@" + a.value
    if isinstance(a, Choice):
        return "??{" + ",".join(sorted(a.values)) + "}:" + a.type
    if isinstance(a, HoleVar):
        return f"??:var:{a.type}"
    raise ValidationError(f"not an argument: {a!r}")


def _print_type(t) -> str:
    if isinstance(t, HoleObjType):
        return "??:objtype"
    if isinstance(t, HoleLocType):
        return "??:loctype"
    return t


def print_scan(s) -> str:
    name = "scanObj" if isinstance(s, ScanObj) else "scanLoc"
    return f"{name}({_print_type(s.type)})"


def _prec(c) -> int:
    return {Or: 1, And: 2, Not: 3}.get(type(c), 4)


def print_cond(c, min_prec: int = 0) -> str:
    if isinstance(c, HoleCond):
        s = "??:cond"
    elif isinstance(c, CheckProp):
        n = c.name if isinstance(c.name, str) else "??:prop"
        s = f"checkProp({n}, {print_arg(c.arg)})"
    elif isinstance(c, CheckRel):
        n = c.name if isinstance(c.name, str) else "??:rel"
        s = f"checkRel({n}, {print_arg(c.a)}, {print_arg(c.b)})"
    elif isinstance(c, Not):
        s = "!" + print_cond(c.cond, 3)
    elif isinstance(c, (And, Or)):
        p = _prec(c)
        op = " && " if isinstance(c, And) else " || "
        s = print_cond(c.left, p) + op + print_cond(c.right, p + 1)
    else:
        raise ValidationError(f"not a condition: {c!r}")
    return f"({s})" if _prec(c) < min_prec else s


def print_program(node, indent: int = 0) -> str:
    return "\n".join(_lines(node, indent)) + "\n"


def _lines(node, ind: int) -> list:
    pad = "  " * ind
    if isinstance(node, Seq):
        out: list = []
        for it in node.items:
            out.extend(_lines(it, ind))
        return out
    if isinstance(node, Foreach):
        return [f"{pad}foreach ({node.var} in {print_scan(node.scan)}) {{"] + _lines(node.body, ind + 1) + [pad + "}"]
    if isinstance(node, If):
        return [f"{pad}if ({print_cond(node.cond)}) {{"] + _lines(node.body, ind + 1) + [pad + "}"]
    if isinstance(node, Let):
        idx = "??:index" if isinstance(node.index, HoleIndex) else str(node.index)
        return [f"{pad}let {node.var} := getNth({print_scan(node.scan)}, {idx});"]
    if isinstance(node, Goto):
        return [f"{pad}goto({print_arg(node.arg)});"]
    if isinstance(node, ActUnary):
        return [f"{pad}actUnary({node.action}, {print_arg(node.arg)});"]
    if isinstance(node, ActBinary):
        return [f"{pad}actBinary({node.action}, {print_arg(node.arg1)}, {print_arg(node.arg2)});"]
    if isinstance(node, Skip):
        return [pad + "skip;"]
    raise ValidationError(f"not a statement: {node!r}")


def load_program(path):
    return parse_program(Path(path).read_text(encoding="utf-8"))
