"""Best-first sketch completion.

Partial programs live in a max-score worklist. Each step takes the most
likely one, checks it (consistency when complete, the pruner otherwise),
picks a hole and enqueues one child per candidate filler, weighted by the
completion model.
"""
from __future__ import annotations

import heapq
import itertools
import json
import time
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .dsl import (ActBinary, ActUnary, And, CheckProp, CheckRel, Demonstration, Foreach, Goto, HoleCond,
                  HoleIndex, HoleLocType, HoleName, HoleObjType, HoleVar, If, Let, Not, Or, ScanLoc, ScanObj,
                  Seq, Skip, Var, consistent, iter_holes, iter_nodes, print_cond, replace_at, scope_at)
from .errors import EmptyCandidateSet, UnsupportedHoleKind, ValidationError
from .regexcore import abstract_trace

_RANK = {HoleObjType: 0, HoleLocType: 0, HoleVar: 1, HoleCond: 2, HoleName: 2, HoleIndex: 3}


@dataclass
class Limits:
    max_index: int = 2
    max_cond_atoms: int = 2
    node_budget: int = 200_000
    deadline: float | None = None  # absolute time.monotonic() value
    cancelled: Callable[[], bool] | None = None


@dataclass
class PartialProgram:
    ast: object
    score: float = 1.0
    derivation: tuple = ()


@dataclass
class CompletionResult:
    program: object | None
    reason: str  # solved | exhausted | node-budget | deadline | cancelled
    dequeued: int = 0
    pruned: int = 0


class Worklist:
    """Max-score priority queue, FIFO among equal scores."""

    def __init__(self):
        self._heap: list = []
        self._seq = itertools.count()

    def push(self, p: PartialProgram) -> None:
        heapq.heappush(self._heap, (-p.score, next(self._seq), p))

    def pop(self) -> PartialProgram:
        return heapq.heappop(self._heap)[2]

    def __len__(self) -> int:
        return len(self._heap)


def next_hole(ast) -> tuple:
    """(path, hole): scan types first, then variables, then conditions, then indices."""
    best = None
    for path, h in iter_holes(ast):
        r = _RANK[type(h)]
        if best is None or r < best[0]:
            best = (r, path, h)
            if r == 0:
                break
    if best is None:
        raise ValueError("program has no holes")
    return best[1], best[2]


# ---------------------------------------------------------------- fill

class DemoContext:
    """Facts about the demonstrations that Fill and the models consult."""

    def __init__(self, demos: Sequence[Demonstration]):
        self.demos = list(demos)
        self.vocab = demos[0].env.vocab
        self.prop_types: dict = {}
        self.rel_types: dict = {}
        for d in self.demos:
            env = d.env
            for p, o in env.props:
                self.prop_types.setdefault(env.obj_types[o], set()).add(p)
            for r, a, b in env.rels:
                self.rel_types.setdefault((env.obj_types[a], env.obj_types[b]), set()).add(r)
        self.demo_names: set = set()
        for d in self.demos:
            for tok in abstract_trace(d.trace, d.env):
                self.demo_names.add(tok.name if tok.kind == "G" else tok.types[0])
                self.demo_names.update(tok.types)

    def props_for(self, t: str) -> list:
        got = self.prop_types.get(t, set())
        return [p for p in self.vocab.properties if p in got]

    def rels_for(self, a: str, b: str) -> list:
        got = self.rel_types.get((a, b), set())
        return [r for r in self.vocab.relations if r in got]


def cond_atoms(scope: dict, ctx: DemoContext) -> list:
    atoms = []
    typed = [(v, t) for v, t in scope.items() if t is not None and t in ctx.vocab.object_types]
    for v, t in typed:
        for p in ctx.props_for(t):
            atoms.append(CheckProp(p, Var(v)))
    for (v1, t1), (v2, t2) in itertools.permutations(typed, 2):
        for r in ctx.rels_for(t1, t2):
            atoms.append(CheckRel(r, Var(v1), Var(v2)))
    return atoms


def cond_candidates(scope: dict, ctx: DemoContext, max_atoms: int = 2) -> list:
    atoms = cond_atoms(scope, ctx)
    out = list(atoms) + [Not(a) for a in atoms]
    if max_atoms >= 2:
        pairs = list(itertools.combinations(atoms, 2))
        out += [And(a, b) for a, b in pairs]
        out += [Or(a, b) for a, b in pairs]
    return out


def fill(ast, path, hole, ctx: DemoContext, limits: Limits | None = None) -> list:
    limits = limits or Limits()
    vocab = ctx.vocab
    if isinstance(hole, HoleObjType):
        out = list(vocab.object_types)
    elif isinstance(hole, HoleLocType):
        out = list(vocab.location_types)
    elif isinstance(hole, HoleVar):
        out = [Var(v) for v, t in scope_at(ast, path).items() if t == hole.type]
    elif isinstance(hole, HoleIndex):
        out = list(range(limits.max_index + 1))
    elif isinstance(hole, HoleCond):
        out = cond_candidates(scope_at(ast, path), ctx, limits.max_cond_atoms)
    elif isinstance(hole, HoleName):
        out = list(vocab.properties if hole.kind == "prop" else vocab.relations)
    else:
        raise ValidationError(f"unknown hole {hole!r}")
    if not out:
        raise EmptyCandidateSet(f"no candidates for {type(hole).__name__} at {path}")
    return out


# ---------------------------------------------------------------- models

def candidate_names(c, ast=None, path=None) -> set:
    if isinstance(c, str):
        return {c}
    if isinstance(c, Var):
        t = scope_at(ast, path).get(c.name) if ast is not None else None
        return {t} if t else set()
    if isinstance(c, int):
        return set()
    names: set = set()
    scope = scope_at(ast, path) if ast is not None else {}
    for _, n in iter_nodes(c):
        if isinstance(n, (CheckProp, CheckRel)) and isinstance(n.name, str):
            names.add(n.name)
        if isinstance(n, Var) and scope.get(n.name):
            names.add(scope[n.name])
    return names


def committed_names(ast) -> set:
    out: set = set()
    for _, n in iter_nodes(ast):
        if isinstance(n, (ScanObj, ScanLoc)) and isinstance(n.type, str):
            out.add(n.type)
        elif isinstance(n, HoleVar):
            out.add(n.type)
        elif isinstance(n, (ActUnary, ActBinary)):
            out.add(n.action)
        elif isinstance(n, (CheckProp, CheckRel)) and isinstance(n.name, str):
            out.add(n.name)
    return out


def load_cooccurrence(path) -> dict:
    table: dict = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValidationError(f"{path}:{n}: expected 'nameA nameB weight'")
        try:
            w = float(parts[2])
        except ValueError:
            raise ValidationError(f"{path}:{n}: weight {parts[2]!r} is not a number") from None
        table[(parts[0], parts[1])] = w
        table[(parts[1], parts[0])] = w
    return table


def default_cooccurrence() -> dict:
    return load_cooccurrence(Path(__file__).parent / "data" / "cooccurrence.txt")


class UniformModel:
    name = "uniform"

    def score(self, cands, ast, path, hole, ctx) -> list:
        return [1.0 / len(cands)] * len(cands)


class DefaultModel:
    """Deterministic stand-in for a language model: demo relevance plus co-occurrence."""

    name = "default"

    def __init__(self, cooccurrence: dict | None = None):
        self.table = default_cooccurrence() if cooccurrence is None else cooccurrence

    def weight(self, c, ast, path, ctx, committed) -> float:
        # connectives halve the mean atom weight so simpler guards rank first
        if isinstance(c, Not):
            return self.weight(c.cond, ast, path, ctx, committed) / 2
        if isinstance(c, (And, Or)):
            return (self.weight(c.left, ast, path, ctx, committed)
                    + self.weight(c.right, ast, path, ctx, committed)) / 4
        names = candidate_names(c, ast, path)
        w = 1.0
        if names & ctx.demo_names:
            w += 3.0
        for n in names:
            for m in committed:
                w += self.table.get((n, m), 0.0)
        return w

    def score(self, cands, ast, path, hole, ctx) -> list:
        committed = committed_names(ast)
        ws = [self.weight(c, ast, path, ctx, committed) for c in cands]
        total = sum(ws)
        return [w / total for w in ws]


class HttpModel:
    """Asks a masked-fill service for candidate scores; falls back to DefaultModel."""

    name = "http"

    def __init__(self, url: str, fallback=None, timeout: float = 1.0):
        self.url = url
        self.fallback = fallback or DefaultModel()
        self.timeout = timeout

    def score(self, cands, ast, path, hole, ctx) -> list:
        try:
            prompt = render_prompt(ast, path)
        except UnsupportedHoleKind:
            return self.fallback.score(cands, ast, path, hole, ctx)
        labels = [candidate_label(c) for c in cands]
        body = json.dumps({"prompt": prompt, "candidates": labels}).encode()
        req = urllib.request.Request(self.url, body, {"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                data = json.loads(resp.read().decode())
            scores = data.get("scores", data)
            ws = [max(float(scores.get(l, 0.0)), 1e-9) for l in labels]
        except Exception:
            return self.fallback.score(cands, ast, path, hole, ctx)
        total = sum(ws)
        return [w / total for w in ws]


def candidate_label(c) -> str:
    if isinstance(c, (str, int)):
        return str(c)
    if isinstance(c, Var):
        return c.name
    return print_cond(c)


def make_model(name: str = "default", url: str | None = None, cooccurrence: dict | None = None):
    if name == "uniform":
        return UniformModel()
    if name == "default":
        return DefaultModel(cooccurrence)
    if name == "http":
        if not url:
            raise ValidationError("--scorer http needs --scorer-url")
        return HttpModel(url, DefaultModel(cooccurrence))
    raise ValidationError(f"unknown scorer {name!r}")


# ---------------------------------------------------------------- search

def _search(sketch_ast, demos, model, limits: Limits, pruner, emit_all: bool) -> Iterator:
    ctx = DemoContext(demos)
    wl = Worklist()
    wl.push(PartialProgram(sketch_ast))
    stats = {"dequeued": 0, "pruned": 0}
    while len(wl):
        if limits.cancelled is not None and limits.cancelled():
            yield ("stop", "cancelled", stats)
            return
        if limits.deadline is not None and time.monotonic() >= limits.deadline:
            yield ("stop", "deadline", stats)
            return
        if stats["dequeued"] >= limits.node_budget:
            yield ("stop", "node-budget", stats)
            return
        p = wl.pop()
        stats["dequeued"] += 1
        try:
            path, hole = next_hole(p.ast)
        except ValueError:
            if emit_all:
                yield ("program", p.ast, stats)
            elif consistent(p.ast, demos):
                yield ("solved", p.ast, stats)
                return
            continue
        if pruner is not None and not pruner.compatible(p.ast):
            stats["pruned"] += 1
            continue
        try:
            cands = fill(p.ast, path, hole, ctx, limits)
        except EmptyCandidateSet:
            continue
        probs = model.score(cands, p.ast, path, hole, ctx)
        for c, pr in zip(cands, probs):
            wl.push(PartialProgram(replace_at(p.ast, path, c), p.score * pr, p.derivation + ((path, c),)))
    yield ("stop", "exhausted", stats)


def complete_sketch(sketch, demos: Sequence[Demonstration], model=None, limits: Limits | None = None,
                    pruner=None) -> CompletionResult:
    ast = getattr(sketch, "program", sketch)
    model = model or DefaultModel()
    limits = limits or Limits()
    for kind, val, stats in _search(ast, demos, model, limits, pruner, emit_all=False):
        if kind == "solved":
            return CompletionResult(val, "solved", stats["dequeued"], stats["pruned"])
        if kind == "stop":
            return CompletionResult(None, val, stats["dequeued"], stats["pruned"])
    return CompletionResult(None, "exhausted")


def enumerate_completions(sketch, demos: Sequence[Demonstration], model=None, limits: Limits | None = None,
                          pruner=None) -> Iterator:
    """Every complete program the search dequeues, in dequeue order."""
    ast = getattr(sketch, "program", sketch)
    for kind, val, _ in _search(ast, demos, model or DefaultModel(), limits or Limits(), pruner, emit_all=True):
        if kind == "program":
            yield val


# ---------------------------------------------------------------- prompts

_BINARY_SPLIT = {"put-in": ("put", "in"), "put-on": ("put", "on"), "pour-into": ("pour", "into"),
                 "scrub-with": ("scrub", "with")}


def _split_binary(name: str) -> tuple:
    if name in _BINARY_SPLIT:
        return _BINARY_SPLIT[name]
    if "-" in name:
        verb, prep = name.rsplit("-", 1)
        return verb.replace("-", " "), prep
    return name, "to"


class _Prompter:
    def __init__(self, ast, target):
        self.ast = ast
        self.target = target
        self.masks: dict = {}
        self.let_vars: set = set()
        self.used: set = set()

    def mask(self, path) -> str:
        if path not in self.masks:
            self.masks[path] = len(self.masks) + 1
        return f"[M]_{self.masks[path]}"

    def type_text(self, t, path) -> str:
        return t if isinstance(t, str) else self.mask(path)

    def var_text(self, arg, path, scope_types: dict) -> str:
        if isinstance(arg, HoleVar):
            return arg.type
        if isinstance(arg, Var):
            t = scope_types.get(arg.name)
            text = t if isinstance(t, str) else "thing"
            if arg.name in self.let_vars and arg.name not in self.used:
                self.used.add(arg.name)
                return "a " + text
            self.used.add(arg.name)
            return text
        return str(arg)

    def cond_text(self, c, path, st) -> str:
        if isinstance(c, HoleCond):
            return self.mask(path)
        if isinstance(c, Not):
            inner = self.cond_text(c.cond, path + ("cond",), st)
            return inner.replace(" is ", " is not ", 1) if " is " in inner else "not " + inner
        if isinstance(c, (And, Or)):
            op = " and " if isinstance(c, And) else " or "
            return self.cond_text(c.left, path + ("left",), st) + op + self.cond_text(c.right, path + ("right",), st)
        name = c.name if isinstance(c.name, str) else self.mask(path + ("name",))
        if isinstance(c, CheckProp):
            return f"{self._plain(c.arg, st)} is {name}"
        return f"{self._plain(c.a, st)} is {name} {self._plain(c.b, st)}"

    @staticmethod
    def _plain(arg, st) -> str:
        if isinstance(arg, HoleVar):
            return arg.type
        t = st.get(arg.name) if isinstance(arg, Var) else None
        return t if isinstance(t, str) else "thing"

    def clauses(self, node, path, st: dict) -> list:
        out = []
        if isinstance(node, Seq):
            st = dict(st)
            for i, it in enumerate(node.items):
                out.extend(self.clauses(it, path + (i,), st))
                if isinstance(it, Let):
                    st[it.var] = it.scan.type if isinstance(it.scan.type, str) else None
            return out
        if isinstance(node, Foreach):
            t = self.type_text(node.scan.type, path + ("scan", "type"))
            head = f"For each {t};" if isinstance(node.scan, ScanLoc) else f"For each {t} do;"
            inner = dict(st)
            inner[node.var] = node.scan.type if isinstance(node.scan.type, str) else None
            return [head] + self.clauses(node.body, path + ("body",), inner)
        if isinstance(node, Let):
            if isinstance(node.index, HoleIndex) and path + ("index",) == self.target:
                raise UnsupportedHoleKind("index holes are never prompted")
            self.let_vars.add(node.var)
            return [f"Look for {self.type_text(node.scan.type, path + ('scan', 'type'))}s;"]
        if isinstance(node, Goto):
            return [f"Go to {self.var_text(node.arg, path + ('arg',), st)};"]
        if isinstance(node, ActUnary):
            return [f"{node.action.replace('-', ' ')} {self.var_text(node.arg, path + ('arg',), st)};"]
        if isinstance(node, ActBinary):
            verb, prep = _split_binary(node.action)
            a = self.var_text(node.arg1, path + ("arg1",), st)
            b = self.var_text(node.arg2, path + ("arg2",), st)
            return [f"{verb} {a} {prep} {b};"]
        if isinstance(node, If):
            cond = self.cond_text(node.cond, path + ("cond",), st)
            body = [c.rstrip(";") for c in self.clauses(node.body, path + ("body",), st)]
            body = [b[0].lower() + b[1:] if b else b for b in body]
            return [f"If {cond}, " + " and ".join(body) + ";"]
        if isinstance(node, Skip):
            return []
        raise ValidationError(f"cannot render {node!r}")


def render_prompt(ast, path=None) -> str:
    """English rendering of a partial program; unfilled type and condition holes become masks."""
    if path is not None:
        h = ast
        for k in path:
            h = h.items[k] if isinstance(k, int) else getattr(h, k)
        if isinstance(h, HoleIndex):
            raise UnsupportedHoleKind("index holes are never prompted")
    pr = _Prompter(ast, path)
    clauses = pr.clauses(ast, (), {})
    clauses = [c[0].upper() + c[1:] for c in clauses if c]
    if clauses:
        clauses[-1] = clauses[-1][:-1] + "."
    return " ".join(clauses)
