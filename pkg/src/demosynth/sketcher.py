"""Regex to sketch translation with perception-completeness repair.

Every star becomes a loop whose scan type is a hole, every optional part
becomes a conditional with a hole guard, and every token becomes an atomic
statement whose arguments are typed variable holes. A sketch is perception
complete when each typed argument hole can be filled by some variable bound
earlier by a scan of that type; missing scans are added as `let` bindings.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .dsl import (ActBinary, ActUnary, Foreach, Goto, HoleCond, HoleIndex, HoleLocType, HoleObjType, HoleVar, If,
                  Let, ScanLoc, ScanObj, Seq, Skip, binders, count_holes, get_at, iter_nodes, make_seq,
                  rename_vars, replace_at, stmts)
from .errors import AltPresent
from .regexcore import (Alt, Concat, Eps, Opt, Power, Regex, Star, StarPower, Tok, concat_items)


@dataclass(frozen=True)
class Sketch:
    program: object
    regex: Regex | None = None
    lets: int = 0
    extra_lets: int = 0

    @property
    def loops(self) -> int:
        return sum(1 for _, n in iter_nodes(self.program) if isinstance(n, Foreach))

    @property
    def hole_count(self) -> int:
        return count_holes(self.program)

    def expected_hole_count(self) -> int:
        args = sum(1 for _, n in iter_nodes(self.program) if isinstance(n, HoleVar))
        ifs = sum(1 for _, n in iter_nodes(self.program) if isinstance(n, If))
        return self.loops + args + ifs + self.lets + 2 * self.extra_lets


# ---------------------------------------------------------------- translation

def _stars(r: Regex) -> list:
    """Loop-producing nodes in preorder."""
    out: list = []

    def go(x):
        if isinstance(x, (Star, StarPower)):
            out.append(x)
            go(x.body)
        elif isinstance(x, (Concat, Alt)):
            go(x.left)
            go(x.right)
        elif isinstance(x, (Opt, Power)):
            go(x.body)
    go(r)
    return out


def _translate(r: Regex, kinds: list, counter: list):
    if isinstance(r, Eps):
        return Skip()
    if isinstance(r, Tok):
        t = r.tok
        if t.kind == "G":
            return Goto(HoleVar(t.name))
        if len(t.types) == 1:
            return ActUnary(t.name, HoleVar(t.types[0]))
        return ActBinary(t.name, HoleVar(t.types[0]), HoleVar(t.types[1]))
    if isinstance(r, Concat):
        return make_seq([_translate(x, kinds, counter) for x in concat_items(r)])
    if isinstance(r, Alt):
        raise AltPresent("regex contains alternation")
    if isinstance(r, Opt):
        return If(HoleCond(), _translate(r.body, kinds, counter))
    if isinstance(r, Power):
        return make_seq([_translate(r.body, kinds, counter) for _ in range(r.n)])
    # Star or StarPower
    kind = kinds[counter[0]]
    counter[0] += 1
    var = f"_l{counter[0]}"
    scan = ScanLoc(HoleLocType()) if kind == "loc" else ScanObj(HoleObjType())
    return Foreach(var, scan, _translate(r.body, kinds, counter))


def _starts_with_goto(r: Regex) -> bool:
    while True:
        if isinstance(r, Tok):
            return r.tok.kind == "G"
        if isinstance(r, Concat):
            r = r.left
        elif isinstance(r, (Star, StarPower, Opt, Power)):
            r = r.body
        else:
            return False


def loop_kind_combos(r: Regex) -> list:
    """Loop-kind assignments for the stars of r, preferred shape first."""
    stars = _stars(r)
    if not stars:
        return [()]
    pref = ["obj"] * len(stars)
    if _starts_with_goto(stars[0].body) and stars[0] is _outermost(r):
        pref[0] = "loc"
    combos = list(itertools.product(("obj", "loc"), repeat=len(stars)))

    def key(c):
        dev = sum(1 for a, b in zip(c, pref) if a != b)
        return (dev, sum(1 for a in c if a == "loc"), tuple(0 if a == "obj" else 1 for a in c))
    return sorted(combos, key=key)


def _outermost(r: Regex):
    stars = _stars(r)
    return stars[0] if stars else None


def translate(r: Regex, kinds) -> object:
    return _translate(r, list(kinds), [0])


def renumber(prog):
    mapping = {}
    for i, b in enumerate(binders(prog), 1):
        mapping[b.var] = f"v{i}"
    return rename_vars(prog, mapping)


# ---------------------------------------------------------------- perception completeness

def _uses(prog) -> list:
    """(path, type, kind) of every typed argument hole in program order."""
    out = []
    for path, n in iter_nodes(prog):
        if isinstance(n, Goto) and isinstance(n.arg, HoleVar):
            out.append((path + ("arg",), n.arg.type, "loc"))
        elif isinstance(n, ActUnary) and isinstance(n.arg, HoleVar):
            out.append((path + ("arg",), n.arg.type, "obj"))
        elif isinstance(n, ActBinary):
            for f in ("arg1", "arg2"):
                a = getattr(n, f)
                if isinstance(a, HoleVar):
                    out.append((path + (f,), a.type, "obj"))
    return out


def _binders_in_scope(prog, path) -> list:
    """(binder path, kind, committed type or None) for binders visible at path."""
    out = []
    node = prog
    cur: tuple = ()
    for k in path:
        if isinstance(node, Seq):
            for i, it in enumerate(node.items[:k]):
                if isinstance(it, Let):
                    out.append(_binder_info(it, cur + (i,)))
        elif isinstance(node, Foreach) and k == "body":
            out.append(_binder_info(node, cur))
        node = node.items[k] if isinstance(k, int) else getattr(node, k)
        cur = cur + (k,)
    return out


def _binder_info(b, path):
    kind = "obj" if isinstance(b.scan, ScanObj) else "loc"
    t = b.scan.type if isinstance(b.scan.type, str) else None
    return path, kind, t


def _solve(reqs: list) -> bool:
    """reqs: list of (type, committed_ok, candidate hole ids). Find a consistent hole typing."""
    assign: dict = {}

    def go(i: int) -> bool:
        if i == len(reqs):
            return True
        t, ok, holes = reqs[i]
        if ok or any(assign.get(h) == t for h in holes):
            return go(i + 1)
        for h in holes:
            if h not in assign:
                assign[h] = t
                if go(i + 1):
                    return True
                del assign[h]
        return False
    return go(0)


def _requirements(prog) -> list:
    reqs = []
    for path, t, kind in _uses(prog):
        ok = False
        holes = []
        for bpath, bkind, bt in _binders_in_scope(prog, path):
            if bkind != kind:
                continue
            if bt == t:
                ok = True
            elif bt is None:
                holes.append(bpath)
        reqs.append((t, ok, tuple(holes)))
    return reqs


def is_perception_complete(prog) -> tuple:
    """Return (complete, witness path or None)."""
    uses = _uses(prog)
    reqs = _requirements(prog)
    if _solve(reqs):
        return True, None
    for k in range(1, len(reqs) + 1):
        if not _solve(reqs[:k]):
            return False, uses[k - 1][0][:-1]
    return False, None  # unreachable


def _stmt_chain(prog, path) -> list:
    """(block path, index) pairs from the root block down to the statement at path."""
    chain = []
    bp: tuple = ()
    while True:
        blk = get_at(prog, bp)
        if isinstance(blk, Seq):
            idx = path[len(bp)]
            sp = bp + (idx,)
        else:
            idx = 0
            sp = bp
        chain.append((bp, idx))
        stmt = get_at(prog, sp)
        rest = path[len(sp):]
        if rest and rest[0] == "body" and isinstance(stmt, (Foreach, If)):
            bp = sp + ("body",)
        else:
            return chain


def insert_stmt(prog, block_path, idx, stmt):
    blk = get_at(prog, block_path)
    items = list(stmts(blk))
    items.insert(idx, stmt)
    return replace_at(prog, block_path, make_seq(items))


def _insert_let_for(prog, t: str, kind: str, var: str):
    paths = [p for p, ut, uk in _uses(prog) if ut == t and uk == kind]
    chains = [_stmt_chain(prog, p[:-1]) for p in paths]
    common = 0
    while all(len(c) > common for c in chains) and len({c[common][0] for c in chains}) == 1:
        common += 1
    bp = chains[0][common - 1][0]
    idx = min(c[common - 1][1] for c in chains)
    scan = ScanObj(t) if kind == "obj" else ScanLoc(t)
    return insert_stmt(prog, bp, idx, Let(var, scan, HoleIndex()))


def minimal_repairs(prog) -> list:
    """Every way of making prog perception complete with the fewest committed `let` scans.

    Returns a list of (program, number of inserted lets); ties come in the
    order the needed types first appear.
    """
    if is_perception_complete(prog)[0]:
        return [(prog, 0)]
    needed: list = []
    for _, t, kind in _uses(prog):
        if (t, kind) not in needed:
            needed.append((t, kind))
    for size in range(1, len(needed) + 1):
        found = []
        for subset in itertools.combinations(needed, size):
            cand = prog
            for i, (t, kind) in enumerate(subset):
                cand = _insert_let_for(cand, t, kind, f"_r{i}")
            if is_perception_complete(cand)[0]:
                found.append((cand, size))
        if found:
            return found
    raise AssertionError("perception repair failed")  # every use can get its own let


def repair_perception(prog) -> tuple:
    """Insert the fewest committed `let` scans that make prog perception complete.

    Returns (program, number of inserted lets).
    """
    return minimal_repairs(prog)[0]


# ---------------------------------------------------------------- streams

def base_sketches(r: Regex) -> Iterator[Sketch]:
    """Zero-extra-let sketches for every loop-kind choice, repaired."""
    for kinds in loop_kind_combos(r):
        for prog, n in minimal_repairs(translate(r, kinds)):
            yield Sketch(renumber(prog), r, n, 0)


def let_positions(prog) -> list:
    """(block path, index) for every point before a statement, in program order."""
    out = []
    for path, n in iter_nodes(prog):
        if path == () or (path and path[-1] == "body"):
            blk = n
            for i in range(len(stmts(blk))):
                out.append((path, i))
    return out


def with_extra_lets(sk: Sketch, n: int) -> Iterator[Sketch]:
    """Variants of sk with n additional `let` scans whose type and index are holes."""
    if n == 0:
        yield sk
        return
    base = sk.program
    positions = let_positions(base)
    choices = [(p, k) for p in range(len(positions)) for k in ("obj", "loc")]
    for combo in itertools.combinations_with_replacement(choices, n):
        if len(set(combo)) < len(combo):
            continue
        prog = base
        # insert from the last position backwards so earlier paths stay valid
        for p, k in sorted(combo, key=lambda c: (c[0], c[1]), reverse=True):
            bp, idx = positions[p]
            scan = ScanObj(HoleObjType()) if k == "obj" else ScanLoc(HoleLocType())
            prog = insert_stmt(prog, bp, idx, Let(f"_x{p}{k}", scan, HoleIndex()))
        yield Sketch(renumber(prog), sk.regex, sk.lets, n)


def regex_to_sketches(r: Regex, max_extra_lets: int = 2) -> Iterator[Sketch]:
    bases = list(base_sketches(r))
    for n in range(max_extra_lets + 1):
        for sk in bases:
            yield from with_extra_lets(sk, n)
