"""Command-line front end."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bench import bench, format_table
from .completer import load_cooccurrence
from .dsl import Demonstration, format_trace, is_complete, load_program, load_trace, run, save_trace
from .envgen import env_stats, generate_env
from .envmodel import Vocabulary, env_from_json, env_to_json, load_env, save_env
from .errors import DemoSynthError, HoleEncountered
from .pruner import Pruner
from .regexcore import abstract_trace, format_tokens, regex_print
from .synth import SynthConfig, default_jobs, synthesize

EXIT_OK, EXIT_ERROR, EXIT_NO_PROGRAM = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _read_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DemoSynthError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def load_manifest(path) -> list:
    """Demonstrations listed in a manifest: {"vocabulary"?: file, "demos": [{"env", "trace"}]}."""
    path = Path(path)
    data = _read_json(path)
    if not isinstance(data, dict) or not isinstance(data.get("demos"), list) or not data["demos"]:
        raise DemoSynthError(f"{path}: manifest needs a nonempty 'demos' list")
    base = path.parent
    vocab = None
    if data.get("vocabulary"):
        v = _read_json(base / data["vocabulary"])
        vocab = Vocabulary.from_json(v.get("vocabulary", v))
    demos = []
    for i, d in enumerate(data["demos"]):
        if not isinstance(d, dict) or "env" not in d or "trace" not in d:
            raise DemoSynthError(f"{path}: demos[{i}] needs 'env' and 'trace'")
        env = env_from_json(_read_json(base / d["env"]), vocab) if vocab else load_env(base / d["env"])
        demos.append(Demonstration(env, load_trace(base / d["trace"])))
    v0 = demos[0].env.vocab
    if any(d.env.vocab != v0 for d in demos):
        raise DemoSynthError(f"{path}: demos do not share one vocabulary")
    return demos


def _config(args) -> SynthConfig:
    cooc = load_cooccurrence(args.cooccurrence) if args.cooccurrence else None
    return SynthConfig(timeout=args.timeout, jobs=args.jobs, prune=not args.no_prune, scorer=args.scorer,
                       scorer_url=args.scorer_url, cooccurrence=cooc, max_regexes=args.max_regexes,
                       max_extra_lets=args.max_extra_lets, max_index=args.max_getnth_index,
                       max_cond_atoms=args.max_cond_atoms, node_budget=args.node_budget,
                       widen_after=args.widen_after)


def _emit(args, data: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(data, indent=1))
    elif text:
        print(text)


# ---------------------------------------------------------------- subcommands

def cmd_synth(args) -> int:
    demos = load_manifest(args.manifest)
    progress = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    rep = synthesize(demos, _config(args), progress)
    if args.dump_regexes:
        Path(args.dump_regexes).write_text("".join(regex_print(r) + "\n" for r in rep.regexes), encoding="utf-8")
    if args.out and rep.program is not None:
        Path(args.out).write_text(rep.program_text, encoding="utf-8")
    text = rep.program_text.rstrip() if rep.program is not None else ""
    summary = (f"// {rep.outcome}: {rep.sketches_tried} sketches, {rep.partials_dequeued} partial programs, "
               f"{rep.pruned} pruned, {rep.wall_time:.2f}s")
    _emit(args, rep.to_json(), (text + "\n" if text else "") + summary)
    return EXIT_OK if rep.outcome == "solved" else EXIT_NO_PROGRAM


def cmd_run(args) -> int:
    prog = load_program(args.program)
    env = load_env(args.env)
    trace, final = run(prog, env)
    if args.trace_out:
        save_trace(trace, args.trace_out)
    if args.env_out:
        save_env(final, args.env_out)
    text = format_trace(trace).rstrip("\n")
    _emit(args, {"trace": [str(e) for e in trace], "finalEnv": env_to_json(final)}, text)
    return EXIT_OK


def cmd_abstract(args) -> int:
    env = load_env(args.env)
    toks = abstract_trace(load_trace(args.trace), env)
    _emit(args, {"tokens": [str(t) for t in toks]}, format_tokens(toks))
    return EXIT_OK


def cmd_check(args) -> int:
    prog = load_program(args.program)
    demos = load_manifest(args.manifest)
    dump = open(args.dump_abstraction, "w", encoding="utf-8") if args.dump_abstraction else None
    try:
        pr = Pruner(demos, args.max_getnth_index, args.widen_after, dump)
        verdict = pr.compatible(prog)
        regexes = []
        for i in range(len(demos)):
            res, r = pr.explain(prog, i)
            regexes.append(regex_print(r) if r is not None else f"infeasible: {res.reason}")
    finally:
        if dump is not None:
            dump.close()
    word = "compatible" if verdict else "incompatible"
    _emit(args, {"verdict": word, "regexes": regexes}, "\n".join([word] + [f"// demo {i}: {r}" for i, r in
                                                                        enumerate(regexes)]))
    return EXIT_OK if verdict else EXIT_NO_PROGRAM


def cmd_gen_demo(args) -> int:
    prog = load_program(args.program)
    if not is_complete(prog):
        raise HoleEncountered("cannot generate a demonstration from a program with holes")
    env_path = Path(args.env)
    env = load_env(env_path)
    trace, _ = run(prog, env)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_trace(trace, out / "demo.trace")
    env_ref = os.path.relpath(env_path.resolve(), out.resolve())
    manifest = {"demos": [{"env": env_ref, "trace": "demo.trace"}]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    _emit(args, {"manifest": str(out / "manifest.json"), "events": len(trace)},
          f"wrote {out / 'manifest.json'} ({len(trace)} events)")
    return EXIT_OK


def cmd_gen_env(args) -> int:
    env = generate_env(args.scale, args.seed)
    save_env(env, args.out)
    stats = env_stats(env)
    _emit(args, stats, " ".join(f"{k}={v}" for k, v in stats.items()))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _config(args)
    progress = (lambda r: print(f"{r.task} prune={'on' if r.prune else 'off'}: {r.outcome} {r.time:.2f}s",
                                file=sys.stderr)) if args.verbose else None
    rows = bench(args.suite, args.scale, args.seed, cfg, args.ablation, progress)
    _emit(args, {"rows": [r.to_json() for r in rows]}, format_table(rows))
    return EXIT_OK if all(r.outcome == "solved" for r in rows) else EXIT_NO_PROGRAM


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--timeout", type=float, default=120.0, help="global synthesis time limit in seconds")
    common.add_argument("--jobs", type=int, default=default_jobs(), help="concurrent sketch completions")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--max-regexes", type=int, default=64)
    search.add_argument("--max-extra-lets", type=int, default=2)
    search.add_argument("--max-getnth-index", type=int, default=2)
    search.add_argument("--max-cond-atoms", type=int, default=2, choices=(1, 2))
    search.add_argument("--node-budget", type=int, default=200_000)
    search.add_argument("--scorer", choices=("default", "uniform", "http"), default="default")
    search.add_argument("--scorer-url")
    search.add_argument("--cooccurrence", help="file of 'nameA nameB weight' lines")
    search.add_argument("--no-prune", action="store_true", help="disable unrealizability pruning")
    search.add_argument("--widen-after", type=int, default=8)

    p = _Parser(prog="demosynth", description="Synthesize household robot programs from demonstrations.")
    p.add_argument("--version", action="version", version=f"demosynth {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common, search], help="synthesize a program from a demo manifest")
    s.add_argument("manifest")
    s.add_argument("-o", "--out", help="write the program here")
    s.add_argument("--dump-regexes", help="write the candidate regexes here")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("run", parents=[common], help="run a program on an environment")
    s.add_argument("program")
    s.add_argument("env")
    s.add_argument("--trace-out")
    s.add_argument("--env-out")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("abstract", parents=[common], help="print the token string of a trace")
    s.add_argument("trace")
    s.add_argument("--env", required=True)
    s.set_defaults(func=cmd_abstract)

    s = sub.add_parser("check", parents=[common, search], help="decide whether a partial program can still fit")
    s.add_argument("program")
    s.add_argument("manifest")
    s.add_argument("--dump-abstraction", help="write each program with its over-approximating regex")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("gen-demo", parents=[common], help="record a demonstration by running a program")
    s.add_argument("program")
    s.add_argument("env")
    s.add_argument("-o", "--out", required=True, help="output directory")
    s.set_defaults(func=cmd_gen_demo)

    s = sub.add_parser("gen-env", parents=[common], help="generate a synthetic environment")
    s.add_argument("--scale", choices=("easy", "medium", "hard"), default="easy")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_gen_env)

    s = sub.add_parser("bench", parents=[common, search], help="run the task suite")
    s.add_argument("suite")
    s.add_argument("--scale", choices=("easy", "medium", "hard"), default="easy")
    s.add_argument("--ablation", action="store_true", help="run with and without pruning")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DemoSynthError, ValueError, OSError) as exc:
        print(f"demosynth: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
