"""Top-level synthesis loop: regex stream, sketch stream, sketch completion."""
from __future__ import annotations

import multiprocessing as mp
import os
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .completer import CompletionResult, Limits, complete_sketch, make_model
from .dsl import Demonstration, consistent, print_program
from .learner import RegexCandidateStream
from .pruner import Pruner
from .regexcore import abstract_trace, regex_print
from .sketcher import Sketch, base_sketches, with_extra_lets


@dataclass
class SynthConfig:
    timeout: float = 120.0
    jobs: int = 1
    prune: bool = True
    scorer: str = "default"
    scorer_url: str | None = None
    cooccurrence: dict | None = None
    max_regexes: int = 64
    max_extra_lets: int = 2
    max_index: int = 2
    max_cond_atoms: int = 2
    node_budget: int = 200_000
    widen_after: int = 8


@dataclass
class SynthesisReport:
    outcome: str  # solved | timeout | exhausted
    program: object | None = None
    sketches_tried: int = 0
    partials_dequeued: int = 0
    pruned: int = 0
    wall_time: float = 0.0
    regex: str | None = None
    sketch: str | None = None
    regexes: list = field(default_factory=list)

    @property
    def program_text(self) -> str | None:
        return None if self.program is None else print_program(self.program)

    def to_json(self) -> dict:
        return {"outcome": self.outcome, "program": self.program_text, "sketchesTried": self.sketches_tried,
                "partialsDequeued": self.partials_dequeued, "prunedCount": self.pruned,
                "wallTime": round(self.wall_time, 4), "regex": self.regex}


def sketch_stream(samples: Sequence, max_regexes: int = 64, max_extra_lets: int = 2,
                  regex_log: list | None = None) -> Iterator[Sketch]:
    """Sketches for every candidate regex, fewer extra lets first."""
    stream = RegexCandidateStream(samples, max_regexes)
    cached: list = []
    for n in range(max_extra_lets + 1):
        k = 0
        while True:
            if k < len(cached):
                r, bases = cached[k]
            else:
                r = next(stream, None)
                if r is None:
                    break
                if regex_log is not None:
                    regex_log.append(r)
                bases = list(base_sketches(r))
                cached.append((r, bases))
            k += 1
            for sk in bases:
                yield from with_extra_lets(sk, n)


# per-process state for parallel workers
_W: dict = {}


def _worker_init(demos, cfg, cancel) -> None:
    _W["demos"] = demos
    _W["cfg"] = cfg
    _W["cancel"] = cancel
    _W["model"] = make_model(cfg.scorer, cfg.scorer_url, cfg.cooccurrence)
    _W["pruner"] = Pruner(demos, cfg.max_index, cfg.widen_after) if cfg.prune else None


def _worker_run(sk: Sketch, deadline_wall: float) -> CompletionResult:
    cfg = _W["cfg"]
    cancel = _W["cancel"]
    limits = Limits(cfg.max_index, cfg.max_cond_atoms, cfg.node_budget,
                    time.monotonic() + max(0.0, deadline_wall - time.time()), cancel.is_set)
    res = complete_sketch(sk, _W["demos"], _W["model"], limits, _W["pruner"])
    if res.program is not None:
        cancel.set()
    return res


def synthesize(demos: Sequence[Demonstration], cfg: SynthConfig | None = None,
               progress: Callable[[str], None] | None = None) -> SynthesisReport:
    cfg = cfg or SynthConfig()
    t0 = time.monotonic()
    deadline = t0 + cfg.timeout
    samples = [abstract_trace(d.trace, d.env) for d in demos]
    regex_log: list = []
    report = SynthesisReport("exhausted", regexes=regex_log)
    if cfg.timeout <= 0:
        report.outcome = "timeout"
        return report
    sketches = sketch_stream(samples, cfg.max_regexes, cfg.max_extra_lets, regex_log)
    if cfg.jobs > 1:
        _parallel(demos, cfg, sketches, deadline, report, progress)
    else:
        model = make_model(cfg.scorer, cfg.scorer_url, cfg.cooccurrence)
        pruner = Pruner(demos, cfg.max_index, cfg.widen_after) if cfg.prune else None
        for sk in sketches:
            if time.monotonic() >= deadline:
                report.outcome = "timeout"
                break
            limits = Limits(cfg.max_index, cfg.max_cond_atoms, cfg.node_budget, deadline)
            res = complete_sketch(sk, demos, model, limits, pruner)
            _account(report, sk, res, progress)
            if res.program is not None:
                break
            if res.reason == "deadline":
                report.outcome = "timeout"
                break
    report.wall_time = time.monotonic() - t0
    if report.program is not None and not consistent(report.program, demos):
        raise AssertionError("synthesized program is inconsistent with the demonstrations")
    return report


def _account(report: SynthesisReport, sk: Sketch, res: CompletionResult, progress) -> None:
    report.sketches_tried += 1
    report.partials_dequeued += res.dequeued
    report.pruned += res.pruned
    if progress is not None:
        progress(f"sketch {report.sketches_tried}: {res.reason} ({res.dequeued} dequeued) "
                 f"regex {regex_print(sk.regex) if sk.regex is not None else '-'}")
    if res.program is not None and report.program is None:
        report.outcome = "solved"
        report.program = res.program
        report.regex = regex_print(sk.regex) if sk.regex is not None else None
        report.sketch = print_program(sk.program)


def _parallel(demos, cfg: SynthConfig, sketches, deadline: float, report: SynthesisReport, progress) -> None:
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    cancel = ctx.Event()
    deadline_wall = time.time() + (deadline - time.monotonic())
    running: dict = {}
    exhausted_stream = False
    with ProcessPoolExecutor(cfg.jobs, mp_context=ctx, initializer=_worker_init,
                             initargs=(list(demos), cfg, cancel)) as pool:
        while True:
            while not exhausted_stream and not cancel.is_set() and len(running) < cfg.jobs:
                sk = next(sketches, None)
                if sk is None:
                    exhausted_stream = True
                    break
                running[pool.submit(_worker_run, sk, deadline_wall)] = sk
            if not running:
                break
            left = deadline - time.monotonic()
            done, _ = wait(list(running), timeout=max(0.0, left), return_when=FIRST_COMPLETED)
            if not done:
                cancel.set()
                report.outcome = "timeout"
                done, _ = wait(list(running))
            for f in done:
                sk = running.pop(f)
                res = f.result()
                _account(report, sk, res, progress)
                if res.reason == "deadline" and report.program is None:
                    report.outcome = "timeout"
            if report.program is not None or report.outcome == "timeout":
                cancel.set()
                for f in list(running):
                    _account(report, running.pop(f), f.result(), progress)
                break


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
