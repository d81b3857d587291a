"""Benchmark harness: run every suite task's ground truth to get a demo, then synthesize."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .dsl import Demonstration, load_program, run
from .envgen import generate_env
from .envmodel import Environment
from .synth import SynthConfig, synthesize


@dataclass
class BenchRow:
    task: str
    scale: str
    prune: bool
    outcome: str
    time: float
    partials: int
    pruned: int
    sketches: int

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["time"] = round(self.time, 4)
        return d


def suite_tasks(suite_dir) -> list:
    root = Path(suite_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"suite directory {root} does not exist")
    return sorted(p for p in root.iterdir() if (p / "truth.dsl").is_file())


def task_demo(task_dir: Path, env: Environment) -> Demonstration:
    trace, _ = run(load_program(task_dir / "truth.dsl"), env)
    if trace is None:
        raise ValueError(f"{task_dir.name}: ground truth does not terminate")
    return Demonstration(env, tuple(trace))


def bench(suite_dir, scale: str = "easy", seed: int = 0, cfg: SynthConfig | None = None,
          ablation: bool = False, progress: Callable[[BenchRow], None] | None = None) -> list:
    cfg = cfg or SynthConfig()
    env = generate_env(scale, seed)
    configs = [True, False] if ablation else [cfg.prune]
    rows = []
    for task in suite_tasks(suite_dir):
        demo = task_demo(task, env)
        for prune in configs:
            rep = synthesize([demo], dataclasses.replace(cfg, prune=prune))
            row = BenchRow(task.name, scale, prune, rep.outcome, rep.wall_time, rep.partials_dequeued,
                           rep.pruned, rep.sketches_tried)
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def format_table(rows: list) -> str:
    head = f"{'task':<28} {'scale':<6} {'prune':<5} {'outcome':<9} {'time(s)':>8} {'partials':>9} {'pruned':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r.task:<28} {r.scale:<6} {'on' if r.prune else 'off':<5} {r.outcome:<9} "
                     f"{r.time:>8.2f} {r.partials:>9} {r.pruned:>8}")
    return "\n".join(lines)
