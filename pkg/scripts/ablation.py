"""Pruning ablation over the task suite at one or more scales.

    python scripts/ablation.py --scales easy medium --seeds 0 1 --timeout 120
"""
import argparse
import json
from pathlib import Path

from demosynth.bench import bench, format_table
from demosynth.synth import SynthConfig

ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scales", nargs="+", default=["easy"], choices=("easy", "medium", "hard"))
    ap.add_argument("--seeds", nargs="+", type=int, default=[0])
    ap.add_argument("--timeout", type=float, default=120.0)
    ap.add_argument("--suite", default=str(ROOT / "suite"))
    ap.add_argument("--json", help="also write all rows here")
    args = ap.parse_args()

    rows = []
    for scale in args.scales:
        for seed in args.seeds:
            got = bench(args.suite, scale, seed, SynthConfig(timeout=args.timeout), ablation=True,
                        progress=lambda r: print(f"  {r.task} {r.scale} prune={r.prune}: {r.outcome}", flush=True))
            rows.extend(got)
            print(f"\nscale={scale} seed={seed}")
            print(format_table(got))
            on = {r.task: r for r in got if r.prune}
            off = {r.task: r for r in got if not r.prune}
            for t in on:
                if on[t].outcome == off[t].outcome == "solved":
                    print(f"  {t:<28} reduction {off[t].partials / max(1, on[t].partials):6.1f}x")
    if args.json:
        Path(args.json).write_text(json.dumps([r.to_json() for r in rows], indent=1) + "\n")


if __name__ == "__main__":
    main()
