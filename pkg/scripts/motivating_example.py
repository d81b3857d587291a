"""Walk through the sheet-collecting example: candidate regexes, pruning, and the final program."""
from pathlib import Path

from demosynth.cli import load_manifest
from demosynth.dsl import load_program, print_program, run
from demosynth.envgen import perturb_env
from demosynth.pruner import Pruner
from demosynth.regexcore import abstract_trace, format_tokens, regex_print
from demosynth.synth import SynthConfig, synthesize

DATA = Path(__file__).resolve().parents[1] / "src" / "demosynth" / "data"


def main() -> None:
    demos = load_manifest(DATA / "motivating_manifest.json")
    d = demos[0]
    print("demo tokens:", format_tokens(abstract_trace(d.trace, d.env)))

    pr = Pruner(demos)
    fig = load_program(DATA / "motivating_unrealizable.dsl")
    _, r = pr.explain(fig)
    print("\nsingle-loop partial program:")
    print(print_program(fig))
    print("over-approximation:", regex_print(r))
    print("compatible:", pr.compatible(fig))

    rep = synthesize(demos, SynthConfig(timeout=60))
    print(f"\n{rep.outcome} after {rep.sketches_tried} sketches, {rep.partials_dequeued} partial programs "
          f"({rep.pruned} pruned), {rep.wall_time:.2f}s")
    print("regexes tried:")
    for x in rep.regexes:
        print("  ", regex_print(x))
    print(rep.program_text)

    truth = load_program(DATA / "motivating_truth.dsl")
    for seed in range(3):
        v = perturb_env(d.env, seed)
        same = run(rep.program, v)[0] == run(truth, v)[0]
        print(f"variant {seed}: {len(v.locations)} locations, {len(v.objects)} objects, "
              f"matches hand-written policy: {same}")


if __name__ == "__main__":
    main()
