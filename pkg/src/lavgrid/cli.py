"""Command line entry point: ``lavgrid {gen,run,ablate,replay,config}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import report
from .config import dump_config, load_config, parse_seed_range
from .harness import (compute_metrics, make_setup, read_trace, replay_trace, run_ablation,
                      run_episodes, seed_pool, write_trace)
from .scenefile import dump_scene
from .taskgen import ground_truth_plan

log = logging.getLogger("lavgrid")


def _task_record(setup) -> dict:
    t = setup.task
    return {
        "seed": setup.seed,
        "pool": seed_pool(setup.seed),
        "shape": t.shape,
        "object": t.object_type.value,
        "receptacle": t.receptacle_type.value if t.receptacle_type else None,
        "goal_conditions": [str(c) for c in t.goal_conditions],
        "expert_path_length": t.expert_path_length,
        "instruction": setup.instruction.text,
        "plan": str(ground_truth_plan(t)),
        "scene_file": f"scene_{setup.seed:06d}.map",
    }


def cmd_gen(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for seed in parse_seed_range(args.seeds):
        setup = make_setup(seed, cfg)
        text = dump_scene(setup.scene)
        (out / f"scene_{seed:06d}.map").write_text(text)
        lines.append(json.dumps(_task_record(setup)))
        if args.dump_scene:
            sys.stdout.write(text + "\n")
    (out / "tasks.jsonl").write_text("\n".join(lines) + "\n")
    log.info("wrote %d task bundles to %s", len(lines), out)
    return 0


def _run_config(args):
    cfg = load_config(args.config)
    if getattr(args, "lexicon", None):
        cfg = replace(cfg, lexicon=args.lexicon)
    if getattr(args, "nav", None):
        cfg = replace(cfg, navigator=args.nav)
    return cfg


def cmd_run(args) -> int:
    cfg = _run_config(args)
    if args.oracle_language:
        cfg = replace(cfg, oracle_language=True)
    if args.oracle_vision:
        cfg = replace(cfg, oracle_vision=True)
    out = Path(args.out)
    traces = run_episodes(parse_seed_range(args.seeds), cfg)
    for t in traces:
        write_trace(t, out / "traces")
    overall = compute_metrics(traces)
    pools = {}
    for pool in ("seen", "unseen"):
        subset = [t for t in traces if t.pool == pool]
        if subset:
            pools[pool] = compute_metrics(subset)
    rows = [("all", overall)] + list(pools.items())
    (out / "metrics.csv").write_text(report.format_csv(rows))
    text = report.format_pool_table(pools) + "\n" + report.format_table(rows)
    text += "\nfailure reasons\n" + report.format_failures(overall)
    (out / "metrics.txt").write_text(text)
    report.plot_metric_rows(rows, out / "metrics.png", title=f"{len(traces)} episodes")
    report.plot_failures(overall, out / "failures.png")
    (out / "config.ini").write_text(dump_config(cfg))
    sys.stdout.write(text)
    return 0


def cmd_ablate(args) -> int:
    cfg = _run_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_ablation(cfg, list(parse_seed_range(args.seeds)))
    rows = [(name, rep) for name, rep, _ in results]
    (out / "ablation.csv").write_text(report.format_csv(rows))
    text = report.format_table(rows)
    (out / "ablation.txt").write_text(text)
    report.plot_metric_rows(rows, out / "ablation.png", title="oracle ablation")
    if args.traces:
        for name, _, traces in results:
            slug = name.lower().replace(" & ", "_").replace(" ", "_")
            for t in traces:
                write_trace(t, out / "traces" / slug)
    (out / "config.ini").write_text(dump_config(cfg))
    sys.stdout.write(text)
    return 0


def cmd_replay(args) -> int:
    cfg = load_config(args.config)
    paths = sorted(Path(args.traces).glob("episode_*.jsonl"))
    bad = 0
    for path in paths:
        trace = read_trace(path)
        again = replay_trace(trace, cfg)
        same = ([s.result for s in again.steps] == [s.result for s in trace.steps]
                and again.goal_fraction == trace.goal_fraction
                and again.success == trace.success)
        if not same:
            bad += 1
            sys.stdout.write(f"MISMATCH {path.name}\n")
    sys.stdout.write(f"replayed {len(paths)} traces, {bad} mismatches\n")
    return 1 if bad else 0


def cmd_config(args) -> int:
    sys.stdout.write(dump_config(load_config(args.config)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lavgrid", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate scene/task/instruction bundles")
    g.add_argument("--seeds", required=True, help="A..B inclusive")
    g.add_argument("--config")
    g.add_argument("--out", required=True)
    g.add_argument("--dump-scene", action="store_true", help="also print each scene map")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run episodes and write traces and metrics")
    r.add_argument("--seeds", required=True)
    r.add_argument("--config")
    r.add_argument("--oracle-language", action="store_true")
    r.add_argument("--oracle-vision", action="store_true")
    r.add_argument("--nav", choices=("dfs", "expert"))
    r.add_argument("--lexicon")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("ablate", help="four-row oracle ablation")
    a.add_argument("--seeds", required=True)
    a.add_argument("--config")
    a.add_argument("--nav", choices=("dfs", "expert"))
    a.add_argument("--lexicon")
    a.add_argument("--out", required=True)
    a.add_argument("--traces", action="store_true", help="also write per-row traces")
    a.set_defaults(func=cmd_ablate)

    rp = sub.add_parser("replay", help="re-simulate traces and compare outcomes")
    rp.add_argument("--traces", required=True, help="directory of episode_*.jsonl")
    rp.add_argument("--config")
    rp.set_defaults(func=cmd_replay)

    c = sub.add_parser("config", help="print the effective config file")
    c.add_argument("--config")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
