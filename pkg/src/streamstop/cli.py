"""Command-line harness: simulate, evaluate, plot, inspect."""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .core import argmax_string
from .dataset_io import DatasetError, loop_clip, read_dataset, write_dataset
from .evaluation import (
    FAMILIES,
    FamilyResult,
    capped_budget_table,
    evaluate_families,
    make_policy,
    ordering_checks,
    pareto_front,
    run_episode,
)
from .plotting import PlotError, read_series, render_profiles
from .simulation import simulate_dataset

PARAM_COLUMNS = ("c", "delta", "min_stage", "size", "confidence", "gap", "k")
CLUSTER_FAMILIES = ("ncx", "ncr")


class CliError(Exception):
    pass


# config resolution


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else config_from_dict({})
    data = cfg.model_dump()
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        data["output_dir"] = args.out
    if getattr(args, "jobs", None) is not None:
        data["jobs"] = args.jobs
    policy = getattr(args, "policy", None)
    if policy and policy != "all":
        data["policies"] = {policy: data["policies"][policy]} if policy in data["policies"] else {}
    return config_from_dict(data)


def load_clips(cfg: ExperimentConfig) -> list:
    src = cfg.dataset
    if src.path is not None:
        clips = read_dataset(src.path)
        if not clips:
            raise DatasetError(f"{src.path}: dataset is empty")
    else:
        clips = simulate_dataset(src.simulate.dataset_spec(cfg.seed))
    if src.loop_to is not None:
        clips = [loop_clip(c, src.loop_to) for c in clips]
    return clips


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(cfg.to_yaml(), encoding="utf-8")
    return out


# CSV writers


def _num(v) -> str:
    # repr gives the shortest round-tripping form, so files are stable and lossless
    return "" if v is None else repr(v)


def _writer(path: Path):
    fh = path.open("w", newline="", encoding="utf-8")
    return fh, csv.writer(fh, lineterminator="\n")


def _point_row(p) -> list:
    return ([p.family, p.config_id] + [_num(p.policy_config.get(k)) for k in PARAM_COLUMNS]
            + [_num(p.mean_stage), _num(p.mean_distance)])


POINT_HEADER = ["policy", "config_id", *PARAM_COLUMNS, "mean_stage", "mean_distance"]


def write_outputs(out: Path, results: Dict[str, FamilyResult], caps: Sequence[float]) -> List[tuple]:
    profiles = {name: res.points() for name, res in results.items()}
    fronts = {name: pareto_front(profiles[name]) for name in CLUSTER_FAMILIES if name in profiles}

    fh, w = _writer(out / "profiles.csv")
    with fh:
        w.writerow(POINT_HEADER)
        for name in results:
            for p in profiles[name]:
                w.writerow(_point_row(p))

    fh, w = _writer(out / "pareto.csv")
    with fh:
        w.writerow(POINT_HEADER)
        for name, front in fronts.items():
            for p in front:
                w.writerow(_point_row(p))

    table = capped_budget_table(profiles, caps)
    fh, w = _writer(out / "table.csv")
    with fh:
        w.writerow(["policy", "cap", "mean_distance", "mean_stage", "config_id"])
        for cell in table.cells():
            p = cell.point
            w.writerow([cell.policy, _num(cell.cap), _num(cell.mean_distance),
                        "" if p is None else _num(p.mean_stage), "" if p is None else p.config_id])

    fh, w = _writer(out / "traces.csv")
    with fh:
        w.writerow(["policy", "config_id", "clip_id", "stopping_stage", "final_distance"])
        for name, res in results.items():
            for g in range(len(res.configs)):
                for j, clip_id in enumerate(res.clip_ids):
                    w.writerow([name, g, clip_id, int(res.stages[g, j]), _num(float(res.distances[g, j]))])

    render_profiles({name: [p.key() for p in pts] for name, pts in profiles.items()}, out / "profiles.svg")

    checks = []
    if "ndelta" in profiles and "nk" in profiles:
        checks = ordering_checks(table, fronts)
    lines = [_table_text(table)]
    lines += [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return checks


def _table_text(table) -> str:
    head = "policy  " + " ".join(f"<={c:<7g}" for c in table.caps)
    rows = [head]
    for policy, cells in table.rows.items():
        vals = " ".join(f"{'-' if c.mean_distance is None else f'{c.mean_distance:.4f}':<9}" for c in cells)
        rows.append(f"{policy:<7} {vals}")
    return "\n".join(rows)


# commands


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    if cfg.dataset.simulate is None:
        raise ConfigError("invalid config: dataset.simulate: required by the simulate command")
    out = _out_dir(cfg)
    clips = load_clips(cfg)
    target = Path(args.dataset) if args.dataset else out / "dataset.jsonl"
    write_dataset(clips, target)
    print(f"wrote {len(clips)} clips to {target}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    grids = cfg.family_grids()
    if not grids:
        raise ConfigError(f"invalid config: policies: no grid for {args.policy!r}")
    out = _out_dir(cfg)
    t0 = time.perf_counter()
    clips = load_clips(cfg)
    results = evaluate_families(clips, grids, cfg.metric_config(), cfg.jobs, cfg.combiner_config())
    checks = write_outputs(out, results, cfg.caps)
    print((out / "report.txt").read_text(encoding="utf-8"), end="")
    n_cfg = sum(len(g) for g in grids.values())
    print(f"evaluated {n_cfg} configurations on {len(clips)} clips in {time.perf_counter() - t0:.1f}s; "
          f"outputs in {out}", file=sys.stderr)
    if checks and not all(ok for _, ok, _ in checks):
        print("note: some ordering checks failed (see report.txt)", file=sys.stderr)
    return 0


def cmd_plot(args) -> int:
    series: Dict[str, list] = {}
    for path in args.profiles:
        for name, pts in read_series(path).items():
            series.setdefault(name, []).extend(pts)
    target = Path(args.output)
    render_profiles(series, target)
    print(f"wrote {target}")
    return 0


def _parse_params(items: Optional[Sequence[str]]) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or key not in PARAM_COLUMNS:
            raise CliError(f"bad --param {item!r}; expected one of {', '.join(PARAM_COLUMNS)} as key=value")
        try:
            params[key] = float(value)
        except ValueError:
            raise CliError(f"bad --param {item!r}: value is not a number") from None
    return params


def cmd_inspect(args) -> int:
    if args.policy == "all":
        raise CliError("inspect needs a single --policy")
    cfg = resolve_config(args)
    grid = cfg.family_grids().get(args.policy)
    params = dict(grid[0]) if grid else {}
    params.update(_parse_params(args.param))
    try:
        policy = make_policy(args.policy, params)
    except (KeyError, ValueError) as exc:
        raise CliError(f"cannot build {args.policy} policy from {params}: {exc}") from None
    clips = load_clips(cfg)
    if args.clip is None:
        clip = clips[0]
    else:
        found = [c for c in clips if c.clip_id == args.clip]
        if not found:
            raise CliError(f"no clip with id {args.clip!r}")
        clip = found[0]
    trace = run_episode(clip, policy, cfg.metric_config(), cfg.combiner_config())
    print(f"clip {clip.clip_id} field {clip.field_id} truth {clip.ground_truth!r}")
    print(f"policy {args.policy} {policy.config()}")
    print(f"{'stage':>5}  {'frame':<18} {'integrated':<18} {'distance':>8}  statistic")
    for rec in trace.stages:
        frame = argmax_string(clip.frames[rec.stage - 1])
        stat = "" if rec.statistic is None else f"{rec.statistic:.4f}"
        print(f"{rec.stage:>5}  {frame!r:<18} {rec.integrated.text!r:<18} {rec.distance:>8.4f}  {stat}")
    print(f"stopped at stage {trace.stopping_stage} with distance {trace.final_distance:.4f}")
    return 0


# entry point


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamstop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, policy=True):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=_u64, help="simulation seed (overrides seed)")
        p.add_argument("--jobs", type=_positive, help="worker processes (default: all cores)")
        if policy:
            p.add_argument("--policy", choices=FAMILIES + ("all",), default="all")

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    common(p, policy=False)
    p.add_argument("--dataset", help="dataset file to write (default: OUT/dataset.jsonl)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="evaluate policy grids and write CSV/SVG outputs")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="render profile CSVs to SVG")
    p.add_argument("profiles", nargs="+", help="profiles.csv or pareto.csv files")
    p.add_argument("-o", "--output", default="profiles.svg")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("inspect", help="print one clip's episode trace")
    common(p)
    p.add_argument("--clip", help="clip id (default: first clip)")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="policy parameter; unset ones come from the first grid cell")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, DatasetError, PlotError, OSError) as exc:
        print(f"streamstop: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
