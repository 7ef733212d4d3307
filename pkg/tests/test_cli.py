import csv

import matplotlib.pyplot as plt
import pytest
import yaml

from streamstop.cli import main
from streamstop.config import ConfigError, config_from_dict, load_config
from streamstop.core import from_plain_string
from streamstop.dataset_io import read_dataset
from streamstop.plotting import PlotError, axis_limits, build_figure

SMALL = {
    "dataset": {"simulate": {"n_clips": 8, "n_frames": 12, "substitution_rates": [0.2]}},
    "policies": {
        "ndelta": {"c": [0.0, 0.01, 0.05], "delta": [0.1]},
        "ncx": {"size": [2, 3], "confidence": [0.8], "gap": [0.0]},
        "ncr": {"size": [2, 3], "confidence": [0.8], "gap": [0.0]},
        "nk": {"k": [1, 2, 5]},
    },
    "caps": [3, 4, 5],
}


def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# config


def test_default_config_is_valid_and_round_trips():
    cfg = config_from_dict({})
    assert cfg.dataset.simulate.n_clips == 500
    assert config_from_dict(yaml.safe_load(cfg.to_yaml())) == cfg


@pytest.mark.parametrize("data, where", [
    ({"dataset": {"path": "x.jsonl", "simulate": {}}}, "dataset"),
    ({"dataset": {}}, "dataset"),
    ({"dataset": {"simulate": {"n_clips": 0}}}, "dataset.simulate.n_clips"),
    ({"policies": {"nk": {"k": []}}}, "policies"),
    ({"policies": {"nz": {"k": [1]}}}, "policies"),
    ({"policies": {"ncx": {"size": [1]}}}, "policies"),
    ({"caps": [5, 3]}, "caps"),
    ({"bogus": 1}, "bogus"),
])
def test_invalid_config_names_field(data, where):
    with pytest.raises(ConfigError, match=where):
        config_from_dict(data)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("[1, 2")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(bad)


# simulate


def test_simulate_default_scale(tmp_path):
    assert main(["simulate", "--out", str(tmp_path)]) == 0
    clips = read_dataset(tmp_path / "dataset.jsonl")
    assert len(clips) == 500 and all(len(c.frames) == 30 for c in clips)


def test_simulate_same_seed_same_bytes(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "7"])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "7"])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "8"])
    a = (tmp_path / "a" / "dataset.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "dataset.jsonl").read_bytes()
    assert a != (tmp_path / "c" / "dataset.jsonl").read_bytes()


def test_simulate_zero_noise(tmp_path):
    data = {"dataset": {"simulate": {"n_clips": 5, "n_frames": 4, "substitution_rates": [0.0],
                                     "insertion_rate": 0.0, "deletion_rate": 0.0, "soften_rate": 0.0}}}
    assert main(["simulate", "--config", write_config(tmp_path, data), "--out", str(tmp_path)]) == 0
    for clip in read_dataset(tmp_path / "dataset.jsonl"):
        assert all(f == from_plain_string(clip.ground_truth) for f in clip.frames)


def test_invalid_config_exit_status(tmp_path, capsys):
    cfg = write_config(tmp_path, {"dataset": {"simulate": {"n_frames": -1}}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "dataset.simulate.n_frames" in capsys.readouterr().err


# evaluate


@pytest.fixture(scope="module")
def evaluated(tmp_path_factory):
    base = tmp_path_factory.mktemp("eval")
    cfg = write_config(base, SMALL)
    assert main(["evaluate", "--config", cfg, "--out", str(base / "run1"), "--jobs", "1"]) == 0
    assert main(["evaluate", "--config", cfg, "--out", str(base / "run2"), "--jobs", "2"]) == 0
    return base


def test_evaluate_writes_all_outputs(evaluated):
    out = evaluated / "run1"
    for name in ("profiles.csv", "pareto.csv", "table.csv", "traces.csv", "profiles.svg", "config.yaml", "report.txt"):
        assert (out / name).stat().st_size > 0
    profiles = rows(out / "profiles.csv")
    assert {r["policy"] for r in profiles} == {"ndelta", "ncx", "ncr", "nk"}
    assert len(profiles) == 3 + 2 + 2 + 3
    assert len(rows(out / "traces.csv")) == 10 * 8
    assert {r["policy"] for r in rows(out / "pareto.csv")} == {"ncx", "ncr"}
    assert len(rows(out / "table.csv")) == 4 * 3


def test_fixed_count_profile_stage_equals_k(evaluated):
    for r in rows(evaluated / "run1" / "profiles.csv"):
        if r["policy"] == "nk":
            assert float(r["mean_stage"]) == float(r["k"])


def test_evaluate_is_byte_identical(evaluated):
    for name in ("profiles.csv", "pareto.csv", "table.csv", "traces.csv", "profiles.svg", "report.txt"):
        assert (evaluated / "run1" / name).read_bytes() == (evaluated / "run2" / name).read_bytes()


def test_echoed_config_reruns(evaluated, tmp_path):
    cfg = load_config(evaluated / "run1" / "config.yaml")
    assert cfg.policies["nk"]["k"] == [1, 2, 5]
    assert cfg.output_dir.endswith("run1")


def test_policy_flag_restricts_families(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path / "o"), "--policy", "nk"]) == 0
    assert {r["policy"] for r in rows(tmp_path / "o" / "profiles.csv")} == {"nk"}
    assert rows(tmp_path / "o" / "pareto.csv") == []


def test_evaluate_reports_dataset_errors(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"clip_id": "a", "field_id": "f", "ground_truth": "x", "frames": [[[["x", 0.4]]]]}\n')
    cfg = write_config(tmp_path, {**SMALL, "dataset": {"path": str(bad)}})
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "bad.jsonl:1" in err and "clip 'a'" in err


def test_evaluate_from_file_with_looping(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    main(["simulate", "--config", cfg, "--out", str(tmp_path)])
    data = {**SMALL, "dataset": {"path": str(tmp_path / "dataset.jsonl"), "loop_to": 20}}
    assert main(["evaluate", "--config", write_config(tmp_path, data, "b.yaml"), "--out", str(tmp_path / "o")]) == 0
    nk5 = [r for r in rows(tmp_path / "o" / "traces.csv") if r["policy"] == "nk" and r["config_id"] == "2"]
    assert {r["stopping_stage"] for r in nk5} == {"5"}
    never = [r for r in rows(tmp_path / "o" / "traces.csv") if r["policy"] == "ndelta" and r["config_id"] == "0"]
    assert max(int(r["stopping_stage"]) for r in never) <= 20


# inspect


def test_inspect_prints_trace(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert main(["inspect", "--config", cfg, "--policy", "nk", "--param", "k=3"]) == 0
    out = capsys.readouterr().out
    assert "stopped at stage 3" in out


@pytest.mark.parametrize("argv", [
    ["inspect", "--policy", "all"],
    ["inspect", "--policy", "nk", "--param", "k"],
    ["inspect", "--policy", "nk", "--clip", "nope"],
])
def test_inspect_errors(tmp_path, argv):
    assert main(argv + ["--config", write_config(tmp_path, SMALL)]) == 1


# plot


def test_plot_command(evaluated, tmp_path):
    target = tmp_path / "p.svg"
    assert main(["plot", str(evaluated / "run1" / "profiles.csv"), "-o", str(target)]) == 0
    assert target.read_bytes() == (evaluated / "run1" / "profiles.svg").read_bytes()


def test_plot_missing_or_empty_csv(tmp_path):
    assert main(["plot", str(tmp_path / "none.csv"), "-o", str(tmp_path / "p.svg")]) == 1
    empty = tmp_path / "empty.csv"
    empty.write_text("policy,mean_stage,mean_distance\n")
    assert main(["plot", str(empty), "-o", str(tmp_path / "p.svg")]) == 1


def test_four_series_four_legend_entries():
    series = {"ndelta": [(1, 0.2), (3, 0.1)], "ncx": [(2, 0.2), (4, 0.1)],
              "ncr": [(2, 0.25), (5, 0.1)], "nk": [(1, 0.3), (2, 0.2)]}
    fig = build_figure(series)
    labels = [t.get_text() for t in fig.axes[0].get_legend().get_texts()]
    plt.close(fig)
    assert len(labels) == 4


def test_single_point_series_is_marker():
    fig = build_figure({"nk": [(3.0, 0.1)]})
    (line,) = fig.axes[0].get_lines()
    plt.close(fig)
    assert line.get_linestyle() == "None" and line.get_marker() == "o"


def test_axes_have_five_percent_margin():
    fig = build_figure({"nk": [(1.0, 0.1), (11.0, 0.3)]})
    ax = fig.axes[0]
    assert ax.get_xlim() == pytest.approx((0.5, 11.5))
    assert ax.get_ylim() == pytest.approx((0.09, 0.31))
    plt.close(fig)
    xlim, ylim = axis_limits([(2.0, 0.0)])
    assert xlim == pytest.approx((1.9, 2.1)) and ylim == pytest.approx((-0.05, 0.05))


def test_nothing_to_plot():
    with pytest.raises(PlotError):
        build_figure({})
