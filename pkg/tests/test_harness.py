import json
from importlib.resources import files
from dataclasses import replace

import pytest

from lavgrid.cli import main
from lavgrid.config import (HarnessConfig, dump_config, load_config, parse_seed_range)
from lavgrid.harness import (ABLATION_ROWS, EpisodeTrace, compute_metrics, path_weighted,
                             read_trace, replay_trace, run_ablation, run_episode, run_episodes,
                             write_trace)
from lavgrid.taskgen import GenConfig
from lavgrid.vision import ORACLE, NoiseConfig


def test_path_weighted_examples():
    assert path_weighted(1.0, 20, 10) == 0.5
    assert path_weighted(1.0, 7, 10) == 1.0
    assert path_weighted(0.0, 50, 3) == 0.0
    assert path_weighted(0.5, 10, 10) == 0.5
    with pytest.raises(ValueError):
        path_weighted(1.0, 5, 0)


def _trace(seed, outcome, frac, steps, lstar=10):
    t = EpisodeTrace(seed, "x", None, "pickup", lstar, 100, "cfg")
    t.steps = [None] * steps
    t.outcome, t.goal_fraction = outcome, frac
    t.reason = "" if outcome == "Success" else "StepBudget"
    return t


def test_compute_metrics_example():
    traces = [_trace(0, "Success", 1.0, 10), _trace(1, "Failure", 0.0, 30),
              _trace(2, "Failure", 0.5, 20), _trace(3, "Failure", 1.0, 40)]
    rep = compute_metrics(traces)
    assert rep.sr == 25.0 and rep.gc == 62.5 and rep.pwsr == 25.0
    assert rep.pwgc == pytest.approx(100 * (1.0 + 0 + 0.25 + 0.25) / 4)
    assert rep.failures == {"StepBudget": 3}


def test_metrics_perfect_and_zero():
    perfect = compute_metrics([_trace(i, "Success", 1.0, 10) for i in range(3)])
    assert (perfect.sr, perfect.pwsr, perfect.gc, perfect.pwgc) == (100.0,) * 4
    zero = compute_metrics([_trace(i, "Failure", 0.0, 10) for i in range(3)])
    assert (zero.sr, zero.pwsr, zero.gc, zero.pwgc) == (0.0,) * 4
    with pytest.raises(ValueError):
        compute_metrics([])


def test_metrics_ignore_order():
    traces = [_trace(i, "Failure", (i % 3) / 3, 5 + i) for i in range(20)]
    assert compute_metrics(traces) == compute_metrics(traces[::-1])


def test_expert_all_oracle_episode_succeeds():
    cfg = replace(HarnessConfig(), navigator="expert").with_oracles(True, True)
    for seed in range(30):
        t = run_episode(seed, cfg)
        assert t.success and t.goal_fraction == 1.0
        assert t.steps_taken == t.expert_path_length


def test_blind_agent_runs_out_of_budget():
    cfg = replace(HarnessConfig(), noise=NoiseConfig(miss_prob=1.0), oracle_language=True)
    for seed in range(5):
        t = run_episode(seed, cfg)
        assert t.reason == "StepBudget"
        assert t.steps_taken == t.budget


def test_trace_invariants():
    for t in run_episodes(range(60), HarnessConfig()):
        assert t.steps_taken <= t.budget
        if t.success:
            assert t.goal_fraction == 1.0
        else:
            assert t.reason


def test_language_failures_are_reported():
    cfg = HarnessConfig()
    reasons = {t.reason for t in run_episodes(range(60), cfg)}
    assert "NoParse" in reasons


def test_episode_is_deterministic():
    cfg = HarnessConfig()
    for seed in range(10):
        assert run_episode(seed, cfg).to_lines() == run_episode(seed, cfg).to_lines()


def test_trace_round_trip_and_replay(tmp_path):
    cfg = HarnessConfig()
    for seed in range(15):
        t = run_episode(seed, cfg)
        path = write_trace(t, tmp_path)
        back = read_trace(path)
        assert back.to_lines() == t.to_lines()
        again = replay_trace(back, cfg)
        assert [s.result for s in again.steps] == [s.result for s in t.steps]
        assert again.goal_fraction == t.goal_fraction
        assert again.success == t.success


def test_zero_noise_ablation_rows_identical():
    gen = GenConfig(paraphrase_level="canonical")
    cfg = replace(HarnessConfig(), gen=gen, noise=ORACLE)
    rows = run_ablation(cfg, range(100))
    assert [name for name, _, _ in rows] == [r[0] for r in ABLATION_ROWS]
    first = rows[0][1]
    for _, rep, _ in rows[1:]:
        assert rep == first


def test_ablation_warns_on_few_seeds():
    with pytest.warns(UserWarning):
        run_ablation(HarnessConfig(), range(3))


def test_config_round_trip(tmp_path):
    cfg = replace(HarnessConfig(), navigator="expert", budget_factor=7,
                  gen=GenConfig(obstacle_density=0.3, task_weights=(("toggle", 2.0), ("pickup", 1.0))),
                  noise=NoiseConfig(0.1, 0.2, 0.5, seed=3))
    path = tmp_path / "c.ini"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg
    assert load_config(path).fingerprint() == cfg.fingerprint()


def test_config_partial_and_bad(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[noise]\nmiss_prob = 0.5\n")
    cfg = load_config(path)
    assert cfg.noise.miss_prob == 0.5 and cfg.gen == HarnessConfig().gen
    path.write_text("[bogus]\nx = 1\n")
    with pytest.raises(ValueError):
        load_config(path)
    with pytest.raises(ValueError):
        HarnessConfig(navigator="teleport")


def test_seed_range():
    assert list(parse_seed_range("3..5")) == [3, 4, 5]
    assert list(parse_seed_range("7")) == [7]
    with pytest.raises(ValueError):
        parse_seed_range("5..3")


def test_cli_end_to_end(tmp_path, capsys):
    gen = tmp_path / "gen"
    assert main(["gen", "--seeds", "0..4", "--out", str(gen)]) == 0
    tasks = [json.loads(l) for l in (gen / "tasks.jsonl").read_text().splitlines()]
    assert [t["seed"] for t in tasks] == list(range(5))
    assert (gen / "scene_000000.map").exists()

    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--seeds", "0..9", "--out", str(a)]) == 0
    assert main(["run", "--seeds", "0..9", "--out", str(b)]) == 0
    for f in sorted((a / "traces").iterdir()):
        assert f.read_bytes() == (b / "traces" / f.name).read_bytes()
    for name in ("metrics.csv", "metrics.txt", "metrics.png", "failures.png", "config.ini"):
        assert (a / name).stat().st_size > 0

    assert main(["replay", "--traces", str(a / "traces")]) == 0
    assert "0 mismatches" in capsys.readouterr().out

    ab = tmp_path / "ab"
    with pytest.warns(UserWarning):
        assert main(["ablate", "--seeds", "0..9", "--out", str(ab)]) == 0
    rows = (ab / "ablation.csv").read_text().splitlines()
    assert rows[0].startswith("row,SR,PWSR,GC,PWGC")
    assert [r.split(",")[0] for r in rows[1:]] == [r[0] for r in ABLATION_ROWS]
    assert (ab / "ablation.png").exists()


def test_cli_oracle_flags_and_lexicon(tmp_path):
    out = tmp_path / "o"
    lex = tmp_path / "my.lex"
    lex.write_text(files("lavgrid").joinpath("data/default.lex").read_text())
    assert main(["run", "--seeds", "0..3", "--oracle-language", "--oracle-vision",
                 "--nav", "expert", "--lexicon", str(lex), "--out", str(out)]) == 0
    cfg = load_config(out / "config.ini")
    assert cfg.oracle_language and cfg.oracle_vision and cfg.navigator == "expert"
    assert cfg.lexicon == str(lex)
    assert "100.0" in (out / "metrics.txt").read_text()
