import csv
import json

import pytest

from ramzzz.arch import load_arch_spec
from ramzzz.cli import main, parse_cycles
from ramzzz.demotion import exhaustive_config
from ramzzz.idlehist import SparseHistogram, histogram_to_csv
from ramzzz.trace import parse_trace

SIM = ["--ranks", "4", "--capacity", "8", "--slot", "100k", "--epoch", "2"]


@pytest.fixture
def trace_file(tmp_path):
    path = tmp_path / "t.csv"
    assert main(["gen-trace", "--cycles", "600k", "--pages", "32", "--rate", "1e-4", "--seed", "3",
                 "--out", str(path)]) == 0
    return path


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("text,value", [("1e6", 10**6), ("100M", 10**8), ("10k", 10**4), ("42", 42)])
def test_parse_cycles(text, value):
    assert parse_cycles(text) == value


def test_simulate_two_policies(tmp_path, trace_file, capsys):
    out = tmp_path / "res"
    code = main(["simulate", "--arch", "ddr3", "--policy", "base,ramzzz", "--trace", str(trace_file),
                 "--output-dir", str(out)] + SIM)
    assert code == 0
    table = rows(out / "normalized.csv")
    assert [r["policy"] for r in table] == ["base", "ramzzz"]
    assert float(table[0]["norm_ed2"]) == 1.0
    assert float(table[1]["norm_ed2"]) < 1.0
    assert sorted(p.name for p in out.glob("*.json")) == ["ddr3_base.json", "ddr3_ramzzz.json"]
    assert "ddr3_ramzzz" in capsys.readouterr().out


def test_rzsd_without_state_is_a_usage_error(trace_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--policy", "rzsd", "--trace", str(trace_file)] + SIM)
    assert exc.value.code == 2
    assert "rzsd-state" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path, trace_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"policy": "rzsp", "delay-budget": 0.02, "ranks": 4, "capacity": 8,
                               "slot": "100k", "epoch": 2}))
    out = tmp_path / "res"
    assert main(["simulate", "--config", str(cfg), "--trace", str(trace_file), "--ranks", "8",
                 "--capacity", "4", "--output-dir", str(out)]) == 0
    m = json.loads((out / "ddr3_rzsp.json").read_text())
    assert m["params"]["ranks"] == 8 and m["params"]["capacity_pages"] == 4
    assert m["params"]["delay_budget_fraction"] == 0.02
    assert m["params"]["slot_cycles"] == 100_000


def test_unknown_config_key(tmp_path, trace_file):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"polcy": "rzsp"}))
    with pytest.raises(SystemExit):
        main(["simulate", "--config", str(cfg), "--trace", str(trace_file)])


def test_output_dir_from_environment(tmp_path, trace_file, monkeypatch):
    monkeypatch.setenv("RAMZZZ_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["simulate", "--policy", "rzsp", "--trace", str(trace_file)] + SIM) == 0
    assert (tmp_path / "env" / "ddr3_rzsp.json").exists()


def test_budget_sweep(tmp_path, trace_file):
    out = tmp_path / "sweep"
    assert main(["simulate", "--policy", "rzsp", "--delay-budget", "0.01,0.02,0.04,0.08,0.16",
                 "--trace", str(trace_file), "--output-dir", str(out), "--jobs", "2"] + SIM) == 0
    table = [r for r in rows(out / "normalized.csv") if r["policy"] == "rzsp"]
    assert [float(r["delay_budget"]) for r in table] == [0.01, 0.02, 0.04, 0.08, 0.16]
    delays = [float(r["total"]) for r in rows(out / "delay.csv") if r["policy"] == "rzsp"]
    assert delays[0] <= delays[-1]


def test_dump_flags(tmp_path, trace_file):
    out = tmp_path / "dump"
    assert main(["simulate", "--policy", "ramzzz", "--trace", str(trace_file), "--output-dir", str(out),
                 "--dump-histograms", "--dump-schedules"] + SIM) == 0
    assert (out / "ddr3_ramzzz_histograms.csv").read_text().startswith("slot,rank,kind,length,count\n")
    sched = list(out.glob("ddr3_ramzzz_schedule_slot*.csv"))
    assert sched and all(p.read_text().startswith("segment,src,dst,page") for p in sched)


def test_gen_trace_is_seeded(tmp_path, capsys):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    for path, seed in ((a, 1), (b, 1), (c, 2)):
        main(["gen-trace", "--cycles", "1M", "--pages", "50", "--seed", str(seed), "--out", str(path)])
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    stats = json.loads(capsys.readouterr().out.splitlines()[0])
    assert stats["accesses"] == len(parse_trace(a))


def test_gen_trace_zero_rate(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    assert main(["gen-trace", "--cycles", "1M", "--pages", "50", "--rate", "0", "--out", str(path)]) == 0
    assert parse_trace(path) == []
    assert json.loads(capsys.readouterr().out) == {"accesses": 0}


def solve(capsys, *args):
    assert main(["solve-demotion", *args]) == 0
    return json.loads(capsys.readouterr().out)


def test_solve_empty_histogram(tmp_path, capsys):
    h = tmp_path / "h.csv"
    h.write_text("length,count\n")
    out = solve(capsys, "--hist", str(h), "--slot", "1e6", "--budget-fraction", "0.04")
    assert out["timeouts"] == [None] * 5 and out["energy"] == 0


def test_solve_single_state_matches_exhaustive(tmp_path, capsys):
    spec = load_arch_spec("DDR3").restrict(1)
    (tmp_path / "a.json").write_text(json.dumps(spec.to_dict()))
    hist = SparseHistogram.from_pairs(10**6, [(30, 50), (90, 20), (4000, 3)])
    h = tmp_path / "h.csv"
    h.write_text(histogram_to_csv(hist))
    out = solve(capsys, "--hist", str(h), "--slot", "1e6", "--arch", str(tmp_path / "a.json"))
    ref = exhaustive_config(hist, spec, objective="ed2", base_delay=10**6)
    assert out["objective"] == pytest.approx(ref.objective)
    assert out["states"] == ["ACT_PDN"]


def test_solve_random_instance_matches_oracle(tmp_path, capsys):
    spec = load_arch_spec("DDR3").restrict(2)
    hist = SparseHistogram.from_pairs(10**6, [(80, 400), (700, 40), (30_000, 4)])
    h = tmp_path / "h.csv"
    h.write_text(histogram_to_csv(hist))
    (tmp_path / "a.json").write_text(json.dumps(spec.to_dict()))
    args = ["--hist", str(h), "--slot", "1e6", "--arch", str(tmp_path / "a.json"), "--budget", "5000"]
    greedy = solve(capsys, *args)
    exact = solve(capsys, *args, "--exhaustive")
    assert greedy["delay"] <= 5000
    assert greedy["objective"] <= exact["objective"] * 1.05


def test_report_is_reproducible(tmp_path, trace_file):
    out = tmp_path / "res"
    main(["simulate", "--policy", "base,rzsp", "--trace", str(trace_file), "--output-dir", str(out)] + SIM)
    files = [str(out / "ddr3_base.json"), str(out / "ddr3_rzsp.json")]
    r1, r2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["report", *files, "--output-dir", str(r1)]) == 0
    assert main(["report", *files, "--output-dir", str(r2)]) == 0
    for name in ("residency", "delay", "normalized", "prediction", "mq_levels"):
        assert (r1 / f"{name}.csv").read_bytes() == (r2 / f"{name}.csv").read_bytes()
    for row in rows(r1 / "residency.csv"):
        fracs = [float(v) for k, v in row.items() if k not in ("run", "policy", "arch")]
        assert sum(fracs) == pytest.approx(1.0, abs=1e-9)


def test_library_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("cycle,page\nx,1\n")
    assert main(["simulate", "--trace", str(bad)] + SIM) == 1
    assert capsys.readouterr().err
