import csv
import io
import json

import pytest

from lyapcd import experiment
from lyapcd.cli import main
from lyapcd.experiment import COLUMNS, ConfigError, ExperimentConfig, instance_seed, parse_config, run_experiment
from lyapcd.problem import SpinGlassInstance
from lyapcd.report import aggregate, format_table, stats_to_csv


def write_config(tmp_path, **overrides):
    data = {"schema": 1, "n_list": [4], "instances_per_n": 2, "algorithm": "dalcco", "steps": 3}
    data.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_one_row_per_instance_and_algorithm(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path)), "--out", str(out)]) == 0
    rows = read_csv(out / "results.csv")
    assert len(rows) == 4
    assert [(r["instance_id"], r["algorithm"]) for r in rows] == [("0", "dcqo"), ("0", "dalcco"), ("1", "dcqo"), ("1", "dalcco")]
    assert list(rows[0]) == list(COLUMNS)
    assert all(not r["error"] for r in rows)
    assert rows[0]["f_star"] == "" and rows[1]["accepted"] in ("true", "false")
    meta = json.loads((out / "metadata.json").read_text())
    assert meta["schedule"]["kind"] == "trig" and meta["kappa"] == 0.1
    assert "code_version" in meta and meta["variance_convention"].startswith("population")


def test_repeated_runs_and_worker_counts_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, n_list=[3, 4], instances_per_n=3, steps=[1, 3])
    outputs = []
    for i, workers in enumerate(("1", "1", "8")):
        out = tmp_path / f"run{i}"
        assert main(["run", "--config", str(cfg), "--out", str(out), "--workers", workers]) == 0
        outputs.append((out / "results.csv").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_csv_is_locale_free_and_crlf(tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", str(write_config(tmp_path)), "--out", str(out)])
    raw = (out / "results.csv").read_bytes()
    assert raw.count(b"\r\n") == 5
    assert float(read_csv(out / "results.csv")[0]["e0"]) < 0


def test_instance_seeds_are_order_independent():
    assert instance_seed(0, 6, 3) == instance_seed(0, 6, 3)
    assert instance_seed(0, 6, 3) != instance_seed(0, 6, 4)
    assert instance_seed(5, 6, 3) == instance_seed(0, 6, 3) ^ 5


def test_per_instance_failure_is_recorded(monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("simulated failure")

    monkeypatch.setattr(experiment, "run_dalcco", boom)
    rows = run_experiment(ExperimentConfig(n_list=(3,), instances_per_n=2, steps=(2,)))
    assert len(rows) == 4
    assert [bool(r.get("error")) for r in rows] == [False, True, False, True]
    assert "simulated failure" in rows[1]["error"]


def test_malformed_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n_list": [4],\n  "steps": 5,,\n}')
    assert main(["run", "--config", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("field, value, fragment", [
    ("n_list", [1], "n_list"),
    ("algorithm", "qaoa", "algorithm"),
    ("regime", "strong", "regime"),
    ("kappa", 2.0, "kappa"),
    ("dt", -0.1, "dt"),
    ("cd_source", "krylov_d", "cd_source"),
    ("surprise", 1, "surprise"),
    ("schema", 9, "schema"),
])
def test_invalid_fields_are_named(tmp_path, capsys, field, value, fragment):
    assert main(["run", "--config", str(write_config(tmp_path, **{field: value}))]) == 2
    assert fragment in capsys.readouterr().err


def test_config_defaults():
    cfg = parse_config({"n_list": 6, "algorithm": "lc_dcqo", "regime": "comparable"})
    assert cfg.n_list == (6,) and cfg.resolved_cd_source().value == "krylov_d"
    with pytest.raises(ConfigError):
        parse_config([1, 2])


# report ----------------------------------------------------------------------


def rows_for(ratios, algorithm="dcqo", n=6, s=5, enhancement=""):
    return [{"n": str(n), "s": str(s), "algorithm": algorithm, "ratio": repr(r), "enhancement": enhancement, "error": ""}
            for r in ratios]


def test_population_variance():
    (stats,) = aggregate(rows_for([0.4, 0.6]))
    assert stats.mean_ratio == pytest.approx(0.5)
    assert stats.var_ratio == pytest.approx(0.01)
    assert stats.best_ratio == 0.6


def test_single_algorithm_has_no_enhancement_columns():
    stats = aggregate(rows_for([0.4, 0.6], enhancement="2.0"))
    assert "enhancement" not in stats_to_csv(stats).splitlines()[0]
    assert "mean E" not in format_table(stats)


def test_enhancement_mean_over_defined_values():
    rows = rows_for([0.2, 0.3]) + rows_for([0.5, 0.6], "dalcco")
    rows[-1]["enhancement"] = "2.0"
    rows[-2]["enhancement"] = "3.0"
    rows.append({**rows[-1], "enhancement": ""})
    stats = {s.algorithm: s for s in aggregate(rows)}
    assert stats["dalcco"].mean_enhancement == pytest.approx(2.5)
    assert stats["dalcco"].n_enhancement == 2
    assert stats["dcqo"].mean_enhancement is None


def test_largest_step_count_is_default():
    rows = rows_for([0.1], s=1) + rows_for([0.3], s=5)
    (stats,) = aggregate(rows)
    assert stats.s == 5 and stats.mean_ratio == 0.3
    assert len(aggregate(rows, by_steps=True)) == 2


def test_report_command(tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", "--config", str(write_config(tmp_path, steps=[1, 3])), "--out", str(out)])
    capsys.readouterr()
    svg, table = tmp_path / "fig.svg", tmp_path / "table.csv"
    assert main(["report", "--input", str(out / "results.csv"), "--svg", str(svg), "--csv", str(table), "--by-steps"]) == 0
    text = capsys.readouterr().out
    assert "dalcco" in text and "mean E" in text
    assert svg.read_text().lstrip().startswith("<?xml")
    first = svg.read_bytes()
    main(["report", "--input", str(out / "results.csv"), "--svg", str(svg)])
    main(["report", "--input", str(out / "results.csv"), "--svg", str(svg), "--by-steps"])
    assert svg.read_bytes() == first
    assert len(list(csv.reader(io.StringIO(table.read_text())))) == 5


def test_report_on_empty_input(tmp_path, capsys):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(COLUMNS) + "\r\n")
    assert main(["report", "--input", str(path)]) == 2
    assert "no result rows" in capsys.readouterr().err


def test_generate_prints_instance(capsys):
    assert main(["generate", "--n", "5", "--regime", "weak", "--seed", "9"]) == 0
    inst = SpinGlassInstance.from_json(capsys.readouterr().out)
    assert inst.n_qubits == 5 and inst.seed == 9
    assert max(abs(v) for v in inst.couplings.values()) <= 0.1
