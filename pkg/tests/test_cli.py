import json

import pytest

from unitax import problems
from unitax.cli import run


def write_json(path, data):
    path.write_text(json.dumps(data) + "\n")
    return str(path)


@pytest.fixture
def vehicle_file(tmp_path):
    return write_json(tmp_path / "vehicles.json", problems.vehicle_mini_collection())


@pytest.fixture
def collapse_spec(tmp_path):
    return write_json(tmp_path / "collapse.json", problems.collapse_problem(seed=0))


def test_build_then_check_round_trip(tmp_path, vehicle_file, capsys):
    out = tmp_path / "tax.json"
    assert run(["build", "--atoms", vehicle_file, "--out", str(out)]) == 0
    assert run(["check", "--in", str(out)]) == 0
    assert "OK" in capsys.readouterr().out
    data = json.loads(out.read_text())
    assert "universal" in data
    names = {u["display_name"] for u in data["universal"]}
    assert "pickup" in names


def test_build_outputs_are_byte_identical(tmp_path, vehicle_file):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert run(["build", "--atoms", vehicle_file, "--out", str(first)]) == 0
    assert run(["build", "--atoms", vehicle_file, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_build_from_declarations(tmp_path):
    decls = tmp_path / "prog.decl"
    decls.write_text(
        "dataset A: sky ground\n"
        "dataset B: sky terrain\n"
        "equiv A.sky B.sky\n"
    )
    out = tmp_path / "tax.json"
    assert run(["build", "--decls", str(decls), "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert any(u["display_name"] == "sky" for u in data["universal"])


def test_check_rejects_broken_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["check", "--in", str(bad)]) == 1
    missing_atoms = write_json(tmp_path / "inconsistent.json", {
        "atoms": ["a"],
        "datasets": [{"name": "D", "classes": [{"name": "x", "atoms": ["zzz"]}]}],
    })
    assert run(["check", "--in", missing_atoms]) == 1


def test_filter_reports_untrainable_classes(tmp_path):
    rider = write_json(tmp_path / "rider.json", problems.rider_collection())
    out = tmp_path / "filtered.json"
    assert run(["filter", "--atoms", rider, "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    names = {e["untrainable_name"] for e in data["filter_report"]}
    assert names == {"bike", "ped"}


def test_export_matrix_csv(tmp_path, vehicle_file):
    out = tmp_path / "matrix.csv"
    assert run(["export-matrix", "--atoms", vehicle_file, "--dataset", "VIPER",
                "--include-void", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    header = lines[0].split(",")
    assert header[0] == ""
    assert "truck" in lines[1]


def test_missing_file_is_usage_error(tmp_path):
    assert run(["check", "--in", str(tmp_path / "nope.json")]) == 2


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2
    capsys.readouterr()


def test_toy_train_writes_artifacts(tmp_path, collapse_spec):
    out = tmp_path / "run"
    assert run(["toy-train", "--spec", collapse_spec, "--mode", "universal-nll-plus",
                "--epochs", "40", "--out", str(out)]) == 0
    for name in ("model.json", "trace.csv", "report.json"):
        assert (out / name).exists()
    report = json.loads((out / "report.json").read_text())
    assert report["mode"] == "universal-nll-plus"
    assert report["epochs"] == 40
    assert 0.0 <= report["universal_accuracy"] <= 1.0
    trace = (out / "trace.csv").read_text().strip().split("\n")
    assert trace[0] == "epoch,loss"
    assert len(trace) == 41


def test_toy_train_is_deterministic(tmp_path, collapse_spec):
    a = tmp_path / "a"
    b = tmp_path / "b"
    argv = ["toy-train", "--spec", collapse_spec, "--mode", "naive-concat",
            "--epochs", "30", "--seed", "7"]
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    for name in ("model.json", "trace.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_eval_default_and_post_inference(tmp_path, collapse_spec):
    out = tmp_path / "run"
    assert run(["toy-train", "--spec", collapse_spec, "--mode", "naive-concat",
                "--epochs", "40", "--out", str(out)]) == 0
    model = str(out / "model.json")
    default_out = tmp_path / "eval_default.json"
    evalmap_out = tmp_path / "eval_map.json"
    base = ["eval", "--model", model, "--spec", collapse_spec,
            "--dataset", "CamVid"]
    assert run(base + ["--out", str(default_out)]) == 0
    assert run(base + ["--post-inference", "--out", str(evalmap_out)]) == 0
    default = json.loads(default_out.read_text())
    mapped = json.loads(evalmap_out.read_text())
    assert default["post_inference"] is False
    assert mapped["post_inference"] is True
    assert mapped["void_fraction"] <= default["void_fraction"]


def test_eval_post_inference_needs_entry_model(tmp_path, collapse_spec):
    out = tmp_path / "run"
    assert run(["toy-train", "--spec", collapse_spec, "--mode", "universal-nll-plus",
                "--epochs", "20", "--out", str(out)]) == 0
    assert run(["eval", "--model", str(out / "model.json"), "--spec", collapse_spec,
                "--dataset", "CamVid", "--post-inference",
                "--out", str(tmp_path / "e.json")]) == 1


def test_surface_grid(tmp_path, collapse_spec):
    out = tmp_path / "run"
    assert run(["toy-train", "--spec", collapse_spec, "--mode", "oracle",
                "--epochs", "20", "--out", str(out)]) == 0
    surface = tmp_path / "surface.csv"
    assert run(["surface", "--model", str(out / "model.json"),
                "--grid=-3,3,-3,3,4,4", "--out", str(surface)]) == 0
    lines = surface.read_text().strip().split("\n")
    assert lines[0].startswith("x,y,")
    assert len(lines) == 17
    # a malformed grid is a validation error
    assert run(["surface", "--model", str(out / "model.json"),
                "--grid=1,2,3", "--out", str(surface)]) == 1


def test_pseudo_label_subcommand(tmp_path, vehicle_file):
    records = tmp_path / "in.jsonl"
    records.write_text(json.dumps({
        "sample_id": "s1",
        "gt_dataset": "Vistas",
        "gt_class": "car",
        "foreign": {"VIPER": {"truck": 1.0}},
    }) + "\n")
    out = tmp_path / "out.jsonl"
    assert run(["pseudo-label", "--atoms", vehicle_file,
                "--in", str(records), "--out", str(out)]) == 0
    row = json.loads(out.read_text().strip())
    assert row["display_name"] == "pickup"
    # malformed input is a validation error
    records.write_text("not json\n")
    assert run(["pseudo-label", "--atoms", vehicle_file,
                "--in", str(records), "--out", str(out)]) == 1
