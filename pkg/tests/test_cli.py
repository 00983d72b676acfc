import json
import pathlib

import pandas as pd
import pytest
import yaml

from deepdemand.cli import RunConfig, main
from deepdemand.interpret import POTENTIAL_COLUMNS


def _write_config(directory):
    data = {
        "paths": {
            "edges": str(directory / "data" / "edges.csv"),
            "nodes": str(directory / "data" / "nodes.csv"),
            "features": str(directory / "data" / "features.csv"),
            "centroids": str(directory / "data" / "centroids.csv"),
            "targets": str(directory / "data" / "targets.csv"),
            "bank": str(directory / "work" / "featurebank.json"),
            "contexts": str(directory / "work" / "contexts"),
            "checkpoint": str(directory / "work" / "model.json"),
            "out": str(directory / "out"),
        },
        "synth": {
            "size": 6,
            "spine_rows": 2,
            "both_directions": True,
            "n_features": 6,
            "n_latent": 2,
        },
        "features": {"k": 4},
        "extraction": {"cutoff_s": 1800.0},
        "model": {"encoder_dims": [6, 4], "od_dims": [5], "time_dims": [4], "gamma": 10.0},
        "train": {"max_iterations": 30, "eval_every": 10, "patience": 2},
        "evaluation": {
            "k": 2,
            "gravity_steps": 50,
            "models": ["linear", "ridge", "gravity", "deepdemand", "constant", "oracle"],
        },
    }
    path = directory / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """A synthetic workspace taken through synth, extract-od and train."""
    directory = tmp_path_factory.mktemp("pipeline")
    config = _write_config(directory)
    for command in ("synth", "extract-od", "train"):
        assert main([command, "-c", str(config)]) == 0, command
    return directory, str(config)


def test_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.startswith("deepdemand ")


def test_missing_input_exits_with_usage_error(tmp_path, capsys):
    config = _write_config(tmp_path)
    assert main(["extract-od", "-c", str(config)]) == 2
    err = capsys.readouterr().err
    assert str(tmp_path / "data" / "edges.csv") in err
    assert "paths__edges" in err


def test_unknown_setting(tmp_path, capsys):
    config = _write_config(tmp_path)
    assert main(["synth", "-c", str(config), "--set", "train.speed=3"]) == 2
    assert 'Unknown setting "train__speed"' in capsys.readouterr().err


def test_layered_configuration(tmp_path):
    path = _write_config(tmp_path)
    config = RunConfig.load(
        path,
        env={"DEEPDEMAND_TRAIN__LR": "0.5", "DEEPDEMAND_TRAIN__SEED": "3"},
        overrides={"train__seed": 9},
    )
    assert config["train__lr"] == 0.5
    assert config["train__seed"] == 9
    assert config["model__encoder_dims"] == (6, 4)
    assert config["features__k"] == 4
    moved = RunConfig.load(path, env={}, overrides={"paths__out": str(tmp_path / "elsewhere")})
    assert moved.config_hash() == RunConfig.load(path, env={}).config_hash()


def test_synth_writes_inputs(pipeline):
    directory, _ = pipeline
    targets = pd.read_csv(directory / "data" / "targets.csv")
    assert len(targets) == 20
    assert (targets["aadt"] >= 0).all()
    assert (directory / "out" / "synth" / "planted_model.json").exists()
    run = json.loads((directory / "out" / "synth" / "run.json").read_text())
    assert run["command"] == "synth"
    assert run["seed"] == 0


def test_extraction_resumes(pipeline, capsys):
    directory, config = pipeline
    assert main(["extract-od", "-c", config]) == 0
    assert "skipped 20 existing" in capsys.readouterr().out
    manifest = json.loads((directory / "work" / "contexts" / "manifest.json").read_text())
    assert manifest["failed"] == 0 and manifest["skipped"] == 20
    assert len(manifest["extraction_hash"]) == 16


def test_extraction_refuses_a_store_from_another_configuration(pipeline, capsys):
    _, config = pipeline
    assert main(["extract-od", "-c", config, "--cutoff", "900"]) == 2
    assert "Re-run the upstream stage" in capsys.readouterr().err


def test_training_is_deterministic(pipeline):
    directory, config = pipeline
    again = directory / "work" / "model_again.json"
    assert main(["train", "-c", config, "--set", f"paths.checkpoint={again}"]) == 0
    assert again.read_bytes() == (directory / "work" / "model.json").read_bytes()
    log = json.loads((directory / "out" / "train" / "training_log.json").read_text())
    assert log["iterations"] <= 30


def test_evaluate_and_fold_curves(pipeline, capsys):
    directory, config = pipeline
    assert main(["evaluate", "-c", config]) == 0
    out = capsys.readouterr().out
    assert "random cross-validation, 2 folds" in out
    assert "Random forest" in out and "Oracle" in out
    evaluate = directory / "out" / "evaluate"
    report = json.loads((evaluate / "report.json").read_text())
    assert report["models"]["Oracle"]["test"]["summary"]["mgeh"]["mean"] == 0.0
    assert sorted(p.name for p in (evaluate / "folds").iterdir()) == ["fold_0.json", "fold_1.json"]

    assert main(["deterrence", "-c", config, "--folds"]) == 0
    single = pd.read_csv(directory / "out" / "deterrence" / "deterrence.csv")
    folds = pd.read_csv(directory / "out" / "deterrence" / "deterrence_folds.csv")
    assert list(single.columns) == ["t_min", "p_od"]
    assert len(single) == 241
    assert list(folds.columns) == ["t_min", "fold_0", "fold_1", "mean", "min", "max"]


def test_spatial_evaluation(pipeline, capsys):
    directory, config = pipeline
    out = directory / "spatial"
    args = ["evaluate", "-c", config, "--protocol", "spatial", "--set", f"paths.out={out}"]
    assert main(args + ["--set", "evaluation.models=[constant]"]) == 0
    assert "spatial cross-validation, 3 folds" in capsys.readouterr().out
    report = json.loads((out / "evaluate" / "report.json").read_text())
    assert report["plan"]["regions"] == ["R0", "R1", "R2"]


def test_unknown_model_name(pipeline, capsys):
    directory, config = pipeline
    args = ["evaluate", "-c", config, "--set", f"paths.out={directory / 'bad'}"]
    assert main(args + ["--set", "evaluation.models=[forest]"]) == 2
    assert 'Unknown model "forest"' in capsys.readouterr().err


def test_predict_and_scenarios(pipeline):
    directory, config = pipeline
    assert main(["predict", "-c", config]) == 0
    base = pd.read_csv(directory / "out" / "predict" / "predictions.csv")
    assert list(base.columns) == ["edge_id", "yhat"]
    assert len(base) == 20

    features = pd.read_csv(directory / "data" / "features.csv")
    features["population"] *= 3
    scenario = directory / "scenario.csv"
    features.to_csv(scenario, index=False)
    output = directory / "scenario_predictions.csv"
    args = ["predict", "-c", config, "--features", str(scenario), "--output", str(output)]
    assert main(args) == 0
    changed = pd.read_csv(output)
    assert changed["edge_id"].tolist() == base["edge_id"].tolist()
    assert not changed["yhat"].equals(base["yhat"])


def test_predict_refuses_a_checkpoint_from_another_model(pipeline, capsys):
    _, config = pipeline
    assert main(["predict", "-c", config, "--set", "model.gamma=20"]) == 2
    assert "Checkpoint" in capsys.readouterr().err


def test_potentials(pipeline, capsys):
    directory, config = pipeline
    assert main(["potentials", "-c", config, "--sample-size", "10"]) == 0
    assert "Scored 10 of" in capsys.readouterr().out
    frame = pd.read_csv(directory / "out" / "potentials" / "potentials.csv")
    assert list(frame.columns) == list(POTENTIAL_COLUMNS)
    assert frame["n_pairs_o"].sum() == 10


def test_unreadable_edge_file_is_a_usage_error(tmp_path, capsys):
    config = _write_config(tmp_path)
    data = tmp_path / "data"
    data.mkdir()
    (data / "edges.csv").write_text(
        "edge_id,u,v,length_m,highway_class,maxspeed_mph,region\n0,0,1,abc,motorway,,\n"
    )
    (data / "nodes.csv").write_text("node_id,x_m,y_m\n0,0,0\n1,100,0\n")
    assert main(["extract-od", "-c", str(config)]) == 2
    assert "Invalid edges: 0" in capsys.readouterr().err


def test_extraction_flags_name_inputs_and_outputs(pipeline, capsys):
    directory, config = pipeline
    out = directory / "work" / "contexts_again"
    args = [
        "extract-od",
        "-c",
        config,
        "--graph",
        str(directory / "data" / "edges.csv"),
        "--targets",
        str(directory / "data" / "targets.csv"),
        "--cutoff-s",
        "1800",
        "--epsilon-s",
        "1e-6",
        "--workers",
        "1",
        "--out",
        str(out),
    ]
    assert main(args) == 0
    assert "wrote 20" in capsys.readouterr().out.lower()
    manifest = json.loads((out / "manifest.json").read_text())
    original = json.loads((directory / "work" / "contexts" / "manifest.json").read_text())
    assert manifest["extraction_hash"] == original["extraction_hash"]


def test_every_table_is_bound_to_the_config_hash(pipeline):
    directory, config = pipeline
    out = directory / "hashed"
    expected = RunConfig.load(config, env={}).config_hash()
    for command in ("predict", "potentials"):
        assert main([command, "-c", config, "--set", f"paths.out={out}"]) == 0, command
        run = json.loads((out / command / "run.json").read_text())
        assert run["config_hash"] == expected
        written = sorted(p.name for p in (out / command).glob("*.csv"))
        assert written and sorted(pathlib.Path(p).name for p in run["outputs"]) == written
