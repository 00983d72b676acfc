"""The ``deepdemand`` command-line interface."""
import argparse
import json
import logging
import pathlib
import platform
import sys
import time
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import networkx as nx
import numpy as np
import pandas as pd
import yaml

from .. import __version__
from ..demandmodel import (
    Checkpoint,
    ModelParams,
    load_checkpoint,
    plant_volumes,
    planted_params,
    predict_edges,
    prepare_edge,
    save_checkpoint,
    train,
)
from ..errors import ComputationError, InputError
from ..evaluation import (
    ConstantSpec,
    DeepDemandSpec,
    GravitySpec,
    LinearSpec,
    ModelSpec,
    OracleSpec,
    build_eval_edges,
    make_folds,
    run_cv,
)
from ..featurebank import (
    FeatureBank,
    InvalidFeatureTable,
    attach_to_nodes,
    fit_transform,
)
from ..interpret import combine_curves, compute_potentials, export_deterrence, time_grid
from ..odextract import ContextStore, ODContext, extract_all, extract_context
from ..roadgraph import (
    RoadGraph,
    TargetEdge,
    assign_travel_times,
    generate_synthetic_network,
    load_targets,
    synthetic_areas,
    write_targets,
)
from .config import RunConfig
from .errors import ArtifactMismatch, ConfigError, MissingInput

__all__ = ("main", "build_parser")

log = logging.getLogger("deepdemand.cli")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
EXTRACTION_MANIFEST = "manifest.json"

# command-line flag (argparse dest) to config key, per command
FLAG_KEYS: Dict[str, Dict[str, str]] = {
    "synth": {"size": "synth__size", "seed": "synth__seed"},
    "extract-od": {
        "graph": "paths__edges",
        "nodes": "paths__nodes",
        "targets": "paths__targets",
        "out": "paths__contexts",
        "cutoff_s": "extraction__cutoff_s",
        "epsilon_s": "extraction__epsilon_s",
        "workers": "run__workers",
    },
    "train": {"seed": "train__seed", "max_iterations": "train__max_iterations"},
    "evaluate": {
        "protocol": "evaluation__protocol",
        "k": "evaluation__k",
        "seed": "evaluation__seed",
    },
    "predict": {},
    "deterrence": {},
    "potentials": {"sample_size": "interpret__sample_size", "seed": "interpret__seed"},
}


def _require(config: RunConfig, *names: str) -> None:
    for name in names:
        path = config.path(name)
        if not path.exists():
            raise MissingInput(path, f"paths__{name}")


def _effective_k(config: RunConfig, n_features: int) -> int:
    k = config["features__k"]
    if k > n_features:
        log.warning(
            "features.k=%d exceeds the %d raw features; using k=%d.", k, n_features, n_features
        )
        return n_features
    return k


def _load_graph(config: RunConfig) -> RoadGraph:
    _require(config, "edges", "nodes")
    graph = RoadGraph.from_files(config.path("edges"), config.path("nodes"))
    return assign_travel_times(graph)


def _load_targets(config: RunConfig, graph: RoadGraph) -> List[TargetEdge]:
    _require(config, "targets")
    return load_targets(config.path("targets"), graph)


def _load_bank(config: RunConfig) -> FeatureBank:
    _require(config, "bank")
    return FeatureBank.from_file(config.path("bank"))


def _fit_bank(
    config: RunConfig, graph: RoadGraph, features: pd.DataFrame, centroids: pd.DataFrame
) -> FeatureBank:
    k = _effective_k(config, len(features.columns) - 1)
    return attach_to_nodes(fit_transform(features, k), graph, centroids)


def _read_contexts(
    config: RunConfig, edge_ids: Sequence[int], extraction_hash: str
) -> Dict[int, ODContext]:
    _require(config, "contexts")
    return ContextStore(config.path("contexts")).read_many(edge_ids, extraction_hash)


def _checked_checkpoint(
    config: RunConfig, path: pathlib.Path, bank: FeatureBank, extraction_hash: str
) -> Checkpoint:
    checkpoint = load_checkpoint(path)
    checkpoint.check_bank(bank)
    if checkpoint.extraction_hash != extraction_hash:
        raise ArtifactMismatch(f"Checkpoint {path}", extraction_hash, checkpoint.extraction_hash)
    expected = config.training_hash(extraction_hash)
    if checkpoint.training_hash != expected:
        raise ArtifactMismatch(f"Checkpoint {path}", expected, checkpoint.training_hash)
    return checkpoint


def _out_dir(config: RunConfig, command: str) -> pathlib.Path:
    out = config.path("out") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(
    config: RunConfig,
    command: str,
    started: float,
    outputs: Sequence[pathlib.Path],
    seed: Optional[int] = None,
    **hashes: str,
) -> pathlib.Path:
    out = _out_dir(config, command)
    config.dump(out / "config.yaml")
    manifest = {
        "command": command,
        "config_hash": config.config_hash(),
        **hashes,
        "seed": seed,
        "versions": {
            "deepdemand": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "pandas": pd.__version__,
            "networkx": nx.__version__,
        },
        "wall_time_s": round(time.perf_counter() - started, 3),
        "outputs": [str(p) for p in outputs],
    }
    path = out / "run.json"
    path.write_text(json.dumps(manifest, indent=1))
    return path


def _cmd_synth(config: RunConfig, args: argparse.Namespace) -> int:
    """Generate a synthetic network, areas and planted volumes."""
    started = time.perf_counter()
    spec = config.synthetic_spec()
    graph, targets = generate_synthetic_network(spec)
    synth = config.section("synth")
    areas = synthetic_areas(
        graph,
        fraction=synth["area_fraction"],
        n_features=synth["n_features"],
        n_latent=synth["n_latent"],
        seed=spec.seed,
    )
    bank = _fit_bank(config, graph, areas.features, areas.centroids)
    feature_nodes = bank.feature_nodes
    contexts = {
        t.edge_id: extract_context(
            graph,
            t,
            config["extraction__cutoff_s"],
            config["extraction__epsilon_s"],
            feature_nodes=feature_nodes,
        )
        for t in targets
    }
    planted = planted_params(config.model_config(bank.k), seed=spec.seed)
    targets = plant_volumes(
        planted, targets, contexts, bank, noise=synth["noise"], seed=spec.seed
    )

    outputs = [config.path(n) for n in ("edges", "nodes", "features", "centroids", "targets")]
    for path in outputs:
        path.parent.mkdir(parents=True, exist_ok=True)
    graph.to_files(config.path("edges"), config.path("nodes"))
    areas.features.to_csv(config.path("features"), index=False, float_format="%.17g")
    areas.centroids.to_csv(config.path("centroids"), index=False, float_format="%.17g")
    write_targets(config.path("targets"), targets)
    planted_path = _out_dir(config, "synth") / "planted_model.json"
    save_checkpoint(planted_path, planted, bank_checksum=bank.checksum())
    outputs.append(planted_path)
    _finish(config, "synth", started, outputs, seed=spec.seed)
    print(
        f"Done. Wrote a {spec.size}x{spec.size} grid with {len(graph.edges)} edges, "
        f"{len(areas.features)} areas and {len(targets)} target edges."
    )
    return 0


def _cmd_extract_od(config: RunConfig, args: argparse.Namespace) -> int:
    """Fit the feature bank and extract OD contexts for every target."""
    started = time.perf_counter()
    graph = _load_graph(config)
    targets = _load_targets(config, graph)
    _require(config, "features", "centroids")
    bank = _fit_bank(
        config,
        graph,
        pd.read_csv(config.path("features")),
        pd.read_csv(config.path("centroids")),
    )
    extraction_hash = config.extraction_hash(graph.checksum(), bank.checksum())

    directory = config.path("contexts")
    manifest_path = directory / EXTRACTION_MANIFEST
    if manifest_path.exists():
        previous = json.loads(manifest_path.read_text()).get("extraction_hash", "")
        if previous != extraction_hash:
            raise ArtifactMismatch(f"Context store {directory}", extraction_hash, previous)

    config.path("bank").parent.mkdir(parents=True, exist_ok=True)
    bank.to_file(config.path("bank"))
    manifest = extract_all(
        graph,
        targets,
        directory,
        config["extraction__cutoff_s"],
        config["extraction__epsilon_s"],
        workers=config["run__workers"],
        feature_nodes=bank.feature_nodes,
        extraction_hash=extraction_hash,
    )
    data = manifest.to_dict()
    data.update(extraction_hash=extraction_hash, bank_checksum=bank.checksum())
    manifest_path.write_text(json.dumps(data, indent=1))
    _finish(
        config,
        "extract-od",
        started,
        [config.path("bank"), manifest_path],
        extraction_hash=extraction_hash,
    )
    print(f"Done. {data['summary'].capitalize()}.")
    if manifest.failed:
        print(
            f"Extraction failed for {len(manifest.failed)} targets; see {manifest_path}.",
            file=sys.stderr,
        )
        return 1
    return 0


def _prepare(config: RunConfig):
    graph = _load_graph(config)
    targets = _load_targets(config, graph)
    bank = _load_bank(config)
    extraction_hash = config.extraction_hash(graph.checksum(), bank.checksum())
    return graph, targets, bank, extraction_hash


def _cmd_train(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the demand model on every labelled target."""
    started = time.perf_counter()
    _, targets, bank, extraction_hash = _prepare(config)
    labelled = [t for t in targets if t.aadt is not None]
    contexts = _read_contexts(config, [t.edge_id for t in labelled], extraction_hash)
    edges = build_eval_edges(labelled, contexts, bank)
    train_config = config.train_config()
    params = ModelParams.init(config.model_config(bank.k), train_config.seed)
    params, training_log = train(params, [e.inputs for e in edges], train_config)

    training_hash = config.training_hash(extraction_hash)
    save_checkpoint(
        config.path("checkpoint"),
        params,
        bank_checksum=bank.checksum(),
        training_hash=training_hash,
        extraction_hash=extraction_hash,
        training=training_log,
    )
    log_path = _out_dir(config, "train") / "training_log.json"
    log_path.write_text(json.dumps(training_log.to_dict(), indent=1))
    _finish(
        config,
        "train",
        started,
        [config.path("checkpoint"), log_path],
        seed=train_config.seed,
        extraction_hash=extraction_hash,
        training_hash=training_hash,
    )
    best = training_log.evaluations[-1].best_mgeh if training_log.evaluations else float("nan")
    print(
        f"Done. Trained for {training_log.iterations} iterations; best validation "
        f"MGEH {best:.3f} at iteration {training_log.best_iteration}."
    )
    return 0


def _model_specs(
    config: RunConfig,
    bank: FeatureBank,
    out: pathlib.Path,
    extraction_hash: str,
) -> List[ModelSpec]:
    settings = config.section("evaluation")
    specs: List[ModelSpec] = []
    for name in settings["models"]:
        if name == "linear":
            specs.append(LinearSpec(0.0))
        elif name == "ridge":
            specs.append(LinearSpec(settings["ridge"]))
        elif name == "gravity":
            try:
                specs.append(
                    GravitySpec(
                        bank,
                        settings["mass_column"],
                        steps=settings["gravity_steps"],
                        lr=settings["gravity_lr"],
                    )
                )
            except InvalidFeatureTable as exc:
                log.warning("Gravity baseline skipped: %s", exc)
        elif name == "deepdemand":
            specs.append(
                DeepDemandSpec(
                    config.model_config(bank.k),
                    config.train_config(),
                    checkpoint_dir=out / "folds" if settings["fold_checkpoints"] else None,
                    bank_checksum=bank.checksum(),
                    training_hash=config.training_hash(extraction_hash),
                    extraction_hash=extraction_hash,
                )
            )
        elif name == "constant":
            specs.append(ConstantSpec())
        elif name == "oracle":
            specs.append(OracleSpec())
        else:
            raise ConfigError(
                f'Unknown model "{name}" in evaluation.models; use linear, ridge, '
                "gravity, deepdemand, constant or oracle."
            )
    return specs


def _cmd_evaluate(config: RunConfig, args: argparse.Namespace) -> int:
    """Cross-validate the demand model and the baselines."""
    started = time.perf_counter()
    _, targets, bank, extraction_hash = _prepare(config)
    labelled = [t for t in targets if t.aadt is not None]
    contexts = _read_contexts(config, [t.edge_id for t in labelled], extraction_hash)
    edges = build_eval_edges(labelled, contexts, bank)
    settings = config.section("evaluation")
    plan = make_folds(labelled, settings["protocol"], settings["k"], settings["seed"])
    out = _out_dir(config, "evaluate")
    training_hash = config.training_hash(extraction_hash)
    report = run_cv(
        edges,
        plan,
        _model_specs(config, bank, out, extraction_hash),
        metadata={
            "config_hash": config.config_hash(),
            "extraction_hash": extraction_hash,
            "training_hash": training_hash,
            "seed": settings["seed"],
        },
    )
    outputs = report.write(out)
    _finish(
        config,
        "evaluate",
        started,
        outputs,
        seed=settings["seed"],
        extraction_hash=extraction_hash,
        training_hash=training_hash,
    )
    print(report.table())
    return 0


def _cmd_predict(config: RunConfig, args: argparse.Namespace) -> int:
    """Predict volumes for every extracted target, optionally under new features."""
    started = time.perf_counter()
    _, _, bank, extraction_hash = _prepare(config)
    _require(config, "checkpoint")
    checkpoint = _checked_checkpoint(config, config.path("checkpoint"), bank, extraction_hash)
    if args.features is not None:
        scenario = pathlib.Path(args.features)
        if not scenario.exists():
            raise MissingInput(scenario, "--features")
        bank = bank.with_features(pd.read_csv(scenario))
        log.info("Predicting under scenario features from %s.", scenario)
    _require(config, "contexts")
    store = ContextStore(config.path("contexts"))
    edge_ids = store.edge_ids()
    contexts = store.read_many(edge_ids, extraction_hash)
    inputs = [prepare_edge(contexts[e], bank) for e in edge_ids]
    predictions = pd.DataFrame(
        {"edge_id": edge_ids, "yhat": predict_edges(checkpoint.params, inputs)},
        columns=["edge_id", "yhat"],
    )
    if args.output:
        path = pathlib.Path(args.output)
    else:
        path = _out_dir(config, "predict") / "predictions.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    predictions.to_csv(path, index=False, float_format="%.17g")
    _finish(
        config,
        "predict",
        started,
        [path],
        extraction_hash=extraction_hash,
        training_hash=checkpoint.training_hash,
    )
    print(f"Done. Wrote {len(predictions)} predictions to {path}.")
    return 0


def _fold_checkpoints(directory: pathlib.Path) -> List[pathlib.Path]:
    def _key(path: pathlib.Path):
        fold = path.stem[len("fold_"):]
        return (0, int(fold), fold) if fold.isdigit() else (1, 0, fold)

    return sorted(directory.glob("fold_*.json"), key=_key)


def _cmd_deterrence(config: RunConfig, args: argparse.Namespace) -> int:
    """Export the learned deterrence curve, per fold when available."""
    started = time.perf_counter()
    _, _, bank, extraction_hash = _prepare(config)
    settings = config.section("interpret")
    grid = time_grid(settings["start_min"], settings["stop_min"], settings["step_min"])
    out = _out_dir(config, "deterrence")
    outputs = []
    if config.path("checkpoint").exists():
        checkpoint = _checked_checkpoint(config, config.path("checkpoint"), bank, extraction_hash)
        path = out / "deterrence.csv"
        export_deterrence(checkpoint.params, grid).to_csv(path)
        outputs.append(path)
    if args.folds:
        fold_dir = config.path("out") / "evaluate" / "folds"
        paths = _fold_checkpoints(fold_dir)
        if not paths:
            raise MissingInput(fold_dir / "fold_*.json", "--folds")
        curves = []
        for fold_path in paths:
            checkpoint = _checked_checkpoint(config, fold_path, bank, extraction_hash)
            curves.append(
                export_deterrence(checkpoint.params, grid, fold=fold_path.stem[len("fold_"):])
            )
        path = out / "deterrence_folds.csv"
        combine_curves(curves).to_csv(path)
        outputs.append(path)
    if not outputs:
        raise MissingInput(config.path("checkpoint"), "paths__checkpoint")
    _finish(
        config,
        "deterrence",
        started,
        outputs,
        extraction_hash=extraction_hash,
        training_hash=config.training_hash(extraction_hash),
    )
    print(f"Done. Wrote {', '.join(str(p) for p in outputs)}.")
    return 0


def _cmd_potentials(config: RunConfig, args: argparse.Namespace) -> int:
    """Aggregate OD pair scores into per-area origin and destination potentials."""
    started = time.perf_counter()
    _, _, bank, extraction_hash = _prepare(config)
    _require(config, "checkpoint", "contexts")
    checkpoint = _checked_checkpoint(config, config.path("checkpoint"), bank, extraction_hash)
    store = ContextStore(config.path("contexts"))
    contexts = store.read_many(store.edge_ids(), extraction_hash)
    settings = config.section("interpret")
    potentials = compute_potentials(
        checkpoint.params,
        bank,
        contexts.values(),
        sample_size=settings["sample_size"],
        seed=settings["seed"],
    )
    path = _out_dir(config, "potentials") / "potentials.csv"
    potentials.to_csv(path)
    _finish(
        config,
        "potentials",
        started,
        [path],
        seed=settings["seed"],
        extraction_hash=extraction_hash,
        training_hash=checkpoint.training_hash,
    )
    print(
        f"Done. Scored {potentials.sampled} of {potentials.universe_size} OD pairs "
        f"for {len(potentials)} areas."
    )
    return 0


COMMANDS: Mapping[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "synth": _cmd_synth,
    "extract-od": _cmd_extract_od,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "deterrence": _cmd_deterrence,
    "potentials": _cmd_potentials,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML configuration file.")
    common.add_argument(
        "-s",
        "--set",
        action="append",
        default=[],
        metavar="SECTION.NAME=VALUE",
        help="Override one setting; may be repeated.",
    )
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="Log more; repeat for debug output."
    )
    common.add_argument("--log-file", help="Also write the log to this file.")

    parser = argparse.ArgumentParser(
        prog="deepdemand",
        description="Predict edge traffic volumes from area features and local OD screening.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("synth", parents=[common], help=_cmd_synth.__doc__)
    p.add_argument("--size", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("extract-od", parents=[common], help=_cmd_extract_od.__doc__)
    p.add_argument("--graph", help="Edge file of the road network.")
    p.add_argument("--nodes", help="Node file.")
    p.add_argument("--targets", help="Target edge file.")
    p.add_argument("--out", help="Context directory.")
    p.add_argument(
        "--cutoff-s", "--cutoff", dest="cutoff_s", type=float, help="Travel-time cutoff."
    )
    p.add_argument("--epsilon-s", dest="epsilon_s", type=float, help="Screening tolerance.")
    p.add_argument("--workers", type=int, help="Worker processes.")

    p = sub.add_parser("train", parents=[common], help=_cmd_train.__doc__)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iterations", type=int)

    p = sub.add_parser("evaluate", parents=[common], help=_cmd_evaluate.__doc__)
    p.add_argument("--protocol", choices=("random", "spatial"))
    p.add_argument("--k", type=int, help="Number of folds for the random protocol.")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("predict", parents=[common], help=_cmd_predict.__doc__)
    p.add_argument("--features", help="Alternate raw feature table (scenario mode).")
    p.add_argument("--output", help="Prediction CSV path.")

    p = sub.add_parser("deterrence", parents=[common], help=_cmd_deterrence.__doc__)
    p.add_argument(
        "--folds", action="store_true", help="Also export per-fold curves from evaluate."
    )

    p = sub.add_parser("potentials", parents=[common], help=_cmd_potentials.__doc__)
    p.add_argument("--sample-size", type=int, help="Sample this many OD pairs.")
    p.add_argument("--seed", type=int)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f'Expected SECTION.NAME=VALUE, got "{item}".')
        try:
            parsed = yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f'Value of "{key}" is not valid YAML: {exc}') from exc
        overrides[key.strip().replace(".", "__")] = parsed
    for dest, key in FLAG_KEYS[args.command].items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _setup_logging(verbosity: int, log_file: Optional[str]) -> None:
    logger = logging.getLogger("deepdemand")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    if verbosity >= 2:
        logger.setLevel(logging.DEBUG)
    else:
        logger.setLevel(logging.INFO if verbosity else logging.WARNING)
    formatter = logging.Formatter(LOG_FORMAT)
    stream = logging.StreamHandler()
    stream.setFormatter(formatter)
    logger.addHandler(stream)
    if log_file:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code.

    0 on success, 1 on a computation error, 2 on a usage or input error.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose, args.log_file)
    try:
        config = RunConfig.load(args.config, overrides=_overrides(args))
        return COMMANDS[args.command](config, args)
    except InputError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"Error: {exc.strerror or exc}: {exc.filename}", file=sys.stderr)
        return 2
