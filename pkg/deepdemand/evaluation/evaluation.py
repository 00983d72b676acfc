"""Cross-validated comparison of the demand model against baselines."""
import json
import logging
import pathlib
import re
from collections import defaultdict
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from tabulate import tabulate

from ..demandmodel import (
    ModelConfig,
    ModelParams,
    TrainConfig,
    TrainingLog,
    predict_edges,
    prepare_edge,
    save_checkpoint,
    train,
)
from ..featurebank import FeatureBank
from ..odextract import ODContext
from ..roadgraph import TargetEdge
from .baselines import DESIGN_DESCRIPTION, ModelSpec, Predictor, edge_design
from .errors import EmptyInput, InvalidMasses, SingularDesign
from .metrics import Metrics, geh, metrics
from .types import EdgeRecord, EvalEdge, FoldPlan, Split, Summary

__all__ = (
    "TABLE_ROWS",
    "DeepDemandSpec",
    "EvalReport",
    "build_eval_edges",
    "run_cv",
)

log = logging.getLogger("deepdemand.evaluation")

PathLike = Union[str, pathlib.Path]

TABLE_ROWS = (
    "Linear regression",
    "Ridge regression",
    "Random forest",
    "Gravity (log-linear)",
    "DeepDemand",
    "Constant (mean)",
)
METRIC_NAMES = ("mgeh", "mae", "r2")
_METRIC_LABELS = {"mgeh": "MGEH", "mae": "MAE", "r2": "R²"}


class DeepDemandSpec(ModelSpec):
    """Trains a fresh demand model on each fold.

    When ``checkpoint_dir`` is set, each fold's parameters are saved as
    ``fold_<fold>.json`` there, for per-fold deterrence curves.
    """

    name = "DeepDemand"

    def __init__(
        self,
        model_config: ModelConfig,
        train_config: TrainConfig = TrainConfig(),
        *,
        checkpoint_dir: Optional[PathLike] = None,
        bank_checksum: str = "",
        training_hash: str = "",
        extraction_hash: str = "",
    ):
        self.model_config = model_config
        self.train_config = train_config
        self.checkpoint_dir = None if checkpoint_dir is None else pathlib.Path(checkpoint_dir)
        self.bank_checksum = bank_checksum
        self.training_hash = training_hash
        self.extraction_hash = extraction_hash
        self.training_logs: Dict[str, TrainingLog] = {}

    def fit(self, train_edges: Sequence[EvalEdge], fold: str) -> Predictor:
        params = ModelParams.init(self.model_config, self.train_config.seed)
        params, training_log = train(
            params, [e.inputs for e in train_edges], self.train_config
        )
        self.training_logs[fold] = training_log
        if self.checkpoint_dir is not None:
            save_checkpoint(
                self.checkpoint_dir / f"fold_{fold}.json",
                params,
                bank_checksum=self.bank_checksum,
                training_hash=self.training_hash,
                extraction_hash=self.extraction_hash,
                training=training_log,
            )
        return lambda edges: predict_edges(params, [e.inputs for e in edges])


class EvalReport:
    """Per-edge results of a cross-validation run and their aggregates.

    Aggregates are always recomputed from `records`.

    Attributes
    ----------
    plan : FoldPlan
        The folds evaluated.
    records : List[EdgeRecord]
        One record per model, fold, split and edge.
    models : List[str]
        Model names in the order they were run.
    notes : Dict[str, List[str]]
        Per-model remarks, such as folds where fitting failed.
    metadata : Dict[str, Any]
        Free-form run metadata embedded in exports.

    """

    __slots__ = ("plan", "records", "models", "notes", "metadata")

    def __init__(
        self,
        plan: FoldPlan,
        records: Sequence[EdgeRecord],
        models: Sequence[str],
        notes: Optional[Mapping[str, List[str]]] = None,
        metadata: Optional[Mapping[str, Any]] = None,
    ):
        self.plan = plan
        self.records = list(records)
        self.models = list(models)
        self.notes: Dict[str, List[str]] = {m: list(v) for m, v in (notes or {}).items()}
        self.metadata: Dict[str, Any] = dict(metadata or {})

    def select(
        self,
        model: str,
        split: Optional[Split] = None,
        fold: Optional[str] = None,
    ) -> List[EdgeRecord]:
        return [
            r
            for r in self.records
            if r.model == model
            and (split is None or r.split is split)
            and (fold is None or r.fold == fold)
        ]

    def fold_metrics(self, model: str, split: Split = Split.test) -> Dict[str, Metrics]:
        """Get metrics per fold, for folds with records."""
        by_fold: Dict[str, List[EdgeRecord]] = defaultdict(list)
        for r in self.select(model, split):
            by_fold[r.fold].append(r)
        return {
            fold: metrics([r.y for r in rows], [r.yhat for r in rows])
            for fold, rows in sorted(by_fold.items(), key=lambda kv: self._fold_order(kv[0]))
        }

    def summary(self, model: str, split: Split = Split.test) -> Dict[str, Summary]:
        """Mean and sample standard deviation of each metric across folds."""
        per_fold = list(self.fold_metrics(model, split).values())
        out = {}
        for name in METRIC_NAMES:
            values = [getattr(m, name) for m in per_fold if getattr(m, name) is not None]
            if not values:
                out[name] = Summary(None, None, 0)
                continue
            std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            out[name] = Summary(float(np.mean(values)), std, len(values))
        return out

    def stratified(self, model: str, by: str = "road_class") -> Dict[str, Metrics]:
        """Pool test records over folds and compute metrics per group.

        ``by`` is ``road_class`` or ``region``.
        """
        groups: Dict[str, List[EdgeRecord]] = defaultdict(list)
        for r in self.select(model, Split.test):
            groups[str(getattr(r, by))].append(r)
        return {
            label: metrics([r.y for r in rows], [r.yhat for r in rows])
            for label, rows in sorted(groups.items())
        }

    def _fold_order(self, fold: str) -> int:
        folds = self.plan.folds
        return folds.index(fold) if fold in folds else len(folds)

    def table(self) -> str:
        """Render the model comparison as an aligned plain-text table."""
        headers = ["Model"] + [
            f"{split.value.title()} {_METRIC_LABELS[name]}"
            for split in (Split.train, Split.test)
            for name in METRIC_NAMES
        ]
        names = list(TABLE_ROWS) + [m for m in self.models if m not in TABLE_ROWS]
        rows = []
        for name in names:
            if name not in self.models:
                rows.append([name] + ["-"] * (len(headers) - 1))
                continue
            row = [name]
            for split in (Split.train, Split.test):
                summary = self.summary(name, split)
                row.extend(str(summary[n]) for n in METRIC_NAMES)
            rows.append(row)
        caption = (
            f"{self.plan.protocol} cross-validation, {len(self.plan.folds)} folds; "
            "mean (standard deviation) across folds."
        )
        return caption + "\n" + tabulate(rows, headers=headers, tablefmt="simple")

    def stratified_tables(self) -> str:
        parts = []
        for by in ("road_class", "region"):
            rows = []
            for model in self.models:
                for label, m in self.stratified(model, by).items():
                    rows.append([model, label, m.n, m.mgeh, m.mae, "-" if m.r2 is None else m.r2])
            if rows:
                parts.append(
                    f"Test metrics by {by.replace('_', ' ')}:\n"
                    + tabulate(
                        rows,
                        headers=["Model", by, "Edges", "MGEH", "MAE", "R²"],
                        floatfmt=",.3f",
                    )
                )
        return "\n\n".join(parts)

    def residuals(self, model: str) -> pd.DataFrame:
        """Test-split residual rows ``edge_id,fold,y,yhat,geh``."""
        rows = self.select(model, Split.test)
        return pd.DataFrame(
            {
                "edge_id": [r.edge_id for r in rows],
                "fold": [r.fold for r in rows],
                "y": [r.y for r in rows],
                "yhat": [r.yhat for r in rows],
                "geh": [r.geh for r in rows],
            },
            columns=["edge_id", "fold", "y", "yhat", "geh"],
        )

    def _model_dict(self, model: str) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for split in (Split.train, Split.test):
            out[split.value] = {
                "summary": {
                    k: {"mean": s.mean, "std": s.std, "n_folds": s.n_folds}
                    for k, s in self.summary(model, split).items()
                },
                "folds": {
                    f: m._asdict() for f, m in self.fold_metrics(model, split).items()
                },
            }
        for by in ("road_class", "region"):
            out[f"by_{by}"] = {k: m._asdict() for k, m in self.stratified(model, by).items()}
        out["notes"] = self.notes.get(model, [])
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metadata": self.metadata,
            "plan": self.plan.to_dict(),
            "models": {model: self._model_dict(model) for model in self.models},
            "records": [
                {
                    "model": r.model,
                    "edge_id": r.edge_id,
                    "fold": r.fold,
                    "split": r.split.value,
                    "y": r.y,
                    "yhat": r.yhat,
                    "geh": r.geh,
                    "residual": r.residual,
                    "road_class": r.road_class,
                    "region": r.region,
                }
                for r in self.records
            ],
        }

    def write(self, directory: PathLike) -> List[pathlib.Path]:
        """Write ``report.json``, ``report.txt`` and one residual CSV per model."""
        directory = pathlib.Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        path = directory / "report.json"
        path.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))
        written.append(path)
        path = directory / "report.txt"
        text = self.table()
        extra = self.stratified_tables()
        path.write_text(text + ("\n\n" + extra if extra else "") + "\n")
        written.append(path)
        for model in self.models:
            path = directory / f"residuals_{_slug(model)}.csv"
            self.residuals(model).to_csv(path, index=False, float_format="%.17g")
            written.append(path)
        return written

    def __repr__(self) -> str:
        return f"<EvalReport protocol={self.plan.protocol} models={self.models}>"


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


def build_eval_edges(
    targets: Sequence[TargetEdge],
    contexts: Mapping[int, ODContext],
    bank: FeatureBank,
) -> List[EvalEdge]:
    """Join targets with their contexts and features.

    Targets without an observed volume are left out.

    Raises
    ------
    EmptyInput
        If a labelled target has no context.

    """
    missing = [t.edge_id for t in targets if t.aadt is not None and t.edge_id not in contexts]
    if missing:
        raise EmptyInput(
            f"No OD context for {len(missing)} targets, e.g. {sorted(missing)[:5]}."
        )
    edges = []
    for target in sorted(targets, key=lambda t: t.edge_id):
        if target.aadt is None:
            continue
        context = contexts[target.edge_id]
        edges.append(
            EvalEdge(
                target=target,
                context=context,
                inputs=prepare_edge(context, bank, y=float(target.aadt)),
                design=edge_design(context, bank),
            )
        )
    return edges


def run_cv(
    edges: Sequence[EvalEdge],
    plan: FoldPlan,
    specs: Sequence[ModelSpec],
    *,
    metadata: Optional[Mapping[str, Any]] = None,
) -> EvalReport:
    """Train each model on the complement of each fold and test on the fold.

    Folds without test edges are skipped with a warning. A baseline whose fit
    fails on a fold (a singular design, unusable masses) is left out of that
    fold and the failure noted in the report.

    Parameters
    ----------
    edges : Sequence[EvalEdge]
        Labelled target edges, from `build_eval_edges`.
    plan : FoldPlan
        Fold assignment; edges absent from the plan are ignored.
    specs : Sequence[ModelSpec]
        The model rows to compare.
    metadata : Optional[Mapping[str, Any]]
        Merged into the report metadata.

    Returns
    -------
    EvalReport
        Train and test records for every model and fold.

    """
    by_id = {e.edge_id: e for e in edges}
    records: List[EdgeRecord] = []
    notes: Dict[str, List[str]] = defaultdict(list)
    for fold in plan.folds:
        test = [by_id[e] for e in plan.test_edges(fold) if e in by_id]
        train_set = [by_id[e] for e in plan.train_edges(fold) if e in by_id]
        if not test:
            log.warning("Fold %s has no test edges; skipped.", fold)
            continue
        if not train_set:
            log.warning("Fold %s has no training edges; skipped.", fold)
            continue
        log.info("Fold %s: %d train, %d test edges.", fold, len(train_set), len(test))
        for spec in specs:
            try:
                predictor = spec.fit(train_set, fold)
            except (SingularDesign, InvalidMasses, EmptyInput) as exc:
                log.warning("%s skipped on fold %s: %s", spec.name, fold, exc)
                notes[spec.name].append(f"fold {fold}: {exc}")
                continue
            for split, subset in ((Split.train, train_set), (Split.test, test)):
                yhat = np.asarray(predictor(subset), dtype=float)
                y = np.array([e.y for e in subset])
                for e, obs, pred, g in zip(subset, y, yhat, geh(y, yhat)):
                    records.append(
                        EdgeRecord(
                            model=spec.name,
                            edge_id=e.edge_id,
                            fold=fold,
                            split=split,
                            y=float(obs),
                            yhat=float(pred),
                            geh=float(g),
                            road_class=str(e.target.road_class),
                            region=e.target.region,
                        )
                    )
    report_metadata = {
        "protocol": str(plan.protocol),
        "folds": plan.folds,
        "edges": len(by_id),
        "baseline_design": DESIGN_DESCRIPTION,
        "random_forest": "not run",
        "fitted": {s.name: s.fitted() for s in specs if s.fitted()},
    }
    report_metadata.update(metadata or {})
    return EvalReport(plan, records, [s.name for s in specs], notes, report_metadata)
