"""Module for the per-node area feature bank."""
import hashlib
import json
import logging
import pathlib
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..hexfloat import decode_array, encode_array
from ..roadgraph import RoadGraph
from .errors import EmptyGraph, InvalidFeatureTable, MissingFeature

__all__ = ("DEFAULT_K", "FeatureBank", "fit_transform", "attach_to_nodes")

log = logging.getLogger("deepdemand.featurebank")

PathLike = Union[str, pathlib.Path]

DEFAULT_K = 64
FORMAT_VERSION = "deepdemand.featurebank/1"
AREA_COLUMN = "area_id"
CENTROID_COLUMNS = ("area_id", "x_m", "y_m", "land_area_km2")
_ATTACH_CHUNK = 512


class FeatureBank:
    """Reduced area features and the transform that produced them.

    A bank is built by `fit_transform` and becomes node-aware through
    `attach_to_nodes`. Both return new banks; a bank is never mutated.

    Attributes
    ----------
    area_ids : List[str]
        Area ids in ascending order; rows of `raw` and `reduced` follow it.
    feature_names : List[str]
        Raw feature column names.
    raw : np.ndarray
        ``(A, F)`` raw features after mean imputation.
    mean, std : np.ndarray
        ``(F,)`` normalization parameters.
    constant : np.ndarray
        ``(F,)`` booleans flagging zero-variance features (z-score 0).
    loadings : np.ndarray
        ``(k, F)`` orthonormal PCA loadings, by descending eigenvalue.
    eigenvalues : np.ndarray
        ``(F,)`` all covariance eigenvalues, descending.
    reduced : np.ndarray
        ``(A, k)`` reduced vectors.
    node_areas : Dict[int, str]
        Feature-carrying node mapped to its area id.
    land_area : Dict[str, float]
        Land area in km² per attached area.

    """

    __slots__ = (
        "area_ids",
        "feature_names",
        "raw",
        "mean",
        "std",
        "constant",
        "loadings",
        "eigenvalues",
        "reduced",
        "node_areas",
        "land_area",
        "_area_index",
        "_checksum",
    )

    def __init__(
        self,
        *,
        area_ids: Sequence[str],
        feature_names: Sequence[str],
        raw: np.ndarray,
        mean: np.ndarray,
        std: np.ndarray,
        constant: np.ndarray,
        loadings: np.ndarray,
        eigenvalues: np.ndarray,
        reduced: np.ndarray,
        node_areas: Optional[Mapping[int, str]] = None,
        land_area: Optional[Mapping[str, float]] = None,
    ):
        self.area_ids: List[str] = list(area_ids)
        self.feature_names: List[str] = list(feature_names)
        self.raw = raw
        self.mean = mean
        self.std = std
        self.constant = constant
        self.loadings = loadings
        self.eigenvalues = eigenvalues
        self.reduced = reduced
        self.node_areas: Dict[int, str] = dict(sorted((node_areas or {}).items()))
        self.land_area: Dict[str, float] = dict(land_area or {})
        self._area_index: Dict[str, int] = {a: i for i, a in enumerate(self.area_ids)}
        self._checksum: Optional[str] = None

    @property
    def k(self) -> int:
        """(int) : Reduced dimension."""
        return self.loadings.shape[0]

    @property
    def n_features(self) -> int:
        """(int) : Raw dimension F."""
        return self.loadings.shape[1]

    @property
    def explained_variance(self) -> np.ndarray:
        """(np.ndarray) : Variance captured by each retained component."""
        return self.eigenvalues[: self.k]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        """(np.ndarray) : Retained variance as a fraction of the total."""
        total = float(self.eigenvalues.sum())
        if total <= 0:
            return np.zeros(self.k)
        return self.explained_variance / total

    @property
    def feature_nodes(self) -> FrozenSet[int]:
        """(FrozenSet[int]) : Nodes carrying a feature vector."""
        return frozenset(self.node_areas)

    def area_row(self, area_id: str) -> int:
        return self._area_index[area_id]

    def vector(self, node: int) -> np.ndarray:
        """Get the reduced vector of a feature-carrying node.

        Raises
        ------
        MissingFeature
            If the node has no feature vector.

        """
        try:
            return self.reduced[self._area_index[self.node_areas[node]]]
        except KeyError:
            raise MissingFeature(node) from None

    def matrix(self, nodes: Iterable[int]) -> np.ndarray:
        """Stack the reduced vectors of several nodes into a ``(N, k)`` array."""
        rows = []
        for node in nodes:
            try:
                rows.append(self._area_index[self.node_areas[node]])
            except KeyError:
                raise MissingFeature(node) from None
        return self.reduced[np.asarray(rows, dtype=np.int64)].reshape(-1, self.k)

    def node_column(self, column: str) -> Dict[int, float]:
        """Get a raw feature column for every feature-carrying node."""
        try:
            j = self.feature_names.index(column)
        except ValueError:
            raise InvalidFeatureTable(f'No raw feature column "{column}".') from None
        return {
            node: float(self.raw[self._area_index[area], j])
            for node, area in self.node_areas.items()
        }

    def project(self, raw: np.ndarray) -> np.ndarray:
        """Normalize raw rows with the stored statistics and project them."""
        raw = np.where(np.isnan(raw), self.mean, raw)
        return _zscore(raw, self.mean, self.std, self.constant) @ self.loadings.T

    def reconstruct(self, reduced: np.ndarray) -> np.ndarray:
        """Map reduced vectors back into z-scored feature space."""
        return reduced @ self.loadings

    def with_features(self, raw: pd.DataFrame) -> "FeatureBank":
        """Apply this bank's transform to an alternate raw table.

        The alternate table must hold the same areas and feature columns.
        Normalization, loadings and node assignments are unchanged, so the
        `checksum` is too.
        """
        area_ids, names, values = _read_raw(raw)
        if sorted(names) != sorted(self.feature_names):
            raise InvalidFeatureTable("Alternate features have different columns.")
        if set(area_ids) != set(self.area_ids):
            raise InvalidFeatureTable("Alternate features cover different areas.")
        order = [names.index(n) for n in self.feature_names]
        rows = {a: i for i, a in enumerate(area_ids)}
        values = values[[rows[a] for a in self.area_ids]][:, order]
        values = np.where(np.isnan(values), self.mean, values)
        return self._replace(raw=values, reduced=self.project(values))

    def _replace(self, **changes) -> "FeatureBank":
        fields = {
            name: getattr(self, name)
            for name in self.__slots__
            if not name.startswith("_")
        }
        fields.update(changes)
        return FeatureBank(**fields)

    def checksum(self) -> str:
        """Get a SHA-256 digest of the transform and node assignment.

        Reduced vectors are deliberately excluded so that scenario banks
        from `with_features` keep the checksum of their parent.
        """
        if self._checksum is None:
            digest = hashlib.sha256()
            for array in (self.mean, self.std, self.loadings):
                digest.update(" ".join(float(x).hex() for x in array.ravel()).encode())
            digest.update(json.dumps(self.feature_names).encode())
            digest.update(
                json.dumps([[n, a] for n, a in self.node_areas.items()]).encode()
            )
            self._checksum = digest.hexdigest()
        return self._checksum

    def to_file(self, path: PathLike) -> None:
        """Serialize this bank as JSON, bit-exactly."""
        data = {
            "format": FORMAT_VERSION,
            "k": self.k,
            "area_ids": self.area_ids,
            "feature_names": self.feature_names,
            "raw": encode_array(self.raw),
            "mean": encode_array(self.mean),
            "std": encode_array(self.std),
            "constant": [bool(c) for c in self.constant],
            "loadings": encode_array(self.loadings),
            "eigenvalues": encode_array(self.eigenvalues),
            "reduced": encode_array(self.reduced),
            "node_areas": [[n, a] for n, a in self.node_areas.items()],
            "land_area_km2": {a: float(v).hex() for a, v in sorted(self.land_area.items())},
        }
        path = pathlib.Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(data, indent=1))
        tmp.replace(path)

    @classmethod
    def from_file(cls, path: PathLike) -> "FeatureBank":
        """Load a bank written by `to_file`."""
        try:
            data = json.loads(pathlib.Path(path).read_text())
            if data.get("format") != FORMAT_VERSION:
                raise InvalidFeatureTable(f"Unsupported bank format {data.get('format')!r}.")
            return cls(
                area_ids=data["area_ids"],
                feature_names=data["feature_names"],
                raw=decode_array(data["raw"]),
                mean=decode_array(data["mean"]),
                std=decode_array(data["std"]),
                constant=np.array(data["constant"], dtype=bool),
                loadings=decode_array(data["loadings"]),
                eigenvalues=decode_array(data["eigenvalues"]),
                reduced=decode_array(data["reduced"]),
                node_areas={int(n): a for n, a in data["node_areas"]},
                land_area={a: float.fromhex(v) for a, v in data["land_area_km2"].items()},
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidFeatureTable(f"Malformed feature bank {path}: {exc}") from exc

    def __repr__(self) -> str:
        return (
            f"<FeatureBank areas={len(self.area_ids)} F={self.n_features} "
            f"k={self.k} nodes={len(self.node_areas)}>"
        )


def fit_transform(raw: pd.DataFrame, k: int = DEFAULT_K) -> FeatureBank:
    """Fit z-score normalization and PCA on a raw area feature table.

    Parameters
    ----------
    raw : pd.DataFrame
        Column ``area_id`` followed by numeric feature columns. Missing values
        are imputed with the column mean.
    k : int
        Number of principal components to retain.

    Returns
    -------
    FeatureBank
        A bank without node assignments.

    Raises
    ------
    InvalidFeatureTable
        If there are fewer than 2 rows, ``k`` is outside ``[1, F]``, or
        values are not finite after imputation.

    """
    area_ids, names, values = _read_raw(raw)
    n_rows, n_features = values.shape
    if n_rows < 2:
        raise InvalidFeatureTable(f"Need at least 2 areas to fit, got {n_rows}.")
    if not 1 <= k <= n_features:
        raise InvalidFeatureTable(f"k must be between 1 and F={n_features}, got {k}.")

    with np.errstate(invalid="ignore"):
        mean = np.nanmean(values, axis=0)
    mean = np.where(np.isnan(mean), 0.0, mean)
    values = np.where(np.isnan(values), mean, values)
    if not np.isfinite(values).all():
        raise InvalidFeatureTable("Raw features contain infinite values.")
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    std = np.where(constant, 1.0, std)
    for name in np.asarray(names)[constant]:
        log.info("Feature %s has zero variance and is mapped to 0.", name)

    z = _zscore(values, mean, std, constant)
    cov = z.T @ z / (n_rows - 1)
    eigenvalues, vectors = np.linalg.eigh(cov)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    vectors = vectors[:, order]
    # sign convention: largest-magnitude loading of each component is positive
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(n_features)])
    vectors = vectors * np.where(signs == 0, 1.0, signs)

    loadings = np.ascontiguousarray(vectors[:, :k].T)
    return FeatureBank(
        area_ids=area_ids,
        feature_names=names,
        raw=values,
        mean=mean,
        std=std,
        constant=constant,
        loadings=loadings,
        eigenvalues=eigenvalues,
        reduced=z @ loadings.T,
    )


def attach_to_nodes(
    bank: FeatureBank, graph: RoadGraph, centroids: pd.DataFrame
) -> FeatureBank:
    """Attach each area to its nearest graph node.

    Distance is planar Euclidean. Ties go to the smaller node id. When two
    areas share a nearest node, the nearer area keeps it and the other is
    logged and left unattached.

    Parameters
    ----------
    bank : FeatureBank
        The fitted bank.
    graph : RoadGraph
        The road network.
    centroids : pd.DataFrame
        Columns ``area_id,x_m,y_m,land_area_km2`` covering every area.

    Returns
    -------
    FeatureBank
        A new bank with ``node_areas`` and ``land_area`` set.

    Raises
    ------
    EmptyGraph
        If the graph has no nodes.
    InvalidFeatureTable
        If centroids are missing columns or areas.

    """
    if len(graph) == 0:
        raise EmptyGraph("Cannot attach features to an empty graph.")
    missing_cols = [c for c in CENTROID_COLUMNS if c not in centroids.columns]
    if missing_cols:
        raise InvalidFeatureTable(f"Centroids missing columns: {', '.join(missing_cols)}")
    table = centroids.assign(area_id=centroids[AREA_COLUMN].astype(str)).set_index(
        AREA_COLUMN
    )
    table = table[~table.index.duplicated(keep="first")]
    missing = [a for a in bank.area_ids if a not in table.index]
    if missing:
        raise InvalidFeatureTable(
            f"Centroids missing for {len(missing)} areas, e.g. {', '.join(missing[:5])}"
        )
    table = table.loc[bank.area_ids]
    points = table[["x_m", "y_m"]].to_numpy(dtype=float)

    node_ids, node_xy = graph.coordinate_array()
    nearest = np.empty(len(points), dtype=np.int64)
    nearest_d2 = np.empty(len(points), dtype=float)
    for start in range(0, len(points), _ATTACH_CHUNK):
        chunk = points[start : start + _ATTACH_CHUNK]
        d2 = (chunk[:, None, 0] - node_xy[None, :, 0]) ** 2 + (
            chunk[:, None, 1] - node_xy[None, :, 1]
        ) ** 2
        best = np.argmin(d2, axis=1)
        nearest[start : start + len(chunk)] = best
        nearest_d2[start : start + len(chunk)] = d2[np.arange(len(chunk)), best]

    node_areas: Dict[int, str] = {}
    node_d2: Dict[int, float] = {}
    for area, idx, d2 in zip(bank.area_ids, nearest, nearest_d2):
        node = int(node_ids[idx])
        if node in node_areas:
            if d2 < node_d2[node]:
                log.warning(
                    "Area %s displaced from node %s by nearer area %s.",
                    node_areas[node],
                    node,
                    area,
                )
            else:
                log.warning(
                    "Area %s displaced from node %s by nearer area %s.",
                    area,
                    node,
                    node_areas[node],
                )
                continue
        node_areas[node] = area
        node_d2[node] = float(d2)

    land_area = {
        area: float(value)
        for area, value in zip(bank.area_ids, table["land_area_km2"].to_numpy(dtype=float))
    }
    return bank._replace(node_areas=node_areas, land_area=land_area)


def _read_raw(raw: pd.DataFrame):
    if AREA_COLUMN not in raw.columns:
        raise InvalidFeatureTable(f'Raw feature table has no "{AREA_COLUMN}" column.')
    raw = raw.assign(area_id=raw[AREA_COLUMN].astype(str)).sort_values(
        AREA_COLUMN, kind="stable"
    )
    if raw[AREA_COLUMN].duplicated().any():
        raise InvalidFeatureTable("Raw feature table repeats area ids.")
    names = [c for c in raw.columns if c != AREA_COLUMN]
    if not names:
        raise InvalidFeatureTable("Raw feature table has no feature columns.")
    try:
        values = raw[names].to_numpy(dtype=float)
    except ValueError as exc:
        raise InvalidFeatureTable(f"Non-numeric feature values: {exc}") from exc
    return list(raw[AREA_COLUMN]), names, values


def _zscore(
    values: np.ndarray, mean: np.ndarray, std: np.ndarray, constant: np.ndarray
) -> np.ndarray:
    return np.where(constant, 0.0, (values - mean) / std)
