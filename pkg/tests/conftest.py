"""テスト共通のフィクスチャ"""

from typing import Optional, Tuple

import numpy as np
import pytest

from src.corruption.burst import BurstModel, corrupt_pair
from src.data.prepared import PreparedData, prepare_data
from src.data.series import FREQ_10MIN, SeriesSet, StationMeta
from src.data.synthetic import SyntheticSpec, generate_synthetic
from src.graph.spatial import SpatialBatch
from src.graph.unified import KIND_10MIN, KIND_HOURLY, KIND_PLACEHOLDER, GraphBatch
from src.training.batching import SampleCache, build_sample_cache

# 2015-06-01T00:00:00Z（分）
START_MINUTES = 23_885_280

STATIONS = (
    StationMeta("A", 56.0, 3.0),
    StationMeta("B", 56.5, 3.5),
    StationMeta("C", 57.5, 5.0),
)


def make_series(
    values: np.ndarray,
    mask: Optional[np.ndarray] = None,
    stations: Tuple[StationMeta, ...] = STATIONS,
    start: int = START_MINUTES,
    frequency: int = FREQ_10MIN,
) -> SeriesSet:
    """(N, L, 4) の値からSeriesSetを作る（maskがNoneなら全観測）"""
    values = np.asarray(values, dtype=np.float64)
    n, length = values.shape[:2]
    if mask is None:
        mask = np.ones((n, length), dtype=bool)
    return SeriesSet(
        stations=tuple(stations[:n]),
        frequency=frequency,
        timestamps=start + frequency * np.arange(length, dtype=np.int64),
        values=values,
        mask=mask,
    )


def constant_values(n: int, length: int, speed: float = 5.0) -> np.ndarray:
    """風速 speed・風向90度・気温10度・気圧1010hPaの一定値"""
    values = np.empty((n, length, 4))
    values[..., 0] = speed
    values[..., 1] = 90.0
    values[..., 2] = 10.0
    values[..., 3] = 1010.0
    return values


@pytest.fixture(scope="session")
def small_spec() -> SyntheticSpec:
    return SyntheticSpec(n_stations=4, length=720, seed=3)


@pytest.fixture(scope="session")
def clean_pair(small_spec: SyntheticSpec) -> Tuple[SeriesSet, SeriesSet]:
    return generate_synthetic(small_spec)


@pytest.fixture(scope="session")
def corrupted_triple(clean_pair):
    return corrupt_pair(clean_pair[0], BurstModel(target_rate=0.2, seed=1))


@pytest.fixture(scope="session")
def prepared(clean_pair, corrupted_triple) -> PreparedData:
    corrupted10, corrupted60, _ = corrupted_triple
    return prepare_data(clean_pair[0], corrupted10, corrupted60, stride=12)


@pytest.fixture(scope="session")
def cache(prepared: PreparedData) -> SampleCache:
    return build_sample_cache(prepared)


def toy_graph_batch(seed: int = 0) -> GraphBatch:
    """2観測局・各3観測ノード（10分2・1時間1）＋プレースホルダー6の小さなバッチグラフ"""
    rng = np.random.default_rng(seed)
    n_stations, horizon = 2, 6
    kinds, stations, positions = [], [], []
    for s in range(n_stations):
        for kind, pos in ((KIND_10MIN, 0), (KIND_10MIN, 1), (KIND_HOURLY, 0)):
            kinds.append(kind)
            stations.append(s)
            positions.append(pos)
    placeholder_ids = []
    for s in range(n_stations):
        for k in range(horizon):
            placeholder_ids.append(len(kinds))
            kinds.append(KIND_PLACEHOLDER)
            stations.append(s)
            positions.append(2 + k)

    src, dst = [], []
    for s in range(n_stations):
        own = [3 * s, 3 * s + 1, 3 * s + 2]
        other = 3 * (1 - s)
        src += [own[0], own[1], own[2], other]
        dst += [own[1], own[0], own[1], own[0]]
        for k in range(horizon):
            node = placeholder_ids[s * horizon + k]
            for sender in own + placeholder_ids[s * horizon : s * horizon + k]:
                src.append(sender)
                dst.append(node)

    n_nodes = len(kinds)
    features = rng.normal(size=(n_nodes, 5))
    last = np.array([features[1, 0], features[4, 0]])
    for s in range(n_stations):
        for k in range(horizon):
            features[placeholder_ids[s * horizon + k]] = features[3 * s + 1]
    coords = rng.normal(size=(n_stations, 2))
    return GraphBatch(
        n_graphs=1,
        n_stations=n_stations,
        node_kind=np.array(kinds),
        node_features=features,
        node_time=rng.normal(size=(n_nodes, 8)),
        node_coords=coords[np.array(stations)],
        node_position=np.array(positions),
        src=np.array(src),
        dst=np.array(dst),
        edge_attr=rng.normal(size=(len(src), 3)),
        placeholder_ids=np.array(placeholder_ids),
        last_values=last[None, :],
    )


def toy_spatial_batch(seed: int = 0, n_batch: int = 2, steps: int = 4) -> SpatialBatch:
    """3観測局の完全グラフ上の小さなベースライン入力"""
    rng = np.random.default_rng(seed)
    n_stations = 3
    features = rng.normal(size=(n_batch, n_stations, steps, 10))
    return SpatialBatch(
        features=features,
        time_encoding=rng.normal(size=(n_batch, steps, 8)),
        target_time_encoding=rng.normal(size=(n_batch, 6, 8)),
        coords=rng.normal(size=(n_stations, 2)),
        last_values=features[:, :, -1, 0].copy(),
        src=np.array([1, 2, 0, 2, 0, 1]),
        dst=np.array([0, 0, 1, 1, 2, 2]),
        edge_attr=rng.uniform(0.5, 1.5, size=(6, 1)),
    )
