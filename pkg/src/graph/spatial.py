"""観測局間の距離計算と固定空間グラフ（ベースライン用）"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Sequence, Tuple

import numpy as np

from ..data.series import StationMeta
from ..utils.exceptions import ValidationError

if TYPE_CHECKING:
    from ..data.prepared import PreparedSplit
    from ..data.windows import Window

EARTH_RADIUS_KM = 6371.0
SPATIAL_NEIGHBORS = 3


def haversine(a: StationMeta, b: StationMeta) -> float:
    """2地点間の大円距離を求める

    Args:
        a: 観測局
        b: 観測局

    Returns:
        距離 (km)
    """
    return float(
        _haversine_km(
            np.array([a.latitude]),
            np.array([a.longitude]),
            np.array([b.latitude]),
            np.array([b.longitude]),
        )[0]
    )


def _haversine_km(
    lat1: np.ndarray, lon1: np.ndarray, lat2: np.ndarray, lon2: np.ndarray
) -> np.ndarray:
    lat1, lon1, lat2, lon2 = map(np.radians, (lat1, lon1, lat2, lon2))
    a = (
        np.sin((lat2 - lat1) / 2) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def distance_matrix(stations: Sequence[StationMeta]) -> np.ndarray:
    """全観測局間の距離行列 (N, N) を求める（対角は0、対称）"""
    lat = np.array([s.latitude for s in stations], dtype=np.float64)
    lon = np.array([s.longitude for s in stations], dtype=np.float64)
    dist = _haversine_km(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
    # 浮動小数点誤差による非対称を除く
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist


def nearest_order(stations: Sequence[StationMeta]) -> List[List[int]]:
    """各観測局について他の観測局を近い順に並べる（同距離はstation_idの小さい順）"""
    dist = distance_matrix(stations)
    ids = np.array([s.station_id for s in stations])
    order: List[List[int]] = []
    for i in range(len(stations)):
        others = np.array([j for j in range(len(stations)) if j != i], dtype=np.int64)
        if others.size == 0:
            order.append([])
            continue
        ranked = np.lexsort((ids[others], dist[i, others]))
        order.append([int(j) for j in others[ranked]])
    return order


@dataclass(frozen=True, eq=False)
class SpatialGraph:
    """観測局をノードとする固定k近傍グラフ

    Attributes:
        stations: 観測局
        neighbors: 各観測局の近傍（近い順）
        src: 送信側観測局インデックス (E,)
        dst: 受信側観測局インデックス (E,)
        distance_km: 辺ごとの大円距離 (E,)
    """

    stations: Tuple[StationMeta, ...]
    neighbors: Tuple[Tuple[int, ...], ...]
    src: np.ndarray
    dst: np.ndarray
    distance_km: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    def edge_features(self) -> np.ndarray:
        """辺特徴量 (E, 1)：平均辺距離で割った距離"""
        if self.n_edges == 0:
            return np.zeros((0, 1))
        mean = float(self.distance_km.mean())
        scale = mean if mean > 0 else 1.0
        return (self.distance_km / scale)[:, None]


def knn_stations(stations: Sequence[StationMeta], k: int = SPATIAL_NEIGHBORS) -> SpatialGraph:
    """各観測局を距離の近いk局と結ぶ

    Args:
        stations: 観測局
        k: 近傍数（観測局数-1で打ち切る）

    Returns:
        SpatialGraph（辺は近傍から自局への向き）

    Raises:
        ValidationError: k が1未満の場合
    """
    if k < 1:
        raise ValidationError(f"k は1以上である必要があります: {k}")
    stations = tuple(stations)
    dist = distance_matrix(stations)
    neighbors = tuple(tuple(order[:k]) for order in nearest_order(stations))
    src = np.array([j for i, ns in enumerate(neighbors) for j in ns], dtype=np.int64)
    dst = np.array([i for i, ns in enumerate(neighbors) for _ in ns], dtype=np.int64)
    return SpatialGraph(
        stations=stations,
        neighbors=neighbors,
        src=src,
        dst=dst,
        distance_km=dist[src, dst] if src.size else np.zeros(0),
    )


@dataclass(frozen=True, eq=False)
class SpatialSample:
    """ベースラインモデルへの1ウィンドウ分の入力

    Attributes:
        features: 10分データと保持した1時間データを連結した特徴量 (N, T, 10)
        time_encoding: 入力時刻のエンコーディング (T, 8)
        target_time_encoding: 予測時刻のエンコーディング (6, 8)
        coords: 標準化した緯度・経度 (N, 2)
        last_values: 直近の風速（標準化済み） (N,)
        graph: 空間グラフ
    """

    features: np.ndarray
    time_encoding: np.ndarray
    target_time_encoding: np.ndarray
    coords: np.ndarray
    last_values: np.ndarray
    graph: SpatialGraph


def hold_hourly_indices(
    slot_timestamps: np.ndarray, hour_timestamps: np.ndarray
) -> np.ndarray:
    """各10分スロット時点で完了している最新の時間（ルックバック内の位置）を求める"""
    ends = hour_timestamps + 60
    positions = np.searchsorted(ends, slot_timestamps, side="right") - 1
    return np.clip(positions, 0, len(hour_timestamps) - 1)


def build_spatial_graph(
    window: "Window",
    split: "PreparedSplit",
    inputs10: np.ndarray,
    inputs60: np.ndarray,
    graph: SpatialGraph,
) -> SpatialSample:
    """補間済みウィンドウからベースライン用の時刻整列テンソルを作る

    1時間データは各10分スロットで完了済みの最新値を保持して10分グリッドに揃え、
    特徴量次元に連結する。

    Args:
        window: 対象ウィンドウ
        split: ウィンドウが属するデータ区間
        inputs10: 補間済みの10分入力 (N, 18, 5)
        inputs60: 補間済みの1時間入力 (N, 12, 5)
        graph: 空間グラフ

    Returns:
        SpatialSample

    Raises:
        ValidationError: 補間されていない欠損が残っている場合
    """
    if np.any(np.isnan(inputs10)) or np.any(np.isnan(inputs60)):
        raise ValidationError("ベースラインの入力に補間されていない欠損があります")

    slot_ts = split.series10.timestamps[window.inputs_10min]
    hour_ts = split.series60.timestamps[window.inputs_hourly]
    held = inputs60[:, hold_hourly_indices(slot_ts, hour_ts)]
    return SpatialSample(
        features=np.concatenate([inputs10, held], axis=-1),
        time_encoding=split.time10[window.inputs_10min],
        target_time_encoding=split.time10[window.targets],
        coords=split.coords,
        last_values=inputs10[:, -1, 0].copy(),
        graph=graph,
    )


@dataclass(frozen=True, eq=False)
class SpatialBatch:
    """同じ空間グラフを共有するウィンドウのバッチ

    Attributes:
        features: (B, N, T, 10)
        time_encoding: (B, T, 8)
        target_time_encoding: (B, 6, 8)
        coords: (N, 2)
        last_values: (B, N)
        src: 送信側観測局 (E,)
        dst: 受信側観測局 (E,)
        edge_attr: 辺特徴量 (E, 1)
    """

    features: np.ndarray
    time_encoding: np.ndarray
    target_time_encoding: np.ndarray
    coords: np.ndarray
    last_values: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    edge_attr: np.ndarray

    @property
    def n_graphs(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_stations(self) -> int:
        return int(self.features.shape[1])

    @property
    def horizon(self) -> int:
        return int(self.target_time_encoding.shape[1])


def merge_samples(samples: Sequence[SpatialSample]) -> SpatialBatch:
    """SpatialSampleを先頭軸で積み重ねる"""
    graph = samples[0].graph
    return SpatialBatch(
        features=np.stack([s.features for s in samples]),
        time_encoding=np.stack([s.time_encoding for s in samples]),
        target_time_encoding=np.stack([s.target_time_encoding for s in samples]),
        coords=samples[0].coords,
        last_values=np.stack([s.last_values for s in samples]),
        src=graph.src,
        dst=graph.dst,
        edge_attr=graph.edge_features(),
    )


def replicate_edges(
    src: np.ndarray, dst: np.ndarray, n_nodes: int, copies: int
) -> Tuple[np.ndarray, np.ndarray]:
    """n_nodes 個のノードからなるグラフの辺を copies 個の互いに素なコピーに複製する"""
    offsets = (np.arange(copies, dtype=np.int64) * n_nodes)[:, None]
    return (src[None, :] + offsets).ravel(), (dst[None, :] + offsets).ravel()
