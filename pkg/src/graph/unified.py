"""統合時空間グラフの構築

観測された各サンプルを個別のノードとし、予測時刻ごとにプレースホルダーノードを置く。
"""

import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..data.prepared import PreparedSplit
from ..data.series import FREQ_10MIN, FREQ_HOURLY, WIND_SPEED
from ..data.windows import Window
from ..utils.exceptions import ImputationError, InvariantViolation
from ..utils.logger import Logger
from .spatial import SpatialGraph

KIND_10MIN = 0
KIND_HOURLY = 1
KIND_PLACEHOLDER = 2
NODE_KINDS = 3

TEMPORAL_NEIGHBORS = 3

_KIND_FREQUENCY = {
    KIND_10MIN: FREQ_10MIN,
    KIND_HOURLY: FREQ_HOURLY,
    KIND_PLACEHOLDER: FREQ_10MIN,
}


@dataclass(frozen=True)
class NodeRecord:
    """グラフのノード1つ分のビュー"""

    node_id: int
    station_id: str
    latitude: float
    longitude: float
    timestamp: int
    frequency: int
    kind: str
    features: Tuple[float, ...]
    time_encoding: Tuple[float, ...]
    position: int


@dataclass(frozen=True)
class EdgeRecord:
    """有向辺1本分のビュー（差分は送信側 − 受信側）"""

    src: int
    dst: int
    delta_lat: float
    delta_lon: float
    delta_t: float


def edge_deltas(src: NodeRecord, dst: NodeRecord) -> EdgeRecord:
    """2ノード間の緯度・経度・時刻の差分（送信側 − 受信側）を求める

    Args:
        src: 送信側ノード
        dst: 受信側ノード

    Returns:
        EdgeRecord（delta_t は分）
    """
    return EdgeRecord(
        src=src.node_id,
        dst=dst.node_id,
        delta_lat=src.latitude - dst.latitude,
        delta_lon=src.longitude - dst.longitude,
        delta_t=float(src.timestamp - dst.timestamp),
    )


@dataclass(frozen=True, eq=False)
class UnifiedGraph:
    """1ウィンドウ分の統合グラフ（列指向）

    ノードは観測ノード（観測局順、10分→1時間）の後にプレースホルダー
    （観測局順、予測ステップ順）が並ぶ。辺は受信ノード順にまとめ、各受信ノード内では
    (|Δt|, 送信局のstation_id, 送信ノード) の順に並ぶ。

    Attributes:
        station_ids: 観測局ID (N,)
        station_latlon: 観測局の緯度・経度（度） (N, 2)
        station_coords: 標準化座標 (N, 2)
        node_station: ノードの観測局インデックス (M,)
        node_timestamp: ノードの時刻 (M,)
        node_kind: ノード種別 (M,)
        node_features: 標準化特徴量 (M, 5)
        node_time: 時刻エンコーディング (M, 8)
        node_position: 系列内の位置 (M,)
        src: 送信ノード (E,)
        dst: 受信ノード (E,)
        deltas: (Δlat, Δlon, Δt[分]) (E, 3)
        placeholder_ids: プレースホルダーのノードID (N, 6)
    """

    station_ids: Tuple[str, ...]
    station_latlon: np.ndarray
    station_coords: np.ndarray
    node_station: np.ndarray
    node_timestamp: np.ndarray
    node_kind: np.ndarray
    node_features: np.ndarray
    node_time: np.ndarray
    node_position: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    deltas: np.ndarray
    placeholder_ids: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.node_kind.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def n_stations(self) -> int:
        return len(self.station_ids)

    @property
    def n_observed(self) -> int:
        return int(np.count_nonzero(self.node_kind != KIND_PLACEHOLDER))

    @property
    def last_values(self) -> np.ndarray:
        """各観測局の直近の風速（プレースホルダーの風速特徴量） (N,)"""
        return self.node_features[self.placeholder_ids[:, 0], WIND_SPEED]

    @property
    def forecast_node_ids(self) -> Dict[str, List[int]]:
        return {
            sid: [int(n) for n in self.placeholder_ids[i]]
            for i, sid in enumerate(self.station_ids)
        }

    def node(self, node_id: int) -> NodeRecord:
        """ノードのビューを返す"""
        station = int(self.node_station[node_id])
        kind = int(self.node_kind[node_id])
        return NodeRecord(
            node_id=node_id,
            station_id=self.station_ids[station],
            latitude=float(self.station_latlon[station, 0]),
            longitude=float(self.station_latlon[station, 1]),
            timestamp=int(self.node_timestamp[node_id]),
            frequency=_KIND_FREQUENCY[kind],
            kind="forecast_placeholder" if kind == KIND_PLACEHOLDER else "observed",
            features=tuple(float(v) for v in self.node_features[node_id]),
            time_encoding=tuple(float(v) for v in self.node_time[node_id]),
            position=int(self.node_position[node_id]),
        )

    def nodes(self) -> List[NodeRecord]:
        return [self.node(i) for i in range(self.n_nodes)]

    def in_edges(self, node_id: int) -> List[EdgeRecord]:
        """受信ノードの入力辺を並び順どおりに返す"""
        return [
            EdgeRecord(
                src=int(self.src[e]),
                dst=int(self.dst[e]),
                delta_lat=float(self.deltas[e, 0]),
                delta_lon=float(self.deltas[e, 1]),
                delta_t=float(self.deltas[e, 2]),
            )
            for e in np.flatnonzero(self.dst == node_id)
        ]

    def edge_features(self, dt_scale: float) -> np.ndarray:
        """埋め込み用の辺特徴量 (E, 3)：Δt のみ学習区間のスケールで割る"""
        features = self.deltas.copy()
        features[:, 2] /= dt_scale
        return features


def _placeholder_values(
    split: PreparedSplit,
    window: Window,
    order: List[List[int]],
    logger: Logger,
) -> np.ndarray:
    """各観測局のプレースホルダー特徴量（直近の観測値）を決める

    自局の10分 → 最近傍局の10分 → 自局の1時間 → 最近傍局の1時間 の順に探す。

    Raises:
        ImputationError: ウィンドウ内に観測が1つもない場合
    """
    inputs10, inputs60 = window.inputs_10min, window.inputs_hourly
    blocks = [
        (split.series10.mask[:, inputs10], split.features10[:, inputs10]),
        (split.series60.mask[:, inputs60], split.features60[:, inputs60]),
    ]

    def last_of(station: int, mask: np.ndarray, features: np.ndarray) -> Optional[np.ndarray]:
        present = np.flatnonzero(mask[station])
        return features[station, present[-1]] if present.size else None

    values = np.empty((split.n_stations, split.features10.shape[-1]))
    for i in range(split.n_stations):
        found: Optional[np.ndarray] = None
        for mask, features in blocks:
            found = last_of(i, mask, features)
            if found is None:
                for j in order[i]:
                    found = last_of(j, mask, features)
                    if found is not None:
                        logger.log_debug(
                            f"Placeholder for {split.stations[i].station_id} at "
                            f"{window.anchor} uses station {split.stations[j].station_id}"
                        )
                        break
            if found is not None:
                break
        if found is None:
            raise ImputationError(
                f"時刻 {window.anchor} のウィンドウに観測値が1つもありません"
            )
        values[i] = found
    return values


def build_unified_graph(
    window: Window,
    split: PreparedSplit,
    spatial: SpatialGraph,
    order: List[List[int]],
) -> UnifiedGraph:
    """ウィンドウから統合グラフを構築する

    観測ノードは同一観測局・同一周波数の前後3ノードと、空間的に近い3局それぞれで
    |Δt| が最小のノード（同一周波数を優先、同値は早い方）から入力辺を受ける。
    プレースホルダーは同一観測局の全観測ノードとそれより前のプレースホルダーから
    入力辺を受け、観測ノードへは送信しない。

    Args:
        window: 対象ウィンドウ
        split: ウィンドウが属するデータ区間（欠損を含んでよい）
        spatial: 観測局のk近傍グラフ
        order: 各観測局について他局を近い順に並べたリスト

    Returns:
        UnifiedGraph

    Raises:
        ImputationError: ウィンドウ内に観測値が1つもない場合
    """
    logger = Logger(__name__)
    n_stations = split.n_stations
    lookback = len(window.inputs_10min)
    horizon = len(window.targets)

    station: List[int] = []
    stamps: List[int] = []
    kinds: List[int] = []
    features: List[np.ndarray] = []
    times: List[np.ndarray] = []
    positions: List[int] = []
    groups: Dict[Tuple[int, int], List[int]] = {}

    def add_node(s: int, ts: int, kind: int, feat: np.ndarray, enc: np.ndarray, pos: int) -> int:
        node_id = len(kinds)
        station.append(s)
        stamps.append(ts)
        kinds.append(kind)
        features.append(feat)
        times.append(enc)
        positions.append(pos)
        return node_id

    for i in range(n_stations):
        for pos, slot in enumerate(window.inputs_10min):
            if split.series10.mask[i, slot]:
                node = add_node(
                    i,
                    int(split.series10.timestamps[slot]),
                    KIND_10MIN,
                    split.features10[i, slot],
                    split.time10[slot],
                    pos,
                )
                groups.setdefault((i, KIND_10MIN), []).append(node)
        for pos, hour in enumerate(window.inputs_hourly):
            if split.series60.mask[i, hour]:
                node = add_node(
                    i,
                    int(split.series60.timestamps[hour]),
                    KIND_HOURLY,
                    split.features60[i, hour],
                    split.time60[hour],
                    pos,
                )
                groups.setdefault((i, KIND_HOURLY), []).append(node)

    last = _placeholder_values(split, window, order, logger)
    placeholder_ids = np.empty((n_stations, horizon), dtype=np.int64)
    for i in range(n_stations):
        for k, slot in enumerate(window.targets):
            placeholder_ids[i, k] = add_node(
                i,
                int(split.series10.timestamps[slot]),
                KIND_PLACEHOLDER,
                last[i],
                split.time10[slot],
                lookback + k,
            )

    node_ts = np.array(stamps, dtype=np.int64)
    edge_src: List[int] = []
    edge_dst: List[int] = []

    # 観測ノードの時間方向・空間方向の入力辺
    for (i, kind), members in groups.items():
        for k, node in enumerate(members):
            for other in members[max(0, k - TEMPORAL_NEIGHBORS):k] + members[
                k + 1:k + 1 + TEMPORAL_NEIGHBORS
            ]:
                edge_src.append(other)
                edge_dst.append(node)
            for j in spatial.neighbors[i]:
                other_kind = KIND_HOURLY if kind == KIND_10MIN else KIND_10MIN
                candidates = groups.get((j, kind)) or groups.get((j, other_kind))
                if not candidates:
                    continue
                gaps = np.abs(node_ts[candidates] - node_ts[node])
                edge_src.append(candidates[int(np.argmin(gaps))])
                edge_dst.append(node)

    # プレースホルダーは同一観測局のノードのみから受信する
    for i in range(n_stations):
        own = groups.get((i, KIND_10MIN), []) + groups.get((i, KIND_HOURLY), [])
        for k in range(horizon):
            node = int(placeholder_ids[i, k])
            for other in own + [int(p) for p in placeholder_ids[i, :k]]:
                edge_src.append(other)
                edge_dst.append(node)

    src = np.array(edge_src, dtype=np.int64)
    dst = np.array(edge_dst, dtype=np.int64)
    node_station = np.array(station, dtype=np.int64)
    ids = [s.station_id for s in split.stations]
    id_rank = np.argsort(np.argsort(np.array(ids)))
    gap = np.abs(node_ts[src] - node_ts[dst])
    sort = np.lexsort((src, id_rank[node_station[src]], gap, dst))
    src, dst = src[sort], dst[sort]

    latlon = np.array([[s.latitude, s.longitude] for s in split.stations], dtype=np.float64)
    deltas = np.zeros((src.shape[0], 3))
    if src.size:
        deltas[:, :2] = latlon[node_station[src]] - latlon[node_station[dst]]
        deltas[:, 2] = node_ts[src] - node_ts[dst]

    graph = UnifiedGraph(
        station_ids=tuple(ids),
        station_latlon=latlon,
        station_coords=split.coords,
        node_station=node_station,
        node_timestamp=node_ts,
        node_kind=np.array(kinds, dtype=np.int64),
        node_features=np.array(features, dtype=np.float64),
        node_time=np.array(times, dtype=np.float64),
        node_position=np.array(positions, dtype=np.int64),
        src=src,
        dst=dst,
        deltas=deltas,
        placeholder_ids=placeholder_ids,
    )
    _check_graph(graph)
    return graph


def _check_graph(graph: UnifiedGraph) -> None:
    """構築したグラフの不変条件を確認する"""
    if np.any(graph.src == graph.dst):
        raise InvariantViolation("自己ループの辺があります")
    placeholder = graph.node_kind == KIND_PLACEHOLDER
    if np.any(placeholder[graph.src] & ~placeholder[graph.dst]):
        raise InvariantViolation("プレースホルダーから観測ノードへの辺があります")
    if graph.placeholder_ids.shape[0] != graph.n_stations:
        raise InvariantViolation("観測局ごとのプレースホルダーが揃っていません")


def delta_t_scale(graphs: Sequence[UnifiedGraph]) -> float:
    """学習区間のグラフの辺 Δt の標準偏差（0または辺がない場合は1）

    Args:
        graphs: 学習区間の統合グラフ

    Returns:
        Δt の標準化スケール（分）
    """
    values = [g.deltas[:, 2] for g in graphs if g.n_edges]
    if not values:
        return 1.0
    std = float(np.concatenate(values).std())
    return std if std > 0 else 1.0


@dataclass(frozen=True, eq=False)
class GraphBatch:
    """複数の統合グラフを互いに素に結合したバッチ

    Attributes:
        n_graphs: グラフ数
        n_stations: グラフあたりの観測局数
        node_kind: ノード種別 (M,)
        node_features: 標準化特徴量 (M, 5)
        node_time: 時刻エンコーディング (M, 8)
        node_coords: ノードの観測局の標準化座標 (M, 2)
        node_position: 系列内の位置 (M,)
        src: 送信ノード (E,)
        dst: 受信ノード (E,)
        edge_attr: 埋め込み用の辺特徴量 (E, 3)
        placeholder_ids: (グラフ, 観測局, ステップ) 順に並べたプレースホルダー (B*N*6,)
        last_values: 直近の風速 (B, N)
    """

    n_graphs: int
    n_stations: int
    node_kind: np.ndarray
    node_features: np.ndarray
    node_time: np.ndarray
    node_coords: np.ndarray
    node_position: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    edge_attr: np.ndarray
    placeholder_ids: np.ndarray
    last_values: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.node_kind.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.placeholder_ids.shape[0] // (self.n_graphs * self.n_stations))


def merge_graphs(graphs: Sequence[UnifiedGraph], dt_scale: float) -> GraphBatch:
    """統合グラフのリストを1つのバッチグラフに結合する

    Args:
        graphs: 同じ観測局集合の統合グラフ
        dt_scale: Δt の標準化スケール

    Returns:
        GraphBatch
    """
    offsets = np.cumsum([0] + [g.n_nodes for g in graphs[:-1]])
    return GraphBatch(
        n_graphs=len(graphs),
        n_stations=graphs[0].n_stations,
        node_kind=np.concatenate([g.node_kind for g in graphs]),
        node_features=np.concatenate([g.node_features for g in graphs]),
        node_time=np.concatenate([g.node_time for g in graphs]),
        node_coords=np.concatenate([g.station_coords[g.node_station] for g in graphs]),
        node_position=np.concatenate([g.node_position for g in graphs]),
        src=np.concatenate([g.src + o for g, o in zip(graphs, offsets)]),
        dst=np.concatenate([g.dst + o for g, o in zip(graphs, offsets)]),
        edge_attr=np.concatenate([g.edge_features(dt_scale) for g in graphs]),
        placeholder_ids=np.concatenate(
            [g.placeholder_ids.ravel() + o for g, o in zip(graphs, offsets)]
        ),
        last_values=np.stack([g.last_values for g in graphs]),
    )


def dump_graph_csv(graph: UnifiedGraph, directory: str) -> Tuple[str, str]:
    """デバッグ用にノード表とエッジ表をCSVで書き出す

    Args:
        graph: 統合グラフ
        directory: 出力ディレクトリ

    Returns:
        (nodes.csv のパス, edges.csv のパス)
    """
    if not os.path.exists(directory):
        os.makedirs(directory)
    nodes = pd.DataFrame([n.__dict__ for n in graph.nodes()])
    if len(nodes):
        nodes["features"] = nodes["features"].map(lambda v: " ".join(f"{x:.6f}" for x in v))
        nodes["time_encoding"] = nodes["time_encoding"].map(
            lambda v: " ".join(f"{x:.6f}" for x in v)
        )
    edges = pd.DataFrame(
        {
            "src": graph.src,
            "dst": graph.dst,
            "delta_lat": graph.deltas[:, 0],
            "delta_lon": graph.deltas[:, 1],
            "delta_t": graph.deltas[:, 2],
        }
    )
    node_path = os.path.join(directory, "nodes.csv")
    edge_path = os.path.join(directory, "edges.csv")
    nodes.to_csv(node_path, index=False, lineterminator="\n")
    edges.to_csv(edge_path, index=False, lineterminator="\n")
    return node_path, edge_path
