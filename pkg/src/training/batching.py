"""ウィンドウごとのモデル入力のキャッシュとミニバッチ化

全モデルを同じウィンドウ集合で比較するため、統合グラフか補間のどちらかが
作れないウィンドウ、または正解値が1つもないウィンドウは全モデルから除外する。
"""

from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from ..corruption.imputation import impute_window
from ..data.encoding import Scaler
from ..data.prepared import PreparedData, PreparedSplit
from ..graph.spatial import (
    SpatialGraph,
    SpatialSample,
    build_spatial_graph,
    knn_stations,
    merge_samples,
    nearest_order,
)
from ..graph.unified import UnifiedGraph, build_unified_graph, delta_t_scale, merge_graphs
from ..utils.exceptions import ImputationError, InsufficientDataError
from ..utils.logger import Logger

BATCH_SIZE = 16


@dataclass(frozen=True, eq=False)
class SplitSamples:
    """1区間分の、全モデル共通で使えるウィンドウの入力と正解

    Attributes:
        name: 区間名
        anchors: ウィンドウの基準時刻（分）
        graphs: STUGN用の統合グラフ
        spatial: ベースライン用の補間済み入力
        targets: 標準化した正解風速 (W, N, 6)
        target_mask: 正解値の有無 (W, N, 6)
        dropped: 除外したウィンドウ数
    """

    name: str
    anchors: np.ndarray
    graphs: Tuple[UnifiedGraph, ...]
    spatial: Tuple[SpatialSample, ...]
    targets: np.ndarray
    target_mask: np.ndarray
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def persistence(self) -> np.ndarray:
        """補間後の直近値を延長した持続予測 (W, N, 6)"""
        last = np.stack([s.last_values for s in self.spatial])
        return np.repeat(last[..., None], self.targets.shape[-1], axis=-1)


@dataclass(frozen=True, eq=False)
class SampleCache:
    """学習・検証・テストのSplitSamplesと、推論に必要な共通の値"""

    train: SplitSamples
    val: SplitSamples
    test: SplitSamples
    scaler: Scaler
    dt_scale: float

    def split(self, name: str) -> SplitSamples:
        return {"train": self.train, "val": self.val, "test": self.test}[name]


def build_split_samples(
    split: PreparedSplit, spatial: SpatialGraph, order: List[List[int]]
) -> SplitSamples:
    """区間の全ウィンドウについてモデル入力を作り、使えるものだけを残す

    Raises:
        InsufficientDataError: 使えるウィンドウが1つもない場合
    """
    logger = Logger(__name__)
    anchors: List[int] = []
    graphs: List[UnifiedGraph] = []
    samples: List[SpatialSample] = []
    targets: List[np.ndarray] = []
    masks: List[np.ndarray] = []
    dropped = 0
    for window in split.windows:
        values, mask = split.window_targets(window)
        if not mask.any():
            dropped += 1
            continue
        try:
            inputs10, inputs60 = impute_window(split, window, order)
            graph = build_unified_graph(window, split, spatial, order)
        except ImputationError as e:
            logger.log_debug(f"Dropping window {window.anchor} of {split.name}: {e}")
            dropped += 1
            continue
        anchors.append(window.anchor)
        graphs.append(graph)
        samples.append(build_spatial_graph(window, split, inputs10, inputs60, spatial))
        targets.append(values)
        masks.append(mask)

    if not graphs:
        raise InsufficientDataError(f"{split.name} 区間に使えるウィンドウがありません")
    if dropped:
        logger.log_info(f"{split.name}: dropped {dropped} of {len(split.windows)} windows")
    return SplitSamples(
        name=split.name,
        anchors=np.array(anchors, dtype=np.int64),
        graphs=tuple(graphs),
        spatial=tuple(samples),
        targets=np.stack(targets),
        target_mask=np.stack(masks),
        dropped=dropped,
    )


def build_sample_cache(prepared: PreparedData) -> SampleCache:
    """全区間のモデル入力を一度だけ作る（エポック間で使い回す）"""
    stations = prepared.train.stations
    spatial = knn_stations(stations)
    order = nearest_order(stations)
    train, val, test = (build_split_samples(s, spatial, order) for s in prepared.splits())
    return SampleCache(
        train=train,
        val=val,
        test=test,
        scaler=prepared.scaler,
        dt_scale=delta_t_scale(train.graphs),
    )


def batch_indices(
    n_samples: int, batch_size: int = BATCH_SIZE, rng: Optional[np.random.Generator] = None
) -> List[np.ndarray]:
    """ミニバッチのインデックス（rngを渡すとシャッフルする）"""
    order = rng.permutation(n_samples) if rng is not None else np.arange(n_samples)
    return [order[i : i + batch_size] for i in range(0, n_samples, batch_size)]


def make_batch(
    samples: SplitSamples,
    indices: np.ndarray,
    unified: bool,
    dt_scale: float,
) -> Tuple[Any, np.ndarray, np.ndarray]:
    """モデル入力のバッチと正解・マスクを作る

    Args:
        samples: 区間のサンプル
        indices: バッチに含めるサンプル
        unified: 統合グラフを使うモデルかどうか
        dt_scale: Δt の標準化スケール

    Returns:
        (GraphBatch または SpatialBatch, 正解 (B, N, 6), マスク (B, N, 6))
    """
    if unified:
        batch: Any = merge_graphs([samples.graphs[i] for i in indices], dt_scale)
    else:
        batch = merge_samples([samples.spatial[i] for i in indices])
    return batch, samples.targets[indices], samples.target_mask[indices]
