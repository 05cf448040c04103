"""ノード・エッジの埋め込み

ノードの埋め込みは特徴量・観測局の位置・時刻の3つの線形写像の和に、
ノード種別の埋め込みと（必要なら）系列位置のsin/cosエンコーディングを加えたもの。
"""

from typing import Optional

import numpy as np

from ..autodiff import ops
from ..autodiff.parameter import Module, Parameter
from ..autodiff.tensor import Tensor
from ..data.encoding import TIMESTAMP_ENCODING_DIM
from ..utils.logger import Logger
from .layers import Linear, sinusoidal_table, uniform_init

MAX_POSITIONS = 64
COORD_DIM = 2

# 標準化済み入力として大きすぎる値の目安
_UNSCALED_THRESHOLD = 50.0


class NodeEmbedder(Module):
    """ノード特徴量を潜在次元 d に埋め込む"""

    def __init__(
        self,
        feature_dim: int,
        dim: int,
        rng: np.random.Generator,
        n_kinds: int = 1,
        use_position: bool = False,
    ) -> None:
        """NodeEmbedderを初期化する

        Args:
            feature_dim: 入力チャネル数
            dim: 潜在次元
            rng: 初期化用の乱数生成器
            n_kinds: ノード種別の数
            use_position: 系列位置エンコーディングを加えるかどうか
        """
        self.feat_embed = Linear(feature_dim, dim, rng)
        self.phys_pos_embed = Linear(COORD_DIM, dim, rng)
        self.time_embed = Linear(TIMESTAMP_ENCODING_DIM, dim, rng)
        self.kind_embed = Parameter(uniform_init(rng, dim, (n_kinds, dim)), name="kind")
        self.use_position = use_position
        self._positions = sinusoidal_table(MAX_POSITIONS, dim)

    def forward(
        self,
        features: np.ndarray,
        coords: np.ndarray,
        time_encoding: np.ndarray,
        kinds: Optional[np.ndarray] = None,
        positions: Optional[np.ndarray] = None,
    ) -> Tensor:
        """ノード埋め込みを計算する

        Args:
            features: 標準化済み特徴量 (..., C)
            coords: 標準化座標 (..., 2)
            time_encoding: 時刻エンコーディング (..., 8)
            kinds: ノード種別 (...)（Noneは種別埋め込みなし）
            positions: 系列位置 (...)（use_position=False の場合は無視）

        Returns:
            (..., d) の埋め込み
        """
        if np.max(np.abs(features), initial=0.0) > _UNSCALED_THRESHOLD:
            Logger(__name__).log_warning("Node features look unscaled")
        h = (
            self.feat_embed(Tensor(features))
            + self.phys_pos_embed(Tensor(coords))
            + self.time_embed(Tensor(time_encoding))
        )
        if kinds is not None:
            h = h + ops.gather(self.kind_embed, np.asarray(kinds))
        if self.use_position and positions is not None:
            h = h + Tensor(self._positions[np.asarray(positions)])
        return h


class EdgeEmbedder(Module):
    """辺の差分特徴量を潜在次元 d に埋め込む"""

    def __init__(self, in_dim: int, dim: int, rng: np.random.Generator) -> None:
        self.linear = Linear(in_dim, dim, rng)

    def forward(self, edge_attr: np.ndarray) -> Tensor:
        return self.linear(Tensor(edge_attr))
