"""統合時空間グラフネットワーク（STUGN）"""

import numpy as np

from ..autodiff import ops
from ..autodiff.parameter import Module, Parameter
from ..autodiff.tensor import Tensor
from ..data.series import FEATURE_CHANNELS
from ..graph.unified import KIND_PLACEHOLDER, NODE_KINDS, GraphBatch
from ..utils.exceptions import InvariantViolation, ValidationError
from .config import Family, ModelConfig
from .embedding import EdgeEmbedder, NodeEmbedder
from .graph_blocks import GraphLayer
from .layers import FeedForward

# (Δ緯度, Δ経度, Δt)
UNIFIED_EDGE_DIM = 3


class PersistenceConnection(Module):
    """モデル出力を α_out 倍して直近の観測値に足す

    α_out は0で初期化するため、学習前の予測は持続予測に一致する。
    """

    def __init__(self) -> None:
        self.alpha = Parameter(np.zeros(1), name="alpha_out")

    def forward(self, output: Tensor, last_values: np.ndarray) -> Tensor:
        """
        Args:
            output: (B, N, K) のモデル出力
            last_values: (B, N) の直近の風速

        Returns:
            (B, N, K) の予測
        """
        return output * self.alpha + Tensor(np.asarray(last_values)[..., None])


class STUGN(Module):
    """10分・1時間の観測とプレースホルダーを1つのグラフで扱う予測モデル"""

    uses_unified_graph = True

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        if config.family is not Family.STUGN:
            raise ValidationError(f"STUGN の構成ではありません: {config.family.value}")
        dim = config.latent_dim
        self.config = config
        self.node_embed = NodeEmbedder(
            len(FEATURE_CHANNELS), dim, rng, n_kinds=NODE_KINDS, use_position=True
        )
        self.edge_embed = EdgeEmbedder(UNIFIED_EDGE_DIM, dim, rng)
        self.layers = [GraphLayer(config, rng) for _ in range(config.layers)]
        self.readout = FeedForward(dim, config.ffn_hidden, 1, rng, config.dropout)
        self.persistence = PersistenceConnection()

    def forward(self, batch: GraphBatch) -> Tensor:
        """バッチグラフから予測を計算する

        Args:
            batch: merge_graphs で結合した統合グラフ

        Returns:
            (B, N, 6) の予測（標準化された風速）

        Raises:
            InvariantViolation: プレースホルダーが (観測局, ステップ) の全組を覆っていない場合
        """
        n_slots = batch.n_graphs * batch.n_stations
        ids = batch.placeholder_ids
        if (
            n_slots == 0
            or ids.shape[0] % n_slots != 0
            or np.any(batch.node_kind[ids] != KIND_PLACEHOLDER)
        ):
            raise InvariantViolation("プレースホルダーノードが (観測局, ステップ) の全組を覆っていません")

        h = self.node_embed(
            batch.node_features,
            batch.node_coords,
            batch.node_time,
            kinds=batch.node_kind,
            positions=batch.node_position,
        )
        e = self.edge_embed(batch.edge_attr)
        for layer in self.layers:
            h, e = layer(h, e, batch.src, batch.dst)

        output = self.readout(ops.gather(h, ids))
        output = output.reshape(batch.n_graphs, batch.n_stations, batch.horizon)
        return self.persistence(output, batch.last_values)
