"""比較用のベースラインモデル

いずれも補間済みの入力（SpatialBatch）を受け取り、(B, N, 6) の予測を返す。
"""

from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from ..autodiff import ops
from ..autodiff.parameter import Dropout, Module, Parameter
from ..autodiff.tensor import Tensor
from ..data.series import FEATURE_CHANNELS, WIND_SPEED
from ..data.windows import HORIZON, LOOKBACK_10MIN
from ..graph.spatial import SpatialBatch, replicate_edges
from ..utils.exceptions import ValidationError
from .config import Family, ModelConfig, Normalisation
from .embedding import EdgeEmbedder, NodeEmbedder
from .graph_blocks import GraphLayer
from .layers import LSTM, FeedForward, MultiHeadSelfAttention, spawn_rng, uniform_init
from .stugn import PersistenceConnection

# 10分データと保持した1時間データの連結
BASELINE_FEATURES = 2 * len(FEATURE_CHANNELS)
SPATIAL_EDGE_DIM = 1
KIND_OBSERVED = 0
KIND_FORECAST = 1


class PersistenceModel(Module):
    """直近の値をそのまま延長する"""

    uses_unified_graph = False

    def forward(self, batch: SpatialBatch) -> Tensor:
        last = np.asarray(batch.last_values)[..., None]
        return Tensor(np.repeat(last, batch.horizon, axis=-1))


class TSFLinear(Module):
    """時間方向の線形写像 Q (K×T) による予測 ŷ = α·(Q x) + x_{t-1}

    観測局間の混合はしない。
    """

    uses_unified_graph = False

    def __init__(
        self,
        rng: np.random.Generator,
        lookback: int = LOOKBACK_10MIN,
        horizon: int = HORIZON,
    ) -> None:
        self.lookback = lookback
        self.q = Parameter(uniform_init(rng, lookback, (horizon, lookback)), name="Q")
        self.persistence = PersistenceConnection()

    def forward(self, batch: SpatialBatch) -> Tensor:
        history = batch.features[..., WIND_SPEED]
        if history.shape[-1] != self.lookback:
            raise ValidationError(
                f"ルックバック長 {history.shape[-1]} が {self.lookback} と一致しません"
            )
        output = ops.matmul(Tensor(history), self.q.transpose(1, 0))
        return self.persistence(output, batch.last_values)


class SpatioTemporalLayer(Module):
    """時刻ごとの空間グラフ更新と、観測局ごとの時間方向の更新を続けて行う1層

    時間方向の関数は ST-LSTM ではLSTM、ST-Transformer ではPre-LayerNormの自己注意。
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        dim = config.latent_dim
        self.spatial = GraphLayer(replace(config, ffn_node=False), rng)
        self.lstm: Optional[LSTM] = None
        self.attention: Optional[MultiHeadSelfAttention] = None
        if config.family is Family.ST_LSTM:
            self.lstm = LSTM(dim, dim, rng)
        else:
            self.attention = MultiHeadSelfAttention(dim, config.heads, rng)
        self.attention_dropout = Dropout(config.dropout, spawn_rng(rng))
        self.node_ffn = (
            FeedForward(dim, config.ffn_hidden, dim, rng, config.dropout)
            if config.ffn_node
            else None
        )
        self.pre_norm = config.normalisation is Normalisation.PRE_LAYER_NORM

    def _pre(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x) if self.pre_norm else x

    def spatial_step(
        self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray
    ) -> Tuple[Tensor, Tensor]:
        """全時刻の空間グラフ更新を互いに素なグラフとしてまとめて行う

        Args:
            h: (B, N, T, d)
            e: 複製済みの辺表現 (B*T*E, d)
            src, dst: replicate_edges で複製した辺 (B*T*E,)

        Returns:
            ((B, N, T, d), (B*T*E, d))
        """
        batch, n_stations, steps, dim = h.shape
        flat = h.transpose(0, 2, 1, 3).reshape(batch * steps * n_stations, dim)
        flat, e = self.spatial(flat, e, src, dst)
        return flat.reshape(batch, steps, n_stations, dim).transpose(0, 2, 1, 3), e

    def temporal_step(self, h: Tensor) -> Tensor:
        """観測局ごとに時間方向の関数を適用する"""
        batch, n_stations, steps, dim = h.shape
        sequence = h.reshape(batch * n_stations, steps, dim)
        if self.lstm is not None:
            states = self.lstm(sequence)
            sequence = ops.concat(
                [s.reshape(batch * n_stations, 1, dim) for s in states], axis=1
            )
        elif self.attention is not None:
            update = self.attention(self._pre(sequence))
            sequence = sequence + self.attention_dropout(update)
        if self.node_ffn is not None:
            sequence = sequence + self.node_ffn(self._pre(sequence))
        return sequence.reshape(batch, n_stations, steps, dim)

    def forward(
        self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray
    ) -> Tuple[Tensor, Tensor]:
        h, e = self.spatial_step(h, e, src, dst)
        return self.temporal_step(h), e


class _SpatioTemporalBaseline(Module):
    """ST-LSTM・ST-Transformer に共通の埋め込みと層の適用"""

    uses_unified_graph = False

    def __init__(
        self, config: ModelConfig, rng: np.random.Generator, use_position: bool
    ) -> None:
        dim = config.latent_dim
        self.config = config
        self.node_embed = NodeEmbedder(
            BASELINE_FEATURES, dim, rng, n_kinds=2, use_position=use_position
        )
        self.edge_embed = EdgeEmbedder(SPATIAL_EDGE_DIM, dim, rng)
        self.layers = [SpatioTemporalLayer(config, rng) for _ in range(config.layers)]

    def _encode(
        self,
        batch: SpatialBatch,
        features: np.ndarray,
        time_encoding: np.ndarray,
        kinds: np.ndarray,
    ) -> Tensor:
        """(B, N, T', C) の入力を埋め込んで全層を通す"""
        if np.any(np.isnan(features)):
            raise ValidationError("ベースラインの入力に欠損があります")
        n_batch, n_stations, steps, _ = features.shape
        shape = (n_batch, n_stations, steps)
        coords = np.broadcast_to(batch.coords[None, :, None, :], shape + (2,))
        times = np.broadcast_to(
            time_encoding[:, None, :, :], shape + (time_encoding.shape[-1],)
        )
        h = self.node_embed(
            features,
            coords,
            times,
            kinds=np.broadcast_to(kinds, shape),
            positions=np.broadcast_to(np.arange(steps), shape),
        )

        copies = n_batch * steps
        src, dst = replicate_edges(batch.src, batch.dst, n_stations, copies)
        edge_index = np.tile(np.arange(len(batch.src)), copies)
        e = ops.gather(self.edge_embed(batch.edge_attr), edge_index)
        for layer in self.layers:
            h, e = layer(h, e, src, dst)
        return h


class STLSTM(_SpatioTemporalBaseline):
    """空間グラフ更新とLSTMを重ね、最終時刻の隠れ状態から6ステップを直接予測する"""

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        if config.family is not Family.ST_LSTM:
            raise ValidationError(f"ST-LSTM の構成ではありません: {config.family.value}")
        super().__init__(config, rng, use_position=False)
        self.head = FeedForward(
            config.latent_dim, config.ffn_hidden, HORIZON, rng, config.dropout
        )
        self.persistence = PersistenceConnection()

    def forward(self, batch: SpatialBatch) -> Tensor:
        kinds = np.full(batch.features.shape[2], KIND_OBSERVED)
        h = self._encode(batch, batch.features, batch.time_encoding, kinds)
        return self.persistence(self.head(h[:, :, -1]), batch.last_values)


class STTransformer(_SpatioTemporalBaseline):
    """予測時刻のプレースホルダーを系列の末尾に加え、その位置の出力を読む

    プレースホルダーの特徴量は最後の入力時刻の値とする。
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        if config.family is not Family.ST_TRANSFORMER:
            raise ValidationError(
                f"ST-Transformer の構成ではありません: {config.family.value}"
            )
        super().__init__(config, rng, use_position=True)
        self.readout = FeedForward(config.latent_dim, config.ffn_hidden, 1, rng, config.dropout)
        self.persistence = PersistenceConnection()

    def forward(self, batch: SpatialBatch) -> Tensor:
        steps = batch.features.shape[2]
        horizon = batch.horizon
        placeholders = np.repeat(batch.features[:, :, -1:, :], horizon, axis=2)
        features = np.concatenate([batch.features, placeholders], axis=2)
        times = np.concatenate([batch.time_encoding, batch.target_time_encoding], axis=1)
        kinds = np.concatenate(
            [np.full(steps, KIND_OBSERVED), np.full(horizon, KIND_FORECAST)]
        )
        h = self._encode(batch, features, times, kinds)
        output = self.readout(h[:, :, steps:])
        return self.persistence(
            output.reshape(batch.n_graphs, batch.n_stations, horizon), batch.last_values
        )
