"""グラフブロック（MPNN・GATv2・TGAT）と残差付きのグラフ層

辺は送信元 src から受信先 dst へ向かう。各ブロックは
(ノード表現 h (M, d), 辺表現 e (E, d), src, dst) を受け取り、更新後の h を返す。
入次数0のノードは集約結果が0ベクトルになる。
"""

from typing import Optional, Tuple

import numpy as np

from ..autodiff import ops
from ..autodiff.parameter import Dropout, Module, Parameter
from ..autodiff.tensor import Tensor
from ..utils.exceptions import ValidationError
from .config import GraphBlockKind, ModelConfig, Normalisation
from .layers import FeedForward, Linear, ReZeroGate, spawn_rng, uniform_init


def split_heads(x: Tensor, heads: int) -> Tensor:
    """(rows, d) を (rows, heads, d/heads) に分割する"""
    rows, dim = x.shape
    return x.reshape(rows, heads, dim // heads)


def _endpoints(h: Tensor, src: np.ndarray, dst: np.ndarray) -> Tuple[Tensor, Tensor]:
    return ops.gather(h, dst), ops.gather(h, src)


class MPNNBlock(Module):
    """メッセージ ψ([h_i ∥ h_j ∥ e_ji]) の平均を φ([h_i ∥ agg]) で更新する"""

    def __init__(self, dim: int, rng: np.random.Generator) -> None:
        self.message = Linear(3 * dim, dim, rng)
        self.update = Linear(2 * dim, dim, rng)

    def forward(self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray) -> Tensor:
        receiver, sender = _endpoints(h, src, dst)
        messages = self.message(ops.concat([receiver, sender, e], axis=-1))
        aggregated = ops.segment_mean(messages, dst, h.shape[0])
        return self.update(ops.concat([h, aggregated], axis=-1))


class GATv2Block(Module):
    """GATv2型のマルチヘッド注意

    スコアは s_ji = aᵀ LeakyReLU(W [h_i ∥ h_j ∥ e_ji])（ヘッドごと）。
    辺特徴量はスコアの入力に連結して与える。
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator) -> None:
        self.heads = heads
        self.head_dim = dim // heads
        self.score = Linear(3 * dim, dim, rng)
        self.attn = Parameter(
            uniform_init(rng, self.head_dim, (heads, self.head_dim)), name="attn"
        )
        self.value = Linear(dim, dim, rng, bias=False)
        self.output = Linear(dim, dim, rng)

    def attention(
        self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray
    ) -> Tensor:
        """受信ノードごとに和が1になる注意重み (E, heads)"""
        receiver, sender = _endpoints(h, src, dst)
        hidden = ops.leaky_relu(self.score(ops.concat([receiver, sender, e], axis=-1)))
        logits = (split_heads(hidden, self.heads) * self.attn).sum(axis=-1)
        return ops.segment_softmax(logits, dst, h.shape[0])

    def forward(self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray) -> Tensor:
        weights = self.attention(h, e, src, dst)
        values = split_heads(ops.gather(self.value(h), src), self.heads)
        weighted = values * weights.reshape(len(src), self.heads, 1)
        mixed = ops.segment_sum(weighted, dst, h.shape[0])
        return self.output(mixed.reshape(h.shape[0], h.shape[1]))


class TGATBlock(Module):
    """辺特徴量で鍵を変調するマルチヘッド注意

    q_i = h_i W^Q, k_ji = h_j ⊙ (e_ji W^K), α_ji = softmax_j(k_ji · q_i / √d_k),
    h'_i = Σ_j α_ji h_j W^V。ヘッドを連結して W^O で変換する。
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator) -> None:
        self.heads = heads
        self.head_dim = dim // heads
        self.query = Linear(dim, dim, rng, bias=False)
        self.key = Linear(dim, dim, rng, bias=False)
        self.value = Linear(dim, dim, rng, bias=False)
        self.output = Linear(dim, dim, rng)

    def attention(
        self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray
    ) -> Tensor:
        """受信ノードごとに和が1になる注意重み (E, heads)"""
        queries = split_heads(ops.gather(self.query(h), dst), self.heads)
        keys = split_heads(ops.gather(h, src), self.heads) * split_heads(
            self.key(e), self.heads
        )
        logits = ops.scale((keys * queries).sum(axis=-1), 1.0 / np.sqrt(self.head_dim))
        return ops.segment_softmax(logits, dst, h.shape[0])

    def forward(self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray) -> Tensor:
        weights = self.attention(h, e, src, dst)
        values = split_heads(ops.gather(self.value(h), src), self.heads)
        weighted = values * weights.reshape(len(src), self.heads, 1)
        mixed = ops.segment_sum(weighted, dst, h.shape[0])
        return self.output(mixed.reshape(h.shape[0], h.shape[1]))


def make_block(
    kind: GraphBlockKind, dim: int, heads: int, rng: np.random.Generator
) -> Module:
    """種類に応じたグラフブロックを生成する"""
    if kind is GraphBlockKind.MPNN:
        return MPNNBlock(dim, rng)
    if kind is GraphBlockKind.GATV2:
        return GATv2Block(dim, heads, rng)
    return TGATBlock(dim, heads, rng)


class GraphLayer(Module):
    """グラフブロックに残差接続と（任意の）ノード・エッジFFNを付けた1層

    正規化方式:
        ReZero: x + α·f(x)（α は0で初期化、初期状態は恒等写像）
        PreLayerNorm: x + f(LayerNorm(x))
        none: x + f(x)
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator) -> None:
        if config.graph_block is None:
            raise ValidationError("GraphLayer にはグラフブロックの指定が必要です")
        dim = config.latent_dim
        rezero = config.normalisation is Normalisation.REZERO
        self.normalisation = config.normalisation
        self.block = make_block(config.graph_block, dim, config.heads, rng)
        self.block_dropout = Dropout(config.dropout, spawn_rng(rng))
        self.block_gate = ReZeroGate() if rezero else None

        self.edge_ffn: Optional[FeedForward] = None
        self.edge_gate: Optional[ReZeroGate] = None
        if config.ffn_edge:
            self.edge_ffn = FeedForward(3 * dim, config.ffn_hidden, dim, rng, config.dropout)
            self.edge_gate = ReZeroGate() if rezero else None

        self.node_ffn: Optional[FeedForward] = None
        self.node_gate: Optional[ReZeroGate] = None
        if config.ffn_node:
            self.node_ffn = FeedForward(dim, config.ffn_hidden, dim, rng, config.dropout)
            self.node_gate = ReZeroGate() if rezero else None

    def _pre(self, x: Tensor) -> Tensor:
        if self.normalisation is Normalisation.PRE_LAYER_NORM:
            return ops.layer_norm(x)
        return x

    @staticmethod
    def _residual(x: Tensor, branch: Tensor, gate: Optional[ReZeroGate]) -> Tensor:
        return gate(x, branch) if gate is not None else x + branch

    def forward(
        self, h: Tensor, e: Tensor, src: np.ndarray, dst: np.ndarray
    ) -> Tuple[Tensor, Tensor]:
        """ノード表現と辺表現を更新する

        Returns:
            (更新後の h, 更新後の e)
        """
        update = self.block_dropout(self.block(self._pre(h), self._pre(e), src, dst))
        h = self._residual(h, update, self.block_gate)

        if self.edge_ffn is not None:
            normed = self._pre(h)
            receiver, sender = _endpoints(normed, src, dst)
            branch = self.edge_ffn(ops.concat([receiver, sender, self._pre(e)], axis=-1))
            e = self._residual(e, branch, self.edge_gate)

        if self.node_ffn is not None:
            h = self._residual(h, self.node_ffn(self._pre(h)), self.node_gate)
        return h, e
