"""基本的なネットワーク層"""

from typing import List, Tuple

import numpy as np

from ..autodiff import ops
from ..autodiff.parameter import Dropout, Module, Parameter
from ..autodiff.tensor import Tensor

FORGET_GATE_BIAS = 1.0


def spawn_rng(rng: np.random.Generator) -> np.random.Generator:
    """dropout用の独立した乱数生成器を派生させる"""
    return np.random.default_rng(int(rng.integers(2**63)))


def uniform_init(
    rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]
) -> np.ndarray:
    """±√(1/fan_in) の一様分布で初期化する"""
    bound = np.sqrt(1.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """全結合層 y = x W + b"""

    def __init__(
        self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True
    ) -> None:
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Parameter(uniform_init(rng, in_dim, (in_dim, out_dim)), name="weight")
        self.bias = (
            Parameter(uniform_init(rng, in_dim, (out_dim,)), name="bias") if bias else None
        )

    def forward(self, x: Tensor) -> Tensor:
        y = ops.matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class FeedForward(Module):
    """2層のFFN（GELU）"""

    def __init__(
        self,
        in_dim: int,
        hidden_dim: int,
        out_dim: int,
        rng: np.random.Generator,
        dropout: float = 0.0,
    ) -> None:
        self.hidden = Linear(in_dim, hidden_dim, rng)
        self.output = Linear(hidden_dim, out_dim, rng)
        self.dropout = Dropout(dropout, spawn_rng(rng))

    def forward(self, x: Tensor) -> Tensor:
        return self.output(self.dropout(ops.gelu(self.hidden(x))))


class ReZeroGate(Module):
    """0で初期化したスカラーで残差の枝を重み付けする（初期状態は恒等写像）"""

    def __init__(self) -> None:
        self.alpha = Parameter(np.zeros(1), name="alpha")

    def forward(self, x: Tensor, branch: Tensor) -> Tensor:
        return x + branch * self.alpha


class LSTMCell(Module):
    """LSTMセル（ゲート順は入力・忘却・候補・出力）"""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> None:
        self.hidden_dim = hidden_dim
        fan_in = input_dim + hidden_dim
        self.weight = Parameter(
            uniform_init(rng, fan_in, (fan_in, 4 * hidden_dim)), name="weight"
        )
        bias = uniform_init(rng, fan_in, (4 * hidden_dim,))
        bias[hidden_dim : 2 * hidden_dim] += FORGET_GATE_BIAS
        self.bias = Parameter(bias, name="bias")

    def forward(
        self, x: Tensor, state: Tuple[Tensor, Tensor]
    ) -> Tuple[Tensor, Tensor]:
        h, c = state
        gates = ops.matmul(ops.concat([x, h], axis=-1), self.weight) + self.bias
        d = self.hidden_dim
        i = ops.sigmoid(gates[..., :d])
        f = ops.sigmoid(gates[..., d : 2 * d])
        g = ops.tanh(gates[..., 2 * d : 3 * d])
        o = ops.sigmoid(gates[..., 3 * d :])
        c_next = f * c + i * g
        return o * ops.tanh(c_next), c_next


class LSTM(Module):
    """系列 (B, T, input) を順に処理するLSTM"""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator) -> None:
        self.cell = LSTMCell(input_dim, hidden_dim, rng)

    def forward(self, sequence: Tensor) -> List[Tensor]:
        """各時刻の隠れ状態 (B, hidden) のリストを返す"""
        batch = sequence.shape[0]
        h = Tensor(np.zeros((batch, self.cell.hidden_dim)))
        c = Tensor(np.zeros((batch, self.cell.hidden_dim)))
        outputs = []
        for t in range(sequence.shape[1]):
            h, c = self.cell(sequence[:, t], (h, c))
            outputs.append(h)
        return outputs


class MultiHeadSelfAttention(Module):
    """系列方向のマルチヘッド自己注意"""

    def __init__(self, dim: int, heads: int, rng: np.random.Generator) -> None:
        self.heads = heads
        self.head_dim = dim // heads
        self.query = Linear(dim, dim, rng)
        self.key = Linear(dim, dim, rng)
        self.value = Linear(dim, dim, rng)
        self.output = Linear(dim, dim, rng)

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.heads, self.head_dim).transpose(0, 2, 1, 3)

    def forward(self, x: Tensor) -> Tensor:
        batch, length, dim = x.shape
        q = self._split(self.query(x))
        k = self._split(self.key(x))
        v = self._split(self.value(x))
        scores = ops.scale(q @ k.transpose(0, 1, 3, 2), 1.0 / np.sqrt(self.head_dim))
        weights = ops.softmax(scores, axis=-1)
        mixed = (weights @ v).transpose(0, 2, 1, 3).reshape(batch, length, dim)
        return self.output(mixed)


def sinusoidal_table(length: int, dim: int) -> np.ndarray:
    """系列位置のsin/cosエンコーディング表 (length, dim)"""
    positions = np.arange(length, dtype=np.float64)[:, None]
    rates = 1.0 / np.power(10000.0, (2 * (np.arange(dim) // 2)) / dim)
    angles = positions * rates[None, :]
    table = np.empty((length, dim))
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table
