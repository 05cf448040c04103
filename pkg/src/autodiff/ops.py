"""微分可能な演算

各演算は順伝播の値と、出力勾配から入力勾配を求める関数を記録したTensorを返す。
"""

import builtins
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.exceptions import ValidationError
from .tensor import ArrayLike, BackwardFn, Tensor, as_tensor

GELU_COEFFICIENT = 0.044715
LEAKY_SLOPE = 0.2
LAYER_NORM_EPS = 1e-9


def _result(
    data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn, op: str
) -> Tensor:
    """演算結果のTensorを作る（勾配不要な場合は記録しない）"""
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=tuple(parents), backward=backward, op=op)
    return Tensor(data, op=op)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """ブロードキャストで拡張された軸を足し合わせて元の形状に戻す"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ValidationError(f"{op}: 形状 {a.shape} と {b.shape} は整合しません")


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(a.data + b.data, (a, b), backward, "add")


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result(a.data - b.data, (a, b), backward, "sub")


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """要素ごとの積"""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward, "mul")


def neg(a: Tensor) -> Tensor:
    return _result(-a.data, (a,), lambda g: (-g,), "neg")


def scale(a: Tensor, factor: float) -> Tensor:
    """定数倍"""
    return _result(a.data * factor, (a,), lambda g: (g * factor,), "scale")


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    """行列積（先頭の軸はバッチとしてブロードキャストする）"""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ValidationError(f"matmul: 形状 {a.shape} と {b.shape} は整合しません")

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        grad_b = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _result(a.data @ b.data, (a, b), backward, "matmul")


def concat(tensors: Sequence[ArrayLike], axis: int = -1) -> Tensor:
    """指定軸での連結"""
    parts = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError:
        raise ValidationError(f"concat: 形状 {[p.shape for p in parts]} は連結できません")
    bounds = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g: np.ndarray) -> List[np.ndarray]:
        return list(np.split(g, bounds, axis=axis))

    return _result(data, parts, backward, "concat")


def getitem(a: Tensor, key: Any) -> Tensor:
    """スライス・インデックス参照"""

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        grad = np.zeros_like(a.data)
        np.add.at(grad, key, g)
        return (grad,)

    return _result(a.data[key], (a,), backward, "getitem")


def gather(a: Tensor, index: np.ndarray) -> Tensor:
    """先頭軸に沿って行を集める（同じ行を複数回参照してよい）"""
    index = np.asarray(index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= a.shape[0]):
        raise ValidationError("gather: インデックスが範囲外です")
    return getitem(a, index)


def _check_segments(x: Tensor, segment_ids: np.ndarray, n_segments: int) -> np.ndarray:
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    if segment_ids.shape != (x.shape[0],):
        raise ValidationError(
            f"segment_ids の形状 {segment_ids.shape} が入力 {x.shape} と整合しません"
        )
    if segment_ids.size and (segment_ids.min() < 0 or segment_ids.max() >= n_segments):
        raise ValidationError("segment_ids が範囲外です")
    return segment_ids


def segment_sum(x: Tensor, segment_ids: np.ndarray, n_segments: int) -> Tensor:
    """グループごとの和（空のグループは0）"""
    segment_ids = _check_segments(x, segment_ids, n_segments)
    out = np.zeros((n_segments,) + x.shape[1:])
    np.add.at(out, segment_ids, x.data)
    return _result(out, (x,), lambda g: (g[segment_ids],), "segment_sum")


def segment_mean(x: Tensor, segment_ids: np.ndarray, n_segments: int) -> Tensor:
    """グループごとの平均（空のグループは0）"""
    segment_ids = _check_segments(x, segment_ids, n_segments)
    counts = np.maximum(np.bincount(segment_ids, minlength=n_segments), 1).astype(np.float64)
    shape = (n_segments,) + (1,) * (x.ndim - 1)
    inverse = (1.0 / counts).reshape(shape)
    out = np.zeros((n_segments,) + x.shape[1:])
    np.add.at(out, segment_ids, x.data)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return ((g * inverse)[segment_ids],)

    return _result(out * inverse, (x,), backward, "segment_mean")


def segment_softmax(scores: Tensor, segment_ids: np.ndarray, n_segments: int) -> Tensor:
    """可変長のグループごとのsoftmax（グループ内の最大値を引いてから指数をとる）

    Args:
        scores: (E,) または (E, H) のスコア
        segment_ids: 各要素のグループ (E,)
        n_segments: グループ数

    Returns:
        グループ内で和が1になる重み
    """
    segment_ids = _check_segments(scores, segment_ids, n_segments)
    maxima = np.full((n_segments,) + scores.shape[1:], -np.inf)
    np.maximum.at(maxima, segment_ids, scores.data)
    exps = np.exp(scores.data - maxima[segment_ids])
    sums = np.zeros((n_segments,) + scores.shape[1:])
    np.add.at(sums, segment_ids, exps)
    weights = exps / sums[segment_ids]

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        inner = np.zeros((n_segments,) + scores.shape[1:])
        np.add.at(inner, segment_ids, g * weights)
        return (weights * (g - inner[segment_ids]),)

    return _result(weights, (scores,), backward, "segment_softmax")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """密なsoftmax"""
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exps = np.exp(shifted)
    weights = exps / exps.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        return (weights * (g - (g * weights).sum(axis=axis, keepdims=True)),)

    return _result(weights, (x,), backward, "softmax")


def gelu(x: Tensor) -> Tensor:
    """GELU（tanh近似）"""
    c = np.sqrt(2.0 / np.pi)
    inner = c * (x.data + GELU_COEFFICIENT * x.data**3)
    t = np.tanh(inner)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        d_inner = c * (1.0 + 3.0 * GELU_COEFFICIENT * x.data**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t**2) * d_inner),)

    return _result(0.5 * x.data * (1.0 + t), (x,), backward, "gelu")


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), lambda g: (g * (1.0 - y**2),), "tanh")


def leaky_relu(x: Tensor, slope: float = LEAKY_SLOPE) -> Tensor:
    positive = x.data > 0
    y = np.where(positive, x.data, slope * x.data)
    return _result(y, (x,), lambda g: (np.where(positive, g, slope * g),), "leaky_relu")


def dropout(
    x: Tensor, rate: float, rng: Optional[np.random.Generator], training: bool
) -> Tensor:
    """学習時のみ要素を確率 rate で0にし、残りを 1/(1-rate) 倍する

    Raises:
        ValidationError: rate が [0, 1) の範囲外の場合
    """
    if not 0.0 <= rate < 1.0:
        raise ValidationError(f"dropout の rate は [0, 1) の範囲である必要があります: {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValidationError("学習時の dropout には乱数生成器が必要です")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _result(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def layer_norm(x: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """最終軸に沿った正規化（アフィン変換なし）"""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    normalized = centered * inv_std

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_mean = (g * normalized).mean(axis=-1, keepdims=True)
        return (inv_std * (g - g_mean - normalized * gx_mean),)

    return _result(normalized, (x,), backward, "layer_norm")


def sum(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _result(x.data.sum(axis=axis, keepdims=keepdims), (x,), backward, "sum")


def mean(x: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = x.data.size if axis is None else x.shape[axis]
    return scale(sum(x, axis, keepdims), 1.0 / builtins.max(count, 1))


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = shape[0]
    original = x.shape
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError:
        raise ValidationError(f"reshape: {original} を {tuple(shape)} に変形できません")
    return _result(data, (x,), lambda g: (g.reshape(original),), "reshape")


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return _result(
        np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose"
    )
