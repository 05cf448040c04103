"""逆伝播型の自動微分のためのTensorとTape"""

from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.exceptions import NumericError, ValidationError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
ArrayLike = Union["Tensor", np.ndarray, float, int]


class Tensor:
    """64ビット浮動小数点の多次元配列と、それを作った演算の記録"""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        parents: Tuple["Tensor", ...] = (),
        backward: Optional[BackwardFn] = None,
        op: str = "leaf",
    ) -> None:
        """Tensorを初期化する

        Args:
            data: 値
            requires_grad: 勾配を蓄積するかどうか
            parents: この値を作った演算の入力
            backward: 出力勾配から入力勾配を求める関数
            op: 演算名（NaN検出時のメッセージに使う）

        Raises:
            NumericError: 値にNaN/Infが含まれる場合
        """
        self.data = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(self.data)):
            raise NumericError(f"演算 {op} の結果にNaNまたはInfが含まれています")
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward
        self._op = op

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op})"

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __add__(self, other: ArrayLike) -> "Tensor":
        return _ops.add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return _ops.add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return _ops.sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return _ops.sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return _ops.mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return _ops.mul(other, self)

    def __neg__(self) -> "Tensor":
        return _ops.neg(self)

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return _ops.matmul(self, other)

    def __getitem__(self, key: Any) -> "Tensor":
        return _ops.getitem(self, key)

    def reshape(self, *shape: int) -> "Tensor":
        return _ops.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        return _ops.transpose(self, axes or None)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return _ops.sum(self, axis, keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return _ops.mean(self, axis, keepdims)


def as_tensor(value: ArrayLike) -> Tensor:
    """値をTensorに変換する（Tensorはそのまま返す）"""
    return value if isinstance(value, Tensor) else Tensor(value)


class Tape:
    """1回の逆伝播のための演算記録（トポロジカル順）"""

    def __init__(self, order: List[Tensor]) -> None:
        self.order = order

    @classmethod
    def record(cls, output: Tensor) -> "Tape":
        """出力から辿れる勾配が必要な演算をトポロジカル順に並べる"""
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def backward(self, output: Tensor) -> None:
        """各演算を逆順に1回ずつ辿り、葉の勾配に蓄積する"""
        grads = {id(output): np.ones_like(output.data)}
        for node in reversed(self.order):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node._backward is None:
                node.grad = grad.copy() if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(node._parents, node._backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = parent_grad if key not in grads else grads[key] + parent_grad


def backward(loss: Tensor) -> None:
    """スカラーの損失から逆伝播し、パラメータの勾配を蓄積する

    Args:
        loss: スカラーTensor

    Raises:
        ValidationError: loss がスカラーでない場合
    """
    if loss.data.size != 1:
        raise ValidationError(f"backward はスカラーにのみ適用できます: shape={loss.shape}")
    if not loss.requires_grad:
        return
    Tape.record(loss).backward(loss)


from . import ops as _ops  # noqa: E402
