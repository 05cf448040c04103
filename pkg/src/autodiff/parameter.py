"""学習可能パラメータとモジュールの基底クラス"""

from typing import Any, Iterator, List, Optional, Tuple

import numpy as np

from ..utils.exceptions import ValidationError
from .ops import dropout
from .tensor import Tensor


class Parameter(Tensor):
    """勾配を蓄積する学習可能な重み"""

    __slots__ = ("name", "trainable")

    def __init__(self, data: Any, name: str = "", trainable: bool = True) -> None:
        super().__init__(data, requires_grad=trainable, op="parameter")
        self.name = name
        self.trainable = trainable

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


class Module:
    """パラメータと子モジュールを属性として持つネットワーク部品の基底クラス

    パラメータは属性の定義順に辿る。リスト・タプルに入った子モジュールも辿る。
    """

    training: bool = True

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[Tuple[str, Any]]:
        for name, value in vars(self).items():
            if isinstance(value, (Parameter, Module)):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, (Parameter, Module)):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Parameter]]:
        """(階層名, パラメータ) のリストを定義順に返す"""
        named: List[Tuple[str, Parameter]] = []
        for name, child in self._children():
            full = f"{prefix}{name}"
            if isinstance(child, Parameter):
                named.append((full, child))
            else:
                named.extend(child.named_parameters(prefix=f"{full}."))
        return named

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, child in self._children():
            if isinstance(child, Module):
                yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        """学習モード（dropout有効）を切り替える"""
        for module in self.modules():
            module.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def n_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))


class Dropout(Module):
    """学習時のみ有効なdropout"""

    def __init__(self, rate: float, rng: Optional[np.random.Generator] = None) -> None:
        if not 0.0 <= rate < 1.0:
            raise ValidationError(f"dropout の rate は [0, 1) の範囲である必要があります: {rate}")
        self.rate = rate
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def forward(self, x: Tensor) -> Tensor:
        return dropout(x, self.rate, self.rng, self.training)
