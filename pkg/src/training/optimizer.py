"""Adamオプティマイザ"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from ..autodiff.parameter import Parameter
from ..utils.exceptions import ValidationError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """パラメータごとの1次・2次モーメントとステップ数"""

    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: Sequence[Parameter]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(
    params: Sequence[Parameter],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = BETA1,
    beta2: float = BETA2,
    eps: float = EPSILON,
) -> None:
    """バイアス補正付きのAdam更新をその場で行う

    Raises:
        ValidationError: パラメータ・勾配・モーメントの数や形状が一致しない場合
    """
    if not len(params) == len(grads) == len(state.m) == len(state.v):
        raise ValidationError("パラメータ・勾配・モーメントの数が一致しません")
    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for i, (param, grad) in enumerate(zip(params, grads)):
        if grad.shape != param.shape:
            raise ValidationError(f"勾配の形状 {grad.shape} がパラメータ {param.shape} と一致しません")
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad**2
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        param.data -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """学習可能なパラメータをまとめて更新する"""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float,
        beta1: float = BETA1,
        beta2: float = BETA2,
        eps: float = EPSILON,
    ) -> None:
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.for_params(self.params)

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step(self.params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
