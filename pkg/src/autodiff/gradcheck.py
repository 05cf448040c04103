"""中心差分による勾配の検証"""

from typing import Callable, Optional

import numpy as np

from .parameter import Module
from .tensor import Tensor, backward

FD_STEP = 1e-5
_DENOMINATOR_FLOOR = 1e-8


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    denominator = np.maximum(_DENOMINATOR_FLOOR, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denominator))


def grad_check(
    f: Callable[[Tensor], Tensor], x: np.ndarray, h: float = FD_STEP
) -> float:
    """解析的勾配と中心差分の最大相対誤差を求める

    Args:
        f: Tensorからスカラーを返す関数
        x: 評価点
        h: 差分幅

    Returns:
        max |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
    """
    x = np.array(x, dtype=np.float64)
    point = Tensor(x, requires_grad=True)
    backward(f(point))
    analytic = point.grad if point.grad is not None else np.zeros_like(x)

    numeric = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        shifted = x.copy()
        shifted[index] += h
        upper = f(Tensor(shifted)).item()
        shifted[index] -= 2 * h
        lower = f(Tensor(shifted)).item()
        numeric[index] = (upper - lower) / (2 * h)
    return _relative_error(analytic, numeric)


def grad_check_module(
    loss_fn: Callable[[], Tensor],
    module: Module,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    h: float = FD_STEP,
) -> float:
    """モジュールのパラメータについて勾配を検証する

    dropoutの乱数で損失が変わらないよう、呼び出し側で評価モードにしておくこと。

    Args:
        loss_fn: 現在のパラメータでスカラー損失を返す関数
        module: 対象モジュール
        max_coords: パラメータあたりに検証する座標数の上限（Noneは全座標）
        rng: 座標の抽出に使う乱数生成器
        h: 差分幅

    Returns:
        検証した全座標での最大相対誤差
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    module.zero_grad()
    backward(loss_fn())

    worst = 0.0
    for param in module.parameters():
        analytic_full = param.grad if param.grad is not None else np.zeros_like(param.data)
        flat = param.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        analytic = analytic_full.reshape(-1)[coords]
        numeric = np.zeros(coords.size)
        for k, c in enumerate(coords):
            original = flat[c]
            flat[c] = original + h
            upper = loss_fn().item()
            flat[c] = original - h
            lower = loss_fn().item()
            flat[c] = original
            numeric[k] = (upper - lower) / (2 * h)
        worst = max(worst, _relative_error(analytic, numeric))
    module.zero_grad()
    return worst
