"""学習用の損失関数"""

import numpy as np

from ..autodiff.tensor import Tensor
from ..utils.exceptions import ValidationError


def mse_loss(pred: Tensor, target: np.ndarray, mask: np.ndarray) -> Tensor:
    """マスクで有効な要素だけの平均二乗誤差

    Args:
        pred: 予測 (標準化済み)
        target: 正解（マスク外の値は使わない）
        mask: 有効な正解を示すブール配列

    Returns:
        スカラーのTensor

    Raises:
        ValidationError: 形状が一致しない、または有効な要素がない場合
    """
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != target.shape or target.shape != mask.shape:
        raise ValidationError(
            f"予測 {pred.shape}・正解 {target.shape}・マスク {mask.shape} の形状が一致しません"
        )
    count = int(mask.sum())
    if count == 0:
        raise ValidationError("損失を計算できる正解がありません")
    residual = pred - Tensor(np.where(mask, target, 0.0))
    return (residual * residual * Tensor(mask / count)).sum()
