"""予測精度の指標（m/s単位）"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..utils.exceptions import ValidationError
from .power import PowerCurve, energy_saving_vs_persistence


def _masked_residuals(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != target.shape or target.shape != mask.shape:
        raise ValidationError(
            f"予測 {pred.shape}・正解 {target.shape}・マスク {mask.shape} の形状が一致しません"
        )
    if not mask.any():
        raise ValidationError("評価できる正解がありません")
    return (target - pred)[mask]


def mse(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> float:
    """マスクで有効な要素の平均二乗誤差"""
    residuals = _masked_residuals(pred, target, mask)
    return float(np.mean(residuals**2))


def mae(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> float:
    """マスクで有効な要素の平均絶対誤差"""
    residuals = _masked_residuals(pred, target, mask)
    return float(np.mean(np.abs(residuals)))


def step_mse(pred: np.ndarray, target: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """予測ステップごとのMSE（最終軸がステップ、有効な要素がないステップはNaN）"""
    _masked_residuals(pred, target, mask)
    squared = np.where(mask, (np.asarray(target) - np.asarray(pred)) ** 2, 0.0)
    axes = tuple(range(squared.ndim - 1))
    counts = np.asarray(mask).sum(axis=axes)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, squared.sum(axis=axes) / counts, np.nan)


@dataclass(frozen=True)
class ForecastScores:
    """1セル分のテスト指標

    Attributes:
        mse: 平均二乗誤差 (m/s)
        mae: 平均絶対誤差 (m/s)
        saving_kwh: 持続予測に対する推定発電量誤差の改善 (kWh)
        step_mse: ステップごとのMSE
    """

    mse: float
    mae: float
    saving_kwh: float
    step_mse: Tuple[float, ...]

    @classmethod
    def failed(cls, horizon: int) -> "ForecastScores":
        nan = float("nan")
        return cls(mse=nan, mae=nan, saving_kwh=nan, step_mse=(nan,) * horizon)


def score_forecasts(
    pred: np.ndarray,
    truth: np.ndarray,
    mask: np.ndarray,
    persistence: np.ndarray,
    curve: PowerCurve,
) -> ForecastScores:
    """m/s単位の予測 (W, N, 6) をまとめて評価する

    Args:
        pred: モデルの予測
        truth: 正解（マスク外の値は使わない）
        mask: 正解の有無
        persistence: 同じウィンドウの持続予測
        curve: 発電量換算に使うパワーカーブ

    Returns:
        ForecastScores
    """
    return ForecastScores(
        mse=mse(pred, truth, mask),
        mae=mae(pred, truth, mask),
        saving_kwh=energy_saving_vs_persistence(pred, persistence, truth, curve, mask),
        step_mse=tuple(float(v) for v in step_mse(pred, truth, mask)),
    )
