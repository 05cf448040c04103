"""特徴量エンコーディングモジュール

タイムスタンプ・風向のsin/cos分解と、チャネルごとの標準化を扱う。
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Tuple

import numpy as np
import pandas as pd

from ..utils.exceptions import DegenerateScaleError, ValidationError

if TYPE_CHECKING:
    from .series import SeriesSet

# 分・時・日・月の周期（日は月によらず31で固定）
TIMESTAMP_PERIODS = (60, 24, 31, 12)
TIMESTAMP_ENCODING_DIM = 2 * len(TIMESTAMP_PERIODS)

_COMPONENT_RANGES = {
    "minute": (0, 59),
    "hour": (0, 23),
    "day": (1, 31),
    "month": (1, 12),
}


def encode_timestamp(minute: int, hour: int, day: int, month: int) -> np.ndarray:
    """暦の成分を8次元のsin/cosベクトルにエンコードする

    Args:
        minute: 分 [0, 59]
        hour: 時 [0, 23]
        day: 日 [1, 31]
        month: 月 [1, 12]

    Returns:
        [sin(分), cos(分), sin(時), cos(時), sin(日), cos(日), sin(月), cos(月)]

    Raises:
        ValidationError: いずれかの成分が範囲外の場合
    """
    values = {"minute": minute, "hour": hour, "day": day, "month": month}
    for name, value in values.items():
        low, high = _COMPONENT_RANGES[name]
        if not low <= value <= high:
            raise ValidationError(f"{name}={value} は範囲 [{low}, {high}] の外です")

    components = np.array([minute, hour, day, month], dtype=np.float64)
    return _encode_components(components[None, :])[0]


def _encode_components(components: np.ndarray) -> np.ndarray:
    """(n, 4) の暦成分を (n, 8) のエンコーディングに変換する"""
    periods = np.asarray(TIMESTAMP_PERIODS, dtype=np.float64)
    angles = components * (2.0 * np.pi / periods)
    encoded = np.empty((components.shape[0], TIMESTAMP_ENCODING_DIM))
    encoded[:, 0::2] = np.sin(angles)
    encoded[:, 1::2] = np.cos(angles)
    return encoded


def encode_timestamps(timestamps: np.ndarray) -> np.ndarray:
    """エポックからの分単位タイムスタンプ列をまとめてエンコードする

    Args:
        timestamps: UTCエポックからの経過分 (L,)

    Returns:
        (L, 8) のエンコーディング
    """
    index = pd.to_datetime(np.asarray(timestamps, dtype=np.int64), unit="m", utc=True)
    components = np.stack(
        [index.minute, index.hour, index.day, index.month], axis=1
    ).astype(np.float64)
    return _encode_components(components)


def decompose_direction(deg: float) -> Tuple[float, float]:
    """風向を(sin, cos)の組に分解する

    Args:
        deg: 風向（度） [0, 360)

    Returns:
        (sin, cos) の組

    Raises:
        ValidationError: 風向が範囲外の場合
    """
    if not 0.0 <= deg < 360.0:
        raise ValidationError(f"風向 {deg} は範囲 [0, 360) の外です")
    radians = np.deg2rad(deg)
    return float(np.sin(radians)), float(np.cos(radians))


def direction_components(degrees: np.ndarray) -> np.ndarray:
    """風向配列を (..., 2) のsin/cos配列に変換する（NaNはそのまま伝播する）"""
    radians = np.deg2rad(np.asarray(degrees, dtype=np.float64))
    return np.stack([np.sin(radians), np.cos(radians)], axis=-1)


def direction_from_components(sin: np.ndarray, cos: np.ndarray) -> np.ndarray:
    """sin/cos成分から [0, 360) の風向を復元する"""
    degrees = np.rad2deg(np.arctan2(sin, cos)) % 360.0
    # -0.0 や丸めで360.0になったものを0へ寄せる
    return np.where(degrees >= 360.0, 0.0, degrees)


@dataclass(frozen=True, eq=False)
class Scaler:
    """チャネルごとの平均・標準偏差（母標準偏差）による標準化"""

    mean: np.ndarray
    std: np.ndarray
    fit_source: str = "train"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))
        if np.any(~np.isfinite(self.std)) or np.any(self.std <= 0):
            raise DegenerateScaleError(
                f"標準偏差が0以下のチャネルがあります: {self.std.tolist()}"
            )

    @classmethod
    def fit(cls, features: np.ndarray, fit_source: str = "train") -> "Scaler":
        """特徴量配列からScalerを推定する

        Args:
            features: 最終軸がチャネルの配列（欠損はNaN）
            fit_source: 推定に使ったデータ区分

        Returns:
            推定されたScaler

        Raises:
            DegenerateScaleError: 異なる値が2つ未満のチャネルがある場合
        """
        flat = np.asarray(features, dtype=np.float64).reshape(-1, features.shape[-1])
        for channel in range(flat.shape[1]):
            column = flat[:, channel]
            column = column[~np.isnan(column)]
            if np.unique(column).size < 2:
                raise DegenerateScaleError(
                    f"チャネル {channel} は異なる値が2つ未満のため標準化できません"
                )
        mean = np.nanmean(flat, axis=0)
        std = np.nanstd(flat, axis=0)
        return cls(mean=mean, std=std, fit_source=fit_source)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """標準化を適用する"""
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def invert(self, x: np.ndarray) -> np.ndarray:
        """標準化を元のスケールに戻す"""
        return np.asarray(x, dtype=np.float64) * self.std + self.mean

    def invert_channel(self, x: np.ndarray, channel: int = 0) -> np.ndarray:
        """単一チャネル（既定は風速）の標準化を元に戻す"""
        return np.asarray(x, dtype=np.float64) * self.std[channel] + self.mean[channel]

    def apply_channel(self, x: np.ndarray, channel: int = 0) -> np.ndarray:
        """単一チャネル（既定は風速）に標準化を適用する"""
        return (np.asarray(x, dtype=np.float64) - self.mean[channel]) / self.std[channel]


def fit_scaler(train: "SeriesSet") -> Scaler:
    """学習区間のSeriesSetからScalerを推定する

    Args:
        train: 学習区間の10分間隔SeriesSet

    Returns:
        全5チャネル（風速・風向sin/cos・気温・気圧）のScaler
    """
    return Scaler.fit(train.feature_array(), fit_source="train")
