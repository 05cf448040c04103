"""入力ウィンドウの生成と学習・検証・テスト区間への分割"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..utils.exceptions import InsufficientDataError, ValidationError
from .series import FREQ_10MIN, FREQ_HOURLY, SeriesSet

LOOKBACK_10MIN = 18
LOOKBACK_HOURLY = 12
HORIZON = 6

# 学習60% / 検証20% / テスト20%
SPLIT_FRACTIONS = (6, 2, 2)

SeriesPair = Tuple[SeriesSet, SeriesSet]


@dataclass(frozen=True, eq=False)
class Window:
    """1つの予測時点に対応する入力・予測対象のインデックス集合

    インデックスは全観測局で共通のグリッド上の位置を指す。

    Attributes:
        anchor: 予測開始時刻 t（UTCエポックからの分）
        anchor_index: 10分グリッド上の t の位置
        inputs_10min: t より前の10分グリッド位置 (18,)
        inputs_hourly: t までに完了した直近の1時間グリッド位置 (12,)
        targets: t からの予測対象の10分グリッド位置 (6,)
    """

    anchor: int
    anchor_index: int
    inputs_10min: np.ndarray
    inputs_hourly: np.ndarray
    targets: np.ndarray


def _completed_hours(series60: SeriesSet, anchor: int) -> int:
    """anchor 時点で完了している時間数（グリッド先頭からの個数）"""
    ends = series60.timestamps + FREQ_HOURLY
    return int(np.searchsorted(ends, anchor, side="right"))


def make_windows(
    series10: SeriesSet,
    series60: SeriesSet,
    lookback_10min: int = LOOKBACK_10MIN,
    lookback_hourly: int = LOOKBACK_HOURLY,
    horizon: int = HORIZON,
    stride: int = 1,
) -> List[Window]:
    """有効な全予測時点についてWindowを生成する

    入力が全て欠損している観測局を含むウィンドウも生成する（扱いはモデル側で決める）。

    Args:
        series10: 10分間隔のSeriesSet
        series60: 同じ区間の1時間間隔SeriesSet
        lookback_10min: 10分データのルックバック長
        lookback_hourly: 1時間データのルックバック長
        horizon: 予測ステップ数
        stride: 予測時点の間引き間隔

    Returns:
        時刻順のWindowのリスト

    Raises:
        ValidationError: 周波数の組み合わせや引数が不正な場合
    """
    if series10.frequency != FREQ_10MIN or series60.frequency != FREQ_HOURLY:
        raise ValidationError("make_windows には10分間隔と1時間間隔の組が必要です")
    if stride < 1:
        raise ValidationError(f"stride は1以上である必要があります: {stride}")

    # 区間より前に始まる時間は使わない
    first_hour = 0
    if series10.length:
        first_hour = int(np.searchsorted(series60.timestamps, series10.timestamps[0]))
    windows: List[Window] = []
    first_valid = None
    for t in range(lookback_10min, series10.length - horizon + 1):
        anchor = int(series10.timestamps[t])
        completed = _completed_hours(series60, anchor)
        if completed - first_hour < lookback_hourly:
            continue
        if first_valid is None:
            first_valid = t
        if (t - first_valid) % stride != 0:
            continue
        windows.append(
            Window(
                anchor=anchor,
                anchor_index=t,
                inputs_10min=np.arange(t - lookback_10min, t),
                inputs_hourly=np.arange(completed - lookback_hourly, completed),
                targets=np.arange(t, t + horizon),
            )
        )
    return windows


def split_bounds(length: int) -> List[Tuple[int, int]]:
    """グリッド長から60/20/20の連続区間 [start, stop) を求める"""
    total = sum(SPLIT_FRACTIONS)
    train_end = length * SPLIT_FRACTIONS[0] // total
    val_end = length * (SPLIT_FRACTIONS[0] + SPLIT_FRACTIONS[1]) // total
    return [(0, train_end), (train_end, val_end), (val_end, length)]


def slice_pair(series10: SeriesSet, series60: SeriesSet, start: int, stop: int) -> SeriesPair:
    """10分グリッドの [start, stop) 区間と、その内側に完全に収まる時間を切り出す"""
    part10 = series10.slice(start, stop)
    if part10.length == 0:
        return part10, series60.slice(0, 0)
    begin = int(part10.timestamps[0])
    end = int(part10.timestamps[-1]) + FREQ_10MIN
    hours = series60.timestamps
    inside = np.flatnonzero((hours >= begin) & (hours + FREQ_HOURLY <= end))
    if inside.size == 0:
        return part10, series60.slice(0, 0)
    return part10, series60.slice(int(inside[0]), int(inside[-1]) + 1)


def split_dataset(
    series10: SeriesSet,
    series60: SeriesSet,
    lookback_10min: int = LOOKBACK_10MIN,
    lookback_hourly: int = LOOKBACK_HOURLY,
    horizon: int = HORIZON,
) -> Tuple[SeriesPair, SeriesPair, SeriesPair]:
    """データ全体を時系列順に学習・検証・テスト区間へ分割する

    各区間は独立にウィンドウを作るため、区間境界をまたぐウィンドウは存在しない。

    Args:
        series10: 10分間隔のSeriesSet
        series60: 1時間間隔のSeriesSet
        lookback_10min: 10分データのルックバック長
        lookback_hourly: 1時間データのルックバック長
        horizon: 予測ステップ数

    Returns:
        (学習, 検証, テスト) の各 (10分, 1時間) の組

    Raises:
        InsufficientDataError: いずれかの区間でウィンドウが1つも作れない場合
    """
    names = ("train", "val", "test")
    parts = []
    for name, (start, stop) in zip(names, split_bounds(series10.length)):
        pair = slice_pair(series10, series60, start, stop)
        if not make_windows(*pair, lookback_10min, lookback_hourly, horizon):
            raise InsufficientDataError(
                f"{name} 区間（長さ {stop - start}）からウィンドウを作れません"
            )
        parts.append(pair)
    return parts[0], parts[1], parts[2]
