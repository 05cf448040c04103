"""モデル入力用に標準化・エンコード済みのデータ区間"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..utils.exceptions import InsufficientDataError, ValidationError
from .encoding import Scaler, encode_timestamps, fit_scaler
from .series import WIND_SPEED, SeriesSet, StationMeta
from .windows import (
    HORIZON,
    LOOKBACK_10MIN,
    LOOKBACK_HOURLY,
    Window,
    make_windows,
    slice_pair,
    split_bounds,
)

SPLIT_NAMES = ("train", "val", "test")


def standardize_coordinates(stations: Sequence[StationMeta]) -> np.ndarray:
    """観測局の緯度・経度を観測局間で標準化する（標準偏差0の場合は1で割る）

    Args:
        stations: 観測局

    Returns:
        (N, 2) の標準化座標
    """
    coords = np.array([[s.latitude, s.longitude] for s in stations], dtype=np.float64)
    std = coords.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (coords - coords.mean(axis=0)) / std


@dataclass(frozen=True, eq=False)
class PreparedSplit:
    """1つのデータ区間（学習・検証・テスト）のモデル入力

    Attributes:
        name: 区間名
        series10: 欠損注入後の10分データ
        series60: 欠損注入後の1時間データ
        features10: 標準化済み10分特徴量 (N, L, 5)（欠損はNaN）
        features60: 標準化済み1時間特徴量 (N, H, 5)（欠損はNaN）
        time10: 10分グリッドの時刻エンコーディング (L, 8)
        time60: 1時間グリッドの時刻エンコーディング (H, 8)
        coords: 標準化座標 (N, 2)
        targets: 欠損注入前の標準化風速 (N, L)（欠損はNaN）
        target_mask: 正解値の有無 (N, L)
        windows: 予測ウィンドウ
    """

    name: str
    series10: SeriesSet
    series60: SeriesSet
    features10: np.ndarray
    features60: np.ndarray
    time10: np.ndarray
    time60: np.ndarray
    coords: np.ndarray
    targets: np.ndarray
    target_mask: np.ndarray
    windows: Tuple[Window, ...]

    @property
    def stations(self) -> Tuple[StationMeta, ...]:
        return self.series10.stations

    @property
    def n_stations(self) -> int:
        return self.series10.n_stations

    def window_targets(self, window: Window) -> Tuple[np.ndarray, np.ndarray]:
        """ウィンドウの正解値 (N, 6) とマスク (N, 6) を返す（欠損は0で埋める）"""
        mask = self.target_mask[:, window.targets]
        values = np.where(mask, self.targets[:, window.targets], 0.0)
        return values, mask


@dataclass(frozen=True, eq=False)
class PreparedData:
    """学習・検証・テストの3区間と共通のScaler"""

    train: PreparedSplit
    val: PreparedSplit
    test: PreparedSplit
    scaler: Scaler

    def splits(self) -> List[PreparedSplit]:
        return [self.train, self.val, self.test]


def prepare_split(
    name: str,
    pair: Tuple[SeriesSet, SeriesSet],
    clean10: SeriesSet,
    scaler: Scaler,
    coords: np.ndarray,
    lookback_10min: int = LOOKBACK_10MIN,
    lookback_hourly: int = LOOKBACK_HOURLY,
    horizon: int = HORIZON,
    stride: int = 1,
) -> PreparedSplit:
    """1区間分のSeriesSetを標準化・エンコードしてPreparedSplitを作る

    Raises:
        ValidationError: 欠損注入前後でグリッドが一致しない場合
        InsufficientDataError: ウィンドウが1つも作れない場合
    """
    series10, series60 = pair
    if not np.array_equal(series10.timestamps, clean10.timestamps):
        raise ValidationError("欠損注入前後の10分グリッドが一致しません")

    windows = make_windows(
        series10, series60, lookback_10min, lookback_hourly, horizon, stride
    )
    if not windows:
        raise InsufficientDataError(
            f"{name} 区間（長さ {series10.length}）からウィンドウを作れません"
        )
    clean_speed = clean10.values[..., WIND_SPEED]
    return PreparedSplit(
        name=name,
        series10=series10,
        series60=series60,
        features10=scaler.apply(series10.feature_array()),
        features60=scaler.apply(series60.feature_array()),
        time10=encode_timestamps(series10.timestamps),
        time60=encode_timestamps(series60.timestamps),
        coords=coords,
        targets=scaler.apply_channel(clean_speed, WIND_SPEED),
        target_mask=clean10.mask.copy(),
        windows=tuple(windows),
    )


def prepare_data(
    clean10: SeriesSet,
    corrupted10: SeriesSet,
    corrupted60: SeriesSet,
    lookback_10min: int = LOOKBACK_10MIN,
    lookback_hourly: int = LOOKBACK_HOURLY,
    horizon: int = HORIZON,
    stride: int = 1,
) -> PreparedData:
    """欠損注入後のデータを60/20/20に分割し、学習区間でScalerを推定して標準化する

    正解値は欠損注入前の10分データから取る。

    Args:
        clean10: 欠損注入前の10分データ
        corrupted10: 欠損注入後の10分データ
        corrupted60: 欠損注入後の10分データから再計算した1時間データ
        lookback_10min: 10分データのルックバック長
        lookback_hourly: 1時間データのルックバック長
        horizon: 予測ステップ数
        stride: ウィンドウの間引き間隔

    Returns:
        PreparedData

    Raises:
        InsufficientDataError: いずれかの区間でウィンドウが作れない場合
        DegenerateScaleError: 学習区間に一定値のチャネルがある場合
    """
    coords = standardize_coordinates(corrupted10.stations)
    bounds = split_bounds(corrupted10.length)
    pairs = [slice_pair(corrupted10, corrupted60, start, stop) for start, stop in bounds]
    scaler = fit_scaler(pairs[0][0])
    splits = [
        prepare_split(
            name,
            pair,
            clean10.slice(start, stop),
            scaler,
            coords,
            lookback_10min,
            lookback_hourly,
            horizon,
            stride,
        )
        for name, pair, (start, stop) in zip(SPLIT_NAMES, pairs, bounds)
    ]
    return PreparedData(train=splits[0], val=splits[1], test=splits[2], scaler=scaler)
