"""ベースラインモデル用の線形補間による欠損補完"""

from typing import List, Sequence, Tuple

import numpy as np

from ..data.prepared import PreparedSplit
from ..data.series import SeriesSet, StationMeta, values_from_features
from ..data.windows import Window
from ..graph.spatial import nearest_order
from ..utils.exceptions import ImputationError, ValidationError


def impute_block(features: np.ndarray, order: List[List[int]]) -> np.ndarray:
    """(N, T, C) の特徴量ブロックの欠損を補完する

    観測局ごとに前後の最も近い観測値の間を時間方向に線形補間し、片側にしか
    観測がない場合はその値を保持する。観測が1つもない観測局は、観測のある
    最も近い観測局の補完結果をコピーする。

    Args:
        features: 欠損をNaNで表した特徴量 (N, T, C)
        order: 各観測局について他局を近い順に並べたリスト

    Returns:
        欠損のない (N, T, C) 配列（観測値はそのまま）

    Raises:
        ImputationError: 全観測局で観測が1つもない場合
    """
    n_stations, length, channels = features.shape
    available = ~np.any(np.isnan(features), axis=-1)
    has_data = available.any(axis=1)
    if not has_data.any():
        raise ImputationError("ウィンドウ内に観測値のある観測局がありません")

    result = np.array(features, dtype=np.float64)
    grid = np.arange(length)
    for i in np.flatnonzero(has_data):
        observed = np.flatnonzero(available[i])
        for c in range(channels):
            result[i, :, c] = np.interp(grid, observed, features[i, observed, c])
    for i in np.flatnonzero(~has_data):
        donor = next(j for j in order[i] if has_data[j])
        result[i] = result[donor]
    return result


def interpolate_impute(data: SeriesSet, stations: Sequence[StationMeta]) -> SeriesSet:
    """SeriesSet全体を補完して欠損のないSeriesSetを返す

    風向はsin/cos成分で補間してから角度に戻す。

    Args:
        data: 欠損を含むSeriesSet
        stations: 最近傍局の探索に使う観測局（data.stations と同じ並び）

    Returns:
        全要素が観測扱いのSeriesSet

    Raises:
        ValidationError: stations の並びが data と異なる場合
        ImputationError: 全観測局で観測が1つもない場合
    """
    if tuple(stations) != data.stations:
        raise ValidationError("stations は data.stations と同じ並びである必要があります")
    if data.length == 0:
        return data
    imputed = impute_block(data.feature_array(), nearest_order(stations))
    values = np.where(data.mask[..., None], data.values, values_from_features(imputed))
    return SeriesSet(
        stations=data.stations,
        frequency=data.frequency,
        timestamps=data.timestamps,
        values=values,
        mask=np.ones_like(data.mask),
    )


def impute_window(
    split: PreparedSplit, window: Window, order: List[List[int]]
) -> Tuple[np.ndarray, np.ndarray]:
    """ウィンドウの入力区間だけを使って標準化済み特徴量を補完する

    Args:
        split: データ区間
        window: 対象ウィンドウ
        order: 各観測局について他局を近い順に並べたリスト

    Returns:
        (10分入力 (N, 18, 5), 1時間入力 (N, 12, 5))

    Raises:
        ImputationError: いずれかの周波数で全観測局が欠損している場合
    """
    inputs10 = impute_block(split.features10[:, window.inputs_10min], order)
    inputs60 = impute_block(split.features60[:, window.inputs_hourly], order)
    return inputs10, inputs60
