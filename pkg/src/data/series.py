"""観測局の時系列データモデル

全観測局が周波数ごとに共通の時間グリッドを共有し、欠損はマスクで表す。
"""

from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

from ..utils.exceptions import ValidationError
from .encoding import direction_components, direction_from_components

FREQ_10MIN = 10
FREQ_HOURLY = 60

# 生データのチャネル
RAW_CHANNELS = ("wind_speed", "wind_direction", "temperature", "pressure")
# モデル入力のチャネル（風向はsin/cosに分解）
FEATURE_CHANNELS = (
    "wind_speed",
    "direction_sin",
    "direction_cos",
    "temperature",
    "pressure",
)
WIND_SPEED = 0


@dataclass(frozen=True)
class StationMeta:
    """観測局のメタデータ"""

    station_id: str
    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"緯度 {self.latitude} が範囲外です ({self.station_id})")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(
                f"経度 {self.longitude} が範囲外です ({self.station_id})"
            )


@dataclass(frozen=True)
class RawRecord:
    """1観測局・1時刻の観測値"""

    station_id: str
    timestamp: int
    wind_speed: float
    wind_direction: float
    temperature: float
    pressure: float

    def __post_init__(self) -> None:
        if self.wind_speed < 0:
            raise ValidationError(f"風速が負です: {self.wind_speed}")
        if not 0.0 <= self.wind_direction < 360.0:
            raise ValidationError(f"風向が範囲外です: {self.wind_direction}")


@dataclass(frozen=True, eq=False)
class SeriesSet:
    """単一周波数の多地点時系列

    Attributes:
        stations: 観測局（station_id順）
        frequency: サンプリング周期（分）
        timestamps: グリッドのタイムスタンプ (L,)（UTCエポックからの分）
        values: 生チャネル値 (N, L, 4)。マスク外はNaN
        mask: 観測の有無 (N, L)
    """

    stations: Tuple[StationMeta, ...]
    frequency: int
    timestamps: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        stations = tuple(self.stations)
        timestamps = np.array(self.timestamps, dtype=np.int64)
        values = np.array(self.values, dtype=np.float64)
        mask = np.array(self.mask, dtype=bool)

        if self.frequency not in (FREQ_10MIN, FREQ_HOURLY):
            raise ValidationError(f"未対応のサンプリング周期です: {self.frequency}")
        ids = [s.station_id for s in stations]
        if len(set(ids)) != len(ids):
            raise ValidationError("station_id が重複しています")
        n_stations, length = len(stations), timestamps.shape[0]
        if values.shape != (n_stations, length, len(RAW_CHANNELS)):
            raise ValidationError(f"values の形状が不正です: {values.shape}")
        if mask.shape != (n_stations, length):
            raise ValidationError(f"mask の形状が不正です: {mask.shape}")
        if length > 1 and np.any(np.diff(timestamps) != self.frequency):
            raise ValidationError("タイムスタンプが等間隔のグリッドではありません")
        if np.any(timestamps % self.frequency != 0):
            raise ValidationError("タイムスタンプがサンプリング周期で割り切れません")

        values[~mask] = np.nan
        present = values[mask]
        if np.any(np.isnan(present)):
            raise ValidationError("マスクされた観測に欠損値が含まれています")
        if np.any(present[:, 0] < 0):
            raise ValidationError("風速が負の観測があります")
        if np.any((present[:, 1] < 0) | (present[:, 1] >= 360)):
            raise ValidationError("風向が [0, 360) の範囲外の観測があります")

        for array in (timestamps, values, mask):
            array.setflags(write=False)
        object.__setattr__(self, "stations", stations)
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def length(self) -> int:
        return int(self.timestamps.shape[0])

    def station_index(self, station_id: str) -> int:
        """station_idから行インデックスを取得する"""
        for i, station in enumerate(self.stations):
            if station.station_id == station_id:
                return i
        raise ValidationError(f"観測局 {station_id} は存在しません")

    def records(self, station_id: str) -> Iterator[RawRecord]:
        """観測局の観測レコードを時刻順に返す"""
        i = self.station_index(station_id)
        for j in np.flatnonzero(self.mask[i]):
            ws, wd, temp, pres = self.values[i, j]
            yield RawRecord(
                station_id=station_id,
                timestamp=int(self.timestamps[j]),
                wind_speed=float(ws),
                wind_direction=float(wd),
                temperature=float(temp),
                pressure=float(pres),
            )

    def slice(self, start: int, stop: int) -> "SeriesSet":
        """グリッドの [start, stop) 区間を切り出す"""
        return SeriesSet(
            stations=self.stations,
            frequency=self.frequency,
            timestamps=self.timestamps[start:stop],
            values=self.values[:, start:stop],
            mask=self.mask[:, start:stop],
        )

    def with_mask(self, mask: np.ndarray) -> "SeriesSet":
        """マスクを差し替えたSeriesSetを返す（マスク外の値は捨てる）"""
        return SeriesSet(
            stations=self.stations,
            frequency=self.frequency,
            timestamps=self.timestamps,
            values=np.where(mask[..., None], self.values, np.nan),
            mask=mask,
        )

    def feature_array(self) -> np.ndarray:
        """モデル入力の5チャネル配列 (N, L, 5) を返す（マスク外はNaN）"""
        direction = direction_components(self.values[..., 1])
        return np.concatenate(
            [self.values[..., :1], direction, self.values[..., 2:]], axis=-1
        )

    def same_as(self, other: "SeriesSet") -> bool:
        """内容が完全に一致するかどうかを確認する"""
        return (
            self.stations == other.stations
            and self.frequency == other.frequency
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def values_from_features(features: np.ndarray) -> np.ndarray:
    """5チャネルの特徴量配列を生チャネル配列 (…, 4) に戻す"""
    direction = direction_from_components(features[..., 1], features[..., 2])
    return np.concatenate(
        [features[..., :1], direction[..., None], features[..., 3:]], axis=-1
    )


def aggregate_hourly(series10: SeriesSet) -> SeriesSet:
    """10分間隔の時系列から1時間平均の時系列を作る

    各時間の値はその時間内で観測のある10分値の平均とする。風向は
    sin/cos成分の平均から復元する。観測が1つもない時間は欠損になる。

    Args:
        series10: 10分間隔のSeriesSet

    Returns:
        1時間間隔のSeriesSet

    Raises:
        ValidationError: 入力が10分間隔でない場合
    """
    if series10.frequency != FREQ_10MIN:
        raise ValidationError("aggregate_hourly の入力は10分間隔である必要があります")

    n_stations = series10.n_stations
    if series10.length == 0:
        return SeriesSet(
            stations=series10.stations,
            frequency=FREQ_HOURLY,
            timestamps=np.zeros(0, dtype=np.int64),
            values=np.zeros((n_stations, 0, len(RAW_CHANNELS))),
            mask=np.zeros((n_stations, 0), dtype=bool),
        )

    first_hour = (int(series10.timestamps[0]) // FREQ_HOURLY) * FREQ_HOURLY
    last_hour = (int(series10.timestamps[-1]) // FREQ_HOURLY) * FREQ_HOURLY
    hours = np.arange(first_hour, last_hour + FREQ_HOURLY, FREQ_HOURLY, dtype=np.int64)
    hour_index = (series10.timestamps - first_hour) // FREQ_HOURLY

    features = np.nan_to_num(series10.feature_array())
    weights = series10.mask.astype(np.float64)
    sums = np.zeros((n_stations, hours.shape[0], features.shape[-1]))
    counts = np.zeros((n_stations, hours.shape[0]))
    np.add.at(sums, (slice(None), hour_index), features * weights[..., None])
    np.add.at(counts, (slice(None), hour_index), weights)

    available = counts > 0
    means = sums / np.maximum(counts, 1.0)[..., None]
    values = values_from_features(means)
    return SeriesSet(
        stations=series10.stations,
        frequency=FREQ_HOURLY,
        timestamps=hours,
        values=np.where(available[..., None], values, np.nan),
        mask=available,
    )


def make_series_set(
    stations: Sequence[StationMeta],
    frequency: int,
    timestamps: np.ndarray,
    values: np.ndarray,
) -> SeriesSet:
    """NaNを欠損とみなしてマスクを導出しSeriesSetを作る"""
    values = np.asarray(values, dtype=np.float64)
    mask = ~np.any(np.isnan(values), axis=-1)
    return SeriesSet(
        stations=tuple(stations),
        frequency=frequency,
        timestamps=timestamps,
        values=values,
        mask=mask,
    )
