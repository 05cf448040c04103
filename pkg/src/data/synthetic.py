"""合成データ生成モジュール

地域共通のAR(2)潜在過程を距離に応じて観測局間で混ぜ合わせ、観測局ごとの
アフィン変換・日周変動・観測ノイズを加えて風速系列を作る。
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from ..graph.spatial import distance_matrix
from ..utils.exceptions import ValidationError
from .series import FREQ_10MIN, SeriesSet, StationMeta, aggregate_hourly

SYNTHETIC_START = "2015-06-01T00:00:00Z"
# 北海周辺の観測局配置範囲
LATITUDE_RANGE = (53.0, 61.0)
LONGITUDE_RANGE = (-2.0, 8.0)
MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class SyntheticSpec:
    """合成データの生成条件

    Attributes:
        n_stations: 観測局数
        length: 10分グリッドの長さ
        ar_coefficients: 潜在AR(2)過程の係数 (phi1, phi2)
        base_speed: 平均風速 (m/s)
        offset_spread: 観測局ごとの風速オフセットの幅（一様分布の半幅）
        scale_spread: 観測局ごとの潜在過程スケールの幅（1を中心とする一様分布の半幅）
        diurnal_amplitude: 日周変動の振幅 (m/s)
        noise_std: 観測ノイズの標準偏差 (m/s)
        latent_ratio: 潜在過程の標準偏差とノイズ標準偏差の比
        length_scale_km: 観測局間相関の距離減衰スケール (km)
        seed: 乱数シード
    """

    n_stations: int = 6
    length: int = 10_000
    ar_coefficients: Tuple[float, float] = (1.2, -0.25)
    base_speed: float = 8.0
    offset_spread: float = 1.5
    scale_spread: float = 0.2
    diurnal_amplitude: float = 1.0
    noise_std: float = 0.3
    latent_ratio: float = 8.0
    length_scale_km: float = 150.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_stations < 1:
            raise ValidationError(f"n_stations は1以上である必要があります: {self.n_stations}")
        if self.length < 1:
            raise ValidationError(f"length は1以上である必要があります: {self.length}")
        if self.noise_std < 0 or self.diurnal_amplitude < 0:
            raise ValidationError("noise_std と diurnal_amplitude は0以上である必要があります")
        if self.length_scale_km <= 0:
            raise ValidationError("length_scale_km は正である必要があります")
        if not 0 <= self.scale_spread < 1:
            raise ValidationError("scale_spread は [0, 1) の範囲である必要があります")
        phi1, phi2 = self.ar_coefficients
        # AR(2)の定常条件
        if not (abs(phi2) < 1 and phi1 + phi2 < 1 and phi2 - phi1 < 1):
            raise ValidationError(f"AR係数が定常条件を満たしません: {self.ar_coefficients}")


def _innovation_scale(phi1: float, phi2: float) -> float:
    """定常分散が1になるイノベーションの標準偏差"""
    gamma0 = (1 - phi2) / ((1 + phi2) * ((1 - phi2) ** 2 - phi1**2))
    return float(np.sqrt(1.0 / gamma0))


def _ar2_process(
    innovations: np.ndarray, phi1: float, phi2: float
) -> np.ndarray:
    """(N, L) のイノベーションからAR(2)系列を作る"""
    latent = np.zeros_like(innovations)
    for t in range(innovations.shape[1]):
        value = innovations[:, t].copy()
        if t >= 1:
            value += phi1 * latent[:, t - 1]
        if t >= 2:
            value += phi2 * latent[:, t - 2]
        latent[:, t] = value
    return latent


def _spatial_mixing(stations: Tuple[StationMeta, ...], length_scale_km: float) -> np.ndarray:
    """距離減衰の重みで独立過程を混ぜる行列（各行のノルムは1）"""
    weights = np.exp(-distance_matrix(stations) / length_scale_km)
    return weights / np.linalg.norm(weights, axis=1, keepdims=True)


def _correlated_latent(
    rng: np.random.Generator,
    mixing: np.ndarray,
    length: int,
    phi1: float,
    phi2: float,
    std: float,
) -> np.ndarray:
    """観測局間で相関した標準偏差 std の潜在過程 (N, L)"""
    innovations = rng.standard_normal((mixing.shape[0], length))
    innovations *= _innovation_scale(phi1, phi2) * std
    return mixing @ _ar2_process(innovations, phi1, phi2)


def _place_stations(rng: np.random.Generator, n_stations: int) -> Tuple[StationMeta, ...]:
    """観測局をランダムに配置する"""
    lats = rng.uniform(*LATITUDE_RANGE, size=n_stations)
    lons = rng.uniform(*LONGITUDE_RANGE, size=n_stations)
    return tuple(
        StationMeta(
            station_id=f"S{i:02d}",
            latitude=round(float(lat), 4),
            longitude=round(float(lon), 4),
        )
        for i, (lat, lon) in enumerate(zip(lats, lons))
    )


def generate_synthetic(spec: SyntheticSpec) -> Tuple[SeriesSet, SeriesSet]:
    """合成の多地点気象データを生成する

    ノイズ・日周変動・AR係数がすべて0の場合は観測局ごとに一定値の系列になる。

    Args:
        spec: 生成条件

    Returns:
        (10分間隔, 1時間間隔) のSeriesSet（欠損なし）
    """
    rng = np.random.default_rng(spec.seed)
    stations = _place_stations(rng, spec.n_stations)
    n, length = spec.n_stations, spec.length

    start = pd.Timestamp(SYNTHETIC_START)
    first = int((start - pd.Timestamp("1970-01-01", tz="UTC")) // pd.Timedelta(minutes=1))
    timestamps = first + FREQ_10MIN * np.arange(length, dtype=np.int64)
    minute_of_day = (timestamps % MINUTES_PER_DAY).astype(np.float64)

    phi1, phi2 = spec.ar_coefficients
    mixing = _spatial_mixing(stations, spec.length_scale_km)
    latent_std = spec.noise_std * spec.latent_ratio
    speed_latent = _correlated_latent(rng, mixing, length, phi1, phi2, latent_std)
    direction_latent = _correlated_latent(rng, mixing, length, phi1, phi2, latent_std)
    pressure_latent = _correlated_latent(rng, mixing, length, phi1, phi2, latent_std)

    offsets = rng.uniform(-spec.offset_spread, spec.offset_spread, size=(n, 1))
    scales = 1.0 + rng.uniform(-spec.scale_spread, spec.scale_spread, size=(n, 1))
    phases = rng.uniform(-0.25, 0.25, size=(n, 1))
    base_direction = rng.uniform(180.0, 300.0, size=(n, 1))
    base_temperature = rng.uniform(8.0, 14.0, size=(n, 1))
    base_pressure = rng.uniform(1005.0, 1020.0, size=(n, 1))

    # 15時ごろに最大となる日周変動
    diurnal = np.sin(2.0 * np.pi * minute_of_day / MINUTES_PER_DAY - 0.75 * np.pi + phases)
    noise = rng.standard_normal((4, n, length)) * spec.noise_std

    wind_speed = (
        spec.base_speed
        + offsets
        + scales * speed_latent
        + spec.diurnal_amplitude * diurnal
        + noise[0]
    )
    wind_speed = np.clip(wind_speed, 0.0, None)

    direction = (base_direction + 15.0 * direction_latent + 10.0 * noise[1]) % 360.0
    direction = np.where(direction >= 360.0, 0.0, direction)
    temperature = (
        base_temperature
        + 2.0 * spec.diurnal_amplitude * diurnal
        - 0.3 * speed_latent
        + noise[2]
    )
    pressure = base_pressure + 2.0 * pressure_latent + noise[3]

    values = np.stack([wind_speed, direction, temperature, pressure], axis=-1)
    series10 = SeriesSet(
        stations=stations,
        frequency=FREQ_10MIN,
        timestamps=timestamps,
        values=values,
        mask=np.ones((n, length), dtype=bool),
    )
    return series10, aggregate_hourly(series10)
