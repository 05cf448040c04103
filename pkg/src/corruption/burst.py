"""指数減衰バーストモデルによる欠損注入"""

import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..data.series import FREQ_10MIN, SeriesSet, aggregate_hourly
from ..utils.exceptions import ValidationError
from ..utils.logger import Logger

DECAY_SCALE = 10.0
MAX_BURST = 10
RATE_TOLERANCE = 0.005
MAX_CALIBRATION_STEPS = 60
LOG_COLUMNS = ["station_id", "frequency_minutes", "timestamp"]


def burst_probabilities(
    decay_scale: float = DECAY_SCALE, max_burst: int = MAX_BURST
) -> np.ndarray:
    """n = 1..max_burst 番目の後続値が欠損する確率 p_n を返す

    p_n = exp(-n/decay_scale) / Σ_j exp(-j/decay_scale)

    Args:
        decay_scale: 減衰スケール
        max_burst: バースト長の上限

    Returns:
        (max_burst,) の確率（合計1）
    """
    weights = np.exp(-np.arange(1, max_burst + 1) / decay_scale)
    return weights / weights.sum()


@dataclass(frozen=True)
class BurstModel:
    """欠損注入の条件

    Attributes:
        target_rate: 目標欠損率 [0, 1)
        decay_scale: バースト確率の減衰スケール
        max_burst: バースト長の上限
        seed: 乱数シード
    """

    target_rate: float
    decay_scale: float = DECAY_SCALE
    max_burst: int = MAX_BURST
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.target_rate < 1.0:
            raise ValidationError(
                f"target_rate は [0, 1) の範囲である必要があります: {self.target_rate}"
            )
        if self.max_burst < 1 or self.decay_scale <= 0:
            raise ValidationError("max_burst と decay_scale は正である必要があります")

    @property
    def probabilities(self) -> np.ndarray:
        return burst_probabilities(self.decay_scale, self.max_burst)


@dataclass(frozen=True, eq=False)
class BurstDraws:
    """欠損注入に使う乱数（基本欠損率によらず共通）

    Attributes:
        uniforms: 起点判定用の一様乱数 (N, L)
        lengths: 各要素が起点になった場合のバースト長 1..max_burst (N, L)
    """

    uniforms: np.ndarray
    lengths: np.ndarray


def draw_bursts(model: BurstModel, shape: Tuple[int, int]) -> BurstDraws:
    """モデルのシードから欠損注入の乱数を生成する

    バースト長は要素ごとに p_n のカテゴリ分布から1回だけ引く。
    """
    rng = np.random.default_rng(model.seed)
    uniforms = rng.random(shape)
    choices = np.arange(1, model.max_burst + 1, dtype=np.int16)
    lengths = rng.choice(choices, size=shape, p=model.probabilities)
    return BurstDraws(uniforms=uniforms, lengths=lengths)


def removal_mask(
    draws: BurstDraws, base_rate: float, available: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """基本欠損率 base_rate での除去マスクを求める

    起点は観測のある要素から選ばれ、起点に続く長さ n の連続区間が除去される。
    バーストで除去された値は新たな起点にならない。

    Args:
        draws: 共通乱数
        base_rate: 起点の欠損率
        available: 入力の観測マスク (N, L)

    Returns:
        (除去マスク, 起点マスク)
    """
    seeds = (draws.uniforms < base_rate) & available
    removed = seeds.copy()
    max_burst = int(draws.lengths.max()) if draws.lengths.size else 0
    for n in range(1, max_burst + 1):
        if n >= seeds.shape[1]:
            break
        # 長さ n 以上のバーストは n 番目の後続値まで届く
        removed[:, n:] |= (seeds & (draws.lengths >= n))[:, :-n]
    return removed & available, seeds


@dataclass(frozen=True, eq=False)
class CorruptionLog:
    """除去した (観測局, 周波数, 時刻) の記録

    Attributes:
        station_ids: 除去した要素の観測局 (R,)
        timestamps: 除去した要素の時刻（エポックからの分） (R,)
        frequency: サンプリング周期（分）
        realized_rate: 実現欠損率 = 除去数 / グリッド要素数
    """

    station_ids: np.ndarray
    timestamps: np.ndarray
    frequency: int
    realized_rate: float

    @property
    def removed(self) -> List[Tuple[str, int, int]]:
        return [
            (str(s), self.frequency, int(t))
            for s, t in zip(self.station_ids, self.timestamps)
        ]

    def __len__(self) -> int:
        return int(self.timestamps.shape[0])

    def to_csv(self, path: str) -> str:
        """`station_id,frequency_minutes,timestamp` 形式で書き出す"""
        directory = os.path.dirname(path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        stamps = pd.to_datetime(self.timestamps, unit="m", utc=True)
        frame = pd.DataFrame(
            {
                "station_id": self.station_ids.astype(str),
                "frequency_minutes": self.frequency,
                "timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%SZ"),
            },
            columns=LOG_COLUMNS,
        )
        frame.to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def from_csv(cls, path: str, grid_entries: Optional[int] = None) -> "CorruptionLog":
        """CSVから読み込む

        Args:
            path: CSVファイルパス
            grid_entries: 実現欠損率の分母（Noneの場合はNaN）

        Raises:
            ValidationError: 形式が不正な場合
        """
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
        if list(frame.columns) != LOG_COLUMNS:
            raise ValidationError(f"CorruptionLog のヘッダーが不正です: {list(frame.columns)}")
        frequencies = set(frame["frequency_minutes"].astype(int)) or {FREQ_10MIN}
        if len(frequencies) != 1:
            raise ValidationError("CorruptionLog に複数の周波数が含まれています")
        epoch = pd.Timestamp("1970-01-01", tz="UTC")
        stamps = pd.to_datetime(frame["timestamp"], utc=True)
        minutes = ((stamps - epoch) // pd.Timedelta(minutes=1)).to_numpy(dtype=np.int64)
        rate = len(frame) / grid_entries if grid_entries else float("nan")
        return cls(
            station_ids=frame["station_id"].to_numpy(dtype=str),
            timestamps=minutes,
            frequency=frequencies.pop(),
            realized_rate=rate,
        )


def _log_from_mask(data: SeriesSet, removed: np.ndarray) -> CorruptionLog:
    """除去マスクをCorruptionLogにする（観測局順・時刻順）"""
    rows, cols = np.nonzero(removed)
    ids = np.array([s.station_id for s in data.stations], dtype=str)
    grid = data.n_stations * data.length
    return CorruptionLog(
        station_ids=ids[rows] if rows.size else np.zeros(0, dtype=str),
        timestamps=data.timestamps[cols],
        frequency=data.frequency,
        realized_rate=float(removed.sum()) / grid if grid else 0.0,
    )


def calibrate_base_rate(
    draws: BurstDraws, available: np.ndarray, target_rate: float
) -> Tuple[float, np.ndarray]:
    """実現欠損率が目標に ±0.005 で一致する基本欠損率を二分法で求める

    Returns:
        (基本欠損率, 除去マスク)
    """
    grid = available.size

    def realized(rate: float) -> Tuple[float, np.ndarray]:
        removed, _ = removal_mask(draws, rate, available)
        return float(removed.sum()) / grid, removed

    best_base = target_rate
    best_rate, best_removed = realized(target_rate)
    # バーストで率が増えるため通常は [0, target] に解がある
    if best_rate >= target_rate:
        low, high = 0.0, target_rate
    else:
        low, high = target_rate, 1.0
    for _ in range(MAX_CALIBRATION_STEPS):
        if abs(best_rate - target_rate) <= RATE_TOLERANCE:
            break
        middle = 0.5 * (low + high)
        rate, removed = realized(middle)
        if abs(rate - target_rate) < abs(best_rate - target_rate):
            best_base, best_rate, best_removed = middle, rate, removed
        if rate < target_rate:
            low = middle
        else:
            high = middle
    return best_base, best_removed


def inject_missing(data: SeriesSet, model: BurstModel) -> Tuple[SeriesSet, CorruptionLog]:
    """バーストモデルで欠損を注入する

    各要素が基本欠損率 b で独立に起点となり、確率 p_n で選ばれた長さ n の後続値が
    連続して追加で除去される。b は実現欠損率が目標 ±0.005 になるよう二分法で校正する。
    同じシードからは常に同じ結果になる。

    Args:
        data: 入力データ
        model: バーストモデル

    Returns:
        (欠損注入後のデータ, CorruptionLog)
    """
    logger = Logger(__name__)
    if model.target_rate == 0.0 or data.length == 0:
        return data, _log_from_mask(data, np.zeros_like(data.mask))

    draws = draw_bursts(model, (data.n_stations, data.length))
    base_rate, removed = calibrate_base_rate(draws, data.mask, model.target_rate)
    log = _log_from_mask(data, removed)
    logger.log_debug(
        f"Injected missing values: target={model.target_rate:.3f} "
        f"base={base_rate:.5f} realized={log.realized_rate:.5f}"
    )
    if abs(log.realized_rate - model.target_rate) > RATE_TOLERANCE:
        logger.log_warning(
            f"Realized missing rate {log.realized_rate:.4f} differs from target "
            f"{model.target_rate:.4f} by more than {RATE_TOLERANCE}"
        )
    return data.with_mask(data.mask & ~removed), log


def corrupt_pair(
    series10: SeriesSet, model: BurstModel
) -> Tuple[SeriesSet, SeriesSet, CorruptionLog]:
    """10分データに欠損を注入し、1時間データを再計算する"""
    corrupted, log = inject_missing(series10, model)
    return corrupted, aggregate_hourly(corrupted), log


def replay_corruption(data: SeriesSet, log: CorruptionLog) -> SeriesSet:
    """保存したCorruptionLogを再適用する

    Raises:
        ValidationError: 周波数が異なる場合や、存在しない観測局・時刻が含まれる場合
    """
    if log.frequency != data.frequency:
        raise ValidationError(
            f"CorruptionLog の周波数 {log.frequency} がデータ {data.frequency} と異なります"
        )
    removed = np.zeros_like(data.mask)
    if len(log) == 0:
        return data
    rows = np.array([data.station_index(str(s)) for s in log.station_ids])
    cols = np.searchsorted(data.timestamps, log.timestamps)
    inside = cols < data.length
    if not np.all(inside) or not np.array_equal(data.timestamps[cols], log.timestamps):
        raise ValidationError("CorruptionLog にグリッド外の時刻が含まれています")
    removed[rows, cols] = True
    return data.with_mask(data.mask & ~removed)
