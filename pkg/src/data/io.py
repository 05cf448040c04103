"""観測CSVの読み込み・書き出しモジュール"""

import os
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..utils.exceptions import ValidationError
from .series import (
    FREQ_10MIN,
    FREQ_HOURLY,
    RAW_CHANNELS,
    SeriesSet,
    StationMeta,
    aggregate_hourly,
)

CSV_COLUMNS = [
    "station_id",
    "lat",
    "lon",
    "timestamp",
    "wind_speed",
    "wind_direction",
    "temperature",
    "pressure",
]
FREQUENCY_COLUMN = "frequency_minutes"
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

# エラーメッセージに列挙する不正行の上限
MAX_REPORTED_LINES = 5


def _line_numbers(rows: pd.Index) -> str:
    """DataFrameの行インデックスをファイルの行番号（ヘッダーが1行目）に変換する"""
    lines = [str(int(i) + 2) for i in rows[:MAX_REPORTED_LINES]]
    suffix = " ..." if len(rows) > MAX_REPORTED_LINES else ""
    return ", ".join(lines) + suffix


def _to_float(text: str) -> float:
    """文字列を浮動小数点数に変換する（空文字・不正値はNaN）"""
    try:
        return float(text) if text else np.nan
    except ValueError:
        return np.nan


def _parse_numeric(frame: pd.DataFrame, column: str, allow_empty: bool) -> pd.Series:
    """数値列を解析する（空文字は欠損）"""
    raw = frame[column].str.strip()
    parsed = raw.map(_to_float)
    bad = parsed.isna() & (raw != "")
    if not allow_empty:
        bad |= raw == ""
    if bad.any():
        raise ValidationError(
            f"列 {column} に不正な値があります（行 {_line_numbers(frame.index[bad])}）"
        )
    return parsed.astype(np.float64)


def ingest_csv(path: str, frequency: int = FREQ_10MIN) -> Tuple[SeriesSet, SeriesSet]:
    """観測CSVを読み込み、10分間隔と1時間間隔のSeriesSetを作る

    ヘッダーは `station_id,lat,lon,timestamp,wind_speed,wind_direction,temperature,pressure`
    （任意で `frequency_minutes` 列）。空欄は欠損値として扱い、いずれかのチャネルが
    欠損している行はグリッド上で欠損になる。1時間データが含まれない場合は
    10分データの時間平均から導出する。

    Args:
        path: CSVファイルパス
        frequency: `frequency_minutes` 列がない場合のサンプリング周期（分）

    Returns:
        (10分間隔, 1時間間隔) のSeriesSet

    Raises:
        ValidationError: スキーマ不一致・時刻の逆行・重複行などがある場合
    """
    if not os.path.exists(path):
        raise ValidationError(f"CSVファイルが見つかりません: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    columns = list(frame.columns)
    expected = CSV_COLUMNS + ([FREQUENCY_COLUMN] if FREQUENCY_COLUMN in columns else [])
    if sorted(columns) != sorted(expected):
        raise ValidationError(
            f"CSVヘッダーがスキーマと一致しません: {columns}（期待: {expected}）"
        )

    if (frame["station_id"].str.strip() == "").any():
        bad = frame.index[frame["station_id"].str.strip() == ""]
        raise ValidationError(f"station_id が空の行があります（行 {_line_numbers(bad)}）")

    parsed = pd.DataFrame(index=frame.index)
    parsed["station_id"] = frame["station_id"].str.strip()
    parsed["lat"] = _parse_numeric(frame, "lat", allow_empty=False)
    parsed["lon"] = _parse_numeric(frame, "lon", allow_empty=False)
    for channel in RAW_CHANNELS:
        parsed[channel] = _parse_numeric(frame, channel, allow_empty=True)

    stamps = pd.to_datetime(frame["timestamp"].str.strip(), utc=True, errors="coerce")
    if stamps.isna().any():
        raise ValidationError(
            f"timestamp を解析できない行があります（行 {_line_numbers(frame.index[stamps.isna()])}）"
        )
    epoch = pd.Timestamp("1970-01-01", tz="UTC")
    parsed["timestamp"] = ((stamps - epoch) // pd.Timedelta(minutes=1)).astype(np.int64)

    if FREQUENCY_COLUMN in columns:
        parsed["frequency"] = _parse_numeric(frame, FREQUENCY_COLUMN, allow_empty=False)
    else:
        parsed["frequency"] = float(frequency)
    unknown = ~parsed["frequency"].isin([FREQ_10MIN, FREQ_HOURLY])
    if unknown.any():
        raise ValidationError(
            f"未対応の frequency_minutes があります（行 {_line_numbers(frame.index[unknown])}）"
        )

    stations = _collect_stations(parsed)
    series: Dict[int, SeriesSet] = {}
    for freq in (FREQ_10MIN, FREQ_HOURLY):
        rows = parsed[parsed["frequency"] == freq]
        if len(rows):
            series[freq] = _grid_series(rows, stations, freq)

    if FREQ_10MIN not in series:
        raise ValidationError("10分間隔のデータがありません")
    series10 = series[FREQ_10MIN]
    series60 = series.get(FREQ_HOURLY) or aggregate_hourly(series10)
    return series10, series60


def _collect_stations(parsed: pd.DataFrame) -> List[StationMeta]:
    """観測局のメタデータを集める（座標の不一致はエラー）"""
    stations = []
    for station_id, rows in parsed.groupby("station_id", sort=True):
        coords = rows[["lat", "lon"]].drop_duplicates()
        if len(coords) != 1:
            raise ValidationError(
                f"観測局 {station_id} の座標が行によって異なります"
                f"（行 {_line_numbers(rows.index)}）"
            )
        stations.append(
            StationMeta(
                station_id=str(station_id),
                latitude=float(coords["lat"].iloc[0]),
                longitude=float(coords["lon"].iloc[0]),
            )
        )
    return stations


def _grid_series(
    rows: pd.DataFrame, stations: List[StationMeta], frequency: int
) -> SeriesSet:
    """単一周波数の行を共通グリッドに並べる"""
    off_grid = rows["timestamp"] % frequency != 0
    if off_grid.any():
        raise ValidationError(
            f"サンプリング周期 {frequency} 分に乗らない timestamp があります"
            f"（行 {_line_numbers(rows.index[off_grid])}）"
        )

    for station_id, group in rows.groupby("station_id", sort=False):
        steps = group["timestamp"].diff().iloc[1:]
        duplicate = steps == 0
        if duplicate.any():
            raise ValidationError(
                f"観測局 {station_id} の timestamp が重複しています"
                f"（行 {_line_numbers(steps.index[duplicate])}）"
            )
        backwards = steps < 0
        if backwards.any():
            raise ValidationError(
                f"観測局 {station_id} の timestamp が単調増加ではありません"
                f"（行 {_line_numbers(steps.index[backwards])}）"
            )

    start = int(rows["timestamp"].min())
    stop = int(rows["timestamp"].max())
    timestamps = np.arange(start, stop + frequency, frequency, dtype=np.int64)
    index_of = {s.station_id: i for i, s in enumerate(stations)}

    values = np.full((len(stations), timestamps.shape[0], len(RAW_CHANNELS)), np.nan)
    station_idx = rows["station_id"].map(index_of).to_numpy()
    slot_idx = ((rows["timestamp"].to_numpy() - start) // frequency).astype(np.int64)
    values[station_idx, slot_idx] = rows[list(RAW_CHANNELS)].to_numpy(dtype=np.float64)
    mask = ~np.any(np.isnan(values), axis=-1)

    return SeriesSet(
        stations=tuple(stations),
        frequency=frequency,
        timestamps=timestamps,
        values=values,
        mask=mask,
    )


def series_to_frame(series: SeriesSet, with_frequency: bool = False) -> pd.DataFrame:
    """SeriesSetをCSVスキーマのDataFrameに変換する（欠損スロットも空欄で出力する）"""
    n_stations, length = series.n_stations, series.length
    stamps = pd.to_datetime(series.timestamps, unit="m", utc=True).strftime(
        TIMESTAMP_FORMAT
    )
    frame = pd.DataFrame(
        {
            "station_id": np.repeat([s.station_id for s in series.stations], length),
            "lat": np.repeat([s.latitude for s in series.stations], length),
            "lon": np.repeat([s.longitude for s in series.stations], length),
            "timestamp": np.tile(np.asarray(stamps), n_stations),
        }
    )
    flat = series.values.reshape(n_stations * length, len(RAW_CHANNELS))
    for k, channel in enumerate(RAW_CHANNELS):
        frame[channel] = flat[:, k]
    if with_frequency:
        frame[FREQUENCY_COLUMN] = series.frequency
    return frame


def export_csv(
    series10: SeriesSet, path: str, series60: Optional[SeriesSet] = None
) -> str:
    """SeriesSetをCSVスキーマで書き出す

    Args:
        series10: 10分間隔のSeriesSet
        path: 出力ファイルパス
        series60: 同時に書き出す1時間間隔のSeriesSet（Noneの場合は10分のみ）

    Returns:
        書き出したファイルのパス
    """
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)

    if series60 is None:
        frame = series_to_frame(series10)
    else:
        frame = pd.concat(
            [
                series_to_frame(series10, with_frequency=True),
                series_to_frame(series60, with_frequency=True),
            ],
            ignore_index=True,
        )
    frame.to_csv(path, index=False, na_rep="", lineterminator="\n")
    return path
