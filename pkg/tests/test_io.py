"""観測CSV入出力のテスト"""

import numpy as np
import pytest

from src.data.io import CSV_COLUMNS, export_csv, ingest_csv
from src.data.series import FREQ_HOURLY, aggregate_hourly
from src.utils.exceptions import ValidationError
from tests.conftest import constant_values, make_series

HEADER = ",".join(CSV_COLUMNS)


def write_csv(path, rows):
    path.write_text("\n".join([HEADER] + rows) + "\n", encoding="utf-8")
    return str(path)


class TestIngestCsv:
    """ingest_csv のテストクラス"""

    def test_roundtrip(self, tmp_path, clean_pair):
        """書き出したCSVを読み込むと同じ内容になることを確認"""
        series10, series60 = clean_pair
        mask = series10.mask.copy()
        mask[1, 5:9] = False
        corrupted = series10.with_mask(mask)
        path = export_csv(corrupted, str(tmp_path / "series.csv"))

        loaded10, loaded60 = ingest_csv(path)
        assert loaded10.same_as(corrupted)
        assert loaded60.same_as(aggregate_hourly(corrupted))

    def test_roundtrip_with_hourly(self, tmp_path, clean_pair):
        """1時間データを含むCSVではそれがそのまま使われることを確認"""
        series10, series60 = clean_pair
        path = export_csv(series10, str(tmp_path / "both.csv"), series60)
        loaded10, loaded60 = ingest_csv(path)
        assert loaded10.same_as(series10)
        assert loaded60.same_as(series60)
        assert loaded60.frequency == FREQ_HOURLY

    def test_empty_field_is_missing(self, tmp_path):
        """空欄のある行が欠損になることを確認"""
        path = write_csv(
            tmp_path / "in.csv",
            [
                "A,56.0,3.0,2015-06-01T00:00:00Z,5.0,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:10:00Z,,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:20:00Z,6.0,90.0,10.0,1010.0",
            ],
        )
        series10, _ = ingest_csv(path)
        assert series10.mask.tolist() == [[True, False, True]]
        assert np.isnan(series10.values[0, 1, 0])

    def test_gap_in_rows_is_missing(self, tmp_path):
        """行が存在しない時刻がグリッド上で欠損になることを確認"""
        path = write_csv(
            tmp_path / "in.csv",
            [
                "A,56.0,3.0,2015-06-01T00:00:00Z,5.0,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:30:00Z,6.0,90.0,10.0,1010.0",
                "B,56.5,3.5,2015-06-01T00:10:00Z,4.0,80.0,11.0,1011.0",
            ],
        )
        series10, _ = ingest_csv(path)
        assert series10.length == 4
        assert series10.mask.tolist() == [
            [True, False, False, True],
            [False, True, False, False],
        ]

    def test_duplicate_row_names_line(self, tmp_path):
        """重複行のエラーに行番号が含まれることを確認"""
        path = write_csv(
            tmp_path / "in.csv",
            [
                "A,56.0,3.0,2015-06-01T00:00:00Z,5.0,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:10:00Z,5.0,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:10:00Z,5.0,90.0,10.0,1010.0",
            ],
        )
        with pytest.raises(ValidationError, match="重複.*行 4"):
            ingest_csv(path)

    def test_non_monotone(self, tmp_path):
        """時刻が逆行する場合にValidationErrorになることを確認"""
        path = write_csv(
            tmp_path / "in.csv",
            [
                "A,56.0,3.0,2015-06-01T00:00:00Z,5.0,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:20:00Z,5.0,90.0,10.0,1010.0",
                "A,56.0,3.0,2015-06-01T00:10:00Z,5.0,90.0,10.0,1010.0",
            ],
        )
        with pytest.raises(ValidationError, match="単調増加"):
            ingest_csv(path)

    def test_header_mismatch(self, tmp_path):
        """ヘッダーがスキーマと一致しない場合にValidationErrorになることを確認"""
        path = tmp_path / "in.csv"
        path.write_text("station,lat,lon,timestamp\nA,56,3,2015-06-01T00:00:00Z\n")
        with pytest.raises(ValidationError, match="ヘッダー"):
            ingest_csv(str(path))

    def test_off_grid_timestamp(self, tmp_path):
        """10分に乗らない時刻でValidationErrorになることを確認"""
        path = write_csv(
            tmp_path / "in.csv",
            ["A,56.0,3.0,2015-06-01T00:05:00Z,5.0,90.0,10.0,1010.0"],
        )
        with pytest.raises(ValidationError):
            ingest_csv(path)

    def test_missing_file(self, tmp_path):
        """存在しないファイルでValidationErrorになることを確認"""
        with pytest.raises(ValidationError):
            ingest_csv(str(tmp_path / "absent.csv"))


class TestExportCsv:
    """export_csv のテストクラス"""

    def test_creates_directory_and_blank_fields(self, tmp_path):
        """出力先ディレクトリが作られ、欠損が空欄で書かれることを確認"""
        mask = np.array([[True, False]])
        series = make_series(constant_values(1, 2), mask)
        path = export_csv(series, str(tmp_path / "nested" / "out.csv"))
        lines = open(path, encoding="utf-8").read().splitlines()
        assert lines[0] == HEADER
        assert lines[2].endswith("Z,,,,")
        assert len(lines) == 3
