"""結果表の集計と出力のテスト"""

import math
import os

import pandas as pd
import pytest

from src.evaluation.metrics import ForecastScores
from src.evaluation.report import EvaluationRow, ExperimentReport, format_rate
from src.models.config import TABLE_LABELS
from src.utils.exceptions import MissingArtifactError

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
RATES = (0.0, 0.1)


@pytest.fixture
def report():
    return ExperimentReport.from_csv(os.path.join(FIXTURES, "evaluation.csv"), RATES)


def read_text(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


class TestTables:
    """表2・表3形式の出力のテストクラス"""

    def test_golden_tables(self, report, tmp_path):
        """シード平均の表が期待するCSVと一致することを確認"""
        paths = report.write(str(tmp_path))
        assert [os.path.basename(p) for p in paths] == [
            "table2.csv",
            "table3.csv",
            "long.csv",
            "summary.txt",
        ]
        for name in ("table2.csv", "table3.csv"):
            assert read_text(tmp_path / name) == read_text(os.path.join(FIXTURES, name)), name

    def test_rows_cover_all_models_and_rates(self, report):
        """表の行がモデル×欠損率の全組み合わせになることを確認"""
        table = report.table2()
        expected = [(label, format_rate(r)) for label in TABLE_LABELS for r in RATES]
        assert list(zip(table["model"], table["rate"])) == expected

    def test_failed_seed_makes_mean_nan(self, report):
        """失敗したシードを含む平均と、セルのない組がNaNになることを確認"""
        assert math.isnan(report.mean("STUGN-GATv2", 0.1, "mse"))
        assert math.isnan(report.mean("STUGN-TGAT", 0.0, "mse"))
        assert report.mean("TSF-Linear", 0.0, "saving_kwh") == 4.0

    def test_long_format(self, report):
        """縦持ち表にセルごとの集計値とステップ別MSEが並ぶことを確認"""
        long = report.long()
        assert len(long) == 8 * (3 + 6)
        first = long[(long["model"] == "Persistence") & (long["seed"] == 0)]
        assert first["step"].tolist() == ["all"] * 3 + [str(k) for k in range(1, 7)]
        assert first["value"].tolist()[:3] == [0.5, 0.25, 0.0]

    def test_summary(self, report):
        """要約の先頭行にセル数と欠損率が書かれることを確認"""
        text = report.summary()
        assert text.splitlines()[0] == "8 cells, rates: 0.00, 0.10"
        assert "nan" in text


class TestEvaluationFile:
    """evaluation.csv の入出力のテストクラス"""

    def test_round_trip(self, report, tmp_path):
        """書き出した evaluation.csv から同じ表が復元されることを確認"""
        path = report.write_evaluation(str(tmp_path))
        restored = ExperimentReport.from_csv(path, RATES)
        pd.testing.assert_frame_equal(restored.table2(), report.table2())
        assert list(pd.read_csv(path).columns)[-1] == "mse_step6"

    def test_missing_file(self, tmp_path):
        """ファイルがない場合にMissingArtifactErrorになることを確認"""
        with pytest.raises(MissingArtifactError, match="evaluate"):
            ExperimentReport.from_csv(str(tmp_path / "evaluation.csv"))

    def test_rates_default_to_observed(self):
        """欠損率を指定しない場合は結果に現れる欠損率を使うことを確認"""
        scores = ForecastScores(1.0, 1.0, 0.0, (1.0,) * 6)
        rows = [EvaluationRow("Persistence", rate, 0, scores) for rate in (0.3, 0.1)]
        assert ExperimentReport(rows).rates == [0.1, 0.3]
