"""小規模データでのモデル間の相対的な順序のテスト"""

import glob
import os

import pytest
import yaml

from main import EXIT_OK, main
from src.evaluation.report import EVALUATION_FILE, ExperimentReport

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
RATES = (0.0, 0.1, 0.2, 0.3)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def toy_report(tmp_path_factory):
    """toy.yaml の設定で3モデルを学習・評価した結果"""
    tmp_path = tmp_path_factory.mktemp("toy")
    with open(os.path.join(REPO_ROOT, "config", "toy.yaml"), encoding="utf-8") as f:
        content = yaml.safe_load(f)
    content["data"]["directory"] = str(tmp_path / "data")
    content["output"]["directory"] = str(tmp_path / "runs")
    content["models"]["labels"] = ["Persistence", "TSF-Linear", "STUGN-GATv2"]
    content["training"]["missing_rates"] = list(RATES)
    path = tmp_path / "toy.yaml"
    path.write_text(yaml.safe_dump(content), encoding="utf-8")

    for command in ("generate", "corrupt", "train", "evaluate"):
        assert main([command, "--config", str(path)]) == EXIT_OK, command
    (run_dir,) = glob.glob(str(tmp_path / "runs" / "*"))
    return ExperimentReport.from_csv(os.path.join(run_dir, EVALUATION_FILE), RATES)


class TestRelativeOrdering:
    """モデル間の順序のテストクラス"""

    def test_linear_beats_persistence(self, toy_report):
        """TSF-Linear のMSEが持続予測より小さいことを確認"""
        assert toy_report.mean("TSF-Linear", 0.0, "mse") < toy_report.mean(
            "Persistence", 0.0, "mse"
        )

    def test_stugn_beats_persistence_by_margin(self, toy_report):
        """STUGN-GATv2 のMSEが持続予測より2割以上小さいことを確認"""
        stugn = toy_report.mean("STUGN-GATv2", 0.0, "mse")
        assert stugn <= 0.8 * toy_report.mean("Persistence", 0.0, "mse")

    def test_stugn_degrades_with_missing_rate(self, toy_report):
        """欠損率が上がるとSTUGN-GATv2 の精度がほぼ単調に下がることを確認"""
        errors = [toy_report.mean("STUGN-GATv2", rate, "mse") for rate in RATES]
        for lower, higher in zip(errors, errors[1:]):
            assert higher >= 0.95 * lower
