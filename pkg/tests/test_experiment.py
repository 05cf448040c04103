"""実験マトリクスのテスト"""

import dataclasses
import math
import os
from unittest import mock

import pandas as pd
import pytest

from src.evaluation.power import PowerCurve
from src.evaluation.report import EVALUATION_FILE
from src.models.config import parse_label
from src.training import trainer
from src.training.experiment import (
    CellSpec,
    cell_directory,
    config_hash,
    evaluate_cell,
    matrix_cells,
    run_experiment,
)
from src.training.trainer import EPOCH_COLUMNS, EPOCHS_FILE, TrainConfig
from src.utils.exceptions import NumericError

TINY = {"latent_dim": 8, "layers": 1, "heads": 2, "ffn_hidden": 8}
RATE = 0.2


def tiny_configs(*labels):
    return [dataclasses.replace(parse_label(label), **TINY) for label in labels]


class TestLayout:
    """セルと実行ディレクトリのテストクラス"""

    def test_config_hash(self):
        """ハッシュが12文字でキーの順序によらず、内容が変わると変わることを確認"""
        first = config_hash({"a": 1, "b": [1, 2]})
        assert len(first) == 12
        assert first == config_hash({"b": [1, 2], "a": 1})
        assert first != config_hash({"a": 2, "b": [1, 2]})

    def test_cell_directory(self):
        """モデル名・欠損率・シードの階層になることを確認"""
        cell = CellSpec(parse_label("STUGN-GATv2"), 0.1, 3)
        assert cell_directory("runs/x", cell) == os.path.join(
            "runs/x", "STUGN-GATv2", "rate_0.10", "seed_3"
        )
        assert cell.name == "STUGN-GATv2 rate=0.10 seed=3"

    def test_matrix_order(self):
        """セルがモデル・欠損率・シードの順に並ぶことを確認"""
        configs = tiny_configs("Persistence", "TSF-Linear")
        cells = matrix_cells(configs, TrainConfig(seeds=(0, 1), missing_rates=(0.0, 0.3)))
        assert [(c.label, c.rate, c.seed) for c in cells] == [
            ("Persistence", 0.0, 0),
            ("Persistence", 0.0, 1),
            ("Persistence", 0.3, 0),
            ("Persistence", 0.3, 1),
            ("TSF-Linear", 0.0, 0),
            ("TSF-Linear", 0.0, 1),
            ("TSF-Linear", 0.3, 0),
            ("TSF-Linear", 0.3, 1),
        ]


class TestRunExperiment:
    """run_experiment のテストクラス"""

    def test_small_matrix(self, cache, tmp_path):
        """学習・評価の結果とCSVが書き出されることを確認"""
        train_config = TrainConfig(epochs=1, seeds=(0,), missing_rates=(RATE,))
        configs = tiny_configs("Persistence", "TSF-Linear")
        report = run_experiment(configs, {RATE: cache}, train_config, str(tmp_path))

        assert [r.label for r in report.rows] == ["Persistence", "TSF-Linear"]
        persistence, linear = (r.scores for r in report.rows)
        assert persistence.saving_kwh == 0.0
        assert math.isfinite(linear.mse)
        assert len(linear.step_mse) == 6
        assert os.path.exists(tmp_path / EVALUATION_FILE)
        epochs = pd.read_csv(tmp_path / EPOCHS_FILE)
        assert list(epochs.columns) == EPOCH_COLUMNS
        assert len(epochs) == 1 + 2

    def test_failed_cell_is_nan(self, cache, tmp_path):
        """学習に失敗したセルがNaNとして残り、他のセルは続くことを確認"""
        train_config = TrainConfig(epochs=0, seeds=(0, 1), missing_rates=(RATE,))
        configs = tiny_configs("TSF-Linear")

        def flaky(model, config, cache_, train_config_, seed, *args):
            if seed == 1:
                raise NumericError("損失が発散しました")
            return trainer.train(model, config, cache_, train_config_, seed, *args)

        with mock.patch("src.training.experiment.train", side_effect=flaky):
            report = run_experiment(configs, {RATE: cache}, train_config, str(tmp_path))

        ok, failed = (r.scores for r in report.rows)
        assert math.isfinite(ok.mse)
        assert math.isnan(failed.mse)
        assert all(math.isnan(v) for v in failed.step_mse)
        assert math.isnan(report.mean("TSF-Linear", RATE, "mse"))

    def test_missing_checkpoint(self, cache, tmp_path):
        """チェックポイントがないセルの評価がNaNになることを確認"""
        cell = CellSpec(tiny_configs("STUGN-MPNN")[0], RATE, 0)
        scores = evaluate_cell(cell, cache, str(tmp_path), curve=PowerCurve())
        assert math.isnan(scores.mse)
        assert len(scores.step_mse) == 6


@pytest.mark.slow
def test_parallel_matches_serial(cache, tmp_path):
    """並列実行と逐次実行の結果が一致することを確認"""
    train_config = TrainConfig(epochs=1, seeds=(0, 1), missing_rates=(RATE,))
    configs = tiny_configs("TSF-Linear")
    serial = run_experiment(configs, {RATE: cache}, train_config, str(tmp_path / "a"))
    parallel = run_experiment(configs, {RATE: cache}, train_config, str(tmp_path / "b"), jobs=2)
    assert [r.scores for r in serial.rows] == [r.scores for r in parallel.rows]
