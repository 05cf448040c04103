"""モデル×欠損率×シードの実験マトリクス

各セルは独立しており、jobs > 1 の場合はプロセスプールで並列に実行する。
結果はセルの並び順（モデル・欠損率・シード）で集める。
"""

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, List, Mapping, Optional, Sequence

import pandas as pd
import yaml

from ..autodiff.checkpoint import load_checkpoint
from ..data.windows import HORIZON
from ..evaluation.metrics import ForecastScores
from ..evaluation.power import PowerCurve
from ..evaluation.report import EvaluationRow, ExperimentReport, format_rate
from ..models.config import ModelConfig, model_label
from ..models.factory import build_model
from ..utils.exceptions import ForecastError, MissingArtifactError
from ..utils.logger import Logger
from .batching import SampleCache
from .trainer import (
    BEST_CHECKPOINT,
    EPOCH_COLUMNS,
    EPOCHS_FILE,
    TrainConfig,
    TrainResult,
    evaluate_test,
    train,
)

HASH_LENGTH = 12


@dataclass(frozen=True)
class CellSpec:
    """実験マトリクスの1セル"""

    config: ModelConfig
    rate: float
    seed: int

    @property
    def label(self) -> str:
        return model_label(self.config)

    @property
    def name(self) -> str:
        return f"{self.label} rate={format_rate(self.rate)} seed={self.seed}"


def config_hash(payload: Mapping[str, Any]) -> str:
    """設定内容から実行ディレクトリ名に使うハッシュを作る"""
    text = yaml.safe_dump(dict(payload), default_flow_style=False, sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:HASH_LENGTH]


def cell_directory(run_dir: str, cell: CellSpec) -> str:
    rate_dir = f"rate_{format_rate(cell.rate)}"
    return os.path.join(run_dir, cell.label, rate_dir, f"seed_{cell.seed}")


def matrix_cells(configs: Sequence[ModelConfig], train_config: TrainConfig) -> List[CellSpec]:
    """モデル・欠損率・シードの順に並べたセル"""
    return [
        CellSpec(config, rate, seed)
        for config in configs
        for rate in train_config.missing_rates
        for seed in train_config.seeds
    ]


def train_cell(
    cell: CellSpec, cache: SampleCache, train_config: TrainConfig, run_dir: str
) -> Optional[TrainResult]:
    """1セルを学習する（失敗した場合はログに残してNoneを返す）"""
    try:
        model = build_model(cell.config, cell.seed)
        return train(
            model,
            cell.config,
            cache,
            train_config,
            cell.seed,
            cell.rate,
            cell_directory(run_dir, cell),
        )
    except ForecastError as e:
        Logger(__name__).log_cell_failed(cell.name, e)
        return None


def evaluate_cell(
    cell: CellSpec, cache: SampleCache, run_dir: str, curve: PowerCurve
) -> ForecastScores:
    """最良チェックポイントを読み込んでテスト区間を評価する（失敗時はNaN）"""
    path = os.path.join(cell_directory(run_dir, cell), BEST_CHECKPOINT)
    try:
        if not os.path.exists(path):
            raise MissingArtifactError(path, "train")
        model = build_model(cell.config, cell.seed)
        load_checkpoint(path, model)
        return evaluate_test(model, cache, curve)
    except ForecastError as e:
        Logger(__name__).log_cell_failed(cell.name, e)
        return ForecastScores.failed(HORIZON)


def _map_cells(
    func: Callable[..., Any],
    cells: Sequence[CellSpec],
    args: Sequence[Sequence[Any]],
    jobs: int,
) -> List[Any]:
    if jobs <= 1 or len(cells) <= 1:
        return [func(cell, *a) for cell, a in zip(cells, args)]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(func, cell, *a) for cell, a in zip(cells, args)]
        return [f.result() for f in futures]


def train_matrix(
    configs: Sequence[ModelConfig],
    caches: Mapping[float, SampleCache],
    train_config: TrainConfig,
    run_dir: str,
    jobs: int = 1,
) -> List[Optional[TrainResult]]:
    """全セルを学習し、エポックごとの損失をまとめた epochs.csv を書き出す

    Args:
        configs: モデル構成
        caches: 欠損率ごとのサンプル
        train_config: 学習設定
        run_dir: 実行ディレクトリ
        jobs: 並列プロセス数

    Returns:
        セル順の TrainResult（失敗したセルはNone）
    """
    cells = matrix_cells(configs, train_config)
    args = [(caches[c.rate], train_config, run_dir) for c in cells]
    results = _map_cells(train_cell, cells, args, jobs)

    frames = []
    for cell, result in zip(cells, results):
        path = os.path.join(cell_directory(run_dir, cell), EPOCHS_FILE)
        if result is not None and os.path.exists(path):
            frames.append(pd.read_csv(path, dtype={"block": str}, keep_default_na=False))
    combined = pd.concat(frames) if frames else pd.DataFrame(columns=EPOCH_COLUMNS)
    if not os.path.exists(run_dir):
        os.makedirs(run_dir)
    epochs_path = os.path.join(run_dir, EPOCHS_FILE)
    combined.to_csv(epochs_path, index=False, float_format="%.6f", lineterminator="\n")
    Logger(__name__).log_artifact_written(epochs_path)
    return results


def evaluate_matrix(
    configs: Sequence[ModelConfig],
    caches: Mapping[float, SampleCache],
    train_config: TrainConfig,
    run_dir: str,
    curve: PowerCurve,
    jobs: int = 1,
) -> ExperimentReport:
    """全セルの最良チェックポイントをテスト区間で評価する"""
    cells = matrix_cells(configs, train_config)
    args = [(caches[c.rate], run_dir, curve) for c in cells]
    scores = _map_cells(evaluate_cell, cells, args, jobs)
    rows = [EvaluationRow(c.label, c.rate, c.seed, s) for c, s in zip(cells, scores)]
    return ExperimentReport(rows, rates=train_config.missing_rates)


def run_experiment(
    configs: Sequence[ModelConfig],
    caches: Mapping[float, SampleCache],
    train_config: TrainConfig,
    run_dir: str,
    curve: Optional[PowerCurve] = None,
    jobs: int = 1,
) -> ExperimentReport:
    """実験マトリクスを学習・評価して結果をまとめる

    失敗したセルはNaNの指標として残し、残りのセルを続ける。
    """
    curve = curve if curve is not None else PowerCurve()
    train_matrix(configs, caches, train_config, run_dir, jobs)
    report = evaluate_matrix(configs, caches, train_config, run_dir, curve, jobs)
    report.write_evaluation(run_dir)
    return report
