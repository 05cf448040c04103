"""サブコマンド generate / corrupt / train / evaluate / report の本体

各コマンドは前段のコマンドが書き出したファイルを読み、見つからない場合は
実行すべきコマンド名を含む MissingArtifactError を送出する。
"""

import os
from typing import Dict, List, Tuple

import yaml

from ..config.manager import ConfigManager
from ..corruption.burst import corrupt_pair
from ..data.io import export_csv, ingest_csv
from ..data.prepared import prepare_data
from ..data.series import SeriesSet
from ..data.synthetic import generate_synthetic
from ..evaluation.report import EVALUATION_FILE, ExperimentReport, format_rate
from ..training.batching import SampleCache, build_sample_cache
from ..training.experiment import config_hash, evaluate_matrix, train_matrix
from ..utils.exceptions import MissingArtifactError
from ..utils.logger import Logger

SERIES_FILE = "series.csv"
CORRUPTED_DIR = "corrupted"
CORRUPTION_LOG_FILE = "corruption_log.csv"
CONFIG_SNAPSHOT_FILE = "config.yaml"


def clean_series_path(config: ConfigManager) -> str:
    """欠損注入前のデータCSV（input_csv があればそれを使う）"""
    data = config.get_data_config()
    if data.input_csv:
        return data.input_csv
    return os.path.join(data.directory, SERIES_FILE)


def corrupted_directory(config: ConfigManager, rate: float) -> str:
    data = config.get_data_config()
    return os.path.join(data.directory, CORRUPTED_DIR, f"rate_{format_rate(rate)}")


def run_directory(config: ConfigManager) -> str:
    """設定のハッシュで名前を付けた実行ディレクトリ"""
    return os.path.join(config.get_output_directory(), config_hash(config.snapshot()))


def _require(path: str, command: str) -> str:
    if not os.path.exists(path):
        raise MissingArtifactError(path, command)
    return path


def load_clean_series(config: ConfigManager) -> Tuple[SeriesSet, SeriesSet]:
    """欠損注入前の (10分, 1時間) データを読み込む

    Raises:
        MissingArtifactError: データがまだ生成されていない場合
    """
    return ingest_csv(_require(clean_series_path(config), "generate"))


def generate(config: ConfigManager) -> str:
    """合成データを生成して series.csv に書き出す

    Returns:
        書き出したファイルのパス
    """
    logger = Logger(__name__)
    spec = config.get_synthetic_spec()
    series10, _ = generate_synthetic(spec)
    path = export_csv(series10, os.path.join(config.get_data_config().directory, SERIES_FILE))
    logger.log_artifact_written(path)
    return path


def corrupt(config: ConfigManager) -> List[str]:
    """欠損率ごとに欠損を注入したデータと CorruptionLog を書き出す

    欠損率0では入力と同じ内容のファイルになる。

    Returns:
        書き出したファイルのパス
    """
    logger = Logger(__name__)
    clean10, _ = load_clean_series(config)
    paths = []
    for rate in config.get_train_config().missing_rates:
        corrupted10, _, log = corrupt_pair(clean10, config.get_burst_model(rate))
        directory = corrupted_directory(config, rate)
        paths.append(export_csv(corrupted10, os.path.join(directory, SERIES_FILE)))
        paths.append(log.to_csv(os.path.join(directory, CORRUPTION_LOG_FILE)))
        logger.log_info(
            f"rate {format_rate(rate)}: removed {len(log)} entries "
            f"(realized rate {log.realized_rate:.4f})"
        )
        for path in paths[-2:]:
            logger.log_artifact_written(path)
    return paths


def build_caches(config: ConfigManager) -> Dict[float, SampleCache]:
    """欠損率ごとに区間分割・標準化・モデル入力の作成を行う

    Raises:
        MissingArtifactError: 欠損注入済みデータがない場合
    """
    logger = Logger(__name__)
    clean10, _ = load_clean_series(config)
    stride = config.get_data_config().window_stride
    caches: Dict[float, SampleCache] = {}
    for rate in config.get_train_config().missing_rates:
        path = os.path.join(corrupted_directory(config, rate), SERIES_FILE)
        corrupted10, corrupted60 = ingest_csv(_require(path, "corrupt"))
        prepared = prepare_data(clean10, corrupted10, corrupted60, stride=stride)
        caches[rate] = build_sample_cache(prepared)
        logger.log_info(
            f"rate {format_rate(rate)}: {len(caches[rate].train)} train, "
            f"{len(caches[rate].val)} val, {len(caches[rate].test)} test windows"
        )
    return caches


def _write_snapshot(config: ConfigManager, run_dir: str) -> str:
    """実行ディレクトリに使った設定を保存する"""
    if not os.path.exists(run_dir):
        os.makedirs(run_dir)
    path = os.path.join(run_dir, CONFIG_SNAPSHOT_FILE)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(
            config.snapshot(), f, default_flow_style=False, allow_unicode=True
        )
    return path


def train(config: ConfigManager, jobs: int = 1) -> str:
    """実験マトリクスの全セルを学習する

    Returns:
        実行ディレクトリ
    """
    run_dir = run_directory(config)
    caches = build_caches(config)
    _write_snapshot(config, run_dir)
    results = train_matrix(
        config.get_model_configs(), caches, config.get_train_config(), run_dir, jobs
    )
    failed = sum(r is None for r in results)
    Logger(__name__).log_info(
        f"Trained {len(results) - failed} of {len(results)} cells in {run_dir}"
    )
    return run_dir


def evaluate(config: ConfigManager, jobs: int = 1) -> str:
    """最良チェックポイントをテスト区間で評価して evaluation.csv を書き出す

    Raises:
        MissingArtifactError: 実行ディレクトリがない場合
    """
    run_dir = _require(run_directory(config), "train")
    caches = build_caches(config)
    result = evaluate_matrix(
        config.get_model_configs(),
        caches,
        config.get_train_config(),
        run_dir,
        config.get_power_curve(),
        jobs,
    )
    path = result.write_evaluation(run_dir)
    Logger(__name__).log_artifact_written(path)
    return path


def report(config: ConfigManager) -> List[str]:
    """evaluation.csv から表2・表3形式のCSVと要約を書き出す

    Raises:
        MissingArtifactError: evaluation.csv がない場合
    """
    logger = Logger(__name__)
    run_dir = run_directory(config)
    rates = config.get_train_config().missing_rates
    result = ExperimentReport.from_csv(os.path.join(run_dir, EVALUATION_FILE), rates)
    paths = result.write(run_dir)
    for path in paths:
        logger.log_artifact_written(path)
    return paths
