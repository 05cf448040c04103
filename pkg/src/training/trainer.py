"""1つのモデルの学習ループ"""

import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..autodiff.checkpoint import save_checkpoint
from ..autodiff.parameter import Module
from ..autodiff.tensor import backward
from ..data.series import WIND_SPEED
from ..evaluation.metrics import ForecastScores, score_forecasts
from ..evaluation.power import PowerCurve
from ..models.config import ModelConfig, model_label
from ..models.factory import uses_unified_graph
from ..utils.exceptions import NumericError, ValidationError
from ..utils.logger import Logger
from .batching import BATCH_SIZE, SampleCache, SplitSamples, batch_indices, make_batch
from .loss import mse_loss
from .optimizer import Adam

EPOCHS = 25
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_RATES = (0.0, 0.1, 0.2, 0.3)
EPOCH_COLUMNS = ["model", "block", "rate", "seed", "epoch", "train_mse", "val_mse"]
BEST_CHECKPOINT = "best.ckpt"
FINAL_CHECKPOINT = "final.ckpt"
EPOCHS_FILE = "epochs.csv"


@dataclass(frozen=True)
class TrainConfig:
    """学習と実験マトリクスの設定

    Attributes:
        epochs: エポック数（早期終了なし）
        batch_size: ミニバッチのウィンドウ数
        seeds: 実験に使うシード
        missing_rates: 実験に使う欠損率
        learning_rate: モデル既定の学習率を上書きする値（Noneは既定値）
    """

    epochs: int = EPOCHS
    batch_size: int = BATCH_SIZE
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    missing_rates: Tuple[float, ...] = DEFAULT_RATES
    learning_rate: Optional[float] = None

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValidationError(f"epochs は0以上である必要があります: {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size は1以上である必要があります: {self.batch_size}")
        if not self.seeds:
            raise ValidationError("seeds が空です")
        if any(not 0.0 <= r < 1.0 for r in self.missing_rates) or not self.missing_rates:
            raise ValidationError(f"missing_rates が不正です: {self.missing_rates}")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValidationError("learning_rate は正である必要があります")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float


@dataclass
class TrainResult:
    """学習の結果

    Attributes:
        label: モデル名
        rate: 欠損率
        seed: シード
        history: エポックごとの損失（エポック0は学習前）
        best_epoch: 検証MSEが最小のエポック
        best_checkpoint: 最良エポックのチェックポイント
        final_checkpoint: 最終エポックのチェックポイント
    """

    label: str
    rate: float
    seed: int
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_checkpoint: str = ""
    final_checkpoint: str = ""

    @property
    def best_val_mse(self) -> float:
        return self.history[self.best_epoch].val_mse


def predict(
    model: Module, samples: SplitSamples, dt_scale: float, batch_size: int = BATCH_SIZE
) -> np.ndarray:
    """評価モードで区間の全ウィンドウを予測する（標準化単位、(W, N, 6)）"""
    model.eval()
    unified = uses_unified_graph(model)
    outputs = []
    for indices in batch_indices(len(samples), batch_size):
        batch, _, _ = make_batch(samples, indices, unified, dt_scale)
        outputs.append(model(batch).numpy())
    return np.concatenate(outputs)


def evaluate_mse(
    model: Module, samples: SplitSamples, dt_scale: float, batch_size: int = BATCH_SIZE
) -> float:
    """区間の標準化単位でのMSE"""
    pred = predict(model, samples, dt_scale, batch_size)
    mask = samples.target_mask
    return float(np.sum(np.where(mask, (pred - samples.targets) ** 2, 0.0)) / mask.sum())


def evaluate_test(
    model: Module, cache: SampleCache, curve: PowerCurve, batch_size: int = BATCH_SIZE
) -> ForecastScores:
    """テスト区間の予測をm/sに戻して評価する"""
    test = cache.test
    pred = predict(model, test, cache.dt_scale, batch_size)

    def to_ms(x: np.ndarray) -> np.ndarray:
        return cache.scaler.invert_channel(x, WIND_SPEED)

    return score_forecasts(
        to_ms(pred), to_ms(test.targets), test.target_mask, to_ms(test.persistence), curve
    )


def checkpoint_config(
    config: ModelConfig, cache: SampleCache, rate: float, seed: int, epoch: int
) -> Dict[str, Any]:
    """チェックポイントに保存するモデル設定と推論時に必要な値"""
    return {
        "model": config.to_dict(),
        "dt_scale": float(cache.dt_scale),
        "rate": float(rate),
        "seed": int(seed),
        "epoch": int(epoch),
    }


def write_epochs_csv(path: str, config: ModelConfig, result: TrainResult) -> str:
    """エポックごとの損失をCSVに書き出す"""
    frame = pd.DataFrame(
        [
            {
                "model": config.family.value,
                "block": config.graph_block.value if config.graph_block else "",
                "rate": result.rate,
                "seed": result.seed,
                "epoch": r.epoch,
                "train_mse": r.train_mse,
                "val_mse": r.val_mse,
            }
            for r in result.history
        ],
        columns=EPOCH_COLUMNS,
    )
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    return path


def train(
    model: Module,
    config: ModelConfig,
    cache: SampleCache,
    train_config: TrainConfig,
    seed: int,
    rate: float,
    output_dir: str,
) -> TrainResult:
    """モデルを学習し、最良・最終チェックポイントとエポックごとの損失を書き出す

    ミニバッチの並びはシードで決まり、同じシード・データからは同じ損失列が得られる。
    学習可能なパラメータがない、または学習率が0のモデルは学習前の評価だけを行う。

    Args:
        model: build_model で初期化したモデル
        config: モデル構成
        cache: 区間ごとのサンプル
        train_config: 学習設定
        seed: シャッフルの乱数シード
        rate: 欠損率（記録用）
        output_dir: チェックポイントとCSVの出力先

    Returns:
        TrainResult

    Raises:
        NumericError: 損失がNaN・無限大になった場合
    """
    logger = Logger(__name__)
    label = model_label(config)
    cell = f"{label} rate={rate:.2f} seed={seed}"
    unified = uses_unified_graph(model)
    lr = train_config.learning_rate or config.learning_rate
    optimizer = Adam(model.parameters(), lr)
    rng = np.random.default_rng([seed, 1])
    batch_size = train_config.batch_size

    result = TrainResult(label=label, rate=rate, seed=seed)
    result.best_checkpoint = os.path.join(output_dir, BEST_CHECKPOINT)
    result.final_checkpoint = os.path.join(output_dir, FINAL_CHECKPOINT)

    def record(epoch: int, train_mse: float) -> None:
        val_mse = evaluate_mse(model, cache.val, cache.dt_scale, batch_size)
        result.history.append(EpochRecord(epoch, train_mse, val_mse))
        logger.log_epoch(cell, epoch, train_mse, val_mse)
        if epoch == 0 or val_mse < result.best_val_mse:
            result.best_epoch = epoch
            save_checkpoint(
                result.best_checkpoint,
                model,
                checkpoint_config(config, cache, rate, seed, epoch),
            )

    record(0, evaluate_mse(model, cache.train, cache.dt_scale, batch_size))
    epochs = train_config.epochs if optimizer.params and lr > 0 else 0
    for epoch in range(1, epochs + 1):
        model.train()
        total, count = 0.0, 0
        for indices in batch_indices(len(cache.train), batch_size, rng):
            batch, targets, mask = make_batch(cache.train, indices, unified, cache.dt_scale)
            optimizer.zero_grad()
            loss = mse_loss(model(batch), targets, mask)
            value = loss.item()
            if not math.isfinite(value):
                raise NumericError(f"{cell}: エポック {epoch} で損失が発散しました")
            backward(loss)
            optimizer.step()
            n = int(mask.sum())
            total += value * n
            count += n
        record(epoch, total / count)

    save_checkpoint(
        result.final_checkpoint,
        model,
        checkpoint_config(config, cache, rate, seed, result.history[-1].epoch),
    )
    logger.log_checkpoint_saved(result.final_checkpoint)
    write_epochs_csv(os.path.join(output_dir, EPOCHS_FILE), config, result)
    return result
