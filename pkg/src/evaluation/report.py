"""実験結果の集計と出力

シードごとの評価結果（evaluation.csv）から、モデル×欠損率のシード平均表と
ステップ別の縦持ちCSV、テキストの要約を作る。数値は小数点以下6桁、欠測は "nan"。
"""

import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..models.config import TABLE_LABELS
from ..utils.exceptions import MissingArtifactError, ValidationError
from .metrics import ForecastScores

FLOAT_FORMAT = "%.6f"
NA_REP = "nan"
SCALAR_METRICS = ("mse", "mae", "saving_kwh")
TABLE2_FILE = "table2.csv"
TABLE3_FILE = "table3.csv"
LONG_FILE = "long.csv"
SUMMARY_FILE = "summary.txt"
EVALUATION_FILE = "evaluation.csv"
STEP_PREFIX = "mse_step"


def format_rate(rate: float) -> str:
    return f"{rate:.2f}"


def _format_value(value: float) -> str:
    return NA_REP if math.isnan(value) else f"{value:.6f}"


@dataclass(frozen=True)
class EvaluationRow:
    """1セル（モデル・欠損率・シード）のテスト指標"""

    label: str
    rate: float
    seed: int
    scores: ForecastScores


class ExperimentReport:
    """実験マトリクス全体の評価結果"""

    def __init__(
        self,
        rows: Sequence[EvaluationRow],
        rates: Optional[Sequence[float]] = None,
        labels: Sequence[str] = TABLE_LABELS,
    ) -> None:
        """ExperimentReportを初期化する

        Args:
            rows: セルごとの評価結果
            rates: 表の欠損率の列（Noneは結果に現れる欠損率）
            labels: 表の行（既定は11モデル）
        """
        self.rows = list(rows)
        self.rates = sorted(set(rates if rates is not None else (r.rate for r in self.rows)))
        self.labels = list(labels)

    def _cells(self, label: str, rate: float) -> List[EvaluationRow]:
        key = format_rate(rate)
        return [r for r in self.rows if r.label == label and format_rate(r.rate) == key]

    def mean(self, label: str, rate: float, metric: str) -> float:
        """シード平均（失敗したセルが1つでもあればNaN、セルがなければNaN）"""
        values = [getattr(r.scores, metric) for r in self._cells(label, rate)]
        return float(np.mean(values)) if values else float("nan")

    def table2(self) -> pd.DataFrame:
        """モデル×欠損率のMSE・MAE (m/s)"""
        return pd.DataFrame(
            [
                {
                    "model": label,
                    "rate": format_rate(rate),
                    "mse": self.mean(label, rate, "mse"),
                    "mae": self.mean(label, rate, "mae"),
                }
                for label in self.labels
                for rate in self.rates
            ],
            columns=["model", "rate", "mse", "mae"],
        )

    def table3(self) -> pd.DataFrame:
        """モデル×欠損率の推定発電量の改善 (kWh)"""
        return pd.DataFrame(
            [
                {
                    "model": label,
                    "rate": format_rate(rate),
                    "saving_kwh": self.mean(label, rate, "saving_kwh"),
                }
                for label in self.labels
                for rate in self.rates
            ],
            columns=["model", "rate", "saving_kwh"],
        )

    def long(self) -> pd.DataFrame:
        """シードごとの指標の縦持ち表（step は集計値が "all"、ステップ別MSEが1..6）"""
        records = []
        for row in self.rows:
            base = {"model": row.label, "rate": format_rate(row.rate), "seed": row.seed}
            for metric in SCALAR_METRICS:
                value = getattr(row.scores, metric)
                records.append({**base, "metric": metric, "step": "all", "value": value})
            for step, value in enumerate(row.scores.step_mse, start=1):
                records.append({**base, "metric": "mse", "step": str(step), "value": value})
        return pd.DataFrame(
            records, columns=["model", "rate", "seed", "metric", "step", "value"]
        )

    def summary(self) -> str:
        """欠損率ごとのシード平均のテキスト表"""
        rates = ", ".join(format_rate(r) for r in self.rates)
        lines = [f"{len(self.rows)} cells, rates: {rates}"]
        header = f"{'model':<24}{'rate':>6}{'mse':>12}{'mae':>12}{'saving_kwh':>14}"
        for rate in self.rates:
            lines.append("")
            lines.append(header)
            for label in self.labels:
                lines.append(
                    f"{label:<24}{format_rate(rate):>6}"
                    f"{_format_value(self.mean(label, rate, 'mse')):>12}"
                    f"{_format_value(self.mean(label, rate, 'mae')):>12}"
                    f"{_format_value(self.mean(label, rate, 'saving_kwh')):>14}"
                )
        return "\n".join(lines) + "\n"

    def to_frame(self) -> pd.DataFrame:
        """evaluation.csv の内容"""
        horizon = max((len(r.scores.step_mse) for r in self.rows), default=0)
        records = []
        for row in self.rows:
            record: Dict[str, object] = {
                "model": row.label,
                "rate": format_rate(row.rate),
                "seed": row.seed,
                "mse": row.scores.mse,
                "mae": row.scores.mae,
                "saving_kwh": row.scores.saving_kwh,
            }
            for step, value in enumerate(row.scores.step_mse, start=1):
                record[f"{STEP_PREFIX}{step}"] = value
            records.append(record)
        columns = ["model", "rate", "seed", *SCALAR_METRICS]
        columns += [f"{STEP_PREFIX}{k}" for k in range(1, horizon + 1)]
        return pd.DataFrame(records, columns=columns)

    @classmethod
    def from_csv(
        cls, path: str, rates: Optional[Sequence[float]] = None
    ) -> "ExperimentReport":
        """evaluation.csv から復元する

        Raises:
            MissingArtifactError: ファイルがない場合
            ValidationError: 列が足りない場合
        """
        if not os.path.exists(path):
            raise MissingArtifactError(path, "evaluate")
        frame = pd.read_csv(path, dtype={"model": str, "rate": str})
        required = ("model", "rate", "seed", *SCALAR_METRICS)
        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise ValidationError(f"{path} に列 {missing} がありません")
        step_columns = sorted(
            (c for c in frame.columns if c.startswith(STEP_PREFIX)),
            key=lambda c: int(c.replace(STEP_PREFIX, "")),
        )
        rows = [
            EvaluationRow(
                label=str(r["model"]),
                rate=float(r["rate"]),
                seed=int(r["seed"]),
                scores=ForecastScores(
                    mse=float(r["mse"]),
                    mae=float(r["mae"]),
                    saving_kwh=float(r["saving_kwh"]),
                    step_mse=tuple(float(r[c]) for c in step_columns),
                ),
            )
            for _, r in frame.iterrows()
        ]
        return cls(rows, rates=rates)

    def write_evaluation(self, directory: str) -> str:
        return _write_frame(self.to_frame(), os.path.join(directory, EVALUATION_FILE))

    def write(self, directory: str) -> List[str]:
        """表2・表3・縦持ちCSVと要約を書き出す

        Returns:
            書き出したファイルのパス
        """
        paths = [
            _write_frame(self.table2(), os.path.join(directory, TABLE2_FILE)),
            _write_frame(self.table3(), os.path.join(directory, TABLE3_FILE)),
            _write_frame(self.long(), os.path.join(directory, LONG_FILE)),
        ]
        summary_path = os.path.join(directory, SUMMARY_FILE)
        with open(summary_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.summary())
        paths.append(summary_path)
        return paths


def _write_frame(frame: pd.DataFrame, path: str) -> str:
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    frame.to_csv(
        path, index=False, float_format=FLOAT_FORMAT, na_rep=NA_REP, lineterminator="\n"
    )
    return path
