"""パワーカーブによる風速から発電量への換算"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..utils.exceptions import ValidationError

# 10分ステップを時間に換算
STEP_HOURS = 1.0 / 6.0


@dataclass(frozen=True)
class PowerCurve:
    """風車のパワーカーブ

    表（speeds, powers）が与えられた場合は区分線形補間し、
    ない場合はカットインから定格までを風速の3乗で補間する。

    Attributes:
        cut_in: カットイン風速 (m/s)
        rated_speed: 定格風速 (m/s)
        cut_out: カットアウト風速 (m/s)
        rated_power: 定格出力 (kW)
        speeds: 表の風速（昇順）
        powers: 表の出力 (kW)
    """

    cut_in: float = 3.0
    rated_speed: float = 11.4
    cut_out: float = 25.0
    rated_power: float = 5000.0
    speeds: Optional[Tuple[float, ...]] = None
    powers: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise ValidationError(
                "パワーカーブは 0 < cut_in < rated_speed < cut_out を満たす必要があります"
            )
        if self.rated_power <= 0:
            raise ValidationError("rated_power は正である必要があります")
        if (self.speeds is None) != (self.powers is None):
            raise ValidationError("speeds と powers は両方指定する必要があります")
        if self.speeds is not None and self.powers is not None:
            speeds = np.asarray(self.speeds)
            if len(self.speeds) != len(self.powers) or len(self.speeds) < 2:
                raise ValidationError("パワーカーブの表は同じ長さ（2点以上）である必要があります")
            if np.any(np.diff(speeds) <= 0):
                raise ValidationError("パワーカーブの風速は狭義単調増加である必要があります")

    @classmethod
    def from_table(
        cls, speeds: Sequence[float], powers: Sequence[float], cut_out: float = 25.0
    ) -> "PowerCurve":
        """表から区分線形のパワーカーブを作る

        カットインは出力が正になる最初の風速、定格は出力が最大になる最初の風速とする。
        """
        speed_arr = np.asarray(speeds, dtype=np.float64)
        power_arr = np.asarray(powers, dtype=np.float64)
        if speed_arr.shape != power_arr.shape or speed_arr.size < 2:
            raise ValidationError("パワーカーブの表は同じ長さ（2点以上）である必要があります")
        positive = np.flatnonzero(power_arr > 0)
        if positive.size == 0:
            raise ValidationError("パワーカーブの表に正の出力がありません")
        rated_index = int(np.argmax(power_arr))
        cut_in = float(speed_arr[max(positive[0] - 1, 0)])
        return cls(
            cut_in=cut_in if cut_in > 0 else float(speed_arr[positive[0]]),
            rated_speed=float(speed_arr[rated_index]),
            cut_out=cut_out,
            rated_power=float(power_arr[rated_index]),
            speeds=tuple(float(v) for v in speed_arr),
            powers=tuple(float(v) for v in power_arr),
        )

    def power(self, v: np.ndarray) -> np.ndarray:
        """風速 (m/s) に対する出力 (kW)"""
        v = np.asarray(v, dtype=np.float64)
        if self.speeds is not None and self.powers is not None:
            p = np.interp(v, self.speeds, self.powers, left=0.0, right=self.powers[-1])
            return np.where(v >= self.cut_out, 0.0, p)
        ramp = (v**3 - self.cut_in**3) / (self.rated_speed**3 - self.cut_in**3)
        return np.select(
            [v < self.cut_in, v < self.rated_speed, v < self.cut_out],
            [0.0, self.rated_power * ramp, self.rated_power],
            default=0.0,
        )


def power_from_wind(v: np.ndarray, curve: Optional[PowerCurve] = None) -> np.ndarray:
    """風速を発電出力 (kW) に換算する

    Raises:
        ValidationError: 負の風速が含まれる場合
    """
    curve = curve if curve is not None else PowerCurve()
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValidationError("風速は0以上である必要があります")
    return curve.power(v)


def energy_over_horizon(forecast: np.ndarray, curve: Optional[PowerCurve] = None) -> np.ndarray:
    """最終軸の10分ステップの発電量を合計する (kWh)"""
    return power_from_wind(forecast, curve).sum(axis=-1) * STEP_HOURS


def energy_saving_vs_persistence(
    model: np.ndarray,
    persistence: np.ndarray,
    truth: np.ndarray,
    curve: Optional[PowerCurve] = None,
    mask: Optional[np.ndarray] = None,
) -> float:
    """持続予測に対する推定発電量の絶対誤差の改善 (kWh)

    (ウィンドウ, 観測局) ごとに |E_true − E_pers| − |E_true − E_model| を求めて平均する。
    正が改善。負の風速は0として扱い、正解が6ステップ揃わない組は除外する。

    Args:
        model: モデルの予測 (..., 6)
        persistence: 持続予測 (..., 6)
        truth: 正解 (..., 6)
        curve: パワーカーブ
        mask: 正解の有無 (..., 6)

    Returns:
        平均の改善量（対象がない場合はNaN）
    """
    model = np.clip(np.asarray(model, dtype=np.float64), 0.0, None)
    persistence = np.clip(np.asarray(persistence, dtype=np.float64), 0.0, None)
    truth = np.clip(np.asarray(truth, dtype=np.float64), 0.0, None)
    complete = (
        np.asarray(mask, dtype=bool).all(axis=-1)
        if mask is not None
        else np.ones(truth.shape[:-1], dtype=bool)
    )
    if not complete.any():
        return float("nan")
    e_true = energy_over_horizon(truth[complete], curve)
    e_pers = energy_over_horizon(persistence[complete], curve)
    e_model = energy_over_horizon(model[complete], curve)
    return float(np.mean(np.abs(e_true - e_pers) - np.abs(e_true - e_model)))
