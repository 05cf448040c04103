"""設定管理モジュール"""

import copy
import os
from dataclasses import dataclass, fields, replace
from functools import partial
from typing import Any, Dict, List, Optional

import yaml

from ..corruption.burst import DECAY_SCALE, MAX_BURST, BurstModel
from ..data.synthetic import SyntheticSpec
from ..evaluation.power import PowerCurve
from ..models.config import TABLE_LABELS, ModelConfig, parse_label
from ..training.batching import BATCH_SIZE
from ..training.trainer import DEFAULT_RATES, DEFAULT_SEEDS, EPOCHS, TrainConfig
from ..utils.exceptions import ConfigError, ValidationError

_SYNTHETIC_DEFAULTS = {
    f.name: (list(f.default) if isinstance(f.default, tuple) else f.default)
    for f in fields(SyntheticSpec)
}

DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
    "data": {"input_csv": None, "directory": "./data", "window_stride": 1},
    "synthetic": _SYNTHETIC_DEFAULTS,
    "corruption": {"decay_scale": DECAY_SCALE, "max_burst": MAX_BURST, "seed": 0},
    "models": {
        "labels": list(TABLE_LABELS),
        "latent_dim": 64,
        "layers": 3,
        "heads": 4,
        "ffn_hidden": 256,
        "dropout": 0.05,
    },
    "training": {
        "epochs": EPOCHS,
        "batch_size": BATCH_SIZE,
        "seeds": list(DEFAULT_SEEDS),
        "missing_rates": list(DEFAULT_RATES),
        "learning_rate": None,
    },
    "power_curve": {
        "cut_in": 3.0,
        "rated_speed": 11.4,
        "cut_out": 25.0,
        "rated_power": 5000.0,
        "speeds": None,
        "powers": None,
    },
    "output": {"directory": "./runs"},
    "logging": {"level": "INFO", "file": None},
}


@dataclass(frozen=True)
class DataConfig:
    """入力データの設定

    Attributes:
        input_csv: 観測データCSV（Noneは合成データを使う）
        directory: 生成・欠損注入したデータの出力先
        window_stride: ウィンドウの間引き間隔
    """

    input_csv: Optional[str]
    directory: str
    window_stride: int


class ConfigManager:
    """設定ファイルを管理するクラス"""

    def __init__(self, config_file: str = "config/config.yaml") -> None:
        """ConfigManagerを初期化する

        ファイルがない場合は既定値の設定ファイルを作成する。

        Args:
            config_file: 設定ファイルパス

        Raises:
            ConfigError: 読み込みに失敗した場合、または未知のセクション・キーがある場合
        """
        self.config_file = config_file
        self._config: Dict[str, Dict[str, Any]] = copy.deepcopy(DEFAULT_CONFIG)
        self._load_config()

    def _load_config(self) -> None:
        """設定ファイルを読み込んで既定値に重ねる"""
        if not os.path.exists(self.config_file):
            self._create_default_config()
            return
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"設定ファイルの読み込みに失敗しました: {e}")

        if not isinstance(loaded, dict):
            raise ConfigError(f"設定ファイルの形式が不正です: {self.config_file}")
        for section, values in loaded.items():
            if section not in DEFAULT_CONFIG:
                raise ConfigError(f"未知の設定セクションです: {section}")
            if not isinstance(values, dict):
                raise ConfigError(f"設定セクション {section} はマッピングである必要があります")
            for key, value in values.items():
                self._check_key(section, key)
                self._config[section][key] = value

    @staticmethod
    def _check_key(section: str, key: str) -> None:
        if section not in DEFAULT_CONFIG:
            raise ConfigError(f"未知の設定セクションです: {section}")
        if key not in DEFAULT_CONFIG[section]:
            raise ConfigError(f"未知の設定キーです: {section}.{key}")

    def _create_default_config(self) -> None:
        """デフォルト設定ファイルを作成する"""
        config_dir = os.path.dirname(self.config_file)
        if config_dir and not os.path.exists(config_dir):
            os.makedirs(config_dir)
        self._write()

    def _write(self) -> None:
        with open(self.config_file, "w", encoding="utf-8") as f:
            yaml.safe_dump(self._config, f, default_flow_style=False, allow_unicode=True)

    def load_config(self) -> Dict[str, Dict[str, Any]]:
        """既定値を含む全設定を返す"""
        return copy.deepcopy(self._config)

    def _build(self, section: str, factory: Any, **values: Any) -> Any:
        try:
            return factory(**values)
        except (TypeError, ValueError, ValidationError) as e:
            raise ConfigError(f"設定セクション {section} の値が不正です: {e}")

    def get_data_config(self) -> DataConfig:
        return self._build("data", DataConfig, **self._config["data"])

    def get_synthetic_spec(self, seed: Optional[int] = None) -> SyntheticSpec:
        """合成データの生成条件を取得する

        Args:
            seed: 設定値を上書きするシード
        """
        values = dict(self._config["synthetic"])
        values["ar_coefficients"] = tuple(values["ar_coefficients"])
        if seed is not None:
            values["seed"] = seed
        return self._build("synthetic", SyntheticSpec, **values)

    def get_burst_model(self, target_rate: float) -> BurstModel:
        """欠損率に対する欠損注入モデルを取得する"""
        return self._build(
            "corruption", BurstModel, target_rate=target_rate, **self._config["corruption"]
        )

    def get_model_configs(self) -> List[ModelConfig]:
        """比較するモデルの構成を表の行順で取得する

        Raises:
            ConfigError: 未知のモデル名や不正な値がある場合
        """
        section = dict(self._config["models"])
        labels = section.pop("labels")
        configs = []
        for label in labels:
            try:
                config = parse_label(label)
            except ValidationError as e:
                raise ConfigError(str(e))
            configs.append(self._build("models", partial(replace, config), **section))
        return configs

    def get_train_config(self) -> TrainConfig:
        values = dict(self._config["training"])
        values["seeds"] = tuple(int(s) for s in values["seeds"])
        values["missing_rates"] = tuple(float(r) for r in values["missing_rates"])
        return self._build("training", TrainConfig, **values)

    def get_power_curve(self) -> PowerCurve:
        """パワーカーブを取得する（speeds・powers があれば表から作る）"""
        values = dict(self._config["power_curve"])
        speeds, powers = values.pop("speeds"), values.pop("powers")
        if speeds is not None or powers is not None:
            if speeds is None or powers is None:
                raise ConfigError("power_curve.speeds と power_curve.powers は両方指定してください")
            return self._build(
                "power_curve",
                PowerCurve.from_table,
                speeds=speeds,
                powers=powers,
                cut_out=values["cut_out"],
            )
        return self._build("power_curve", PowerCurve, **values)

    def get_output_directory(self) -> str:
        """出力ディレクトリを取得する"""
        return str(self._config["output"]["directory"])

    def get_logging_config(self) -> Dict[str, Any]:
        """ログ設定を取得する"""
        return dict(self._config["logging"])

    def update_config(self, section: str, key: str, value: Any) -> None:
        """設定を更新してファイルに保存する

        Raises:
            ConfigError: 未知のセクション・キーの場合
        """
        self._check_key(section, key)
        self._config[section][key] = value
        self._write()

    def override(self, section: str, key: str, value: Any) -> None:
        """ファイルには保存せずに設定値を上書きする（コマンドライン引数用）"""
        self._check_key(section, key)
        self._config[section][key] = value

    def snapshot(self) -> Dict[str, Dict[str, Any]]:
        """実行ディレクトリのハッシュに使う設定（出力先とログ設定を除く）"""
        return {k: v for k, v in self.load_config().items() if k not in ("output", "logging")}
