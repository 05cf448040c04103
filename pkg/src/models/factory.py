"""構成からモデルを生成する"""

import numpy as np

from ..autodiff.parameter import Module
from .baselines import PersistenceModel, STLSTM, STTransformer, TSFLinear
from .config import Family, ModelConfig
from .stugn import STUGN


def build_model(config: ModelConfig, seed: int) -> Module:
    """構成とシードからモデルを初期化する

    同じ構成・シードからは同じ初期パラメータが得られる。

    Args:
        config: モデル構成
        seed: 初期化の乱数シード

    Returns:
        forward(batch) が (B, N, 6) の予測を返すモジュール。
        `uses_unified_graph` 属性で入力がGraphBatchかSpatialBatchかを示す。
    """
    rng = np.random.default_rng(seed)
    if config.family is Family.STUGN:
        return STUGN(config, rng)
    if config.family is Family.ST_LSTM:
        return STLSTM(config, rng)
    if config.family is Family.ST_TRANSFORMER:
        return STTransformer(config, rng)
    if config.family is Family.TSF_LINEAR:
        return TSFLinear(rng)
    return PersistenceModel()


def uses_unified_graph(model: Module) -> bool:
    return bool(getattr(model, "uses_unified_graph", False))
