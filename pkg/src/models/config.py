"""モデル構成とハイパーパラメータの既定値"""

from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional

from ..utils.exceptions import ValidationError


class Family(str, Enum):
    """モデルファミリー"""

    STUGN = "STUGN"
    ST_LSTM = "ST-LSTM"
    ST_TRANSFORMER = "ST-Transformer"
    TSF_LINEAR = "TSF-Linear"
    PERSISTENCE = "Persistence"


class GraphBlockKind(str, Enum):
    """グラフブロックの種類"""

    MPNN = "MPNN"
    GATV2 = "GATv2"
    TGAT = "TGAT"


class Normalisation(str, Enum):
    """残差接続の正規化方式"""

    REZERO = "ReZero"
    PRE_LAYER_NORM = "PreLayerNorm"
    NONE = "none"


GRAPH_FAMILIES = (Family.STUGN, Family.ST_LSTM, Family.ST_TRANSFORMER)

_LEARNING_RATES = {
    Family.STUGN: 5e-5,
    Family.ST_LSTM: 1e-5,
    Family.ST_TRANSFORMER: 1e-5,
    Family.TSF_LINEAR: 1e-4,
    Family.PERSISTENCE: 0.0,
}
_FFN_NODE = {Family.STUGN: True, Family.ST_LSTM: False, Family.ST_TRANSFORMER: True}
_FFN_EDGE = {GraphBlockKind.MPNN: True, GraphBlockKind.GATV2: True, GraphBlockKind.TGAT: False}
_NORMALISATION = {
    Family.STUGN: Normalisation.REZERO,
    Family.ST_LSTM: Normalisation.NONE,
    Family.ST_TRANSFORMER: Normalisation.PRE_LAYER_NORM,
}


@dataclass(frozen=True)
class ModelConfig:
    """モデルの構成

    Attributes:
        family: モデルファミリー
        graph_block: グラフブロック（グラフを使わないファミリーではNone）
        latent_dim: 潜在次元 d
        layers: 層数 L
        heads: アテンションのヘッド数
        ffn_hidden: FFNの中間次元
        dropout: dropout率
        ffn_node: 層ごとのノードFFNの有無
        ffn_edge: 層ごとのエッジFFNの有無
        normalisation: 残差接続の方式
        learning_rate: 学習率
    """

    family: Family
    graph_block: Optional[GraphBlockKind] = None
    latent_dim: int = 64
    layers: int = 3
    heads: int = 4
    ffn_hidden: int = 256
    dropout: float = 0.05
    ffn_node: bool = False
    ffn_edge: bool = False
    normalisation: Normalisation = Normalisation.NONE
    learning_rate: float = 1e-4

    def __post_init__(self) -> None:
        uses_graph = self.family in GRAPH_FAMILIES
        if uses_graph and self.graph_block is None:
            raise ValidationError(f"{self.family.value} にはグラフブロックの指定が必要です")
        if not uses_graph and self.graph_block is not None:
            raise ValidationError(f"{self.family.value} はグラフブロックを使いません")
        if self.latent_dim < 1 or self.layers < 0 or self.heads < 1 or self.ffn_hidden < 1:
            raise ValidationError("モデルの次元・層数・ヘッド数が不正です")
        if uses_graph and self.latent_dim % self.heads != 0:
            raise ValidationError(
                f"latent_dim {self.latent_dim} は heads {self.heads} で割り切れる必要があります"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout は [0, 1) の範囲である必要があります: {self.dropout}")
        if self.learning_rate < 0:
            raise ValidationError("learning_rate は0以上である必要があります")

    @property
    def head_dim(self) -> int:
        return self.latent_dim // self.heads

    def to_dict(self) -> Dict[str, Any]:
        """YAMLに書ける辞書に変換する"""
        data = asdict(self)
        data["family"] = self.family.value
        data["graph_block"] = self.graph_block.value if self.graph_block else None
        data["normalisation"] = self.normalisation.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        """to_dict の出力から復元する

        Raises:
            ValidationError: 値が不正な場合
        """
        try:
            values = dict(data)
            values["family"] = Family(values["family"])
            block = values.get("graph_block")
            values["graph_block"] = GraphBlockKind(block) if block else None
            values["normalisation"] = Normalisation(
                values.get("normalisation", Normalisation.NONE.value)
            )
            return cls(**values)
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"ModelConfig を復元できません: {e}")


def default_config(
    family: Family, graph_block: Optional[GraphBlockKind] = None, **overrides: Any
) -> ModelConfig:
    """ファミリーとグラフブロックに応じた既定の構成を返す

    Args:
        family: モデルファミリー
        graph_block: グラフブロック
        **overrides: 上書きするフィールド

    Returns:
        ModelConfig
    """
    config = ModelConfig(
        family=family,
        graph_block=graph_block,
        ffn_node=_FFN_NODE.get(family, False),
        ffn_edge=_FFN_EDGE[graph_block] if graph_block else False,
        normalisation=_NORMALISATION.get(family, Normalisation.NONE),
        learning_rate=_LEARNING_RATES[family],
    )
    return replace(config, **overrides) if overrides else config


def parse_label(label: str) -> ModelConfig:
    """`STUGN-GATv2` のようなラベルから既定の構成を作る

    Raises:
        ValidationError: 未知のラベルの場合
    """
    for family in Family:
        if label == family.value:
            return default_config(family)
        for block in GraphBlockKind:
            if label == f"{family.value}-{block.value}":
                return default_config(family, block)
    raise ValidationError(f"未知のモデル名です: {label}")


def model_label(config: ModelConfig) -> str:
    """構成の表示名（例 `STUGN-GATv2`）"""
    if config.graph_block is None:
        return config.family.value
    return f"{config.family.value}-{config.graph_block.value}"


def table_rows() -> List[ModelConfig]:
    """結果表の11行分の既定構成（表の行順）"""
    rows = [default_config(Family.PERSISTENCE), default_config(Family.TSF_LINEAR)]
    for family in (Family.ST_LSTM, Family.ST_TRANSFORMER, Family.STUGN):
        rows.extend(default_config(family, block) for block in GraphBlockKind)
    return rows


TABLE_LABELS = [model_label(c) for c in table_rows()]
