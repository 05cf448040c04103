"""パラメータのチェックポイントファイル

形式（テキスト、UTF-8、改行はLF）::

    ugwf-checkpoint 1
    parameters <個数>
    <名前> <次元数> <各次元の長さ...> <値をfloat.hexで空白区切り>
    ...
    config
    <ModelConfigのYAML>

値は16進表記の浮動小数点数のため、バイト順に依存せず完全に復元できる。
"""

import os
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import yaml

from ..utils.exceptions import CheckpointError
from .parameter import Module

CHECKPOINT_MAGIC = "ugwf-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    """読み込んだチェックポイントの内容"""

    values: Dict[str, np.ndarray]
    config: Dict[str, Any]


def save_checkpoint(path: str, module: Module, config: Dict[str, Any]) -> str:
    """モジュールのパラメータと設定をチェックポイントに書き出す

    Args:
        path: 出力ファイルパス
        module: 保存するモジュール
        config: モデル設定（YAMLで表現できる辞書）

    Returns:
        書き出したファイルのパス
    """
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)

    named = module.named_parameters()
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}", f"parameters {len(named)}"]
    for name, param in named:
        dims = " ".join(str(d) for d in param.shape)
        values = " ".join(float(v).hex() for v in param.data.ravel())
        header = f"{name} {param.ndim}" + (f" {dims}" if dims else "")
        lines.append(f"{header} {values}".rstrip())
    lines.append("config")
    lines.append(yaml.safe_dump(config, default_flow_style=False, sort_keys=True).rstrip())

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    return path


def read_checkpoint(path: str) -> Checkpoint:
    """チェックポイントファイルを読み込む

    Raises:
        CheckpointError: ファイルがない・形式やバージョンが不正な場合
    """
    if not os.path.exists(path):
        raise CheckpointError(f"チェックポイントが見つかりません: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().split("\n")

    if not lines or lines[0] != f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}":
        raise CheckpointError(f"未対応のチェックポイント形式です: {lines[0] if lines else ''}")
    try:
        count = int(lines[1].split()[1])
        values: Dict[str, np.ndarray] = {}
        for line in lines[2 : 2 + count]:
            fields = line.split()
            name, ndim = fields[0], int(fields[1])
            shape = tuple(int(d) for d in fields[2 : 2 + ndim])
            flat = [float.fromhex(v) for v in fields[2 + ndim :]]
            values[name] = np.array(flat, dtype=np.float64).reshape(shape)
        if lines[2 + count] != "config":
            raise CheckpointError("config セクションがありません")
        config = yaml.safe_load("\n".join(lines[3 + count :])) or {}
    except (IndexError, ValueError) as e:
        raise CheckpointError(f"チェックポイントの形式が不正です: {e}")
    return Checkpoint(values=values, config=config)


def load_checkpoint(path: str, module: Module) -> Dict[str, Any]:
    """チェックポイントの値をモジュールのパラメータに読み込む

    Args:
        path: チェックポイントファイル
        module: 読み込み先（同じ構成のモジュール）

    Returns:
        保存されていたモデル設定

    Raises:
        CheckpointError: パラメータ名や形状が一致しない場合
    """
    checkpoint = read_checkpoint(path)
    named = dict(module.named_parameters())
    if set(named) != set(checkpoint.values):
        missing = sorted(set(named) ^ set(checkpoint.values))
        raise CheckpointError(f"パラメータ名が一致しません: {missing[:5]}")
    for name, param in named.items():
        value = checkpoint.values[name]
        if value.shape != param.shape:
            raise CheckpointError(
                f"パラメータ {name} の形状が一致しません: {value.shape} != {param.shape}"
            )
        param.data[...] = value
    return checkpoint.config
