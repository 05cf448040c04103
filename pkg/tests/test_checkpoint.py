"""チェックポイントの保存・読み込みのテスト"""

import dataclasses

import numpy as np
import pytest

from src.autodiff import ops
from src.autodiff.checkpoint import (
    CHECKPOINT_MAGIC,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from src.autodiff.gradcheck import grad_check_module
from src.autodiff.tensor import Tensor
from src.models.config import ModelConfig, parse_label
from src.models.factory import build_model
from src.models.layers import Linear
from src.utils.exceptions import CheckpointError

SMALL = {"latent_dim": 8, "layers": 1, "heads": 2, "ffn_hidden": 8}


def small_config(label, **sizes):
    return dataclasses.replace(parse_label(label), **(sizes or SMALL))


class TestRoundTrip:
    """保存・読み込みのテストクラス"""

    @pytest.mark.parametrize("label", ["STUGN-GATv2", "ST-LSTM-TGAT", "TSF-Linear"])
    def test_values_restored_exactly(self, tmp_path, label):
        """別シードで初期化したモデルに読み込むとパラメータが完全に一致することを確認"""
        config = small_config(label)
        source = build_model(config, seed=1)
        path = save_checkpoint(str(tmp_path / "m.ckpt"), source, {"model": config.to_dict()})

        target = build_model(config, seed=2)
        saved = load_checkpoint(path, target)

        for (name, a), (_, b) in zip(source.named_parameters(), target.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data, err_msg=name)
        assert ModelConfig.from_dict(saved["model"]) == config

    def test_read_checkpoint(self, tmp_path):
        """読み込んだ値の名前と形状が保存元と一致することを確認"""
        model = build_model(small_config("STUGN-MPNN"), seed=0)
        path = save_checkpoint(str(tmp_path / "nested" / "m.ckpt"), model, {"epoch": 3})
        checkpoint = read_checkpoint(path)
        assert checkpoint.config == {"epoch": 3}
        assert {n: p.shape for n, p in model.named_parameters()} == {
            n: v.shape for n, v in checkpoint.values.items()
        }

    def test_model_without_parameters(self, tmp_path):
        """パラメータのないモデルも保存・読み込みできることを確認"""
        model = build_model(parse_label("Persistence"), seed=0)
        path = save_checkpoint(str(tmp_path / "p.ckpt"), model, {})
        assert load_checkpoint(path, model) == {}


class TestErrors:
    """読み込みエラーのテストクラス"""

    def test_missing_file(self, tmp_path):
        """ファイルがない場合にCheckpointErrorになることを確認"""
        with pytest.raises(CheckpointError):
            read_checkpoint(str(tmp_path / "none.ckpt"))

    def test_bad_magic(self, tmp_path):
        """先頭行が異なる場合にCheckpointErrorになることを確認"""
        path = tmp_path / "bad.ckpt"
        path.write_text(f"{CHECKPOINT_MAGIC} 99\nparameters 0\nconfig\n", encoding="utf-8")
        with pytest.raises(CheckpointError):
            read_checkpoint(str(path))

    def test_truncated(self, tmp_path):
        """途中で切れたファイルでCheckpointErrorになることを確認"""
        model = build_model(small_config("TSF-Linear"), seed=0)
        path = save_checkpoint(str(tmp_path / "m.ckpt"), model, {})
        lines = open(path, encoding="utf-8").read().split("\n")
        (tmp_path / "cut.ckpt").write_text("\n".join(lines[:2]), encoding="utf-8")
        with pytest.raises(CheckpointError):
            read_checkpoint(str(tmp_path / "cut.ckpt"))

    def test_shape_mismatch(self, tmp_path):
        """同じ構成で次元が異なるモデルに読み込むとCheckpointErrorになることを確認"""
        model = build_model(small_config("STUGN-GATv2"), seed=0)
        path = save_checkpoint(str(tmp_path / "m.ckpt"), model, {})
        narrow = small_config("STUGN-GATv2", latent_dim=4, layers=1, heads=2, ffn_hidden=8)
        other = build_model(narrow, seed=0)
        with pytest.raises(CheckpointError):
            load_checkpoint(path, other)

    def test_name_mismatch(self, tmp_path):
        """別のモデルに読み込むとCheckpointErrorになることを確認"""
        model = build_model(small_config("STUGN-MPNN"), seed=0)
        path = save_checkpoint(str(tmp_path / "m.ckpt"), model, {})
        with pytest.raises(CheckpointError):
            load_checkpoint(path, build_model(small_config("ST-LSTM-MPNN"), seed=0))


def test_grad_check_module_on_linear():
    """モジュール単位の勾配チェックがLinearで通ることを確認"""
    rng = np.random.default_rng(0)
    layer = Linear(3, 2, rng)
    x = Tensor(rng.normal(size=(4, 3)))
    weights = rng.normal(size=(4, 2))

    def loss():
        return ops.sum(ops.mul(ops.tanh(layer(x)), weights))

    assert grad_check_module(loss, layer, max_coords=6, rng=rng) < 1e-4
