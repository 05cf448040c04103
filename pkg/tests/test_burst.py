"""バースト欠損注入のテスト"""

import numpy as np
import pytest
from scipy.stats import chisquare

from src.corruption.burst import (
    BurstDraws,
    BurstModel,
    CorruptionLog,
    burst_probabilities,
    corrupt_pair,
    draw_bursts,
    inject_missing,
    removal_mask,
    replay_corruption,
)
from src.data.series import FREQ_HOURLY, StationMeta, aggregate_hourly
from src.utils.exceptions import ValidationError
from tests.conftest import constant_values, make_series


def isolated_run_lengths(removed, seeds, max_burst):
    """前後 max_burst + 1 以内に他の起点がない起点について、直後の連続除去長を返す

    Returns:
        (連続除去長, 起点直後 max_burst 個のうち除去された数)
    """
    reach = max_burst + 1
    runs, totals = [], []
    for row_removed, row_seeds in zip(removed, seeds):
        counts = np.concatenate([[0], np.cumsum(row_seeds)])
        positions = np.nonzero(row_seeds)[0]
        inside = (positions >= reach) & (positions + reach < row_seeds.size)
        positions = positions[inside]
        nearby = counts[positions + reach + 1] - counts[positions - reach]
        isolated = positions[nearby == 1]
        following = row_removed[isolated[:, None] + np.arange(1, max_burst + 1)]
        runs.append(np.cumprod(following, axis=1).sum(axis=1))
        totals.append(following.sum(axis=1))
    return np.concatenate(runs), np.concatenate(totals)


class TestBurstProbabilities:
    """burst_probabilities のテストクラス"""

    def test_formula(self):
        """p_n = exp(-n/10) / Σ exp(-j/10) であることを確認"""
        probs = burst_probabilities(10.0, 10)
        weights = np.exp(-np.arange(1, 11) / 10.0)
        np.testing.assert_allclose(probs, weights / weights.sum(), rtol=1e-12)
        assert probs.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(probs[1:] / probs[:-1], np.exp(-0.1))

    def test_documented_values(self):
        """p_1 ≈ 0.15055、p_10 ≈ 0.06121 であることを確認"""
        probs = burst_probabilities()
        assert probs[0] == pytest.approx(0.15055, abs=1e-5)
        assert probs[-1] == pytest.approx(0.06121, abs=1e-5)

    def test_lengths_within_range(self):
        """各要素のバースト長が 1..max_burst の範囲に入ることを確認"""
        draws = draw_bursts(BurstModel(target_rate=0.1, seed=5), (3, 50_000))
        assert draws.lengths.shape == (3, 50_000)
        assert draws.lengths.min() == 1
        assert draws.lengths.max() == 10

    def test_single_seed_run_lengths_follow_probabilities(self):
        """孤立した起点の連続除去長の分布が p_n に従うことを確認（カイ二乗検定）"""
        model = BurstModel(target_rate=0.1, seed=5)
        shape = (10, 1_000_000)
        draws = draw_bursts(model, shape)
        removed, seeds = removal_mask(draws, 0.02, np.ones(shape, dtype=bool))
        runs, totals = isolated_run_lengths(removed, seeds, model.max_burst)
        assert runs.size >= 100_000
        # 除去は起点直後の連続区間のみ
        np.testing.assert_array_equal(runs, totals)
        assert runs.min() >= 1
        assert runs.max() <= model.max_burst
        counts = np.bincount(runs, minlength=model.max_burst + 1)[1:]
        _, p_value = chisquare(counts, model.probabilities * counts.sum())
        assert p_value > 0.01


class TestBurstModel:
    """BurstModel のテストクラス"""

    @pytest.mark.parametrize("rate", [-0.1, 1.0])
    def test_invalid_rate(self, rate):
        """範囲外の目標欠損率でValidationErrorになることを確認"""
        with pytest.raises(ValidationError):
            BurstModel(target_rate=rate)

    def test_invalid_burst(self):
        """max_burst が0の場合にValidationErrorになることを確認"""
        with pytest.raises(ValidationError):
            BurstModel(target_rate=0.1, max_burst=0)


class TestRemovalMask:
    """removal_mask のテストクラス"""

    def test_bursts_follow_origin(self):
        """起点に続くバースト長分の連続区間が除去されることを確認"""
        draws = BurstDraws(
            uniforms=np.array([[0.9, 0.0, 0.9, 0.9, 0.9, 0.9]]),
            lengths=np.array([[1, 3, 1, 1, 1, 1]]),
        )
        removed, seeds = removal_mask(draws, 0.5, np.ones((1, 6), dtype=bool))
        assert seeds.tolist() == [[False, True, False, False, False, False]]
        assert removed.tolist() == [[False, True, True, True, True, False]]

    def test_burst_truncated_at_end(self):
        """系列末尾を越えるバーストが末尾で打ち切られることを確認"""
        draws = BurstDraws(
            uniforms=np.array([[0.9, 0.9, 0.0]]), lengths=np.array([[1, 1, 10]])
        )
        removed, _ = removal_mask(draws, 0.5, np.ones((1, 3), dtype=bool))
        assert removed.tolist() == [[False, False, True]]

    def test_removed_values_do_not_start_bursts(self):
        """バーストで除去された値が新たな起点にならないことを確認"""
        draws = BurstDraws(
            uniforms=np.array([[0.0, 0.9, 0.9, 0.9, 0.9]]),
            lengths=np.array([[1, 3, 3, 3, 3]]),
        )
        removed, _ = removal_mask(draws, 0.5, np.ones((1, 5), dtype=bool))
        assert removed.tolist() == [[True, True, False, False, False]]

    def test_unavailable_entries(self):
        """元々欠損している要素は起点にも除去対象にもならないことを確認"""
        draws = BurstDraws(
            uniforms=np.zeros((1, 3)), lengths=np.ones((1, 3), dtype=int)
        )
        available = np.array([[False, True, False]])
        removed, seeds = removal_mask(draws, 0.5, available)
        assert seeds.tolist() == [[False, True, False]]
        assert removed.tolist() == [[False, True, False]]

    def test_monotone_in_base_rate(self):
        """共通乱数のもとで基本欠損率を上げると除去集合が増えるだけであることを確認"""
        draws = draw_bursts(BurstModel(target_rate=0.2, seed=2), (3, 5_000))
        available = np.ones((3, 5_000), dtype=bool)
        low, _ = removal_mask(draws, 0.02, available)
        high, _ = removal_mask(draws, 0.05, available)
        assert not np.any(low & ~high)
        assert high.sum() > low.sum()


class TestInjectMissing:
    """inject_missing のテストクラス"""

    def test_zero_rate_is_identity(self, clean_pair):
        """欠損率0では入力がそのまま返ることを確認"""
        corrupted, log = inject_missing(clean_pair[0], BurstModel(target_rate=0.0))
        assert corrupted.same_as(clean_pair[0])
        assert len(log) == 0
        assert log.realized_rate == 0.0

    @pytest.mark.parametrize("target", [0.1, 0.2, 0.3])
    def test_realized_rate_on_large_grid(self, target):
        """10^6 要素のグリッドで実現欠損率が目標 ±0.005 に収まることを確認"""
        stations = tuple(StationMeta(f"S{i:02d}", 55.0 + 0.1 * i, 3.0) for i in range(10))
        data = make_series(constant_values(10, 100_000), stations=stations)
        corrupted, log = inject_missing(data, BurstModel(target_rate=target, seed=11))
        realized = 1.0 - corrupted.mask.mean()
        assert abs(realized - target) <= 0.005
        assert log.realized_rate == pytest.approx(realized)
        assert len(log) == int((~corrupted.mask).sum())

    def test_deterministic(self, clean_pair):
        """同じシードで同じ欠損パターンになることを確認"""
        model = BurstModel(target_rate=0.3, seed=4)
        first, log1 = inject_missing(clean_pair[0], model)
        second, log2 = inject_missing(clean_pair[0], model)
        assert first.same_as(second)
        assert log1.removed == log2.removed

    def test_only_removes(self, clean_pair, corrupted_triple):
        """欠損注入が観測を除去するだけで値を変えないことを確認"""
        corrupted10, corrupted60, log = corrupted_triple
        clean10 = clean_pair[0]
        assert not np.any(corrupted10.mask & ~clean10.mask)
        kept = corrupted10.mask
        np.testing.assert_array_equal(corrupted10.values[kept], clean10.values[kept])
        assert corrupted60.same_as(aggregate_hourly(corrupted10))
        assert corrupted60.frequency == FREQ_HOURLY
        assert len(log) == int((clean10.mask & ~kept).sum())


class TestCorruptionLog:
    """CorruptionLog の保存と再適用のテストクラス"""

    def test_replay_reproduces_corruption(self, clean_pair, corrupted_triple):
        """CorruptionLogを再適用すると同じデータになることを確認"""
        corrupted10, _, log = corrupted_triple
        assert replay_corruption(clean_pair[0], log).same_as(corrupted10)

    def test_csv_roundtrip(self, tmp_path, clean_pair, corrupted_triple):
        """CSVに保存して読み込んだログで同じ欠損が再現されることを確認"""
        corrupted10, _, log = corrupted_triple
        path = log.to_csv(str(tmp_path / "logs" / "corruption_log.csv"))
        clean10 = clean_pair[0]
        loaded = CorruptionLog.from_csv(path, grid_entries=clean10.mask.size)
        assert loaded.removed == log.removed
        assert loaded.realized_rate == pytest.approx(log.realized_rate)
        assert replay_corruption(clean10, loaded).same_as(corrupted10)

    def test_csv_header(self, tmp_path, corrupted_triple):
        """ヘッダーが station_id,frequency_minutes,timestamp であることを確認"""
        path = corrupted_triple[2].to_csv(str(tmp_path / "log.csv"))
        header = open(path, encoding="utf-8").readline().strip()
        assert header == "station_id,frequency_minutes,timestamp"

    def test_frequency_mismatch(self, clean_pair, corrupted_triple):
        """周波数の異なるデータに再適用するとValidationErrorになることを確認"""
        with pytest.raises(ValidationError):
            replay_corruption(clean_pair[1], corrupted_triple[2])

    def test_corrupt_pair_zero_rate(self, clean_pair):
        """欠損率0の corrupt_pair で1時間データも変わらないことを確認"""
        corrupted10, corrupted60, log = corrupt_pair(clean_pair[0], BurstModel(0.0))
        assert corrupted10.same_as(clean_pair[0])
        assert corrupted60.same_as(clean_pair[1])
        assert len(log) == 0
