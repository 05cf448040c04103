"""ベースライン用の欠損補完のテスト"""

import numpy as np
import pytest

from src.corruption.imputation import impute_block, impute_window, interpolate_impute
from src.graph.spatial import nearest_order
from src.utils.exceptions import ImputationError, ValidationError
from tests.conftest import STATIONS, constant_values, make_series

nan = np.nan


class TestImputeBlock:
    """impute_block のテストクラス"""

    def test_linear_interpolation_and_hold(self):
        """内側は線形補間、端は最も近い観測値の保持になることを確認"""
        features = np.array([[[nan], [2.0], [nan], [4.0], [nan]]])
        result = impute_block(features, [[]])
        np.testing.assert_allclose(result[0, :, 0], [2.0, 2.0, 3.0, 4.0, 4.0])

    def test_observed_values_unchanged(self):
        """観測値が変更されないことを確認"""
        features = np.array([[[1.0, 5.0], [nan, nan], [3.0, 7.0]]])
        result = impute_block(features, [[]])
        np.testing.assert_array_equal(result[0, [0, 2]], features[0, [0, 2]])
        np.testing.assert_allclose(result[0, 1], [2.0, 6.0])

    def test_copies_nearest_station_with_data(self):
        """観測のない観測局が最も近い観測局の補完結果をコピーすることを確認"""
        features = np.full((3, 3, 1), nan)
        features[1, 0, 0] = 1.0
        features[2, :, 0] = [5.0, 6.0, 7.0]
        order = [[1, 2], [0, 2], [1, 0]]
        result = impute_block(features, order)
        np.testing.assert_array_equal(result[0], result[1])
        np.testing.assert_allclose(result[0, :, 0], [1.0, 1.0, 1.0])

    def test_skips_empty_donors(self):
        """最も近い観測局も空の場合は次に近い観測局からコピーすることを確認"""
        features = np.full((3, 2, 1), nan)
        features[2, :, 0] = [5.0, 6.0]
        result = impute_block(features, [[1, 2], [0, 2], [1, 0]])
        np.testing.assert_allclose(result[0, :, 0], [5.0, 6.0])

    def test_all_missing(self):
        """全観測局が欠損の場合にImputationErrorになることを確認"""
        with pytest.raises(ImputationError):
            impute_block(np.full((2, 3, 1), nan), [[1], [0]])


class TestInterpolateImpute:
    """interpolate_impute のテストクラス"""

    def test_fills_series(self):
        """補完後のSeriesSetが全て観測扱いで観測値を保つことを確認"""
        values = constant_values(2, 4)
        values[0, :, 0] = [1.0, 2.0, 3.0, 4.0]
        mask = np.array([[True, False, False, True], [True, True, True, True]])
        data = make_series(values, mask)
        filled = interpolate_impute(data, data.stations)
        assert filled.mask.all()
        np.testing.assert_allclose(filled.values[0, :, 0], [1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(filled.values[0, :, 1], 90.0)

    def test_station_order_mismatch(self):
        """観測局の並びが異なる場合にValidationErrorになることを確認"""
        data = make_series(constant_values(2, 3))
        with pytest.raises(ValidationError):
            interpolate_impute(data, STATIONS[1::-1])


class TestImputeWindow:
    """impute_window のテストクラス"""

    def test_window_inputs_are_complete(self, prepared):
        """ウィンドウ入力の補完結果に欠損が残らないことを確認"""
        split = prepared.train
        order = nearest_order(split.stations)
        window = split.windows[0]
        inputs10, inputs60 = impute_window(split, window, order)
        assert inputs10.shape == (split.n_stations, 18, 5)
        assert inputs60.shape == (split.n_stations, 12, 5)
        assert not np.any(np.isnan(inputs10))
        assert not np.any(np.isnan(inputs60))
        observed = split.series10.mask[:, window.inputs_10min]
        np.testing.assert_array_equal(
            inputs10[observed], split.features10[:, window.inputs_10min][observed]
        )
