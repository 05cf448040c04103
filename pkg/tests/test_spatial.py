"""観測局間距離と空間グラフのテスト"""

import numpy as np
import pytest

from src.data.series import StationMeta
from src.graph.spatial import (
    build_spatial_graph,
    distance_matrix,
    haversine,
    hold_hourly_indices,
    knn_stations,
    nearest_order,
    replicate_edges,
)
from src.utils.exceptions import ValidationError
from tests.conftest import STATIONS


class TestDistances:
    """距離計算のテストクラス"""

    def test_one_degree_latitude(self):
        """緯度1度の距離が約111.19kmであることを確認"""
        a = StationMeta("a", 0.0, 0.0)
        b = StationMeta("b", 1.0, 0.0)
        assert haversine(a, b) == pytest.approx(111.195, rel=1e-4)

    def test_matrix_is_symmetric(self):
        """距離行列が対称で対角が0であることを確認"""
        dist = distance_matrix(STATIONS)
        np.testing.assert_array_equal(dist, dist.T)
        np.testing.assert_array_equal(np.diag(dist), 0.0)
        assert dist[0, 1] == pytest.approx(haversine(STATIONS[0], STATIONS[1]))

    def test_nearest_order(self):
        """近い順に並ぶことを確認"""
        assert nearest_order(STATIONS) == [[1, 2], [0, 2], [1, 0]]

    def test_nearest_order_ties_by_station_id(self):
        """同距離の場合はstation_idの小さい局が先になることを確認"""
        stations = (
            StationMeta("X", 0.0, 0.0),
            StationMeta("B", 1.0, 0.0),
            StationMeta("A", -1.0, 0.0),
        )
        assert nearest_order(stations)[0] == [2, 1]


class TestKnnStations:
    """knn_stations のテストクラス"""

    def test_edges_point_to_receiver(self):
        """辺が近傍から自局への向きで張られることを確認"""
        graph = knn_stations(STATIONS, k=1)
        assert graph.src.tolist() == [1, 0, 1]
        assert graph.dst.tolist() == [0, 1, 2]
        assert graph.distance_km[0] == pytest.approx(haversine(STATIONS[0], STATIONS[1]))

    def test_k_is_capped(self):
        """k が観測局数-1を超える場合は完全グラフになることを確認"""
        graph = knn_stations(STATIONS, k=5)
        assert graph.n_edges == 6
        assert all(len(ns) == 2 for ns in graph.neighbors)

    def test_edge_features_are_relative_distance(self):
        """辺特徴量が平均辺距離で割った距離であることを確認"""
        graph = knn_stations(STATIONS)
        features = graph.edge_features()
        assert features.shape == (6, 1)
        assert features.mean() == pytest.approx(1.0)

    def test_invalid_k(self):
        """k が0の場合にValidationErrorになることを確認"""
        with pytest.raises(ValidationError):
            knn_stations(STATIONS, k=0)


class TestSpatialSample:
    """ベースライン入力のテストクラス"""

    def test_hold_hourly_indices(self):
        """各スロットで完了済みの最新の時間が選ばれることを確認"""
        hours = np.array([0, 60, 120])
        slots = np.array([30, 170, 180, 190, 240])
        assert hold_hourly_indices(slots, hours).tolist() == [0, 1, 2, 2, 2]

    def test_replicate_edges(self):
        """辺が互いに素なコピーに複製されることを確認"""
        src, dst = replicate_edges(np.array([0, 1]), np.array([1, 0]), 2, 3)
        assert src.tolist() == [0, 1, 2, 3, 4, 5]
        assert dst.tolist() == [1, 0, 3, 2, 5, 4]

    def test_sample_layout(self, cache):
        """10分と保持した1時間の特徴量が連結され、直近値が最後の風速であることを確認"""
        sample = cache.train.spatial[0]
        n_stations = len(sample.coords)
        assert sample.features.shape == (n_stations, 18, 10)
        assert sample.time_encoding.shape == (18, 8)
        assert sample.target_time_encoding.shape == (6, 8)
        np.testing.assert_array_equal(sample.last_values, sample.features[:, -1, 0])
        assert not np.any(np.isnan(sample.features))

    def test_rejects_missing_inputs(self, prepared):
        """補間されていない入力でValidationErrorになることを確認"""
        split = prepared.train
        window = split.windows[0]
        inputs10 = np.full((split.n_stations, 18, 5), np.nan)
        inputs60 = np.zeros((split.n_stations, 12, 5))
        with pytest.raises(ValidationError):
            build_spatial_graph(window, split, inputs10, inputs60, knn_stations(split.stations))
