import math

import numpy as np
import pytest

from inhom_markcorr._exceptions import DegenerateBandwidthError, EstimationError, InsufficientPointsError
from inhom_markcorr.geometry import QuadratureGrid, Window
from inhom_markcorr.intensity import (
    ConstantIntensityEstimator,
    KnownIntensity,
    MassConservingKernelEstimator,
    UniformKernelEstimator,
    VoronoiIntensityEstimator,
    cvl_objective,
    cvl_selection,
    default_bandwidth_candidates,
    edge_factor_cW,
    gaussian_kernel,
    kernel_intensity_massconserving,
    kernel_intensity_uniform,
    nadaraya_watson,
    nadaraya_watson_mark_surface,
    select_bandwidth_cvl,
    voronoi_cells,
    voronoi_intensity,
)
from inhom_markcorr.pattern import MarkedPointPattern
from inhom_markcorr.simulate import ConstantExpression, simulate_inhomogeneous_poisson


class TestEdgeFactor:
    def test_centre(self, unit):
        assert edge_factor_cW(unit, np.array([0.5, 0.5]), 0.05) == pytest.approx(1.0, abs=1e-6)

    def test_corner(self, unit):
        assert edge_factor_cW(unit, np.array([0.0, 0.0]), 0.01) == pytest.approx(0.25, abs=1e-4)

    def test_matches_grid_quadrature(self):
        window = Window(0.0, 2.0, 0.0, 1.0)
        grid = QuadratureGrid(window, 800, 400)
        for u in ([0.1, 0.3], [1.9, 0.95], [1.0, 0.5]):
            sq = np.sum((grid.centers - np.array(u)) ** 2, axis=1)
            expected = grid.integrate(gaussian_kernel(sq, 0.2))
            assert edge_factor_cW(window, np.array(u), 0.2) == pytest.approx(expected, abs=1e-4)


class TestKernelEstimators:
    def test_single_point_uniform(self, unit):
        X = MarkedPointPattern(unit, [[0.5, 0.5]], [1.0])
        field = kernel_intensity_uniform(X, 0.1, QuadratureGrid(unit, 16, 16))
        expected = float(gaussian_kernel(np.array(0.0), 0.1)) / edge_factor_cW(unit, np.array([0.5, 0.5]), 0.1)
        assert field.values_at_points[0] == pytest.approx(expected, rel=1e-12)
        assert field.kind == "uniform" and field.bandwidth == 0.1

    def test_flat_limit(self, make_pattern):
        X = make_pattern(4, 40)
        field = kernel_intensity_uniform(X, 1000.0, QuadratureGrid(X.window, 32, 32))
        values = field.grid_values
        assert np.ptp(values) / np.mean(values) < 0.01
        assert np.mean(values) == pytest.approx(X.n / X.window.area, rel=0.01)

    def test_mass_conserved(self, make_pattern):
        for seed in range(5):
            X = make_pattern(seed, 10 + 7 * seed)
            field = kernel_intensity_massconserving(X, 0.05)
            assert field.mass == pytest.approx(X.n, rel=0.005)

    def test_single_point_mass(self, unit):
        X = MarkedPointPattern(unit, [[0.02, 0.9]], [1.0])
        assert kernel_intensity_massconserving(X, 0.03).mass == pytest.approx(1.0, rel=0.005)

    def test_coincident_points_double_field(self, unit):
        one = MarkedPointPattern(unit, [[0.3, 0.6]], [1.0])
        two = MarkedPointPattern(unit, [[0.3, 0.6], [0.3, 0.6]], [1.0, 1.0])
        grid = QuadratureGrid(unit, 16, 16)
        a = kernel_intensity_massconserving(one, 0.1, grid)
        b = kernel_intensity_massconserving(two, 0.1, grid)
        np.testing.assert_allclose(b.grid_values, 2.0 * a.grid_values, rtol=1e-14)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(EstimationError):
            UniformKernelEstimator(0.0)

    def test_needs_a_point(self, unit):
        X = MarkedPointPattern(unit, np.zeros((0, 2)), [])
        with pytest.raises(InsufficientPointsError):
            kernel_intensity_uniform(X, 0.1)

    def test_values_clamped(self, unit):
        X = MarkedPointPattern(unit, [[0.0, 0.0], [0.01, 0.0]], [1.0, 1.0])
        field = kernel_intensity_uniform(X, 0.005, QuadratureGrid(unit, 16, 16))
        assert field.clamp_count > 0
        assert np.all(field.grid_values >= field.clamp_floor)
        assert field.clamp_floor == pytest.approx(1e-8 * 2)

    @pytest.mark.slow
    def test_uniform_unbiased_under_homogeneity(self, unit):
        grid = QuadratureGrid(unit, 8, 8)
        means = []
        for i in range(100):
            X = simulate_inhomogeneous_poisson(ConstantExpression(100.0), unit, 11, i)
            means.append(np.mean(kernel_intensity_uniform(X, 0.1, grid).grid_values))
        assert np.mean(means) == pytest.approx(100.0, rel=0.1)

    @pytest.mark.slow
    def test_uniform_unbiased_at_interior_cells(self, unit):
        grid = QuadratureGrid(unit, 4, 4)
        replicates = 500
        samples = np.array([
            kernel_intensity_uniform(
                simulate_inhomogeneous_poisson(ConstantExpression(100.0), unit, 12, i), 0.1, grid
            ).grid_values
            for i in range(replicates)
        ])
        centers = grid.centers
        interior = np.all((centers > 0.25) & (centers < 0.75), axis=1)
        assert interior.sum() == 4
        mean = samples[:, interior].mean(axis=0)
        se = samples[:, interior].std(axis=0, ddof=1) / math.sqrt(replicates)
        assert np.all(np.abs(mean - 100.0) <= 3 * se)


class TestBandwidthSelection:
    def test_single_candidate(self, make_pattern):
        assert select_bandwidth_cvl(make_pattern(0, 20), [0.07]) == 0.07

    def test_argmin(self, make_pattern):
        X = make_pattern(1, 30)
        selection = cvl_selection(X)
        assert len(selection.candidates) == 32
        assert np.all(selection.objective <= selection.objectives[np.isfinite(selection.objectives)])
        assert selection.objective == pytest.approx(cvl_objective(X, selection.bandwidth))

    def test_candidate_range(self, unit):
        c = default_bandwidth_candidates(unit)
        assert c[0] == pytest.approx(0.01) and c[-1] == pytest.approx(0.5)

    def test_degenerate_candidates(self, make_pattern):
        with pytest.raises(DegenerateBandwidthError):
            select_bandwidth_cvl(make_pattern(2, 10), [])

    def test_needs_two_points(self, unit):
        with pytest.raises(InsufficientPointsError):
            select_bandwidth_cvl(MarkedPointPattern(unit, [[0.5, 0.5]], [1.0]))

    def test_auto_bandwidth_recorded(self, make_pattern):
        field = MassConservingKernelEstimator().estimate(make_pattern(3, 25))
        info = field.extras["bandwidth_selection"]
        assert info["bandwidth"] == field.bandwidth
        assert "objective" in info

    @pytest.mark.slow
    def test_selected_objective_small_under_homogeneity(self, unit):
        ratios = []
        for i in range(50):
            X = simulate_inhomogeneous_poisson(ConstantExpression(100.0), unit, 5, i)
            h = select_bandwidth_cvl(X)
            ratios.append(cvl_objective(X, h) / unit.area)
        assert np.mean(ratios) < 0.15


class TestVoronoi:
    def test_cells_partition_window(self, make_pattern):
        X = make_pattern(6, 40)
        cells = voronoi_cells(X.points, X.window)
        assert cells.areas.sum() == pytest.approx(X.window.area, rel=1e-9)

    def test_plain_estimator_mass_exact(self, make_pattern):
        X = make_pattern(7, 35)
        field = voronoi_intensity(X)
        assert field.mass == pytest.approx(X.n, rel=1e-9)

    def test_cell_vertices_closest_to_own_site(self, make_pattern):
        X = make_pattern(12, 30)
        cells = voronoi_cells(X.points, X.window)
        for site, polygon in zip(cells.sites, cells.polygons):
            assert np.all((polygon >= -1e-12) & (polygon <= 1.0 + 1e-12))
            own = np.hypot(*(polygon - site).T)
            nearest = np.min(np.hypot(*(polygon[:, None, :] - cells.sites[None, :, :]).transpose(2, 0, 1)), axis=1)
            np.testing.assert_allclose(own, nearest, atol=1e-9)

    def test_sites_on_window_boundary(self, unit):
        points = [[0.0, 0.0], [1.0, 0.3], [0.5, 1.0], [0.4, 0.5], [0.7, 0.6]]
        cells = voronoi_cells(np.array(points), unit)
        assert cells.areas.sum() == pytest.approx(1.0, rel=1e-9)
        assert np.all(cells.areas > 0)

    def test_thinned_mass_matches_quadrature(self, make_pattern):
        X = make_pattern(13, 60)
        grid = QuadratureGrid(X.window, 128, 128)
        field = voronoi_intensity(X, 0.5, 5, seed=2, grid=grid)
        assert field.mass == pytest.approx(float(field.grid_values @ grid.cell_areas), rel=0.03)

    def test_single_point_constant(self, unit):
        X = MarkedPointPattern(Window(0.0, 2.0, 0.0, 1.0), [[0.4, 0.3]], [1.0])
        field = voronoi_intensity(X, grid=QuadratureGrid(X.window, 8, 8))
        np.testing.assert_allclose(field.grid_values, 0.5, rtol=1e-12)
        assert field.bandwidth is None

    def test_coincident_points_share_cell(self, unit):
        X = MarkedPointPattern(unit, [[0.25, 0.5], [0.25, 0.5], [0.75, 0.5]], [1.0, 1.0, 1.0])
        cells = voronoi_cells(X.points, X.window)
        assert len(cells.sites) == 2
        field = voronoi_intensity(X, grid=QuadratureGrid(unit, 4, 4))
        np.testing.assert_allclose(field.values_at_points, [4.0, 4.0, 2.0])
        assert field.mass == pytest.approx(3.0)

    def test_collinear_sites(self, unit):
        X = MarkedPointPattern(unit, [[0.1, 0.5], [0.4, 0.5], [0.6, 0.5], [0.9, 0.5]], np.ones(4))
        cells = voronoi_cells(X.points, X.window)
        np.testing.assert_allclose(cells.areas, [0.25, 0.25, 0.25, 0.25])

    def test_thinned_estimator_deterministic(self, make_pattern):
        X = make_pattern(8, 50)
        a = voronoi_intensity(X, 0.3, 10, seed=4, grid=QuadratureGrid(X.window, 8, 8))
        b = voronoi_intensity(X, 0.3, 10, seed=4, grid=QuadratureGrid(X.window, 8, 8))
        assert np.array_equal(a.grid_values, b.grid_values)
        assert a.provenance()["retention"] == 0.3

    def test_invalid_retention(self):
        with pytest.raises(EstimationError):
            VoronoiIntensityEstimator(retention=0.0)

    @pytest.mark.slow
    def test_resample_smoothing_unbiased(self, unit):
        grid = QuadratureGrid(unit, 16, 16)
        means = []
        for i in range(20):
            X = simulate_inhomogeneous_poisson(ConstantExpression(100.0), unit, 9, i)
            field = voronoi_intensity(X, 0.2, 200, seed=i, grid=grid)
            means.append(np.mean(field.grid_values) / X.intensity)
        assert np.mean(means) == pytest.approx(1.0, rel=0.1)


class TestKnownAndConstant:
    def test_constant_field(self, five_points):
        field = ConstantIntensityEstimator().estimate(five_points, QuadratureGrid(five_points.window, 4, 4))
        assert np.all(field.values_at_points == 5.0)
        assert np.all(field.grid_values == 5.0)
        assert field.mass == 5.0

    def test_known_intensity(self, five_points):
        field = KnownIntensity(lambda x, y: 10.0 * (1.0 + x), "linear").estimate(five_points)
        np.testing.assert_allclose(field.values_at_points, 10.0 * (1.0 + five_points.x))
        assert field.kind == "known"

    def test_known_intensity_rejects_negative(self, five_points):
        with pytest.raises(EstimationError):
            KnownIntensity(lambda x, y: x - 0.5).estimate(five_points)


class TestNadarayaWatson:
    def test_constant_marks(self, unit):
        X = MarkedPointPattern(unit, [[0.1, 0.1], [0.5, 0.9], [0.8, 0.3]], [2.5, 2.5, 2.5])
        grid = QuadratureGrid(unit, 8, 8)
        mean = nadaraya_watson_mark_surface(X, 0.2, grid, "mean")
        var = nadaraya_watson_mark_surface(X, 0.2, grid, "variance")
        np.testing.assert_allclose(mean.values, 2.5, rtol=1e-14)
        np.testing.assert_allclose(var.values, 0.0, atol=1e-24)

    def test_flat_limit_is_global_mean(self, make_pattern):
        X = make_pattern(9, 30)
        surface = nadaraya_watson_mark_surface(X, 1000.0, QuadratureGrid(X.window, 8, 8))
        np.testing.assert_allclose(surface.values, np.mean(X.marks), rtol=0.01)

    def test_two_point_formula(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0]])
        marks = np.array([1.0, 3.0])
        u = np.array([[0.3, 0.2]])
        h = 0.5
        w = np.exp(-0.5 * np.array([0.13, 0.53]) / h**2)
        mean = (w @ marks) / w.sum()
        var = (w @ (marks - mean) ** 2) / w.sum()
        assert nadaraya_watson(points, marks, u, h, "mean")[0] == pytest.approx(mean, rel=1e-12)
        assert nadaraya_watson(points, marks, u, h, "variance")[0] == pytest.approx(var, rel=1e-12)

    def test_mean_within_mark_range(self, make_pattern):
        X = make_pattern(10, 25, marks="normal")
        values = nadaraya_watson_mark_surface(X, 0.05, QuadratureGrid(X.window, 16, 16)).values
        ok = ~np.isnan(values)
        assert np.all(values[ok] >= X.marks.min()) and np.all(values[ok] <= X.marks.max())

    def test_order_invariant(self, make_pattern):
        X = make_pattern(11, 20)
        order = np.random.default_rng(0).permutation(X.n)
        grid = QuadratureGrid(X.window, 8, 8)
        a = nadaraya_watson_mark_surface(X, 0.1, grid).values
        b = nadaraya_watson_mark_surface(X.reindexed(order), 0.1, grid).values
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_underflow_flagged_missing(self, unit):
        X = MarkedPointPattern(unit, [[0.0, 0.0], [0.01, 0.0]], [1.0, 2.0])
        surface = nadaraya_watson_mark_surface(X, 1e-3, QuadratureGrid(unit, 4, 4))
        assert surface.missing.any()
        assert surface.to_frame()["missing"].sum() == surface.missing.sum()

    def test_unknown_statistic(self, five_points):
        with pytest.raises(EstimationError):
            nadaraya_watson(five_points.points, five_points.marks, five_points.points, 0.1, "median")
