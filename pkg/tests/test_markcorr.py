import math

import numpy as np
import pytest

from inhom_markcorr._exceptions import (
    AllMissingError,
    EstimationError,
    InsufficientPointsError,
    ZeroNormalizerError,
)
from inhom_markcorr.geometry import Window
from inhom_markcorr.intensity import KnownIntensity, constant_intensity
from inhom_markcorr.markcorr import (
    PairTable,
    RGrid,
    c_homogeneous,
    c_inhom,
    default_pair_bandwidth,
    default_rgrid,
    estimate_curves,
    k_ratio_inhom,
    kappa_homogeneous,
    kappa_inhom,
    pairsum_denominator,
    pairsum_numerator,
    pcf_inhom,
)
from inhom_markcorr.pattern import MarkedPointPattern
from inhom_markcorr.simulate import ConstantExpression, scenario_preset, simulate_inhomogeneous_poisson
from inhom_markcorr.testfunctions import (
    CustomTestFunction,
    UnitTestFunction,
    get_test_function,
)

from .oracles import k_ratio_curve, normalizer, pair_sums, ratio_curve

R_VALUES = np.linspace(0.0, 0.5, 11)


def linear_intensity(x, y):
    return 50.0 * (1.0 + x)


class TestRGrid:
    def test_default_grid(self, make_pattern):
        X = make_pattern(0, 25, Window(0.0, 2.0, 0.0, 1.0))
        rgrid = default_rgrid(X)
        assert len(rgrid) == 101
        assert rgrid.rmax == pytest.approx(0.25)
        assert rgrid.bandwidth == pytest.approx(0.15 / math.sqrt(12.5))

    def test_rejects_decreasing(self):
        with pytest.raises(EstimationError):
            RGrid([0.0, 0.2, 0.1], 0.05)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(EstimationError):
            RGrid([0.0, 0.1], 0.0)

    def test_pair_bandwidth_needs_points(self, unit):
        with pytest.raises(InsufficientPointsError):
            default_pair_bandwidth(MarkedPointPattern(unit, np.zeros((0, 2)), []))


def oracle_intensity(X, flavor):
    if flavor == "homogeneous":
        return constant_intensity(X), np.full(X.n, X.n / X.window.area)
    field = KnownIntensity(linear_intensity).estimate(X)
    return field, field.values_at_points


class TestAgainstDoubleLoop:
    @pytest.mark.parametrize("edge", ["translation", "ripley"])
    @pytest.mark.parametrize("tf_name", ["mm", "vario"])
    @pytest.mark.parametrize("flavor", ["homogeneous", "inhomogeneous"])
    @pytest.mark.parametrize("normalised", [False, True])
    def test_pcf_form(self, small_patterns, edge, tf_name, flavor, normalised):
        tf = get_test_function(tf_name)
        rgrid = RGrid(R_VALUES, 0.08)
        for X in small_patterns:
            lam, lam_at_points = oracle_intensity(X, flavor)
            if flavor == "homogeneous":
                curve = kappa_homogeneous if normalised else c_homogeneous
                got = curve(X, tf, rgrid, edge).values
            else:
                curve = kappa_inhom if normalised else c_inhom
                got = curve(X, tf, lam, rgrid, edge).values
            expected = ratio_curve(X, tf, lam_at_points, R_VALUES, 0.08, edge)
            if normalised:
                expected = expected / normalizer(tf_name, list(X.marks))
            np.testing.assert_allclose(got, expected, rtol=1e-12, equal_nan=True)

    @pytest.mark.parametrize("edge", ["translation", "ripley"])
    def test_pair_sums(self, small_patterns, edge):
        tf = get_test_function("mm")
        rgrid = RGrid(R_VALUES, 0.08)
        for X in small_patterns[:8]:
            lam = KnownIntensity(linear_intensity).estimate(X)
            num, den = pair_sums(X, tf, lam.values_at_points, R_VALUES, 0.08, edge)
            np.testing.assert_allclose(pairsum_numerator(X, tf, lam, rgrid, edge).values, num,
                                       rtol=1e-12, atol=1e-300, equal_nan=True)
            np.testing.assert_allclose(pairsum_denominator(X, lam, rgrid, edge).values, den,
                                       rtol=1e-12, atol=1e-300, equal_nan=True)

    @pytest.mark.parametrize("edge", ["translation", "ripley"])
    @pytest.mark.parametrize("tf_name", ["mm", "vario"])
    @pytest.mark.parametrize("flavor", ["homogeneous", "inhomogeneous"])
    def test_k_form(self, small_patterns, edge, tf_name, flavor):
        tf = get_test_function(tf_name)
        rgrid = RGrid(R_VALUES, 0.08)
        for X in small_patterns:
            lam, lam_at_points = oracle_intensity(X, flavor)
            expected = k_ratio_curve(X, tf, lam_at_points, R_VALUES, edge)
            got = k_ratio_inhom(X, tf, lam, rgrid, edge).values
            np.testing.assert_allclose(got, expected, rtol=1e-12, equal_nan=True)
            constant = normalizer(tf_name, list(X.marks))
            scaled = k_ratio_inhom(X, tf, lam, rgrid, edge, normalizer=constant).values
            np.testing.assert_allclose(scaled, expected / constant, rtol=1e-12, equal_nan=True)


class TestHomogeneousReduction:
    def test_constant_field_is_bitwise_homogeneous(self, small_patterns):
        rgrid = RGrid(R_VALUES, 0.08)
        for X in small_patterns:
            flat = KnownIntensity(lambda x, y, v=X.n / X.window.area: np.full_like(x, v)).estimate(X)
            inhom = c_inhom(X, "mm", flat, rgrid)
            homog = c_homogeneous(X, "mm", rgrid)
            np.testing.assert_array_equal(inhom.values, homog.values)
            assert homog.flavor == "homogeneous" and inhom.flavor == "inhomogeneous"

    def test_default_intensity_is_homogeneous(self, five_points):
        rgrid = RGrid(R_VALUES, 0.1)
        a = kappa_inhom(five_points, "mm", rgrid=rgrid)
        b = kappa_homogeneous(five_points, "mm", rgrid)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.flavor == "homogeneous"


class TestCurveProperties:
    def test_unit_test_function_gives_one(self, small_patterns):
        rgrid = RGrid(R_VALUES, 0.08)
        for X in small_patterns:
            curve = c_inhom(X, UnitTestFunction(), KnownIntensity(linear_intensity).estimate(X), rgrid)
            assert np.all(curve.defined == 1.0)

    def test_constant_marks_product(self, make_pattern):
        X = make_pattern(3, 30).with_marks(np.full(30, 1.7))
        curve = c_inhom(X, "mm", KnownIntensity(linear_intensity).estimate(X), RGrid(R_VALUES, 0.08))
        np.testing.assert_allclose(curve.defined, 1.7 * 1.7, rtol=1e-12)

    def test_constant_marks_product_kappa_is_one(self, make_pattern):
        X = make_pattern(4, 30).with_marks(np.full(30, 3.0))
        curve = kappa_inhom(X, "mm", rgrid=RGrid(R_VALUES, 0.08))
        np.testing.assert_allclose(curve.defined, 1.0, rtol=1e-12)

    def test_constant_marks_variogram(self, make_pattern):
        X = make_pattern(5, 30).with_marks(np.full(30, 0.3))
        curve = c_inhom(X, "vario", rgrid=RGrid(R_VALUES, 0.08))
        assert np.all(curve.defined == 0.0)
        with pytest.raises(ZeroNormalizerError):
            kappa_inhom(X, "vario", rgrid=RGrid(R_VALUES, 0.08))

    @pytest.mark.parametrize("tf_name", ["mm", "vario"])
    def test_mark_scale_invariance(self, make_pattern, tf_name):
        X = make_pattern(6, 40, marks="normal")
        rgrid = RGrid(R_VALUES, 0.08)
        lam = KnownIntensity(linear_intensity).estimate(X)
        base = kappa_inhom(X, tf_name, lam, rgrid).values
        scaled = kappa_inhom(X.with_marks(X.marks * 37.5), tf_name, lam, rgrid).values
        np.testing.assert_allclose(scaled, base, rtol=1e-10, equal_nan=True)

    def test_variogram_shift_invariance(self, make_pattern):
        X = make_pattern(7, 40, marks="normal")
        rgrid = RGrid(R_VALUES, 0.08)
        base = kappa_inhom(X, "vario", rgrid=rgrid).values
        shifted = kappa_inhom(X.with_marks(X.marks + 100.0), "vario", rgrid=rgrid).values
        np.testing.assert_allclose(shifted, base, rtol=1e-10, equal_nan=True)

    def test_reindex_invariance(self, make_pattern):
        X = make_pattern(8, 35)
        Y = X.reindexed(np.random.default_rng(0).permutation(X.n))
        rgrid = RGrid(R_VALUES, 0.08)
        for tf in ("mm", "vario"):
            a = kappa_inhom(X, tf, KnownIntensity(linear_intensity).estimate(X), rgrid, "ripley").values
            b = kappa_inhom(Y, tf, KnownIntensity(linear_intensity).estimate(Y), rgrid, "ripley").values
            np.testing.assert_allclose(a, b, rtol=1e-12, equal_nan=True)

    def test_zero_distance_missing(self, five_points):
        curve = kappa_inhom(five_points, "mm", rgrid=RGrid(R_VALUES, 0.1))
        assert curve.missing[0]
        assert np.isnan(pcf_inhom(five_points, rgrid=RGrid(R_VALUES, 0.1)).values[0])

    def test_custom_test_function(self, five_points):
        tf = CustomTestFunction("min", np.minimum, 2.0)
        rgrid = RGrid(R_VALUES, 0.1)
        kappa = kappa_inhom(five_points, tf, rgrid=rgrid)
        c = c_inhom(five_points, tf, rgrid=rgrid)
        np.testing.assert_allclose(kappa.values, c.values / 2.0, equal_nan=True)
        assert kappa.metadata["test_function"] == "min"


class TestTwoPoints:
    def test_denominator_closed_form(self, unit):
        X = MarkedPointPattern(unit, [[0.4, 0.5], [0.6, 0.5]], [1.0, 3.0])
        h = 0.1
        r = np.array([0.0, 0.05, 0.15, 0.2, 0.25, 0.35])
        curve = pairsum_denominator(X, rgrid=RGrid(r, h))
        # two ordered pairs, translation factor 1 / 0.8, intensity 2
        kern = np.where(np.abs(0.2 - r) <= h, 0.75 * (1.0 - ((0.2 - r) / h) ** 2) / h, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            expected = 2.0 * kern * 1.25 / 4.0 / (2.0 * math.pi * r)
        np.testing.assert_allclose(curve.values[1:], expected[1:], rtol=1e-12)
        assert np.isnan(curve.values[0])

    def test_empty_neighbourhood_is_zero(self, unit):
        X = MarkedPointPattern(unit, [[0.4, 0.5], [0.6, 0.5]], [1.0, 3.0])
        rgrid = RGrid([0.0, 0.05, 0.5, 0.6], 0.05)
        den = pairsum_denominator(X, rgrid=rgrid).values
        num = pairsum_numerator(X, "mm", rgrid=rgrid).values
        assert den[1] == 0.0 and num[1] == 0.0
        assert den[2] == 0.0 and den[3] == 0.0

    def test_ratio_undefined_without_pairs(self, unit):
        X = MarkedPointPattern(unit, [[0.4, 0.5], [0.6, 0.5]], [1.0, 3.0])
        curve = c_inhom(X, "mm", rgrid=RGrid([0.0, 0.05, 0.2, 0.5], 0.05))
        assert curve.missing.tolist() == [True, True, False, True]
        assert curve.values[2] == pytest.approx(3.0)

    def test_all_missing(self, unit):
        X = MarkedPointPattern(unit, [[0.1, 0.1], [0.9, 0.9]], [1.0, 3.0])
        with pytest.raises(AllMissingError):
            kappa_inhom(X, "mm", rgrid=RGrid([0.0, 0.1, 0.2], 0.05))

    def test_single_point(self, unit):
        X = MarkedPointPattern(unit, [[0.5, 0.5]], [1.0])
        with pytest.raises(InsufficientPointsError):
            c_inhom(X, "mm", rgrid=RGrid(R_VALUES, 0.1))
        with pytest.raises(InsufficientPointsError):
            kappa_inhom(X, "mm", rgrid=RGrid(R_VALUES, 0.1))


class TestKRatio:
    def test_constant_beyond_largest_distance(self, make_pattern):
        X = make_pattern(9, 15)
        r = np.linspace(0.0, 3.0, 31)
        values = k_ratio_inhom(X, "mm", rgrid=RGrid(r, 0.05)).values
        far = r >= math.sqrt(2.0)
        assert np.all(values[far] == values[far][0])

    def test_zero_distance_missing_without_coincident_points(self, five_points):
        values = k_ratio_inhom(five_points, "mm", rgrid=RGrid(R_VALUES, 0.05)).values
        assert np.isnan(values[0])


class TestPairTable:
    def test_both_orders_sorted(self, five_points):
        pairs = PairTable(five_points)
        assert len(pairs) == 20
        assert np.all(np.diff(pairs.distances) >= 0)
        assert set(zip(pairs.i.tolist(), pairs.j.tolist())) == {
            (a, b) for a in range(5) for b in range(5) if a != b
        }

    def test_cutoff_matches_full_table(self, make_pattern):
        X = make_pattern(10, 60)
        lam = KnownIntensity(linear_intensity).estimate(X)
        rgrid = RGrid(R_VALUES, 0.04)
        full = PairTable(X, lam, "ripley")
        cut = PairTable(X, lam, "ripley", cutoff=rgrid.rmax + rgrid.bandwidth + 0.01)
        assert len(cut) < len(full)
        for tf in ("mm", "vario"):
            np.testing.assert_allclose(
                c_inhom(X, tf, rgrid=rgrid, pairs=cut).values,
                c_inhom(X, tf, rgrid=rgrid, pairs=full).values,
                rtol=1e-14, equal_nan=True,
            )

    def test_cutoff_too_short(self, make_pattern):
        X = make_pattern(11, 20)
        pairs = PairTable(X, cutoff=0.1)
        with pytest.raises(EstimationError):
            c_inhom(X, "mm", rgrid=RGrid(R_VALUES, 0.04), pairs=pairs)

    def test_unknown_edge(self, five_points):
        with pytest.raises(EstimationError):
            PairTable(five_points, edge="border")

    def test_intensity_length_checked(self, five_points, make_pattern):
        other = constant_intensity(make_pattern(0, 7))
        with pytest.raises(EstimationError):
            PairTable(five_points, other)


class TestEstimateCurves:
    def test_keys_and_metadata(self, make_pattern):
        X = make_pattern(12, 30)
        lam = KnownIntensity(linear_intensity).estimate(X)
        curves = estimate_curves(X, "vario", lam, RGrid(R_VALUES, 0.08), "ripley")
        assert set(curves) == {"c_unnorm", "gamma", "K_ratio", "pcf"}
        gamma = curves["gamma"]
        assert gamma.metadata["edge"] == "ripley"
        assert gamma.metadata["intensity"]["kind"] == "known"
        assert gamma.metadata["normalizer"] == pytest.approx(np.var(X.marks, ddof=1))
        frame = gamma.to_frame()
        assert list(frame.columns) == ["r", "value", "kind", "flavor", "missing"]
        assert frame["missing"].iloc[0]


@pytest.mark.slow
class TestStatisticalBehaviour:
    def test_poisson_pcf_near_one(self, unit):
        truth = KnownIntensity(lambda x, y: np.full_like(x, 100.0))
        r = np.linspace(0.0, 0.25, 26)
        curves = []
        for i in range(100):
            X = simulate_inhomogeneous_poisson(ConstantExpression(100.0), unit, 21, i)
            curves.append(pcf_inhom(X, truth.estimate(X), RGrid(r, 0.015)).values)
        mean = np.nanmean(np.array(curves), axis=0)
        assert np.all(np.abs(mean[r >= 0.05] - 1.0) < 0.06)

    def test_iid_marks_kappa_near_one(self):
        spec = scenario_preset("assoc-poisson").with_mark_rule("iid-uniform")
        truth = KnownIntensity(spec.expected_intensity())
        r = np.linspace(0.0, 0.25, 26)
        curves = []
        for i in range(50):
            X = spec.simulate(31, i)
            curves.append(kappa_inhom(X, "mm", truth.estimate(X), RGrid(r, 0.05)).values)
        mean = np.nanmean(np.array(curves), axis=0)
        assert np.all(np.abs(mean[r >= 0.05] - 1.0) < 0.05)
