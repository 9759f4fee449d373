import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustsurv import CensoredSample, km_integral, kmpl_fit, subdist_empiricals


def sample_of(pairs):
    return CensoredSample.from_pairs(pairs)


class TestKmplFit:
    def test_no_censoring_reduces_to_ecdf(self):
        fit = kmpl_fit(sample_of([(1, 1), (2, 1), (3, 1)]))
        np.testing.assert_allclose(fit.jumps, [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(fit.cdf_values, [1 / 3, 2 / 3, 1.0])
        assert fit.residual_mass == 0.0

    def test_hand_product_limit(self, small_sample):
        fit = kmpl_fit(small_sample)
        np.testing.assert_allclose(fit.support, [1, 3])
        np.testing.assert_allclose(fit.jumps, [1 / 3, 2 / 3])
        np.testing.assert_allclose(fit.cdf([1.0, 2.0, 3.0]), [1 / 3, 1 / 3, 1.0])

    def test_defective_tail_reassigned(self):
        fit = kmpl_fit(sample_of([(1, 1), (2, 1), (3, 0)]))
        np.testing.assert_allclose(fit.jumps, [1 / 3, 1 / 3])
        assert fit.residual_mass == pytest.approx(1 / 3, abs=1e-12)
        assert fit.tail_point == 3.0
        idx = np.searchsorted(fit.weight_points, 3.0)
        assert fit.weight_masses[idx] == pytest.approx(1 / 3, abs=1e-12)
        assert fit.weight_masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_total_mass_one_when_last_is_event(self):
        fit = kmpl_fit(sample_of([(1, 0), (2, 0), (5, 1)]))
        assert fit.total_mass == pytest.approx(1.0, abs=1e-12)

    def test_all_censored(self):
        fit = kmpl_fit(sample_of([(1, 0), (2, 0)]))
        assert fit.support.size == 0
        np.testing.assert_allclose(fit.weight_points, [2.0])
        np.testing.assert_allclose(fit.weight_masses, [1.0])

    def test_tied_event_and_censoring_at_max(self):
        fit = kmpl_fit(sample_of([(1, 1), (5, 1), (5, 0)]))
        # event at 5 consumes 1/2 of the remaining 2/3; censored leftover 1/3
        assert fit.residual_mass == pytest.approx(1 / 3, abs=1e-12)
        np.testing.assert_allclose(fit.weight_points, [1.0, 5.0])
        np.testing.assert_allclose(fit.weight_masses, [1 / 3, 2 / 3])

    @given(
        st.lists(
            st.tuples(st.integers(1, 8), st.integers(0, 1)), min_size=1, max_size=30
        )
    )
    def test_ecdf_reduction_and_jump_locations(self, pairs):
        pairs = [(float(z), d) for z, d in pairs]
        sample = sample_of(pairs)
        fit = kmpl_fit(sample)
        if sample.n_events == sample.n:
            query = np.unique(sample.z)
            ecdf = np.searchsorted(sample.z, query, side="right") / sample.n
            np.testing.assert_allclose(fit.cdf(query), ecdf, atol=1e-12)
        event_times = set(sample.z[sample.delta == 1])
        for point, mass in zip(fit.weight_points, fit.weight_masses):
            if mass > 0:
                assert point in event_times or point == fit.tail_point
        assert fit.weight_masses.sum() == pytest.approx(1.0, abs=1e-9)

    def test_write_csv_roundtrip(self, small_sample, tmp_path):
        fit = kmpl_fit(small_sample)
        out = tmp_path / "km.csv"
        fit.write_csv(out)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        np.testing.assert_allclose(
            [float(r["cdf"]) for r in rows], fit.cdf_values, rtol=0, atol=0
        )
        np.testing.assert_allclose(
            [float(r["jump"]) for r in rows], fit.jumps, rtol=0, atol=0
        )


class TestKmIntegral:
    def test_normalizes(self, small_sample):
        assert km_integral(kmpl_fit(small_sample), lambda x: np.ones_like(x)) == pytest.approx(1.0)

    def test_identity_on_uncensored_is_mean(self):
        z = np.array([0.5, 1.5, 9.0, 2.0])
        fit = kmpl_fit(CensoredSample(z, np.ones(4, dtype=np.int8)))
        assert km_integral(fit, lambda x: x) == pytest.approx(z.mean())

    def test_hand_value(self, small_sample):
        assert km_integral(kmpl_fit(small_sample), lambda x: x) == pytest.approx(7 / 3)

    def test_linear_in_phi(self, small_sample):
        fit = kmpl_fit(small_sample)
        a = km_integral(fit, lambda x: x)
        b = km_integral(fit, lambda x: x**2)
        combo = km_integral(fit, lambda x: 2.0 * x + 3.0 * x**2)
        assert combo == pytest.approx(2 * a + 3 * b, rel=1e-12)

    def test_nonfinite_phi_raises(self, small_sample):
        with pytest.raises(ValueError, match="non-finite"), np.errstate(divide="ignore"):
            km_integral(kmpl_fit(small_sample), lambda x: np.log(x - 1.0))


class TestSubdist:
    def test_counting_example(self):
        emp = subdist_empiricals(sample_of([(1, 1), (2, 0)]))
        assert emp.g_z1(1.5) == 0.5
        assert emp.g_z0(1.5) == 0.0
        assert emp.g_z(2.0) == 1.0

    def test_no_censorings(self):
        emp = subdist_empiricals(sample_of([(1, 1), (2, 1)]))
        assert np.all(emp.g_z0(np.linspace(0, 3, 50)) == 0.0)

    def test_additivity_exact(self):
        rng = np.random.default_rng(0)
        z = rng.exponential(1.0, 200)
        delta = (rng.random(200) < 0.7).astype(np.int8)
        emp = subdist_empiricals(CensoredSample(z, delta))
        query = rng.uniform(0, 5, 1000)
        np.testing.assert_array_equal(
            emp.g_z(query), emp.g_z0(query) + emp.g_z1(query)
        )

    def test_right_continuous_steps(self):
        emp = subdist_empiricals(sample_of([(1, 1), (1, 0), (2, 1)]))
        assert emp.g_z(1.0 - 1e-12) == 0.0
        assert emp.g_z(1.0) == pytest.approx(2 / 3)
        assert emp.g_z(5.0) == 1.0
