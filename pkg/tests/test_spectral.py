import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparfilter.covariance import DataMatrix, SymMatrix, sample_covariance
from sparfilter.errors import InvalidBand, InvalidInput, LengthMismatch
from sparfilter.spectral import (
    DistanceSpec,
    Spectrum,
    mp_band,
    mp_support,
    spectral_distance,
    spectrum,
)

EUCLID = DistanceSpec()
L1 = DistanceSpec("minkowski", 1.0)
LINF = DistanceSpec("linf")


class TestSpectrum:
    def test_identity(self):
        np.testing.assert_array_equal(spectrum(SymMatrix(np.eye(5))).values, np.ones(5))

    @pytest.mark.parametrize("rho", [0.3, -0.7, 0.0, 0.99])
    def test_two_by_two(self, rho):
        m = SymMatrix(np.array([[1.0, rho], [rho, 1.0]]), "correlation")
        np.testing.assert_allclose(spectrum(m).values, [1 + abs(rho), 1 - abs(rho)], atol=1e-15)

    def test_diagonal_sorted(self):
        np.testing.assert_array_equal(spectrum(SymMatrix(np.diag([3.0, 1.0, 2.0]))).values, [3, 2, 1])

    def test_correlation_trace(self, rng):
        x = rng.standard_normal((30, 8))
        c = np.corrcoef(x.T)
        np.fill_diagonal(c, 1.0)
        s = spectrum(SymMatrix((c + c.T) / 2, "correlation"))
        assert s.values.sum() == pytest.approx(8, abs=1e-8)
        assert s.source_kind == "correlation"

    def test_rotation_invariance(self, rng):
        m = sample_covariance(DataMatrix(rng.standard_normal((20, 6)))).entries
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        r = q @ m @ q.T
        a = spectrum(SymMatrix(m))
        b = spectrum(SymMatrix((r + r.T) / 2))
        np.testing.assert_allclose(a.values, b.values, atol=1e-8)
        assert spectral_distance(a, b) < 1e-8

    def test_rejects_unsorted(self):
        with pytest.raises(InvalidInput):
            Spectrum(np.array([1.0, 2.0]))


class TestDistance:
    @pytest.mark.parametrize("spec", [EUCLID, L1, LINF, DistanceSpec("minkowski", 3.5)])
    def test_identical(self, spec):
        a = np.array([3.0, 2.0, 0.5])
        assert spectral_distance(a, a, spec) == 0.0

    def test_single_coordinate(self):
        assert spectral_distance([2.0, 1.0], [1.0, 1.0], EUCLID) == 1.0

    def test_hand_values(self):
        assert spectral_distance([3.0, 1.0], [1.0, 0.0], L1) == 3.0
        assert spectral_distance([3.0, 1.0], [1.0, 0.0], LINF) == 2.0
        assert spectral_distance([3.0, 1.0], [1.0, 0.0], EUCLID) == pytest.approx(math.sqrt(5))

    def test_band(self):
        a, b = [5.0, 3.0, 1.0], [4.0, 1.0, 1.0]
        assert spectral_distance(a, b, DistanceSpec(band=(1, 1))) == 1.0
        assert spectral_distance(a, b, DistanceSpec(band=(2, 3))) == 2.0

    def test_large_kappa_does_not_overflow(self):
        d = spectral_distance([1e200, 0.0], [0.0, 0.0], DistanceSpec("minkowski", 50.0))
        assert d == pytest.approx(1e200)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spectral_distance([1.0], [1.0, 2.0])

    def test_band_out_of_range(self):
        with pytest.raises(InvalidBand):
            spectral_distance([1.0, 0.0], [1.0, 0.0], DistanceSpec(band=(1, 3)))

    def test_invalid_band_construction(self):
        with pytest.raises(InvalidBand):
            DistanceSpec(band=(3, 2))
        with pytest.raises(InvalidBand):
            DistanceSpec(band=(0, 2))

    def test_kappa_below_one(self):
        with pytest.raises(InvalidInput):
            DistanceSpec("minkowski", 0.5)



@settings(max_examples=200, deadline=None)
@given(st.data(), st.sampled_from([L1, EUCLID, LINF]))
def test_metric_axioms(data, spec):
    n = data.draw(st.integers(1, 8))
    vec = st.lists(st.floats(-100, 100), min_size=n, max_size=n).map(lambda v: np.sort(v)[::-1])
    a, b, c = data.draw(vec), data.draw(vec), data.draw(vec)
    dab = spectral_distance(a, b, spec)
    assert dab >= 0
    assert dab == pytest.approx(spectral_distance(b, a, spec))
    assert spectral_distance(a, c, spec) <= dab + spectral_distance(b, c, spec) + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.data(), st.floats(1.0, 6.0))
def test_band_never_exceeds_full(data, kappa):
    n = data.draw(st.integers(1, 8))
    vec = st.lists(st.floats(-50, 50), min_size=n, max_size=n).map(lambda v: np.sort(v)[::-1])
    a, b = data.draw(vec), data.draw(vec)
    lo = data.draw(st.integers(1, n))
    hi = data.draw(st.integers(lo, n))
    full = spectral_distance(a, b, DistanceSpec("minkowski", kappa))
    part = spectral_distance(a, b, DistanceSpec("minkowski", kappa, (lo, hi)))
    assert part <= full * (1 + 1e-12) + 1e-12


class TestMarchenkoPastur:
    def test_half(self):
        s = mp_support(0.5, 1.0)
        # closed form, 30-digit reference from mpmath
        assert s.upper == pytest.approx(2.91421356237309504880168872421, rel=1e-14)
        assert s.lower == pytest.approx(0.0857864376269049511983112757903, rel=1e-13)

    def test_classical_limit(self):
        s = mp_support(1e-12, 1.0)
        assert s.lower == pytest.approx(1.0, abs=1e-5)
        assert s.upper == pytest.approx(1.0, abs=1e-5)

    def test_boundary(self):
        s = mp_support(1.0, 1.0)
        assert (s.lower, s.upper) == (0.0, 4.0)

    def test_above_one_lower_is_zero(self):
        assert mp_support(2.0, 3.0).lower == 0.0

    def test_scale(self):
        assert mp_support(0.25, 2.0).upper == pytest.approx(2.0 * 1.5**2)

    def test_rejects_non_positive(self):
        with pytest.raises(InvalidInput):
            mp_support(0.0, 1.0)

    def test_bulk_inside_support(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((200, 100))
        lam = spectrum(sample_covariance(DataMatrix(x))).values
        s = mp_support(100 / 200, 1.0)
        inside = np.mean((lam >= s.lower - 0.1) & (lam <= s.upper + 0.1))
        assert inside >= 0.95

    def test_band_counts_deviating(self):
        target = Spectrum(np.array([6.0, 3.5, 0.3, 0.1, 0.1]))
        # mean eigenvalue 2, c = 5/50: upper edge = 2 (1 + sqrt(0.1))^2 ~ 3.465
        assert mp_band(target, 50) == (1, 2)

    def test_band_without_deviation_is_error(self):
        with pytest.raises(InvalidBand):
            mp_band(Spectrum(np.ones(4)), 100)
