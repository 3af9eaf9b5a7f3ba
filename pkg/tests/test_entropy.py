import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from interdep.depmap import block_local_map, identity_map, linear_map, rewire_map
from interdep.entropy import ApEnParams, apen, apen_of_map, apen_window
from interdep.errors import InsufficientDataError, InvalidParameterError


def apen_reference(u, m=2, factor=0.2):
    """Direct O(N^2) approximate entropy with self-matches and strict tolerance."""
    u = np.asarray(u, dtype=float)
    n = u.size
    tol = factor * u.std()
    if tol == 0:
        return 0.0

    def phi(k):
        w = np.lib.stride_tricks.sliding_window_view(u, k)
        d = np.abs(w[:, None, :] - w[None, :, :]).max(axis=2)
        c = (d < tol).sum(axis=1) / (n - k + 1)
        return np.log(c).mean()

    return phi(m) - phi(m + 1)


class TestApEn:
    def test_constant_series_is_zero(self):
        assert apen(np.full(100, 5.0)) == 0.0

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            apen([1.0, 2.0, 3.0])

    def test_bad_params(self):
        with pytest.raises(InvalidParameterError):
            ApEnParams(m=0)
        with pytest.raises(InvalidParameterError):
            ApEnParams(tolerance_factor=0.0)

    def test_identity_sequence_is_regular(self):
        assert apen(np.arange(10_000)) < 0.05

    def test_random_sequence_is_irregular(self):
        assert apen(np.random.default_rng(0).permutation(10_000)) > 2.0

    def test_strict_tolerance(self):
        # alternating 0/1 has std 0.5; factor 2 puts tol exactly at the gap
        u = np.tile([0.0, 1.0], 20)
        assert apen(u, ApEnParams(1, 2.0)) == pytest.approx(apen_reference(u, 1, 2.0), abs=1e-12)
        assert apen(u, ApEnParams(1, 2.0)) != apen(u, ApEnParams(1, 2.0001))

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_matches_reference_on_integer_series(self, m, rng):
        for n in (10, 57, 400):
            u = rng.integers(0, 5, n)
            assert apen(u, ApEnParams(m)) == pytest.approx(apen_reference(u, m), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.integers(4, 300),
                  elements=st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False)))
    def test_matches_reference(self, u):
        assert apen(u) == pytest.approx(apen_reference(u), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.int64, st.integers(4, 200), elements=st.integers(-50, 50)),
           st.integers(-10 ** 6, 10 ** 6))
    def test_shift_invariant(self, u, c):
        assert apen(u) == apen(u + c)


class TestApEnOfMap:
    def test_identity(self):
        assert abs(apen_of_map(identity_map(10_000))) < 0.05

    @pytest.mark.parametrize("r", [8, 25, 50])
    def test_linear_maps_are_regular(self, r):
        assert apen_of_map(linear_map(100, r)) < 0.05

    def test_block_local_r25_at_L100(self):
        vals = [apen_of_map(block_local_map(100, 25, s)) for s in range(5)]
        assert np.mean(vals) == pytest.approx(0.923, abs=0.05)

    def test_random_map_is_largest(self):
        vals = [apen_of_map(rewire_map(identity_map(10_000), q, 1)) for q in (0.0, 0.3, 1.0)]
        assert vals[0] < vals[1] < vals[2]

    def test_long_map_uses_window(self):
        m = rewire_map(identity_map(40_000), 1.0, 3)
        w = apen_window(40_000, seed=5)
        assert w.stop - w.start == 10_000
        assert apen_of_map(m, seed=5) == apen(m.pi[w])
        assert apen_of_map(m, offset=0) == apen(m.pi[:10_000])

    def test_window_offset_validated(self):
        with pytest.raises(InvalidParameterError):
            apen_window(20_000, offset=15_000)
