import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igeo import diagonal as dg
from igeo.errors import DomainError, RangeError
from igeo.manifold import Chart, Macrostate, ModelParams, metric_block

r_open = st.floats(dg.R_MIN, 0.999999)


def params(r):
    r = np.atleast_1d(r)
    return ModelParams(r=r, lam=np.ones(r.size), xi=np.ones(r.size))


class TestEigen:
    def test_r_half(self):
        e = dg.block_eigen(0.5)
        assert e.delta == 2.0
        assert math.isclose(e.alpha_minus, (3 - math.sqrt(2)) / 2, rel_tol=1e-15)
        assert math.isclose(e.alpha_plus, (3 + math.sqrt(2)) / 2, rel_tol=1e-15)

    def test_uncorrelated_limit(self):
        am, ap = dg.eigenvalues(1e-9)
        assert math.isclose(am, 1.0, abs_tol=1e-15) and math.isclose(ap, 2.0, abs_tol=1e-15)

    def test_eigenvectors_unnormalized(self):
        e = dg.block_eigen(0.3)
        assert e.E[0, 0] == 1.0 and e.E[0, 1] == 1.0
        m = np.array([[1, 0.3], [0.3, 2]])
        np.testing.assert_allclose(m @ e.E[:, 0], e.alpha_minus * e.E[:, 0], rtol=1e-14)
        np.testing.assert_allclose(m @ e.E[:, 1], e.alpha_plus * e.E[:, 1], rtol=1e-14)

    @settings(max_examples=300, deadline=None)
    @given(r=r_open)
    def test_invariants(self, r):
        e = dg.block_eigen(r)
        assert 0 < e.alpha_minus < e.alpha_plus
        assert abs(e.alpha_minus + e.alpha_plus - 3) < 1e-12
        assert abs(e.alpha_minus * e.alpha_plus - (2 - r * r)) < 1e-12
        np.testing.assert_allclose(e.E @ e.E_inv, np.eye(2), atol=1e-12)
        assert dg.a0(r) < 0 < dg.a1(r)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(17)
        for r in rng.uniform(1e-4, 1.0, 1000):
            e = dg.block_eigen(r)
            assert np.max(np.abs(e.E @ e.D @ e.E_inv - [[1, r], [r, 2]])) < 1e-12

    @pytest.mark.parametrize("r", [0.0, 1e-8, 1.0, 1.2])
    def test_rejects_outside_range(self, r):
        with pytest.raises(DomainError):
            dg.block_eigen(r)

    @pytest.mark.parametrize("r,sigma", [(0.5, 1.0), (0.9, 3.0)])
    def test_reconstruct_metric(self, r, sigma):
        out = dg.reconstruct_metric(dg.block_eigen(r), sigma)
        np.testing.assert_allclose(out, metric_block(r, sigma), atol=1e-12)
        np.testing.assert_allclose(out, out.T, atol=1e-12)

    def test_reconstruct_rejects_sigma(self):
        with pytest.raises(DomainError):
            dg.reconstruct_metric(dg.block_eigen(0.5), 0.0)

    def test_min_ratio(self):
        m = dg.min_a1_over_a0()
        assert abs(m - 2.6) <= 0.05
        assert math.isclose(m, (1 + math.sqrt(5)) / (math.sqrt(5) - 1), rel_tol=1e-4)


class TestCharts:
    def test_zero_maps_to_boundary(self):
        with pytest.raises(RangeError):
            dg.original_from_diagonal(Macrostate(Chart.DIAGONAL, [0.0, 0.0]), params(0.5))

    def test_example_forward(self):
        out = dg.original_from_diagonal(Macrostate(Chart.DIAGONAL, [0.0, 1.0]), params(0.5))
        np.testing.assert_allclose(out.coords, [1.0, 1 + math.sqrt(2)], rtol=1e-15)

    def test_example_inverse(self):
        th = Macrostate(Chart.ORIGINAL, [1.0, 1 + math.sqrt(2)])
        np.testing.assert_allclose(dg.diagonal_from_original(th, params(0.5)).coords, [0, 1], atol=1e-15)

    def test_example_unit_vector(self):
        s = math.sqrt(2)
        expected = (0.5 / s) * np.array([(1 + s) - 1, -(1 - s) + 1])
        out = dg.diagonal_from_original(Macrostate(Chart.ORIGINAL, [1.0, 1.0]), params(0.5))
        np.testing.assert_allclose(out.coords, expected, rtol=1e-15)

    def test_canonical_scale(self):
        s = math.sqrt(2)
        assert math.isclose(dg.mu_scale(0.5), math.sqrt((6 - 2 * s) / (3 + s)), rel_tol=1e-15)
        assert math.isclose(dg.mu_scale(1e-9), 1.0, abs_tol=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(r=r_open, mu=st.floats(-1e3, 1e3), s=st.floats(-1e3, 1e3))
    def test_canonical_keeps_sigma_bits(self, r, mu, s):
        d = Macrostate(Chart.DIAGONAL, [mu, s])
        c = dg.canonical_from_diagonal(d, params(r))
        assert c.coords[1] == s

    @settings(max_examples=200, deadline=None)
    @given(r=st.floats(0.01, 0.99), mu=st.floats(-10, 10), s=st.floats(0.01, 10))
    def test_round_trips(self, r, mu, s):
        p = params(r)
        th = Macrostate(Chart.ORIGINAL, [mu, s])
        d = dg.diagonal_from_original(th, p)
        np.testing.assert_allclose(dg.original_from_diagonal(d, p).coords, th.coords, rtol=1e-12, atol=1e-12)
        back = dg.diagonal_from_canonical(dg.canonical_from_diagonal(d, p), p)
        np.testing.assert_allclose(back.coords, d.coords, rtol=1e-12, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(r=st.floats(0.01, 0.99), a=st.floats(-5, 5), b=st.floats(-5, 5))
    def test_linearity(self, r, a, b):
        p = params(r)
        x = Macrostate(Chart.ORIGINAL, [0.3, 1.2])
        y = Macrostate(Chart.ORIGINAL, [-1.0, 0.7])
        lhs = dg.vector_to_chart(a * x.coords + b * y.coords, p, Chart.ORIGINAL, Chart.DIAGONAL)
        rhs = (a * dg.diagonal_from_original(x, p).coords + b * dg.diagonal_from_original(y, p).coords)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_vector_map_matches_point_map(self):
        p = params([0.3, 0.8])
        th = Macrostate.from_blocks(Chart.ORIGINAL, [1.0, -2.0], [0.5, 3.0])
        c = dg.canonical_from_diagonal(dg.diagonal_from_original(th, p), p)
        np.testing.assert_allclose(dg.vector_to_chart(th.coords, p, Chart.ORIGINAL, Chart.CANONICAL),
                                   c.coords, rtol=1e-14)
        np.testing.assert_allclose(dg.vector_to_chart(c.coords, p, Chart.CANONICAL, Chart.ORIGINAL),
                                   th.coords, rtol=1e-13)

    def test_diagonal_metric_blocks(self):
        p = params(0.5)
        th = Macrostate(Chart.ORIGINAL, [0.0, 2.0])
        d = dg.diagonal_from_original(th, p)
        am, ap = dg.eigenvalues(0.5)
        np.testing.assert_allclose(dg.diagonal_metric_blocks(d, p)[0], np.diag([am, ap]) / 4, rtol=1e-14)
