import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igeo.errors import ArgumentError, ChartError, DomainError
from igeo.manifold import (
    BlockMetric,
    Chart,
    DensityMode,
    Macrostate,
    ModelParams,
    inverse_metric,
    inverse_metric_block,
    line_element,
    metric_block,
    metric_tensor,
    volume_density,
)

r_open = st.floats(0.001, 0.999)
sigmas = st.floats(1e-3, 1e3)


def state(mu, sigma):
    return Macrostate.from_blocks(Chart.ORIGINAL, np.atleast_1d(mu), np.atleast_1d(sigma))


def params(r):
    r = np.atleast_1d(r)
    return ModelParams(r=r, lam=np.ones(r.size), xi=np.ones(r.size))


class TestModelParams:
    def test_valid(self):
        p = ModelParams(r=[0.2, 0.4], lam=[1, 2], xi=[3, 4])
        assert p.l == 2
        assert p.block(1) == (0.4, 2.0, 4.0)

    def test_uniform(self):
        p = ModelParams.uniform(3, 0.5, 0.25, 2.0)
        assert p.r == (0.5,) * 3 and p.lam == (0.25,) * 3

    @pytest.mark.parametrize("r", [0.0, 1.0, 1.5, -0.2])
    def test_r_outside_open_interval(self, r):
        with pytest.raises(DomainError, match=r"r\[0\]"):
            ModelParams(r=[r], lam=[1], xi=[1])

    @pytest.mark.parametrize("field", ["lam", "xi"])
    def test_constants_must_be_positive(self, field):
        kw = dict(r=[0.5], lam=[1.0], xi=[1.0])
        kw[field] = [0.0]
        with pytest.raises(DomainError):
            ModelParams(**kw)

    def test_length_mismatch(self):
        with pytest.raises(ArgumentError):
            ModelParams(r=[0.5, 0.5], lam=[1.0], xi=[1.0, 1.0])

    def test_declared_l_must_match(self):
        with pytest.raises(ArgumentError):
            ModelParams(r=[0.5], lam=[1.0], xi=[1.0], l=2)

    def test_immutable(self):
        p = ModelParams(r=[0.5], lam=[1.0], xi=[1.0])
        with pytest.raises(AttributeError):
            p.r = (0.1,)


class TestMacrostate:
    def test_interleaved_layout(self):
        th = Macrostate.from_blocks(Chart.ORIGINAL, [1, 2], [3, 4])
        assert th.coords.tolist() == [1, 3, 2, 4]
        assert th.mu.tolist() == [1, 2] and th.sigma.tolist() == [3, 4]
        assert th.l == 2

    def test_sigma_positive_in_original_chart(self):
        with pytest.raises(DomainError, match=r"sigma\[1\]"):
            Macrostate.from_blocks(Chart.ORIGINAL, [0, 0], [1, 0])

    def test_other_charts_allow_any_sign(self):
        th = Macrostate(Chart.DIAGONAL, [0.0, -1.0])
        assert th.sigma[0] == -1.0

    def test_odd_length_rejected(self):
        with pytest.raises(ArgumentError):
            Macrostate(Chart.DIAGONAL, [0.0, 1.0, 2.0])

    def test_coords_read_only(self):
        th = state(0.0, 1.0)
        with pytest.raises(ValueError):
            th.coords[0] = 5.0

    def test_arithmetic_same_chart(self):
        a = Macrostate(Chart.DIAGONAL, [1.0, 2.0])
        b = Macrostate(Chart.DIAGONAL, [0.5, 0.5])
        assert (a + b).coords.tolist() == [1.5, 2.5]
        assert (a - b).coords.tolist() == [0.5, 1.5]
        assert (a * 2).coords.tolist() == [2.0, 4.0]

    def test_cross_chart_arithmetic_rejected(self):
        a = Macrostate(Chart.DIAGONAL, [1.0, 2.0])
        b = Macrostate(Chart.CANONICAL, [1.0, 2.0])
        with pytest.raises(ChartError):
            a + b


class TestMetric:
    def test_uncorrelated_unit_sigma(self):
        g = metric_tensor(state(0, 1), params(1e-300)).blocks[0]
        np.testing.assert_allclose(g, [[1, 0], [0, 2]], atol=1e-299)
        np.testing.assert_array_equal(metric_block(0.0, 1.0), [[1, 0], [0, 2]])

    def test_example_sigma_two(self):
        g = metric_tensor(state(3, 2), params(0.5)).blocks[0]
        np.testing.assert_allclose(g, 0.25 * np.array([[1, 0.5], [0.5, 2]]), rtol=0, atol=1e-16)

    def test_two_blocks(self):
        g = metric_tensor(state([0, 0], [1, 1]), params([0.1, 0.9]))
        np.testing.assert_array_equal(g.blocks[0], [[1, 0.1], [0.1, 2]])
        np.testing.assert_array_equal(g.blocks[1], [[1, 0.9], [0.9, 2]])
        dense = g.dense()
        assert dense.shape == (4, 4)
        assert dense[0, 2] == 0 and dense[1, 3] == 0

    def test_nonpositive_sigma_names_index(self):
        with pytest.raises(DomainError, match=r"sigma = "):
            metric_block(0.5, 0.0)

    def test_param_state_mismatch(self):
        with pytest.raises(ArgumentError):
            metric_tensor(state([0, 0], [1, 1]), params(0.5))

    def test_wrong_chart(self):
        with pytest.raises(ChartError):
            metric_tensor(Macrostate(Chart.DIAGONAL, [0.0, 1.0]), params(0.5))

    def test_inverse_examples(self):
        np.testing.assert_allclose(inverse_metric_block(0.0, 1.0), [[1, 0], [0, 0.5]])
        gi = inverse_metric(state(0, 2), params(0.5)).blocks[0]
        np.testing.assert_allclose(gi, 4 / 1.75 * np.array([[2, -0.5], [-0.5, 1]]), rtol=1e-15)

    def test_determinant(self):
        g = metric_tensor(state([0, 1], [2, 3]), params([0.5, 0.3]))
        expected = (1.75 / 2**4) * ((2 - 0.09) / 3**4)
        assert math.isclose(g.determinant(), expected, rel_tol=1e-14)

    def test_block_metric_product(self):
        th, p = state([0, 1], [2, 3]), params([0.5, 0.3])
        prod = metric_tensor(th, p) @ inverse_metric(th, p)
        np.testing.assert_allclose(prod.blocks, np.broadcast_to(np.eye(2), (2, 2, 2)), atol=1e-14)

    def test_block_metric_symmetry_flag(self):
        assert metric_tensor(state([0, 1], [2, 3]), params([0.5, 0.3])).symmetric
        assert not BlockMetric(np.array([[[1.0, 2.0], [0.0, 1.0]]])).symmetric

    def test_block_metric_shape_checked(self):
        with pytest.raises(ArgumentError):
            BlockMetric(np.eye(2))

    def test_extreme_sigma_warns(self):
        with pytest.warns(RuntimeWarning):
            metric_tensor(state(0, 1e-80), params(0.5))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            metric_tensor(state(0, 1e-10), params(0.5))

    @settings(max_examples=200, deadline=None)
    @given(r=r_open, s=sigmas, mu=st.floats(-1e3, 1e3))
    def test_symmetric_positive_definite(self, r, s, mu):
        g = metric_tensor(state(mu, s), params(r)).blocks[0]
        assert g[0, 1] == g[1, 0]
        assert np.all(np.linalg.eigvalsh(g) > 0)

    @settings(max_examples=200, deadline=None)
    @given(r=r_open, s=st.floats(1e-2, 1e2), c=st.floats(1e-2, 1e2))
    def test_scaling_law(self, r, s, c):
        a = metric_tensor(state(0, c * s), params(r)).blocks[0]
        b = metric_tensor(state(0, s), params(r)).blocks[0] / c**2
        np.testing.assert_allclose(a, b, rtol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(r=r_open, s=sigmas, mu=st.floats(-1e6, 1e6))
    def test_mu_independence(self, r, s, mu):
        a = metric_tensor(state(mu, s), params(r)).blocks
        b = metric_tensor(state(0.0, s), params(r)).blocks
        assert np.array_equal(a, b)

    def test_positive_definite_random_sample(self):
        rng = np.random.default_rng(7)
        r = rng.uniform(1e-6, 1 - 1e-6, 10_000)
        s = 10 ** rng.uniform(-3, 3, 10_000)
        g = np.stack([metric_block(ri, si) for ri, si in zip(r, s)])
        gi = np.stack([inverse_metric_block(ri, si) for ri, si in zip(r, s)])
        assert np.all(np.linalg.eigvalsh(g) > 0)
        assert np.max(np.abs(g @ gi - np.eye(2))) < 1e-12


class TestLineElement:
    @pytest.mark.parametrize("r,d,expected", [(1e-300, [1, 1], 3.0), (0.5, [1, 1], 4.0), (0.5, [0, 0], 0.0)])
    def test_examples(self, r, d, expected):
        assert math.isclose(line_element(state(0, 1), d, params(r)), expected, abs_tol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ArgumentError):
            line_element(state(0, 1), [1, 1, 1], params(0.5))

    @settings(max_examples=100, deadline=None)
    @given(r=r_open, s=st.floats(0.1, 10), d=st.lists(st.floats(-10, 10), min_size=2, max_size=2))
    def test_matches_quadratic_form(self, r, s, d):
        p, th = params(r), state(0.0, s)
        g = metric_tensor(th, p).dense()
        assert math.isclose(line_element(th, d, p), np.dot(d, g @ d), rel_tol=1e-12, abs_tol=1e-12)


class TestVolumeDensity:
    def test_reduced_small_r(self):
        assert math.isclose(volume_density(state(0, 1), params(1e-12)), math.sqrt(2), rel_tol=1e-12)

    def test_reduced(self):
        assert math.isclose(volume_density(state(0, 2), params(0.5)), math.sqrt(1.75) / 2, rel_tol=1e-15)

    def test_determinant(self):
        v = volume_density(state(0, 2), params(0.5), DensityMode.DETERMINANT)
        assert math.isclose(v, math.sqrt(1.75) / 4, rel_tol=1e-15)

    def test_determinant_matches_metric(self):
        th, p = state([1, 2], [0.5, 3]), params([0.3, 0.8])
        v = volume_density(th, p, DensityMode.DETERMINANT)
        assert math.isclose(v, math.sqrt(metric_tensor(th, p).determinant()), rel_tol=1e-13)
