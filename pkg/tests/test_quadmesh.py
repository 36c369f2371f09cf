import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from vadg.errors import ConfigError
from vadg.quadmesh import MAX_ORDER, build_gauss_rule, build_mesh, lagrange_tables


class TestGaussRule:
    @pytest.mark.parametrize("q", range(1, MAX_ORDER + 1))
    def test_matches_numpy_leggauss(self, q):
        rule = build_gauss_rule(q)
        x, w = leggauss(q)
        np.testing.assert_allclose(rule.nodes, x, atol=1e-14)
        np.testing.assert_allclose(rule.weights, w, atol=1e-14)

    @pytest.mark.parametrize("q", [1, 2, 3, 5, 8])
    def test_exact_up_to_degree_2q_minus_1(self, q):
        rule = build_gauss_rule(q)
        for d in range(2 * q):
            exact = 0.0 if d % 2 else 2.0 / (d + 1)
            np.testing.assert_allclose(rule.integrate(lambda x: x ** d), exact, atol=1e-14)

    def test_symmetric(self):
        rule = build_gauss_rule(7)
        np.testing.assert_array_equal(rule.nodes, -rule.nodes[::-1])
        np.testing.assert_array_equal(rule.weights, rule.weights[::-1])
        assert rule.nodes[3] == 0.0

    @pytest.mark.parametrize("q", [0, -1, MAX_ORDER + 1, 2.5])
    def test_rejects_bad_order(self, q):
        with pytest.raises(ConfigError):
            build_gauss_rule(q)


class TestLagrangeBasis:
    @pytest.mark.parametrize("q", [1, 2, 3, 4, 6])
    def test_differentiates_polynomials_exactly(self, q):
        basis = lagrange_tables(build_gauss_rule(q))
        x = basis.rule.nodes
        for d in range(q):
            np.testing.assert_allclose(basis.D @ x ** d, d * x ** max(d - 1, 0) if d else 0 * x,
                                       atol=1e-12)

    def test_boundary_values_interpolate(self):
        basis = lagrange_tables(build_gauss_rule(4))
        x = basis.rule.nodes
        u = 1 + 2 * x - x ** 3
        np.testing.assert_allclose(basis.left @ u, 1 - 2 + 1, atol=1e-14)
        np.testing.assert_allclose(basis.right @ u, 2.0, atol=1e-14)

    def test_partition_of_unity(self):
        basis = lagrange_tables(build_gauss_rule(5))
        xi = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(basis.evaluate(xi).sum(axis=1), 1.0, atol=1e-13)
        np.testing.assert_allclose(basis.evaluate(basis.rule.nodes), np.eye(5), atol=1e-14)

    def test_stiffness_integration_by_parts(self):
        # G + G^T = eR eR^T - eL eL^T since the quadrature is exact for phi_i' phi_j
        basis = lagrange_tables(build_gauss_rule(3))
        G = basis.stiffness
        np.testing.assert_allclose(G + G.T, np.outer(basis.right, basis.right)
                                   - np.outer(basis.left, basis.left), atol=1e-13)

    def test_degree(self):
        assert lagrange_tables(build_gauss_rule(3)).degree == 2


class TestMesh:
    def test_uniform_edges(self):
        m = build_mesh(-2.0, 3.0, 5, False)
        np.testing.assert_allclose(m.edges, np.arange(-2.0, 3.5, 1.0))
        np.testing.assert_allclose(m.widths, 1.0)
        np.testing.assert_allclose(m.centers, np.arange(-1.5, 3.0, 1.0))
        assert m.length == 5.0
        assert not m.periodic

    def test_nodes_and_weights(self):
        rule = build_gauss_rule(3)
        m = build_mesh(0.0, 4.0, 4, True)
        x = m.nodes(rule)
        w = m.quad_weights(rule)
        assert x.shape == w.shape == (12,)
        assert np.all(np.diff(x) > 0)
        np.testing.assert_allclose(w.sum(), 4.0)
        np.testing.assert_allclose(np.dot(w, x ** 5), 4.0 ** 6 / 6, rtol=1e-13)

    @pytest.mark.parametrize("args", [(1.0, 1.0, 3), (0.0, 1.0, 0), (0.0, np.inf, 2), (0.0, 1.0, 1.5)])
    def test_rejects_bad_input(self, args):
        with pytest.raises(ConfigError):
            build_mesh(*args, False)
