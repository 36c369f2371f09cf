import numpy as np
import pytest

import oracles
from conftest import random_state
from vadg.diagnostics import total_energy
from vadg.errors import ConfigError, SolverError
from vadg.field import ElectricField, NodalField, SpeciesGrid, State, particle_number, spatial_average
from vadg.implicit import (LinearSolveCache, SolverSettings, midpoint_solve, scheme2_step, scheme_a,
                           scheme_b_case1, scheme_b_case2)
from vadg.physics import Domain, NoiseSpectrum, PlasmaParams, cdiaw_ic
from vadg.quadmesh import build_gauss_rule, build_mesh, lagrange_tables


def _dense_midpoint(f, a, dt, edges, q, periodic):
    A = oracles.dense_advection(a, edges, q, periodic)
    n = A.shape[0]
    return np.linalg.solve(np.eye(n) - 0.5 * dt * A, (np.eye(n) + 0.5 * dt * A) @ f)


class TestMidpointSolve:
    @pytest.mark.parametrize("periodic", [True, False])
    @pytest.mark.parametrize("q", [1, 2, 3, 4])
    def test_matches_dense_solve(self, periodic, q):
        mesh = build_mesh(-1.0, 2.0, 5, periodic)
        basis = lagrange_tables(build_gauss_rule(q))
        speeds = np.array([-2.5, -0.3, 0.0, 0.4, 3.0])
        X = np.random.default_rng(q).standard_normal((speeds.size, 5 * q))
        Y = midpoint_solve(X, speeds, 0.7, mesh, basis, periodic)
        for r, a in enumerate(speeds):
            ref = _dense_midpoint(X[r], a, 0.7, mesh.edges, q, periodic)
            np.testing.assert_allclose(Y[r], ref, atol=1e-12)

    def test_large_step_periodic(self):
        # huge Courant numbers stress the periodic closure
        mesh = build_mesh(0.0, 1.0, 4, True)
        basis = lagrange_tables(build_gauss_rule(3))
        X = np.random.default_rng(0).standard_normal((2, 12))
        Y = midpoint_solve(X, np.array([50.0, -80.0]), 3.0, mesh, basis, True)
        for r, a in enumerate([50.0, -80.0]):
            np.testing.assert_allclose(Y[r], _dense_midpoint(X[r], a, 3.0, mesh.edges, 3, True), atol=1e-10)


class TestSchemeA:
    def test_matches_dense_per_velocity(self):
        s = random_state(0, nx=3, nve=2, nvi=2, k=2)
        out = scheme_a(s, 0.4, LinearSolveCache())
        for f, g in ((s.fe, out.fe), (s.fi, out.fi)):
            grid = f.grid
            for c, v in enumerate(grid.v):
                ref = _dense_midpoint(f.values[:, c], v, 0.4, grid.xmesh.edges, grid.q, True)
                np.testing.assert_allclose(g.values[:, c], ref, atol=1e-12)
        np.testing.assert_array_equal(out.E.values, s.E.values)
        assert out.t == s.t and out.step == s.step

    def test_cache_reuse(self):
        s = random_state(1)
        cache = LinearSolveCache(maxsize=2)
        scheme_a(s, 0.1, cache)
        scheme_a(s, 0.1, cache)
        assert cache.misses == 2 and cache.hits == 2
        scheme_a(s, 0.2, cache)
        assert cache.misses == 4
        assert len(cache._store) == 2

    def test_zero_dt_rejected(self):
        with pytest.raises(ConfigError):
            scheme_a(random_state(), 0.0)


class TestSchemeBCase1:
    @pytest.mark.parametrize("k", [0, 1, 2])
    @pytest.mark.parametrize("nv", [1, 2, 4])
    def test_matches_dense_newton(self, k, nv):
        s = random_state(10 * k + nv, nx=2, nve=nv, nvi=nv, k=k, vce=3.0, vci=1.0)
        dt = 0.3
        stats = {}
        out = scheme_b_case1(s, dt, stats=stats)
        ge, gi = s.fe.grid, s.fi.grid
        for r in range(ge.shape[0]):
            g_e, g_i, e1 = oracles.dense_velocity_newton(
                s.fe.values[r], s.fi.values[r], s.E.values[r], dt, ge.vmesh.edges, gi.vmesh.edges,
                k + 1, ge.wv, gi.wv, ge.v, gi.v, gi.mu)
            np.testing.assert_allclose(out.fe.values[r], g_e, atol=1e-9)
            np.testing.assert_allclose(out.fi.values[r], g_i, atol=1e-9)
            np.testing.assert_allclose(out.E.values[r], e1, atol=1e-9)
        assert stats["residual"] < 1e-12

    def test_iteration_cap(self):
        s = random_state(3)
        with pytest.raises(SolverError) as exc:
            scheme_b_case1(s, 0.5, SolverSettings(nl_tol=1e-16, max_newton=1))
        assert exc.value.exit_code == 3


def _case2_residual(s, out, dt):
    """Residual of the coupled Case 2 equations evaluated with dense matrices."""
    ge, gi = s.fe.grid, s.fi.grid
    wx, L = ge.wx, s.L

    def J(Fe, Fi):
        return Fi @ (gi.wv * gi.v) - Fe @ (ge.wv * ge.v)

    Jn, J1 = J(s.fe.values, s.fi.values), J(out.fe.values, out.fi.values)
    E1 = s.E.values - 0.5 * dt * (Jn + J1) + 0.5 * dt * (wx @ Jn + wx @ J1) / L
    res = [np.max(np.abs(E1 - out.E.values))]
    eb = 0.5 * (s.E.values + out.E.values)
    for f, g in ((s.fe, out.fe), (s.fi, out.fi)):
        grid = f.grid
        for r in range(grid.shape[0]):
            ref = _dense_midpoint(f.values[r], grid.mu * eb[r], dt, grid.vmesh.edges, grid.q, False)
            res.append(np.max(np.abs(ref - g.values[r])))
    return max(res)


class TestSchemeBCase2:
    def test_solves_coupled_system(self):
        s = random_state(4, nx=3, nve=3, nvi=3, k=2)
        E = s.E.values - np.dot(s.E.wx, s.E.values) / s.L
        s = State(s.fe, s.fi, s.E.with_values(E))
        stats = {}
        out = scheme_b_case2(s, 0.2, stats=stats)
        assert _case2_residual(s, out, 0.2) < 1e-10
        inc = stats["increments"]
        assert inc[-1] < 1e-11
        assert all(b < a for a, b in zip(inc[1:], inc[2:]))
        np.testing.assert_allclose(spatial_average(out.E), 0.0, atol=1e-13)

    def test_iteration_cap(self):
        s = random_state(5)
        s = State(s.fe, s.fi, s.E.with_values(s.E.values - np.dot(s.E.wx, s.E.values) / s.L))
        with pytest.raises(SolverError):
            scheme_b_case2(s, 0.2, SolverSettings(max_outer=1))

    def test_warns_on_nonzero_mean_field(self):
        s = random_state(6)
        s = State(s.fe, s.fi, s.E.with_values(s.E.values + 1.0))
        with pytest.warns(RuntimeWarning, match="mean field"):
            scheme_b_case2(s, 0.05)


class TestScheme2:
    def _landau(self):
        params = PlasmaParams(25.0, 2.0)
        from vadg.physics import landau_ic
        return landau_ic(params, 0.5, 0.5, Domain(4 * np.pi, 8, 12.0, 40, 12.0 * np.sqrt(params.ion_var), 40), 2)

    def test_case1_conservation(self):
        s = self._landau()
        n0 = [particle_number(s.fe), particle_number(s.fi)]
        te0 = total_energy(s)
        cache = LinearSolveCache()
        for _ in range(10):
            s = scheme2_step(s, 0.2, "zero", cache=cache)
        np.testing.assert_allclose([particle_number(s.fe), particle_number(s.fi)], n0, rtol=1e-13)
        np.testing.assert_allclose(total_energy(s), te0, rtol=1e-11)
        assert s.step == 10
        np.testing.assert_allclose(s.t, 2.0)

    def test_case2_mean_field_and_energy(self):
        params = PlasmaParams(25.0, 2.0, v_de=1.0, jext_mode="j0")
        L = 20.0
        dom = Domain(L, 8, 12.0, 40, 12.0 * np.sqrt(params.ion_var), 40)
        s = cdiaw_ic(params, NoiseSpectrum(3, 1e-2, L, seed=1), dom, 2)
        te0 = total_energy(s)
        for _ in range(5):
            s = scheme2_step(s, 0.3, "j0")
            assert abs(spatial_average(s.E)) < 1e-12
        np.testing.assert_allclose(total_energy(s), te0, rtol=1e-9)

    def test_equilibrium_is_fixed_point(self):
        ge = SpeciesGrid.build("e", -1.0, 5.0, 3, 6.0, 10, 2)
        gi = SpeciesGrid("i", 0.04, ge.xmesh, build_mesh(-1.0, 1.0, 10, False), ge.basis)
        fe = NodalField.from_function(ge, lambda x, v: np.exp(-v * v / 2) + 0 * x)
        fi = NodalField.from_function(gi, lambda x, v: np.exp(-50 * v * v) + 0 * x)
        s = State(fe, fi, ElectricField(ge.xmesh, ge.basis, np.zeros(ge.shape[0])))
        out = scheme2_step(s, 0.5)
        np.testing.assert_allclose(out.fe.values, fe.values, atol=1e-14)
        np.testing.assert_allclose(out.E.values, 0.0, atol=1e-14)

    def test_rejects_bad_arguments(self):
        s = random_state()
        with pytest.raises(ConfigError):
            scheme2_step(s, -0.1)
        with pytest.raises(ConfigError):
            scheme2_step(s, 0.1, "bogus")


class TestSolverSettings:
    @pytest.mark.parametrize("kw", [{"gs_tol": 0.0}, {"nl_tol": 1.0}, {"max_outer": 0}, {"max_newton": 2.5}])
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            SolverSettings(**kw)
