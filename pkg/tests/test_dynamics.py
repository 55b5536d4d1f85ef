"""Mean-field dynamics: fields, integrator, trajectories, grids."""

import io
import math

import numpy as np
import pytest

from drunkgames import _kernels
from drunkgames.dynamics import (
    State, expected_payoffs, field_grid, integrate, step_rk4, vector_field,
    write_field_grid_csv, write_trajectory_csv, _game_params,
)
from drunkgames.games import DrunkGame, PayoffMatrix, QPoly, normalized, preset


def random_game(rng, normalized_payoffs=False):
    if normalized_payoffs:
        g1 = normalized(float(rng.uniform(-1, 1)), float(rng.uniform(0, 2)))
        g2 = normalized(float(rng.uniform(-1, 1)), float(rng.uniform(0, 2)))
    else:
        g1 = PayoffMatrix(*rng.uniform(-2, 2, 4))
        g2 = PayoffMatrix(*rng.uniform(-2, 2, 4))
    coeffs = rng.uniform(-1, 1, rng.integers(1, 4))
    return DrunkGame(g1, g2, float(rng.uniform(0.1, 5.0)), QPoly(coeffs))


class TestState:
    def test_validation(self):
        State(0.0, 1.0)
        with pytest.raises(ValueError):
            State(1.2, 0.5)
        with pytest.raises(ValueError):
            State(0.5, -0.01)
        with pytest.raises(ValueError):
            State(math.nan, 0.5)


class TestExpectedPayoffs:
    def test_pub_dilemma_corners(self):
        dg = preset("pub_dilemma")
        assert expected_payoffs(dg, State(1.0, 0.0)) == (1.0, 1.5)
        assert expected_payoffs(dg, State(0.0, 1.0)) == (0.5, 0.0)

    def test_identical_perceptions_ignore_alpha(self):
        rng = np.random.default_rng(20)
        m = PayoffMatrix(*rng.uniform(-2, 2, 4))
        dg = DrunkGame(m, m, 1.0, QPoly.linear(0.5))
        x = 0.37
        ref = expected_payoffs(dg, State(x, 0.0))
        for a in (0.2, 0.5, 0.9, 1.0):
            got = expected_payoffs(dg, State(x, a))
            assert got[0] == pytest.approx(ref[0], abs=1e-12)
            assert got[1] == pytest.approx(ref[1], abs=1e-12)


class TestVectorField:
    def test_pub_saddle_and_edge(self):
        dg = preset("pub_dilemma")
        assert vector_field(dg, State(0.5, 0.5)) == (0.0, 0.0)
        dx, da = vector_field(dg, State(0.5, 0.0))
        assert dx == pytest.approx(-0.125, abs=1e-15)
        assert da == 0.0

    def test_x_edges_are_fixed_in_x(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            dg = random_game(rng)
            a = float(rng.uniform(0, 1))
            assert vector_field(dg, State(0.0, a))[0] == 0.0
            assert vector_field(dg, State(1.0, a))[0] == 0.0

    def test_matches_payoff_difference_under_normalization(self):
        rng = np.random.default_rng(22)
        for _ in range(40):
            dg = random_game(rng, normalized_payoffs=True)
            s = State(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            pi_c, pi_d = expected_payoffs(dg, s)
            dx, _ = vector_field(dg, s)
            assert dx == pytest.approx(s.x * (1 - s.x) * (pi_c - pi_d), abs=1e-12)

    def test_zero_coupling_freezes_alpha(self):
        dg = DrunkGame(normalized(-0.5, 1.5), normalized(0.5, 0.5), 1.0, QPoly.zero())
        traj = integrate(dg, State(0.3, 0.77), t_max=50.0)
        assert np.all(traj.alpha == 0.77)


class TestKernelConsistency:
    """The compiled kernels must reproduce the Python reference bitwise."""

    def test_field_bitwise(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            dg = random_game(rng)
            x, a = rng.uniform(-0.1, 1.1, 2)
            f1, g1, f2, g2, kappa, qc = _game_params(dg)
            from drunkgames.dynamics import raw_field
            assert raw_field(dg, x, a) == _kernels.field_eval(f1, g1, f2, g2, kappa, qc, x, a)

    def test_step_bitwise(self):
        rng = np.random.default_rng(24)
        for _ in range(200):
            dg = random_game(rng)
            s = State(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            dt = float(rng.uniform(0.001, 0.2))
            f1, g1, f2, g2, kappa, qc = _game_params(dg)
            got = _kernels.rk4_step(f1, g1, f2, g2, kappa, qc, s.x, s.alpha, dt)
            want = step_rk4(dg, s, dt)
            assert got == (want.x, want.alpha)

    def test_batch_matches_scalar_integrate(self):
        dg = preset("pub_dilemma")
        f1, g1, f2, g2, kappa, qc = _game_params(dg)
        targets = np.array([[1.0, 1.0], [0.0, 0.0]])
        rng = np.random.default_rng(25)
        x0 = rng.random(8)
        a0 = rng.random(8)
        n = 8
        n_steps, lag_n = 100000, 1000
        kinds = np.empty(n, dtype=np.int64)
        tgts = np.empty(n, dtype=np.int64)
        t_end = np.empty(n)
        xe = np.empty(n)
        ae = np.empty(n)
        _kernels.basin_batch(f1, g1, f2, g2, kappa, qc, x0, a0, 0.01, n_steps,
                             10, lag_n, targets, 1e-3, kinds, tgts, t_end, xe, ae)
        for i in range(n):
            traj = integrate(dg, State(x0[i], a0[i]), dt=0.01, t_max=1000.0,
                             targets=[State(1, 1), State(0, 0)], eps=1e-3)
            kind_names = {0: "max_time", 1: "converged", 2: "cycle_suspected"}
            assert traj.termination.kind == kind_names[int(kinds[i])]
            assert traj.termination.time == t_end[i]
            assert traj.x[-1] == xe[i] and traj.alpha[-1] == ae[i]


class TestRk4:
    def test_fixed_point_is_stationary(self):
        dg = preset("pub_dilemma")
        s = State(0.5, 0.5)
        assert step_rk4(dg, s, 0.01) == s

    def test_edges_forward_invariant(self):
        rng = np.random.default_rng(26)
        for _ in range(25):
            dg = random_game(rng)
            for s in (State(0.0, float(rng.uniform(0, 1))),
                      State(1.0, float(rng.uniform(0, 1))),
                      State(float(rng.uniform(0, 1)), 0.0),
                      State(float(rng.uniform(0, 1)), 1.0)):
                cur = s
                for _ in range(50):
                    cur = step_rk4(dg, cur, 0.05)
                if s.x in (0.0, 1.0):
                    assert cur.x == s.x
                else:
                    assert cur.alpha == s.alpha

    def test_clamped_to_unit_square(self):
        rng = np.random.default_rng(27)
        for _ in range(30):
            dg = random_game(rng)
            s = State(float(rng.uniform(0, 1)), float(rng.uniform(0, 1)))
            for _ in range(200):
                s = step_rk4(dg, s, 0.2)
                assert 0.0 <= s.x <= 1.0 and 0.0 <= s.alpha <= 1.0

    def _reference(self, dg, s, dt_fine, t_total):
        # test-local RK4 at a fine step as the accuracy oracle
        from drunkgames.dynamics import raw_field
        x, a = s.x, s.alpha
        for _ in range(int(round(t_total / dt_fine))):
            k1 = raw_field(dg, x, a)
            k2 = raw_field(dg, x + 0.5 * dt_fine * k1[0], a + 0.5 * dt_fine * k1[1])
            k3 = raw_field(dg, x + 0.5 * dt_fine * k2[0], a + 0.5 * dt_fine * k2[1])
            k4 = raw_field(dg, x + dt_fine * k3[0], a + dt_fine * k3[1])
            x += dt_fine / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            a += dt_fine / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return x, a

    def test_single_step_accuracy(self):
        dg = preset("pub_dilemma")
        s = State(0.3, 0.7)
        ref = self._reference(dg, s, 1e-4, 0.01)
        got = step_rk4(dg, s, 0.01)
        assert abs(got.x - ref[0]) < 1e-8 and abs(got.alpha - ref[1]) < 1e-8

    def test_one_step_halving_reduces_error(self):
        dg = preset("pub_dilemma")
        s = State(0.3, 0.7)
        for dt in (0.2, 0.1):
            ref = self._reference(dg, s, 1e-5, dt)
            e1 = abs(step_rk4(dg, s, dt).x - ref[0])
            two = step_rk4(dg, step_rk4(dg, s, dt / 2), dt / 2)
            e2 = abs(two.x - ref[0])
            assert e1 / e2 >= 8.0

    def test_measured_convergence_order(self):
        dg = preset("pub_dilemma")
        s = State(0.3, 0.7)
        t_total = 5.0
        ref = self._reference(dg, s, 1e-4, t_total)
        errs = []
        for dt in (0.08, 0.04):
            traj = integrate(dg, s, dt=dt, t_max=t_total, targets=(), eps=1e-9,
                             sample_every=10**9)
            errs.append(math.hypot(traj.x[-1] - ref[0], traj.alpha[-1] - ref[1]))
        order = math.log2(errs[0] / errs[1])
        assert order >= 3.5


class TestIntegrate:
    def test_pub_converges_to_cooperation(self):
        dg = preset("pub_dilemma")
        traj = integrate(dg, State(0.9, 0.9), targets=[State(1, 1), State(0, 0)])
        assert traj.termination.kind == "converged"
        assert traj.termination.target == State(1.0, 1.0)

    def test_pub_converges_to_defection(self):
        dg = preset("pub_dilemma")
        traj = integrate(dg, State(0.1, 0.1), targets=[State(1, 1), State(0, 0)])
        assert traj.termination.target == State(0.0, 0.0)

    def test_drunk_prisoner_interior_attractor(self):
        dg = preset("drunk_prisoner", {"s": 0.8})
        target = State(0.5, 1.0 / 3.0)
        traj = integrate(dg, State(0.2, 0.5), targets=[target])
        assert traj.termination.kind == "converged"
        assert traj.termination.target == target

    def test_hopf_cycle_never_hangs(self):
        dg = preset("drunk_prisoner", {"s": 0.5})
        traj = integrate(dg, State(0.4, 0.4), t_max=300.0,
                         targets=[State(1, 1), State(0, 0)])
        assert traj.termination.kind in ("cycle_suspected", "max_time")

    def test_settled_state_labelled(self):
        # a state resting at a non-target attractor triggers the revisit test
        dg = preset("pub_dilemma")
        traj = integrate(dg, State(0.1, 0.1), targets=[State(1, 1)], t_max=2000.0)
        assert traj.termination.kind == "cycle_suspected"
        assert traj.termination.time < 500.0

    def test_sampling_monotone_and_in_square(self):
        dg = preset("drunk_prisoner", {"s": 0.4})
        traj = integrate(dg, State(0.3, 0.6), t_max=50.0, sample_every=7)
        assert np.all(np.diff(traj.t) > 0)
        assert np.all((traj.x >= 0) & (traj.x <= 1))
        assert np.all((traj.alpha >= 0) & (traj.alpha <= 1))
        assert traj.t[0] == 0.0

    def test_start_inside_target_ball(self):
        dg = preset("pub_dilemma")
        traj = integrate(dg, State(1.0, 1.0), targets=[State(1, 1)])
        assert traj.termination.kind == "converged"
        assert traj.termination.time == 0.0


class TestFieldGrid:
    def test_corners(self):
        dg = preset("pub_dilemma")
        grid = field_grid(dg, 2)
        assert len(grid) == 4
        assert all(dx == 0.0 for _, dx, _ in grid)

    def test_center_sample(self):
        dg = preset("pub_dilemma")
        grid = field_grid(dg, 3)
        center = grid[4]
        assert center[0] == State(0.5, 0.5)
        assert center[1] == 0.0 and center[2] == 0.0

    def test_lattice_row_major(self):
        dg = preset("pub_dilemma")
        grid = field_grid(dg, 21)
        assert len(grid) == 441
        assert all(s.x == 0.0 for s, _, _ in grid[:21])
        assert [s.alpha for s, _, _ in grid[:3]] == [0.0, 0.05, 0.1]

    def test_resolution_validation(self):
        with pytest.raises(ValueError):
            field_grid(preset("pub_dilemma"), 1)


class TestCsv:
    def test_trajectory_roundtrip(self):
        dg = preset("pub_dilemma")
        traj = integrate(dg, State(0.3, 0.6), t_max=5.0)
        buf = io.StringIO()
        write_trajectory_csv(traj, buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "t,x,alpha"
        assert len(lines) == len(traj.t) + 1
        for i, line in enumerate(lines[1:]):
            t, x, a = (float(v) for v in line.split(","))
            assert (t, x, a) == (traj.t[i], traj.x[i], traj.alpha[i])

    def test_field_grid_header(self):
        buf = io.StringIO()
        write_field_grid_csv(field_grid(preset("pub_dilemma"), 3), buf)
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "x,alpha,dx,dalpha"
        assert len(lines) == 10
