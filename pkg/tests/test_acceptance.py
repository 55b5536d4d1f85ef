"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line with its runtime (run with `pytest tests/test_acceptance.py -v -s`).

All seeds are fixed constants; every Monte Carlo quantity is exactly
reproducible. Criterion 9 is known-red: under the population-mean
perception update the two groups' log-odds translate rigidly and freeze
once the cooperator fraction locks at mu, so the (0, 1) end state is
unreachable; see the decisions ledger for the full analysis. The
assertion is kept faithful and fails.
"""

import math
import time

import numpy as np
import pytest

from drunkgames.abm import AbmConfig, meanfield_comparison, run_abm
from drunkgames.basins import (MonteCarloParams, estimate_attractiveness,
                               largest_jump, sweep_battle_line, sweep_g2_grid,
                               warm_kernels)
from drunkgames.dynamics import State, integrate, step_rk4
from drunkgames.equilibria import (StabilityClass, all_fixed_points,
                                   eigen_from_jacobian, interior_fixed_points,
                                   numeric_jacobian)
from drunkgames.games import DrunkGame, QPoly, normalized, preset

JOBS = 2
STABLE = (StabilityClass.STABLE_NODE, StabilityClass.STABLE_SPIRAL)


@pytest.fixture(scope="module", autouse=True)
def warm():
    # compile the integration kernels once so measured runtimes reflect
    # the operations, not JIT warmup
    warm_kernels()


class Check:
    def __init__(self, name):
        self.name = name
        self.t0 = time.perf_counter()
        self.failures = []

    def expect(self, ok, detail):
        if not ok:
            self.failures.append(detail)

    def finish(self, budget_s):
        elapsed = time.perf_counter() - self.t0
        status = "PASS" if not self.failures and elapsed < budget_s else "FAIL"
        print(f"\nACCEPTANCE {self.name}: {status} [{elapsed:.1f}s / budget {budget_s:.0f}s]"
              + ("".join(f"\n  - {f}" for f in self.failures) if self.failures else ""))
        assert not self.failures, f"{self.name}: " + "; ".join(self.failures)
        assert elapsed < budget_s, f"{self.name}: runtime {elapsed:.1f}s over budget"


def test_01_pub_dilemma_equilibria():
    c = Check("1 Pub Dilemma equilibria")
    pts = all_fixed_points(preset("pub_dilemma"))
    c.expect(len(pts) == 5, f"expected 5 fixed points, got {len(pts)}")
    d = {(fp.state.x, fp.state.alpha): fp for fp in pts}
    c.expect(d[(0.0, 0.0)].stability in STABLE, "(0,0) should be stable")
    c.expect(d[(1.0, 1.0)].stability in STABLE, "(1,1) should be stable")
    c.expect(d[(1.0, 0.0)].stability not in STABLE, "(1,0) should be unstable")
    c.expect(d[(0.0, 1.0)].stability not in STABLE, "(0,1) should be unstable")
    saddle = d[(0.5, 0.5)]
    c.expect(saddle.stability == StabilityClass.SADDLE, "(0.5,0.5) should be a saddle")
    lams = sorted((saddle.eigen.lambda1.real, saddle.eigen.lambda2.real))
    c.expect(abs(lams[0] + 0.25) < 1e-9 and abs(lams[1] - 0.25) < 1e-9,
             f"saddle eigenvalues {lams} != -/+0.25 within 1e-9")
    c.finish(1.0)


def test_02_hopf_localization():
    c = Check("2 Hopf localization")
    expected_class = {0.4: StabilityClass.UNSTABLE_SPIRAL,
                      0.5: StabilityClass.CENTER,
                      0.8: StabilityClass.STABLE_SPIRAL}
    for s, cls in expected_class.items():
        dg = preset("drunk_prisoner", {"s": s})
        pts = [fp for fp in interior_fixed_points(dg) if fp.kind == "interior"]
        c.expect(len(pts) == 1, f"s={s}: expected one interior point")
        fp = pts[0]
        c.expect(abs(fp.state.x - 0.5) < 1e-9 and abs(fp.state.alpha - 1 / 3) < 1e-9,
                 f"s={s}: interior at ({fp.state.x}, {fp.state.alpha}) != (0.5, 1/3)")
        u_expected = -(2 * s - 1) / 12.0
        c.expect(abs(fp.eigen.u - u_expected) < 1e-9,
                 f"s={s}: u={fp.eigen.u} != {u_expected}")
        c.expect(fp.stability == cls, f"s={s}: class {fp.stability} != {cls}")
        num = eigen_from_jacobian(numeric_jacobian(dg, fp.state))
        for a, b in ((num.lambda1, fp.eigen.lambda1), (num.lambda2, fp.eigen.lambda2)):
            rel = abs(a - b) / max(abs(b), 1e-12)
            c.expect(rel < 1e-6, f"s={s}: numeric eigenvalue off by {rel:.2e}")
    c.finish(1.0)


def test_03_pub_dilemma_basin_symmetry():
    c = Check("3 Pub Dilemma basin symmetry")
    res = estimate_attractiveness(preset("pub_dilemma"), 1000, seed=42, jobs=JOBS)
    c.expect(abs(res.attractiveness - 0.5) <= 0.05,
             f"attractiveness {res.attractiveness} outside 0.5 +/- 0.05")
    c.finish(30.0)


def test_04_pd_pd_impossibility():
    c = Check("4 PD+PD impossibility")
    cases = [
        (DrunkGame(normalized(-1, 2), normalized(-0.5, 1.5), 1.0, QPoly.linear(0.5)), 42),
        (DrunkGame(normalized(-1, 2), normalized(-0.9, 1.9), 10.0, QPoly.linear(0.5)), 43),
    ]
    for dg, seed in cases:
        res = estimate_attractiveness(dg, 1000, seed=seed, jobs=JOBS)
        c.expect(res.attractiveness == 0.0,
                 f"S2={dg.g2.S}, T2={dg.g2.T}, kappa={dg.kappa}: "
                 f"attractiveness {res.attractiveness} != 0")
    c.finish(30.0)


def test_05_kappa_monotonicity():
    c = Check("5 kappa-monotonicity (Fig. 4 sweep)")
    kappas = (0.1, 1.0, 10.0)
    ds = sweep_g2_grid(normalized(-1.0, 2.0), np.linspace(-1, 1, 21),
                       np.linspace(0, 2, 21), kappas,
                       MonteCarloParams(n_samples=100), master_seed=42, jobs=JOBS)
    means = [ds.mean_attractiveness(k) for k in kappas]
    print(f"\n  mean attractiveness per kappa: "
          + ", ".join(f"{k}: {m:.4f}" for k, m in zip(kappas, means)))
    c.expect(means[0] < means[1] < means[2],
             f"means {means} not strictly increasing in kappa")
    c.finish(1200.0)


def test_06_battle_transition():
    c = Check("6 Battle transition (Fig. 5d)")
    grid = np.linspace(0.0, 1.0, 21)  # 0.05 spacing
    ds = sweep_battle_line(grid, [1.0], MonteCarloParams(n_samples=1000),
                           master_seed=42, jobs=JOBS)
    curve = sorted((cell.params[0], cell.result.attractiveness) for cell in ds.cells)
    vals = dict(curve)
    c.expect(vals[0.75] >= 0.99, f"attractiveness(0.75) = {vals[0.75]} < 0.99")
    # non-decreasing up to the 3-sigma binomial noise of each step
    n = 1000
    for (s_lo, a_lo), (s_hi, a_hi) in zip(curve[:-1], curve[1:]):
        p = 0.5 * (a_lo + a_hi)
        slack = 3.0 * math.sqrt(max(p * (1 - p), 1e-9) * 2.0 / n)
        c.expect(a_hi >= a_lo - slack,
                 f"curve decreases beyond noise at {s_lo}->{s_hi}: {a_lo}->{a_hi}")
    jump = largest_jump(ds, 1.0)
    c.expect(jump.size >= 0.3, f"largest jump {jump.size:.3f} < 0.3")
    print(f"\n  empirical jump location: {jump.location:.3f} "
          f"(size {jump.size:.3f}, step {jump.param_lo}->{jump.param_hi}); "
          f"reported value in the source analysis: 0.5")
    c.finish(600.0)


def test_07_abm_meanfield_agreement():
    c = Check("7 ABM/mean-field agreement")
    dg = preset("drunk_prisoner", {"s": 0.4})
    # the boundary-hugging cycle of the matched mean-field system
    mf_game = DrunkGame(dg.g1, dg.g2, 3.0, QPoly.linear(0.5))
    mf = integrate(mf_game, State(0.52, 0.5), dt=0.01, t_max=400.0,
                   targets=(), eps=1e-9, sample_every=1)
    half = len(mf.t) // 2
    cycle = np.stack([mf.x[half:], mf.alpha[half:]], axis=1)
    for seed in (1, 2, 3):
        # pointwise match over the first loop, one fitted time dilation
        cfg = AbmConfig.with_heterogeneity(0.0, n_agents=10_000, t_max=900, seed=seed)
        fit = meanfield_comparison(run_abm(cfg, dg), dg, cfg)
        c.expect(fit.rms < 0.05,
                 f"seed {seed}: pointwise RMS {fit.rms:.4f} >= 0.05")
        # the late population means hug the same boundary cycle
        cfg = AbmConfig.with_heterogeneity(0.0, n_agents=10_000, t_max=5000, seed=seed)
        st = run_abm(cfg, dg)
        pts = np.stack([st.x_mean, st.alpha_mean], axis=1)[2500:]
        d2 = ((pts[:, None, :] - cycle[None, :, :]) ** 2).sum(axis=2).min(axis=1)
        rms = math.sqrt(float(d2.mean()))
        c.expect(rms < 0.05, f"seed {seed}: RMS distance to cycle {rms:.4f} >= 0.05")
    c.finish(300.0)


def test_08_strategy_polarization():
    c = Check("8 Strategy polarization (Fig. 7b)")
    dg = preset("drunk_prisoner", {"s": 0.8})
    cfg = AbmConfig.with_heterogeneity(0.04, n_agents=10_000, t_max=20_000, seed=3)
    st = run_abm(cfg, dg)
    c.expect(st.coop_g1[-1] >= 0.9,
             f"group 1 cooperators {st.coop_g1[-1]:.3f} < 0.9")
    c.expect(st.coop_g2[-1] <= 0.1,
             f"group 2 cooperators {st.coop_g2[-1]:.3f} > 0.1")
    c.finish(300.0)


def test_09_perception_polarization():
    # Known-red: the population-mean perception drive is common to every
    # agent (rigid log-odds translation) and vanishes once the cooperator
    # fraction locks at mu, so group alphas freeze far from (0, 1); the
    # decisions ledger details the argument and the probed alternatives.
    c = Check("9 Perception polarization (Fig. 7c)")
    dg = preset("drunk_prisoner", {"s": 0.4})
    cfg = AbmConfig.with_heterogeneity(0.4, n_agents=10_000, t_max=20_000, seed=3)
    st = run_abm(cfg, dg)
    c.expect(abs(st.alpha_g1[-1] - 0.0) <= 0.05,
             f"group 1 mean alpha {st.alpha_g1[-1]:.3f} not within 0.05 of 0")
    c.expect(abs(st.alpha_g2[-1] - 1.0) <= 0.05,
             f"group 2 mean alpha {st.alpha_g2[-1]:.3f} not within 0.05 of 1")
    c.finish(300.0)


def test_10_property_suites():
    c = Check("10 Property suites")
    rng = np.random.default_rng(77)
    # edge forward-invariance
    for _ in range(10):
        dg = DrunkGame(normalized(*rng.uniform(-1, 1, 2)),
                       normalized(*rng.uniform(-1, 1, 2)),
                       float(rng.uniform(0.1, 5)), QPoly.linear(0.5))
        for s0 in (State(0.0, 0.3), State(1.0, 0.7), State(0.4, 0.0), State(0.6, 1.0)):
            s = s0
            for _ in range(100):
                s = step_rk4(dg, s, 0.05)
            if s0.x in (0.0, 1.0):
                c.expect(s.x == s0.x, f"x-edge {s0} drifted to {s}")
            else:
                c.expect(s.alpha == s0.alpha, f"alpha-edge {s0} drifted to {s}")
    # RK4 measured order >= 3.5 on a smooth interior stretch
    dg = preset("pub_dilemma")
    start = State(0.3, 0.7)

    def endpoint(dt):
        traj = integrate(dg, start, dt=dt, t_max=5.0, targets=(), eps=1e-9,
                         sample_every=10 ** 9)
        return traj.x[-1], traj.alpha[-1]

    ref = endpoint(1e-4)
    errs = [math.hypot(*(np.subtract(endpoint(dt), ref))) for dt in (0.08, 0.04)]
    order = math.log2(errs[0] / errs[1])
    c.expect(order >= 3.5, f"measured RK4 order {order:.2f} < 3.5")
    # O(N) payoffs equal the O(N^2) oracle for N <= 200
    from drunkgames.abm import Population, _perceived_entries, _totals_from_counts
    dg = preset("drunk_prisoner", {"s": 0.7})
    for n in (50, 200):
        pop = Population(rng.random(n) < 0.5, rng.random(n),
                         np.array([1] * (n // 2) + [2] * (n - n // 2), dtype=np.uint8))
        entries = _perceived_entries(pop, dg, "per_round", np.random.default_rng(6))
        fast = _totals_from_counts(pop, entries)
        r, s_, t_, p_ = entries
        slow = np.zeros(n)
        for i in range(n):
            for j in range(n):
                if i != j:
                    if pop.strategies[i]:
                        slow[i] += r[i] if pop.strategies[j] else s_[i]
                    else:
                        slow[i] += t_[i] if pop.strategies[j] else p_[i]
        c.expect(bool(np.allclose(fast, slow, atol=1e-9)),
                 f"N={n}: count-form payoffs differ from pairwise oracle")
    # bit-reproducibility of seeded sweeps under different worker counts
    import io
    buffers = []
    for jobs in (1, 2):
        ds = sweep_battle_line([0.2, 0.5, 0.8], [1.0],
                               MonteCarloParams(n_samples=50), master_seed=11,
                               jobs=jobs)
        buf = io.StringIO()
        ds.to_csv(buf)
        buffers.append(buf.getvalue())
    c.expect(buffers[0] == buffers[1], "sweep CSV differs across worker counts")
    c.finish(120.0)


def test_11_fig6_desk_variant():
    # stands in for the full-scale Fig. 6 heatmaps: at s=0.45 the distance
    # to the interior point drops as initial heterogeneity grows
    c = Check("fig6-desk heterogeneity shift")
    dg = preset("drunk_prisoner", {"s": 0.45})
    dist = {}
    for delta0 in (0.0, 0.2, 0.4):
        cfg = AbmConfig.with_heterogeneity(delta0, n_agents=1000, t_max=5000, seed=5)
        dist[delta0] = run_abm(cfg, dg).dist_interior_tail_mean()
    print("\n  dist to interior by delta0: "
          + ", ".join(f"{d}: {v:.4f}" for d, v in dist.items()))
    c.expect(dist[0.0] - dist[0.4] > 0.3,
             f"stabilization gap {dist[0.0] - dist[0.4]:.3f} <= 0.3")
    c.expect(dist[0.2] <= dist[0.0] + 0.01 and dist[0.4] <= dist[0.2] + 0.01,
             f"distances {dist} not monotone (0.01 noise slack)")
    c.finish(120.0)
