"""Finite-population model with individual perceptions.

N agents hold pure strategies and personal alpha values. Each round every
agent plays every other agent under its own perceived matrix (an O(N)
count-based accumulation), then strategies update by the local replicator
rule and perceptions by the population-mean drive, both synchronously
from round-t state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dynamics import _open_text
from .games import DrunkGame, QPoly

DEFAULT_SEED = 42
PerceptionMode = Literal["expected", "per_interaction", "per_round", "per_interaction_pairwise"]
PERCEPTION_MODES = ("expected", "per_interaction", "per_round", "per_interaction_pairwise")
PAIRWISE_GUARD_N = 2000


@dataclass(frozen=True)
class Agent:
    strategy: str  # "C" or "D"
    alpha: float
    group: int  # 1 or 2, the initial-alpha group label


@dataclass(frozen=True)
class AbmConfig:
    """Run parameters. The alpha rule always uses kappa, mu and the
    population mean from this config; the drunk game supplies payoffs."""

    n_agents: int = 10_000
    beta: float = 0.1
    kappa: float = 0.1
    mu: float = 0.5
    x0: float = 0.5
    alpha1: float = 0.5
    alpha2: float = 0.5
    split: float = 0.5
    t_max: int = 5000
    seed: int = DEFAULT_SEED
    perception_mode: PerceptionMode = "expected"
    alpha_update: Literal["population", "own_consumption"] = "population"
    allow_large_pairwise: bool = False

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError("need at least 2 agents")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if not 0.0 <= self.x0 <= 1.0:
            raise ValueError(f"x0 must lie in [0, 1], got {self.x0}")
        if not 0.0 <= self.alpha1 <= self.alpha2 <= 1.0:
            raise ValueError("need 0 <= alpha1 <= alpha2 <= 1")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.perception_mode not in PERCEPTION_MODES:
            raise ValueError(f"unknown perception_mode {self.perception_mode!r}")
        if self.alpha_update not in ("population", "own_consumption"):
            raise ValueError(f"unknown alpha_update {self.alpha_update!r}")
        n1 = math.floor(self.split * self.n_agents)
        if not 1 <= n1 <= self.n_agents - 1:
            raise ValueError("split must leave both groups non-empty")

    @property
    def group1_size(self) -> int:
        return math.floor(self.split * self.n_agents)

    @property
    def initial_delta_alpha(self) -> float:
        s = self.alpha1 + self.alpha2
        return 0.0 if s == 0.0 else (self.alpha2 - self.alpha1) / s

    @classmethod
    def with_heterogeneity(cls, delta0: float, **overrides) -> "AbmConfig":
        """Config whose groups start at alpha = 0.5(1 -/+ delta0), keeping
        the initial mean at 0.5 and the heterogeneity exactly delta0."""
        if not 0.0 <= delta0 <= 1.0:
            raise ValueError(f"delta0 must lie in [0, 1], got {delta0}")
        return cls(alpha1=0.5 * (1.0 - delta0), alpha2=0.5 * (1.0 + delta0), **overrides)


class Population:
    """Agent state arrays plus cached cooperator counts for the round."""

    __slots__ = ("strategies", "alphas", "groups", "n_coop", "n_coop_g1", "n_coop_g2")

    def __init__(self, strategies: np.ndarray, alphas: np.ndarray, groups: np.ndarray):
        if not (len(strategies) == len(alphas) == len(groups)):
            raise ValueError("agent arrays must have equal length")
        self.strategies = np.asarray(strategies, dtype=bool)
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.groups = np.asarray(groups, dtype=np.uint8)
        for arr in (self.strategies, self.alphas, self.groups):
            arr.setflags(write=False)
        self.n_coop = int(np.count_nonzero(self.strategies))
        g1 = self.groups == 1
        self.n_coop_g1 = int(np.count_nonzero(self.strategies & g1))
        self.n_coop_g2 = self.n_coop - self.n_coop_g1

    def __len__(self):
        return len(self.strategies)

    def agent(self, i: int) -> Agent:
        return Agent(strategy="C" if self.strategies[i] else "D",
                     alpha=float(self.alphas[i]), group=int(self.groups[i]))

    def validate(self) -> None:
        """Recompute the cached counts and compare (used by tests)."""
        n = sum(1 for s in self.strategies if s)
        n1 = sum(1 for s, g in zip(self.strategies, self.groups) if s and g == 1)
        if n != self.n_coop or n1 != self.n_coop_g1 or (n - n1) != self.n_coop_g2:
            raise AssertionError("cached cooperator counts out of sync")


def init_population(cfg: AbmConfig, rng: np.random.Generator | None = None) -> Population:
    """First floor(split*N) agents form group 1 at alpha1, the rest group 2
    at alpha2; strategies are independent Bernoulli(x0) draws."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    n = cfg.n_agents
    n1 = cfg.group1_size
    alphas = np.where(np.arange(n) < n1, cfg.alpha1, cfg.alpha2)
    groups = np.where(np.arange(n) < n1, 1, 2).astype(np.uint8)
    strategies = rng.random(n) < cfg.x0
    return Population(strategies, alphas, groups)


def payoff_range(dg: DrunkGame) -> float:
    """Elementwise payoff spread over both perceptions,
    max(1, T1, T2) - min(0, S1, S2)."""
    return max(1.0, dg.g1.T, dg.g2.T) - min(0.0, dg.g1.S, dg.g2.S)


def imitation_probability(pi_i: float, pi_j: float, beta: float, phi: float) -> float:
    """Local replicator rule: adopt j's strategy with probability
    max(0, beta (pi_j - pi_i) / phi)."""
    if phi <= 0.0:
        raise ValueError(f"phi must be positive, got {phi}")
    return max(0.0, beta * (pi_j - pi_i) / phi)


def _perceived_entries(pop: Population, dg: DrunkGame, mode: PerceptionMode,
                       rng: np.random.Generator):
    """Per-agent payoff entries under the perception draw for this round."""
    g1, g2 = dg.g1, dg.g2
    if mode == "expected":
        a = pop.alphas
        return ((1.0 - a) * g1.R + a * g2.R, (1.0 - a) * g1.S + a * g2.S,
                (1.0 - a) * g1.T + a * g2.T, (1.0 - a) * g1.P + a * g2.P)
    draws = rng.random(len(pop))
    intoxicated = draws < pop.alphas
    return (np.where(intoxicated, g2.R, g1.R), np.where(intoxicated, g2.S, g1.S),
            np.where(intoxicated, g2.T, g1.T), np.where(intoxicated, g2.P, g1.P))


def _totals_from_counts(pop: Population, entries) -> np.ndarray:
    """Total payoff of each agent against all N-1 opponents, from the
    cooperator count; equivalent to summing all pairwise games."""
    r, s, t, p = entries
    n = len(pop)
    nc = pop.n_coop
    coop_pay = (nc - 1) * r + (n - nc) * s
    defect_pay = nc * t + (n - nc - 1) * p
    return np.where(pop.strategies, coop_pay, defect_pay)


def _totals_per_interaction(pop: Population, dg: DrunkGame,
                            rng: np.random.Generator) -> np.ndarray:
    """Independent perception draw for every opponent, sampled exactly in
    O(N): the number of intoxicated perceptions within each opponent class
    is binomial in that class size with the agent's own alpha."""
    n = len(pop)
    g1, g2 = dg.g1, dg.g2
    s = pop.strategies
    n_coop_opp = pop.n_coop - s  # cooperators among the N-1 opponents
    n_def_opp = (n - 1) - n_coop_opp
    k_coop = rng.binomial(n_coop_opp, pop.alphas)
    k_def = rng.binomial(n_def_opp, pop.alphas)
    vs_coop_sober = np.where(s, g1.R, g1.T)
    vs_coop_drunk = np.where(s, g2.R, g2.T)
    vs_def_sober = np.where(s, g1.S, g1.P)
    vs_def_drunk = np.where(s, g2.S, g2.P)
    return (k_coop * vs_coop_drunk + (n_coop_opp - k_coop) * vs_coop_sober
            + k_def * vs_def_drunk + (n_def_opp - k_def) * vs_def_sober)


def _totals_pairwise(pop: Population, dg: DrunkGame,
                     rng: np.random.Generator) -> np.ndarray:
    """Explicit O(N^2) per-opponent draws; distributionally identical to
    _totals_per_interaction, kept for sensitivity analysis."""
    n = len(pop)
    g1, g2 = dg.g1, dg.g2
    intoxicated = rng.random((n, n)) < pop.alphas[:, None]
    r = np.where(intoxicated, g2.R, g1.R)
    s = np.where(intoxicated, g2.S, g1.S)
    t = np.where(intoxicated, g2.T, g1.T)
    p = np.where(intoxicated, g2.P, g1.P)
    own = pop.strategies[:, None]
    opp = pop.strategies[None, :]
    pay = np.where(own, np.where(opp, r, s), np.where(opp, t, p))
    np.fill_diagonal(pay, 0.0)
    return pay.sum(axis=1)


def round_payoffs(pop: Population, dg: DrunkGame, mode: PerceptionMode = "expected",
                  rng: np.random.Generator | None = None,
                  allow_large: bool = False) -> np.ndarray:
    """Total payoff of every agent for one all-play-all round.

    expected (the default) accumulates the alpha-weighted matrix, the
    concentration limit of per-game perception draws over N-1 opponents;
    per_interaction redraws the perception for every opponent, sampled in
    O(N) through binomial class counts; per_interaction_pairwise realizes
    the same distribution with explicit O(N^2) draws (guarded above
    N=2000 unless allow_large); per_round draws one matrix per agent per
    round.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(DEFAULT_SEED))
    if mode == "per_interaction":
        return _totals_per_interaction(pop, dg, rng)
    if mode == "per_interaction_pairwise":
        if len(pop) > PAIRWISE_GUARD_N and not allow_large:
            raise ValueError(
                f"per_interaction_pairwise mode is O(N^2); N={len(pop)} exceeds "
                f"the {PAIRWISE_GUARD_N} guard (pass allow_large to override)")
        return _totals_pairwise(pop, dg, rng)
    return _totals_from_counts(pop, _perceived_entries(pop, dg, mode, rng))


def step_population(pop: Population, dg: DrunkGame, cfg: AbmConfig,
                    rng: np.random.Generator) -> Population:
    """One synchronous round: payoffs, imitation, perception update, all
    computed from round-t state."""
    n = len(pop)
    payoffs = round_payoffs(pop, dg, cfg.perception_mode, rng,
                            allow_large=cfg.allow_large_pairwise)
    phi = (n - 1) * payoff_range(dg)
    raw = rng.integers(0, n - 1, size=n)
    partners = raw + (raw >= np.arange(n))
    p = np.maximum(0.0, cfg.beta * (payoffs[partners] - payoffs) / phi)
    adopt = rng.random(n) < p
    new_strategies = np.where(adopt, pop.strategies[partners], pop.strategies)
    if cfg.alpha_update == "population":
        drive = pop.n_coop / n - cfg.mu
    else:
        s = pop.strategies.astype(np.float64)
        drive = (s + (pop.n_coop - s) / (n - 1)) / 2.0 - cfg.mu
    a = pop.alphas
    new_alphas = np.clip(a + cfg.kappa * a * (1.0 - a) * drive, 0.0, 1.0)
    return Population(new_strategies, new_alphas, pop.groups)


def delta_alpha(pop: Population) -> float:
    """Normalized gap between the group mean perceptions,
    (mean2 - mean1) / (mean1 + mean2), clamped to [0, 1]."""
    g1 = pop.groups == 1
    if not g1.any() or g1.all():
        raise ValueError("both groups must be non-empty")
    m1 = float(pop.alphas[g1].mean())
    m2 = float(pop.alphas[~g1].mean())
    total = m1 + m2
    if total == 0.0:
        return 0.0
    return min(1.0, max(0.0, (m2 - m1) / total))


@dataclass(frozen=True)
class AbmStats:
    """Per-round population statistics; row 0 is the initial state."""

    t: np.ndarray
    x_mean: np.ndarray
    alpha_mean: np.ndarray
    alpha_g1: np.ndarray
    alpha_g2: np.ndarray
    coop_g1: np.ndarray
    coop_g2: np.ndarray
    delta_alpha: np.ndarray
    dist_interior: np.ndarray
    interior_point: tuple[float, float] | None

    def __len__(self):
        return len(self.t)

    def dist_interior_tail_mean(self, fraction: float = 0.1) -> float:
        """Distance to the interior point averaged over the last rounds,
        damping limit-cycle oscillation."""
        k = max(1, int(len(self.t) * fraction))
        return float(np.mean(self.dist_interior[-k:]))

    def to_csv(self, path) -> None:
        fh, owned = _open_text(path)
        try:
            fh.write("t,x_mean,alpha_mean,alpha_g1,alpha_g2,coop_g1,coop_g2,"
                     "delta_alpha,dist_interior\n")
            for i in range(len(self.t)):
                row = [str(int(self.t[i]))] + [
                    repr(float(arr[i]))
                    for arr in (self.x_mean, self.alpha_mean, self.alpha_g1,
                                self.alpha_g2, self.coop_g1, self.coop_g2,
                                self.delta_alpha, self.dist_interior)
                ]
                fh.write(",".join(row) + "\n")
        finally:
            if owned:
                fh.close()


@dataclass(frozen=True)
class MeanfieldFit:
    """Result of matching a run's population means to the mean-field flow."""

    rms: float
    dilation: float  # mean-field time units per round
    kappa_meanfield: float


def meanfield_comparison(stats: "AbmStats", dg: DrunkGame, cfg: AbmConfig) -> MeanfieldFit:
    """RMS distance between the population-mean trace and the mean-field
    trajectory from the same initial means, after fitting one scalar time
    dilation.

    One round advances x by beta/payoff_range of flow time but alpha by a
    full kappa step, so the comparison system must carry
    kappa * payoff_range / beta for a single dilation to exist; the
    dilation is then fitted around beta/payoff_range by scanning.
    """
    from .dynamics import State, integrate

    spread = payoff_range(dg)
    kappa_mf = cfg.kappa * spread / cfg.beta
    mf_game = DrunkGame(dg.g1, dg.g2, kappa_mf, QPoly.linear(cfg.mu))
    c0 = cfg.beta / spread
    rounds = np.asarray(stats.t, dtype=np.float64)
    dt = 0.01
    horizon = 2.2 * c0 * float(rounds[-1]) + 1.0
    mf = integrate(mf_game, State(float(stats.x_mean[0]), float(stats.alpha_mean[0])),
                   dt=dt, t_max=horizon, targets=(), eps=1e-9, sample_every=1)
    # the flow may settle early; hold the final state for the rest of the window
    need = int(round(2.0 * c0 * float(rounds[-1]) / dt)) + 2
    mfx = np.concatenate([mf.x, np.full(max(0, need - len(mf.x)), mf.x[-1])])
    mfa = np.concatenate([mf.alpha, np.full(max(0, need - len(mf.alpha)), mf.alpha[-1])])
    best_rms = math.inf
    best_c = c0
    for c in np.linspace(0.5 * c0, 2.0 * c0, 301):
        idx = np.round(c * rounds / dt).astype(np.int64)
        if idx[-1] >= len(mfx):
            continue
        d2 = (stats.x_mean - mfx[idx]) ** 2 + (stats.alpha_mean - mfa[idx]) ** 2
        rms = math.sqrt(float(np.mean(d2)))
        if rms < best_rms:
            best_rms = rms
            best_c = float(c)
    return MeanfieldFit(rms=best_rms, dilation=best_c, kappa_meanfield=kappa_mf)


def _analytic_interior(dg: DrunkGame, cfg: AbmConfig) -> tuple[float, float] | None:
    from .equilibria import interior_fixed_points

    analysis_game = DrunkGame(dg.g1, dg.g2, cfg.kappa, QPoly.linear(cfg.mu))
    for fp in interior_fixed_points(analysis_game):
        if fp.kind == "interior" and fp.eigen is not None:
            return fp.state.x, fp.state.alpha
    return None


def run_abm(cfg: AbmConfig, dg: DrunkGame) -> AbmStats:
    """Initialize and run t_max synchronous rounds, deterministically in
    cfg.seed. Only the payoff matrices of dg are used; the perception
    drive comes from cfg (kappa, mu, population mean)."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    pop = init_population(cfg, rng)
    interior = _analytic_interior(dg, cfg)
    rows = cfg.t_max + 1
    out = {name: np.empty(rows) for name in
           ("x_mean", "alpha_mean", "alpha_g1", "alpha_g2", "coop_g1",
            "coop_g2", "delta_alpha", "dist_interior")}
    t = np.arange(rows)
    g1_count = cfg.group1_size
    g2_count = cfg.n_agents - g1_count
    g1_mask = np.arange(cfg.n_agents) < g1_count

    def record(i: int, pop: Population) -> None:
        n = len(pop)
        x_mean = pop.n_coop / n
        a = pop.alphas
        m1 = float(a[g1_mask].mean())
        m2 = float(a[~g1_mask].mean())
        out["x_mean"][i] = x_mean
        out["alpha_mean"][i] = float(a.mean())
        out["alpha_g1"][i] = m1
        out["alpha_g2"][i] = m2
        out["coop_g1"][i] = pop.n_coop_g1 / g1_count
        out["coop_g2"][i] = pop.n_coop_g2 / g2_count
        total = m1 + m2
        out["delta_alpha"][i] = 0.0 if total == 0.0 else min(1.0, max(0.0, (m2 - m1) / total))
        if interior is None:
            out["dist_interior"][i] = math.nan
        else:
            out["dist_interior"][i] = math.hypot(x_mean - interior[0],
                                                 float(a.mean()) - interior[1])

    record(0, pop)
    for i in range(1, rows):
        pop = step_population(pop, dg, cfg, rng)
        record(i, pop)
    return AbmStats(t=t, interior_point=interior, **out)
