"""Single-game primitives and the coupled-game container.

A two-player two-strategy symmetric game is a payoff matrix (R, S, T, P).
Two such games coupled through a perception state form a drunk game: each
individual perceives the second game with probability alpha, and alpha
drifts with the population's behavior through a polynomial drive q(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class DegenerateGameError(ValueError):
    """Raised where a quantity the operation divides by vanishes."""


@dataclass(frozen=True)
class PayoffMatrix:
    """Payoffs of one perception: R (mutual cooperation), S (sucker),
    T (temptation), P (mutual defection)."""

    R: float
    S: float
    T: float
    P: float

    def __post_init__(self):
        for name in ("R", "S", "T", "P"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"payoff {name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))


def normalized(S: float, T: float) -> PayoffMatrix:
    """Matrix in the standard normalization R=1, P=0."""
    return PayoffMatrix(R=1.0, S=S, T=T, P=0.0)


@dataclass(frozen=True)
class GameClass:
    """Quadrant of the T-S plane, a pure function of sign(T-R), sign(S-P).

    Boundary classes record which equalities put the game on a quadrant
    edge, so parameter sweeps can touch the edges without failing.
    """

    name: str
    t_equals_r: bool = False
    s_equals_p: bool = False

    def __str__(self):
        if self.name != "Boundary":
            return self.name
        ties = [s for s, hit in (("T=R", self.t_equals_r), ("S=P", self.s_equals_p)) if hit]
        return "Boundary(" + ",".join(ties) + ")"


PD = GameClass("PD")
SD = GameClass("SD")
SH = GameClass("SH")
HG = GameClass("HG")


def classify_game(m: PayoffMatrix) -> GameClass:
    """Classify by the strict signs of T-R and S-P; ties are Boundary."""
    dt = m.T - m.R
    ds = m.S - m.P
    if dt == 0.0 or ds == 0.0:
        return GameClass("Boundary", t_equals_r=(dt == 0.0), s_equals_p=(ds == 0.0))
    if dt > 0.0:
        return PD if ds < 0.0 else SD
    return SH if ds < 0.0 else HG


@dataclass(frozen=True)
class FearGreed:
    """fear = P - S (cost of cooperating against a defector);
    greed = T - R (gain from defecting against a cooperator)."""

    fear: float
    greed: float


def fear_greed(m: PayoffMatrix) -> FearGreed:
    return FearGreed(fear=m.P - m.S, greed=m.T - m.R)


def incentive_to_defect(m: PayoffMatrix, x: float) -> float:
    """Net advantage of defection at cooperator fraction x:
    h(x) = (1-x)*fear + x*greed."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    fg = fear_greed(m)
    return (1.0 - x) * fg.fear + x * fg.greed


@dataclass(frozen=True)
class SingleEquilibrium:
    """Root of the single-game replicator flow dx/dt = -x(1-x)h(x)."""

    x: float
    stable: bool


def single_game_fixed_points(m: PayoffMatrix) -> list[SingleEquilibrium]:
    """All replicator equilibria of one game, sorted by x.

    Corners x=0 and x=1 are always present; an interior root
    x* = fear / (fear - greed) exists when fear and greed have strictly
    opposite signs, stable exactly in the snowdrift configuration
    (fear < 0 < greed).
    """
    fg = fear_greed(m)
    f, g = fg.fear, fg.greed
    if f == 0.0 and g == 0.0:
        raise DegenerateGameError("h(x) vanishes identically, every x is an equilibrium")
    # sign of dx/dt just inside each corner; first nonzero of (f, g) decides at 0
    stable0 = f > 0.0 or (f == 0.0 and g > 0.0)
    stable1 = g < 0.0 or (g == 0.0 and f < 0.0)
    points = [SingleEquilibrium(0.0, stable0)]
    if (f < 0.0 < g) or (g < 0.0 < f):
        points.append(SingleEquilibrium(f / (f - g), stable=f < 0.0 < g))
    points.append(SingleEquilibrium(1.0, stable1))
    return points


@dataclass(frozen=True)
class QPoly:
    """Polynomial drive q(x) = sum c_i x^i for the perception dynamics.

    The zero polynomial is allowed and freezes alpha, which recovers a
    static mixture of the two games.
    """

    coefficients: tuple[float, ...]

    def __init__(self, coefficients):
        coeffs = tuple(float(c) for c in coefficients)
        if not coeffs:
            raise ValueError("q(x) needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("q(x) coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def linear(cls, mu: float) -> "QPoly":
        """q(x) = x - mu."""
        return cls((-mu, 1.0))

    @classmethod
    def zero(cls) -> "QPoly":
        return cls((0.0,))

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coefficients)

    def __call__(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def eval_with_derivative(self, x: float) -> tuple[float, float]:
        """(q(x), q'(x)) by a combined Horner pass."""
        c = self.coefficients
        p = c[-1]
        dp = 0.0
        for ci in reversed(c[:-1]):
            dp = dp * x + p
            p = p * x + ci
        return p, dp


@dataclass(frozen=True)
class DrunkGame:
    """Two payoff matrices coupled by the perception drive.

    alpha is each individual's probability of perceiving g2; it evolves as
    dalpha/dt = kappa * alpha * (1 - alpha) * q(x).
    """

    g1: PayoffMatrix
    g2: PayoffMatrix
    kappa: float = 1.0
    q: QPoly = field(default_factory=lambda: QPoly.linear(0.5))

    def __post_init__(self):
        if not (isinstance(self.kappa, (int, float)) and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite, got {self.kappa!r}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))


PRESET_NAMES = ("pub_dilemma", "drunk_prisoner", "battle")

# Snowdrift temptation for the battle preset. The coordination-battle
# analysis (critical S1 = 0.5, the line of equilibria at x = 0.5, the
# sign-rule stability boundary x* < mu) is consistent only with T = 1.5;
# see the interior root x* = S/(S+T-1) crossing mu = 0.5 at S = 0.5.
BATTLE_T_SD = 1.5


def preset(name: str, params: dict | None = None) -> DrunkGame:
    """Named game pairs with fixed payoffs.

    pub_dilemma    PD(S=-0.5, T=1.5) + HG(S=0.5, T=0.5), no free payoffs.
    drunk_prisoner HG(S=s, T=s) + PD(S=-1, T=2), requires s in [0, 1].
    battle         SD(S=s1, T=1.5) + SH(S=-0.5, T=0.5), requires s1 in [0, 1].

    All accept optional kappa (default 1) and mu (default 0.5, linear q).
    """
    params = dict(params or {})
    kappa = float(params.pop("kappa", 1.0))
    mu = float(params.pop("mu", 0.5))
    q = QPoly.linear(mu)
    if name == "pub_dilemma":
        game = DrunkGame(normalized(-0.5, 1.5), normalized(0.5, 0.5), kappa, q)
    elif name == "drunk_prisoner":
        if "s" not in params:
            raise ValueError("drunk_prisoner needs parameter 's' (= S_HG = T_HG)")
        s = float(params.pop("s"))
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"drunk_prisoner parameter s must lie in [0, 1], got {s}")
        game = DrunkGame(normalized(s, s), normalized(-1.0, 2.0), kappa, q)
    elif name == "battle":
        if "s1" not in params:
            raise ValueError("battle needs parameter 's1' (= S_SD)")
        s1 = float(params.pop("s1"))
        if not 0.0 <= s1 <= 1.0:
            raise ValueError(f"battle parameter s1 must lie in [0, 1], got {s1}")
        game = DrunkGame(normalized(s1, BATTLE_T_SD), normalized(-0.5, 0.5), kappa, q)
    else:
        raise ValueError(f"unknown preset {name!r}, expected one of {PRESET_NAMES}")
    if params:
        raise ValueError(f"unknown preset parameters: {sorted(params)}")
    return game
