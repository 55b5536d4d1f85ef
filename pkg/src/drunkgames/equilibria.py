"""Fixed points of a drunk game and their stability.

Boundary equilibria come from the single games plus the perception drive;
interior equilibria sit on roots of q where the two incentives disagree
in sign. All classification goes through the eigenvalue pair, written as
u +/- i sqrt(v) (v > 0) or u +/- sqrt(-v) (v <= 0) with u the shared real
part and v = det(J) - u^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np

from .dynamics import State, raw_field
from .games import DegenerateGameError, DrunkGame, fear_greed, single_game_fixed_points

ZERO_TOL = 1e-9

FixedPointKind = Literal["corner", "edge_alpha0", "edge_alpha1", "edge_x0", "edge_x1", "interior"]


class StabilityClass(Enum):
    STABLE_NODE = "stable_node"
    UNSTABLE_NODE = "unstable_node"
    SADDLE = "saddle"
    STABLE_SPIRAL = "stable_spiral"
    UNSTABLE_SPIRAL = "unstable_spiral"
    CENTER = "center"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class EigenSummary:
    """u is the shared real part, v = det(J) - u^2, so the eigenvalues are
    u +/- i sqrt(v) for v > 0 and u +/- sqrt(-v) otherwise."""

    u: float
    v: float
    lambda1: complex
    lambda2: complex


@dataclass(frozen=True)
class FixedPoint:
    state: State
    kind: FixedPointKind
    stability: StabilityClass
    eigen: EigenSummary | None
    # sign-rule verdict for points on the alpha edges (None elsewhere):
    # stable on alpha=0 iff x stable in g1 and q(x)<0; on alpha=1 iff
    # x stable in g2 and q(x)>0.
    sign_rule_stable: bool | None = None
    note: str | None = None


def _eigen_from_uv(u: float, v: float) -> EigenSummary:
    if v > 0.0:
        root = math.sqrt(v)
        return EigenSummary(u, v, complex(u, root), complex(u, -root))
    root = math.sqrt(-v)
    return EigenSummary(u, v, complex(u + root, 0.0), complex(u - root, 0.0))


def _classify_eigen(e: EigenSummary, tol: float = ZERO_TOL) -> StabilityClass:
    if abs(e.lambda1.imag) > tol:
        if e.u < -tol:
            return StabilityClass.STABLE_SPIRAL
        if e.u > tol:
            return StabilityClass.UNSTABLE_SPIRAL
        return StabilityClass.CENTER
    l1, l2 = e.lambda1.real, e.lambda2.real
    if abs(l1) <= tol or abs(l2) <= tol:
        return StabilityClass.DEGENERATE
    if l1 < 0.0 and l2 < 0.0:
        return StabilityClass.STABLE_NODE
    if l1 > 0.0 and l2 > 0.0:
        return StabilityClass.UNSTABLE_NODE
    return StabilityClass.SADDLE


def numeric_jacobian(dg: DrunkGame, s: State, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the field at a state.

    The field is polynomial, so stencil points just outside the unit
    square evaluate exactly; no one-sided fallback is needed at edges.
    """
    if h <= 0.0:
        raise ValueError(f"h must be positive, got {h}")
    x, a = s.x, s.alpha
    fxp = raw_field(dg, x + h, a)
    fxm = raw_field(dg, x - h, a)
    fap = raw_field(dg, x, a + h)
    fam = raw_field(dg, x, a - h)
    return np.array([
        [(fxp[0] - fxm[0]) / (2.0 * h), (fap[0] - fam[0]) / (2.0 * h)],
        [(fxp[1] - fxm[1]) / (2.0 * h), (fap[1] - fam[1]) / (2.0 * h)],
    ])


def eigen_from_jacobian(jac: np.ndarray) -> EigenSummary:
    tr = float(jac[0, 0] + jac[1, 1])
    det = float(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
    u = tr / 2.0
    return _eigen_from_uv(u, det - u * u)


def interior_eigen(dg: DrunkGame, x_tilde: float, alpha_tilde: float) -> EigenSummary:
    """Closed-form eigenvalue data of an interior fixed point."""
    fg1 = fear_greed(dg.g1)
    fg2 = fear_greed(dg.g2)
    h1 = (1.0 - x_tilde) * fg1.fear + x_tilde * fg1.greed
    h2 = (1.0 - x_tilde) * fg2.fear + x_tilde * fg2.greed
    qv, qd = dg.q.eval_with_derivative(x_tilde)
    if abs(qv) > ZERO_TOL or abs((1.0 - alpha_tilde) * h1 + alpha_tilde * h2) > ZERO_TOL:
        raise ValueError(f"({x_tilde}, {alpha_tilde}) is not an interior fixed point")
    if abs(h1) <= ZERO_TOL:
        raise DegenerateGameError("h1 vanishes at the root; eigenvalue form undefined")
    xi = x_tilde * (1.0 - x_tilde)
    u = (xi * alpha_tilde / 2.0) * (fg2.fear * fg1.greed - fg1.fear * fg2.greed) / h1
    v = dg.kappa * xi * alpha_tilde * h2 * qd - u * u
    return _eigen_from_uv(u, v)


def attractive_interior_condition(dg: DrunkGame) -> bool:
    """Whether game 1's fear/greed ratio strictly exceeds game 2's, the
    condition under which the interior point attracts."""
    fg1 = fear_greed(dg.g1)
    fg2 = fear_greed(dg.g2)
    if fg1.greed == 0.0 or fg2.greed == 0.0:
        raise DegenerateGameError("fear/greed ratio undefined for zero greed")
    return fg1.fear / fg1.greed > fg2.fear / fg2.greed


def _q_roots_in_unit_interval(dg: DrunkGame) -> list[float]:
    """Roots of q in (0, 1): closed form for linear q, otherwise a
    1024-point sign-change scan refined by bisection to 1e-12.
    Even-multiplicity roots that touch zero without a sign change are
    not detected."""
    if dg.q.is_zero:
        return []  # no isolated roots; alpha is frozen everywhere
    c = dg.q.coefficients
    if len(c) == 2 and c[1] != 0.0:
        root = -c[0] / c[1]
        return [root] if 0.0 < root < 1.0 else []
    n = 1024
    xs = [i / n for i in range(n + 1)]
    vals = [dg.q(x) for x in xs]
    roots: list[float] = []
    for i in range(n):
        lo, hi = xs[i], xs[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        if flo == 0.0 and 0.0 < lo < 1.0:
            roots.append(lo)
            continue
        if flo * fhi < 0.0:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fmid = dg.q(mid)
                if fmid == 0.0 or hi - lo < 1e-12:
                    lo = hi = mid
                    break
                if flo * fmid < 0.0:
                    hi, fhi = mid, fmid
                else:
                    lo, flo = mid, fmid
            root = 0.5 * (lo + hi)
            if 0.0 < root < 1.0:
                roots.append(root)
    deduped: list[float] = []
    for r in sorted(roots):
        if not deduped or r - deduped[-1] > 1e-10:
            deduped.append(r)
    return deduped


def interior_fixed_points(dg: DrunkGame) -> list[FixedPoint]:
    """Interior equilibria (x, alpha) with alpha = h1/(h1-h2) at each root
    x of q where h1 and h2 have strictly opposite signs.

    Roots where either incentive vanishes are reported as degenerate
    entries (their alpha lands on an edge) rather than dropped.
    """
    out: list[FixedPoint] = []
    fg1 = fear_greed(dg.g1)
    fg2 = fear_greed(dg.g2)
    for x in _q_roots_in_unit_interval(dg):
        h1 = (1.0 - x) * fg1.fear + x * fg1.greed
        h2 = (1.0 - x) * fg2.fear + x * fg2.greed
        if abs(h1) <= ZERO_TOL or abs(h2) <= ZERO_TOL:
            if abs(h1) <= ZERO_TOL and abs(h2) <= ZERO_TOL:
                alpha, kind = 0.5, "interior"
                note = "degenerate root: both incentives vanish, every alpha is fixed"
            elif abs(h2) <= ZERO_TOL:
                alpha, kind = 1.0, "edge_alpha1"
                note = "degenerate root: h2 vanishes"
            else:
                alpha, kind = 0.0, "edge_alpha0"
                note = "degenerate root: h1 vanishes"
            out.append(FixedPoint(State(x, alpha), kind, StabilityClass.DEGENERATE,
                                  eigen=None, note=note))
            continue
        if h1 * h2 > 0.0:
            continue
        alpha = h1 / (h1 - h2)
        eig = interior_eigen(dg, x, alpha)
        out.append(FixedPoint(State(x, alpha), "interior", _classify_eigen(eig), eig))
    return out


def _edge_sign_rule(dg: DrunkGame, x: float, on_alpha1: bool) -> bool | None:
    """Stability verdict of the boundary sign rule, None when the single
    game is degenerate."""
    g = dg.g2 if on_alpha1 else dg.g1
    try:
        pts = single_game_fixed_points(g)
    except DegenerateGameError:
        return None
    stable_in_game = any(abs(p.x - x) <= 1e-9 and p.stable for p in pts)
    qv = dg.q(x)
    if on_alpha1:
        return stable_in_game and qv > 0.0
    return stable_in_game and qv < 0.0


def _classified_boundary_point(dg: DrunkGame, x: float, alpha: float,
                               kind: FixedPointKind, note: str | None = None) -> FixedPoint:
    jac = numeric_jacobian(dg, State(x, alpha))
    eig = eigen_from_jacobian(jac)
    rule = _edge_sign_rule(dg, x, alpha == 1.0) if alpha in (0.0, 1.0) else None
    return FixedPoint(State(x, alpha), kind, _classify_eigen(eig), eig,
                      sign_rule_stable=rule, note=note)


def boundary_fixed_points(dg: DrunkGame) -> list[FixedPoint]:
    """Corners, single-game interior roots lifted to the alpha edges, and
    (only when q vanishes at x=0 or x=1) representatives of the fixed
    vertical edges. Classification is by numeric-Jacobian eigenvalues;
    the boundary sign rule is attached for cross-checking."""
    pts = [
        _classified_boundary_point(dg, 0.0, 0.0, "corner"),
        _classified_boundary_point(dg, 1.0, 0.0, "corner"),
        _classified_boundary_point(dg, 0.0, 1.0, "corner"),
        _classified_boundary_point(dg, 1.0, 1.0, "corner"),
    ]
    for matrix, alpha, kind in ((dg.g1, 0.0, "edge_alpha0"), (dg.g2, 1.0, "edge_alpha1")):
        try:
            singles = single_game_fixed_points(matrix)
        except DegenerateGameError:
            pts.append(FixedPoint(State(0.5, alpha), kind, StabilityClass.DEGENERATE, None,
                                  note="degenerate single game: the whole edge is fixed"))
            continue
        for p in singles:
            if 0.0 < p.x < 1.0:
                pts.append(_classified_boundary_point(dg, p.x, alpha, kind))
    for x, kind in ((0.0, "edge_x0"), (1.0, "edge_x1")):
        if abs(dg.q(x)) <= ZERO_TOL:
            pts.append(_classified_boundary_point(
                dg, x, 0.5, kind,
                note="q vanishes here: every alpha on this edge is fixed; "
                     "one representative reported"))
    return pts


def all_fixed_points(dg: DrunkGame) -> list[FixedPoint]:
    """Boundary and interior equilibria, deduplicated and sorted by
    (x, alpha)."""
    merged: list[FixedPoint] = []
    for fp in boundary_fixed_points(dg) + interior_fixed_points(dg):
        dup = any(abs(fp.state.x - m.state.x) <= 1e-9
                  and abs(fp.state.alpha - m.state.alpha) <= 1e-9 for m in merged)
        if not dup:
            merged.append(fp)
    merged.sort(key=lambda fp: (fp.state.x, fp.state.alpha))
    return merged


def report(dg: DrunkGame) -> list[dict]:
    """JSON-ready equilibria report."""
    rows = []
    for fp in all_fixed_points(dg):
        e = fp.eigen
        rows.append({
            "x": fp.state.x,
            "alpha": fp.state.alpha,
            "kind": fp.kind,
            "stability": fp.stability.value,
            "u": e.u if e else None,
            "v": e.v if e else None,
            "lambda1_re": e.lambda1.real if e else None,
            "lambda1_im": e.lambda1.imag if e else None,
            "lambda2_re": e.lambda2.real if e else None,
            "lambda2_im": e.lambda2.imag if e else None,
            "sign_rule_stable": fp.sign_rule_stable,
        })
    return rows
