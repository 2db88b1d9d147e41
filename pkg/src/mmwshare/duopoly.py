"""Vertically differentiated duopoly with network effects.

Two providers pick inherent qualities q1 > q2, then prices. A type-w consumer
of provider i gets w*q_i + mu*q_i*n~_i - p_i, where n~_i is the provider's own
share (no sharing) or the pooled share n1 + n2 (sharing). Types are uniform on
[0, omega_hat]. Marginal cost of serving a subscriber equals its quality, so
profit is n_i*(p_i - q_i).

Equilibrium prices and qualities are closed forms taken from the vertical
differentiation literature; :func:`best_response_gap` checks them numerically.
"""

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np


class Regime(str, Enum):
    NO_SHARING = "NO_SHARING"
    SHARING = "SHARING"
    MONOPOLY = "MONOPOLY"


class GameError(ValueError):
    """Parameters outside the admissible range, or a degenerate share system."""

    def __init__(self, reason, **context):
        self.reason = reason
        self.context = context
        detail = ", ".join(f"{k}={v!r}" for k, v in context.items())
        super().__init__(f"{reason} ({detail})" if detail else reason)


@dataclass(frozen=True)
class GameParams:
    q_hat: float
    omega_hat: float
    mu: float

    def __post_init__(self):
        if not self.q_hat > 0:
            raise GameError("q_hat must be positive", q_hat=self.q_hat)
        if not self.omega_hat > 1:
            raise GameError("omega_hat must exceed 1", omega_hat=self.omega_hat)
        if not 0 <= self.mu < min(1.0, self.omega_hat / 2):
            raise GameError("need 0 <= mu < min(1, omega_hat/2)", mu=self.mu,
                            omega_hat=self.omega_hat)


@dataclass(frozen=True)
class MarketOutcome:
    omega_over: float   # indifferent between providers 1 and 2
    omega_under: float  # indifferent between provider 2 and not subscribing
    n1: float
    n2: float
    interior: bool

    @property
    def coverage(self) -> float:
        return self.n1 + self.n2


def _share_system(q1, q2, p1, p2, omega_hat, mu, compatible):
    """Coefficients of the linear system in (omega_over, omega_under, n1, n2)."""
    w = omega_hat
    if compatible:
        rows = [[q1 - q2, 0.0, mu * (q1 - q2), mu * (q1 - q2)],
                [0.0, q2, mu * q2, mu * q2]]
    else:
        rows = [[q1 - q2, 0.0, mu * q1, -mu * q2],
                [0.0, q2, 0.0, mu * q2]]
    rows += [[1.0, 0.0, w, 0.0],
             [-1.0, 1.0, 0.0, w]]
    return np.array(rows), np.array([p1 - p2, p2, w, 0.0])


def share_residuals(q1, q2, p1, p2, params: GameParams, compatible, outcome: MarketOutcome):
    """Residuals of the four marginal-consumer and share equations."""
    wo, wu, n1, n2 = outcome.omega_over, outcome.omega_under, outcome.n1, outcome.n2
    m = params.mu
    t1, t2 = (n1 + n2, n1 + n2) if compatible else (n1, n2)
    return np.array([
        (wo * q1 + m * q1 * t1 - p1) - (wo * q2 + m * q2 * t2 - p2),
        wu * q2 + m * q2 * t2 - p2,
        n1 - (params.omega_hat - wo) / params.omega_hat,
        n2 - (wo - wu) / params.omega_hat,
    ])


def solve_shares(q1, q2, p1, p2, params: GameParams, compatible: bool) -> MarketOutcome:
    """Consumer split for given qualities and prices.

    The solution is returned unclamped; `interior` is False whenever
    0 < omega_under < omega_over < omega_hat fails, in which case shares may
    be negative or exceed the market.
    """
    if not q1 > q2 > 0:
        raise GameError("need q1 > q2 > 0", q1=q1, q2=q2)
    A, b = _share_system(q1, q2, p1, p2, params.omega_hat, params.mu, compatible)
    try:
        if not np.linalg.cond(A) < 1e12:
            raise np.linalg.LinAlgError
        wo, wu, n1, n2 = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise GameError("singular share system", q1=q1, q2=q2, mu=params.mu,
                        omega_hat=params.omega_hat, compatible=compatible) from None
    interior = bool(0 < wu < wo < params.omega_hat)
    return MarketOutcome(float(wo), float(wu), float(n1), float(n2), interior)


def uniqueness_threshold(params: GameParams) -> float:
    w, m = params.omega_hat, params.mu
    if m >= w / 2:
        raise GameError("mu must be below omega_hat/2", mu=m, omega_hat=w)
    return w * w / ((w - m) * (w - 2 * m))


def check_uniqueness(q1, q2, params: GameParams) -> bool:
    """Quality-ratio condition for a unique equilibrium with both prices above cost."""
    if not q2 > 0:
        raise GameError("q2 must be positive", q2=q2)
    return bool(q1 / q2 > uniqueness_threshold(params))


@dataclass(frozen=True)
class DuopolyEquilibrium:
    regime: Regime
    params: GameParams
    q1: float
    q2: float
    p1: float
    p2: float
    outcome: MarketOutcome
    pi1: float
    pi2: float
    unique: bool

    @property
    def interior(self) -> bool:
        return self.outcome.interior

    @property
    def feasible(self) -> bool:
        return self.unique and self.interior

    @property
    def compatible(self) -> bool:
        return self.regime is Regime.SHARING


def _quality_ns(p: GameParams) -> float:
    w, m = p.omega_hat, p.mu
    root = math.sqrt(3 * (3 * w * w + 28 * w * m - 20 * m * m))
    return p.q_hat * (w - m) ** 2 * (11 * w - 10 * m - root) / (2 * w * w * (7 * w - 5 * m))


def _quality_s(p: GameParams) -> float:
    w, m = p.omega_hat, p.mu
    return p.q_hat * (4 * w - 3 * m) / (7 * w - 6 * m)


def prices_no_sharing(q1, q2, p: GameParams):
    w, m = p.omega_hat, p.mu
    den = 4 * q1 * (w - m) ** 2 - q2 * w * w
    p1 = q1 * (1 + (w - 1) * (2 * q1 * (w - m) ** 2 - q2 * w * (2 * w - m)) / den)
    p2 = q2 * (1 + (w - 1) * (q1 * (w - m) * (w - 2 * m) - q2 * w * w) / den)
    return p1, p2


def prices_sharing(q1, q2, p: GameParams):
    w, m = p.omega_hat, p.mu
    den = (4 * w - 3 * m) * q1 - w * q2
    p1 = q1 * (1 + 2 * w * (w - 1) * (q1 - q2) / den)
    p2 = q2 * (1 + w * (w - 1) * (q1 - q2) / den)
    return p1, p2


def _duopoly(regime, params, q2, prices):
    q1 = params.q_hat
    p1, p2 = prices(q1, q2, params)
    out = solve_shares(q1, q2, p1, p2, params, regime is Regime.SHARING)
    return DuopolyEquilibrium(regime, params, q1, q2, p1, p2, out,
                              out.n1 * (p1 - q1), out.n2 * (p2 - q2),
                              check_uniqueness(q1, q2, params))


def equilibrium_no_sharing(params: GameParams) -> DuopolyEquilibrium:
    return _duopoly(Regime.NO_SHARING, params, _quality_ns(params), prices_no_sharing)


def equilibrium_sharing(params: GameParams) -> DuopolyEquilibrium:
    return _duopoly(Regime.SHARING, params, _quality_s(params), prices_sharing)


def equilibrium_monopoly(params: GameParams) -> DuopolyEquilibrium:
    """Single provider at quality q_hat and price q_hat (omega_hat - 1)/2."""
    q1, w, m = params.q_hat, params.omega_hat, params.mu
    p1 = q1 * (w - 1) / 2
    n1 = (w * q1 - p1) / (q1 * (w - m))
    wo = w * (1 - n1)
    out = MarketOutcome(wo, float("nan"), n1, 0.0, bool(0 < wo < w))
    nan = float("nan")
    return DuopolyEquilibrium(Regime.MONOPOLY, params, q1, nan, p1, nan, out,
                              n1 * (p1 - q1), nan, True)


def equilibrium(params: GameParams, regime) -> DuopolyEquilibrium:
    regime = Regime(regime)
    return {Regime.NO_SHARING: equilibrium_no_sharing,
            Regime.SHARING: equilibrium_sharing,
            Regime.MONOPOLY: equilibrium_monopoly}[regime](params)


def _profits_batch(eq: DuopolyEquilibrium, p1, p2):
    """Profits of both providers for arrays of prices at fixed qualities."""
    A, _ = _share_system(eq.q1, eq.q2, 0.0, 0.0, eq.params.omega_hat, eq.params.mu,
                         eq.compatible)
    p1, p2 = np.broadcast_arrays(np.asarray(p1, float), np.asarray(p2, float))
    b = np.stack([p1 - p2, p2, np.full_like(p1, eq.params.omega_hat), np.zeros_like(p1)], -1)
    x = np.linalg.solve(A, b.T).T
    return x[:, 2] * (p1 - eq.q1), x[:, 3] * (p2 - eq.q2)


def best_response_gap(eq: DuopolyEquilibrium, span: float = 0.10, points: int = 2001):
    """Largest profit gain from a unilateral price change within +-span.

    Returns (gain1, gain2); both should be ~0 at a Nash equilibrium.
    """
    if eq.regime is Regime.MONOPOLY:
        raise ValueError("best-response check applies to duopoly regimes")
    g = np.linspace(1 - span, 1 + span, points)
    pi1, _ = _profits_batch(eq, eq.p1 * g, eq.p2)
    _, pi2 = _profits_batch(eq, eq.p1, eq.p2 * g)
    return float(pi1.max() - eq.pi1), float(pi2.max() - eq.pi2)


DEFAULT_MU = (0.7, 0.25, 0.4)
DEFAULT_OMEGA = tuple(float(x) for x in np.round(np.arange(1.5, 4.0 + 1e-9, 0.05), 2))


@dataclass(frozen=True)
class SweepRow:
    omega_hat: float
    mu: float
    regime: str
    q2: float
    p1: float
    p2: float
    n1: float
    n2: float
    coverage: float
    pi1: float
    pi2: float
    uniqueness_flag: bool
    interior_flag: bool
    reason: str = ""

    @property
    def admissible(self) -> bool:
        """Parameters valid; the flags may still fail."""
        return not self.reason

    @property
    def feasible(self) -> bool:
        """Admissible with a unique interior equilibrium."""
        return self.admissible and self.uniqueness_flag and self.interior_flag

    def as_dict(self):
        return asdict(self)


SWEEP_COLUMNS = tuple(SweepRow.__dataclass_fields__)


def sweep(omega_grid=DEFAULT_OMEGA, mu_set=DEFAULT_MU, q_hat: float = 1.5):
    """Equilibria of all three regimes on an (omega_hat, mu) grid.

    Cells outside the admissible parameter range produce rows with NaN
    values and the reason recorded; nothing is dropped silently.
    """
    omega_grid, mu_set = list(omega_grid), list(mu_set)
    if not omega_grid or not mu_set:
        raise ValueError("sweep grids must be nonempty")
    nan = float("nan")
    rows = []
    for mu in mu_set:
        for w in omega_grid:
            try:
                params = GameParams(q_hat, w, mu)
            except GameError as exc:
                for reg in Regime:
                    rows.append(SweepRow(w, mu, reg.value, *([nan] * 8), False, False, exc.reason))
                continue
            for reg in Regime:
                eq = equilibrium(params, reg)
                o = eq.outcome
                rows.append(SweepRow(w, mu, reg.value, eq.q2, eq.p1, eq.p2, o.n1, o.n2,
                                     o.coverage, eq.pi1, eq.pi2, eq.unique, o.interior))
    return rows
