"""Fulfilled-expectations demand for a network good with uniform consumer types.

Consumer types are uniform on [0, omega_hat]. A consumer of type w buying at
price p when the network has size n gets w*h(n) - p, so the marginal buyer at
size n has type omega_hat*(1 - n) and the self-consistent price is
p(n; n) = omega_hat*(1 - n)*h(n).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .externality import ExternalityCurve

XTOL = 1e-10  # root / argmax tolerance in n (reported results are good to 1e-8)


def surplus(omega, n, p, h):
    """Utility of a type-omega consumer paying p on a network of size n.

    `h` may be a callable or an already evaluated externality value.
    """
    hn = h(n) if callable(h) else h
    return omega * hn - p


@dataclass
class DemandCurve:
    n: np.ndarray
    p: np.ndarray
    revenue: np.ndarray
    h: object  # callable h(n)
    omega_hat: float = 1.0

    def price(self, x):
        """p(x; x) evaluated through h directly (no resampling of the grid)."""
        x = np.asarray(x, dtype=float)
        out = self.omega_hat * (1.0 - x) * np.asarray(self.h(x), dtype=float)
        return out if out.ndim else float(out)


def fe_demand(h, omega_hat: float = 1.0, grid=None) -> DemandCurve:
    """Tabulate p(n; n) = omega_hat (1 - n) h(n) and revenue n p(n; n).

    An :class:`ExternalityCurve` is interpolated linearly and tabulated on its
    own grid unless `grid` is given; any other callable is used as is.
    """
    if omega_hat <= 0:
        raise ValueError("omega_hat must be positive")
    if grid is None:
        grid = h.n if isinstance(h, ExternalityCurve) else np.linspace(0.0, 1.0, 1001)
    n = np.asarray(grid, dtype=float)
    if n.size == 0 or n.min() < 0 or n.max() > 1 or np.any(np.diff(n) <= 0):
        raise ValueError("grid must be nonempty, strictly increasing and inside [0, 1]")
    p = omega_hat * (1.0 - n) * np.asarray(h(n), dtype=float)
    return DemandCurve(n, p, n * p, h, float(omega_hat))


def _refine_max(f, grid, values):
    """Grid argmax of f (smallest n on ties) refined by golden-section search."""
    i = int(np.argmax(values))  # first occurrence = smallest n
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best_x, best_v = float(grid[i]), float(values[i])
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: -f(x), bracket=None, bounds=(lo, hi),
                                       method="bounded", options={"xatol": XTOL})
        x = float(res.x)
        if f(x) > best_v + 1e-15 or (abs(f(x) - best_v) <= 1e-15 and x < best_x):
            best_x, best_v = x, float(f(x))
    return best_x, best_v


def critical_mass(demand: DemandCurve, refined: bool = True) -> float:
    """Network size maximizing p(n; n)."""
    if demand.n.size == 0:
        raise ValueError("empty demand curve")
    if not refined:
        return float(demand.n[int(np.argmax(demand.p))])
    return _refine_max(demand.price, demand.n, demand.p)[0]


@dataclass(frozen=True)
class EquilibriumPoint:
    n: float
    kind: str  # "zero", "tipping", "stable", "tangency"
    stable: bool


@dataclass
class EquilibriumSet:
    """Equilibria at one marginal cost.

    `n_prime` and `n_double_prime` are the infimum and supremum of the sizes
    with p(n; n) >= c (None when the cost exceeds the whole curve).
    """

    cost: float
    points: list
    n_prime: object
    n_double_prime: object
    critical_mass: float
    max_price: float
    critical_mass_grid: float
    monopoly_n: float = float("nan")
    monopoly_profit: float = float("nan")
    meta: dict = field(default_factory=dict)

    def by_kind(self, kind):
        return [pt.n for pt in self.points if pt.kind == kind]

    @property
    def tipping(self):
        return self.n_prime

    @property
    def upper(self):
        return self.n_double_prime

    def to_dict(self) -> dict:
        return {
            "c": self.cost,
            "n_prime": self.n_prime,
            "n_double_prime": self.n_double_prime,
            "n0": self.critical_mass,
            "n0_grid": self.critical_mass_grid,
            "max_price": self.max_price,
            "monopoly_n": self.monopoly_n,
            "monopoly_profit": self.monopoly_profit,
            "equilibria": [{"n": pt.n, "kind": pt.kind,
                            "stability": "stable" if pt.stable else "unstable"}
                           for pt in self.points],
        }


def _crossing(f, a, b):
    """Root of f on [a, b] by bisection, given a sign change."""
    return float(optimize.bisect(f, a, b, xtol=XTOL, maxiter=200))


def equilibria(demand: DemandCurve, c: float) -> EquilibriumSet:
    """Competitive equilibria at marginal cost c.

    n = 0 is always reported. When c lies below the peak of the demand curve,
    the first size with p >= c is the unstable tipping point and the last is
    the stable upper equilibrium. If demand at zero size already exceeds c
    (possible when h(0) > 0) there is no tipping point: n = 0 is then
    unstable and the market grows to the upper equilibrium from any start.
    """
    if c < 0:
        raise ValueError("marginal cost must be nonnegative")
    n0, pmax = _refine_max(demand.price, demand.n, demand.p)
    n0_grid = critical_mass(demand, refined=False)
    p_zero = demand.price(0.0)

    g = lambda x: demand.price(x) - c
    # include the refined peak so a sub-grid hump is never missed
    xs = np.unique(np.concatenate([demand.n, [n0]]))
    vs = np.array([g(x) for x in xs])
    above = np.flatnonzero(vs >= 0)

    points = [EquilibriumPoint(0.0, "zero", not p_zero > c)]
    lo = hi = None
    if above.size and abs(pmax - c) > 1e-12:
        i, j = above[0], above[-1]
        lo = float(xs[0]) if i == 0 else _crossing(g, xs[i - 1], xs[i])
        hi = float(xs[-1]) if j == xs.size - 1 else _crossing(g, xs[j], xs[j + 1])
        if not p_zero > c:
            # with p(0) = c = 0 the tipping point merges into n = 0
            points.append(EquilibriumPoint(lo, "tipping", False))
        points.append(EquilibriumPoint(hi, "stable", True))
    elif abs(pmax - c) <= 1e-12 and pmax > 0:
        lo = hi = float(n0)
        points.append(EquilibriumPoint(lo, "tangency", True))

    mono = optimize_monopoly(demand, c)
    return EquilibriumSet(float(c), points, lo, hi, float(n0), float(pmax), float(n0_grid),
                          mono[0], mono[1], {"omega_hat": demand.omega_hat})


def optimize_monopoly(demand: DemandCurve, c: float):
    """(n, profit) maximizing n (p(n; n) - c) for a single producer."""
    f = lambda x: x * (demand.price(x) - c)
    vals = demand.n * (demand.p - c)
    return _refine_max(f, demand.n, vals)
