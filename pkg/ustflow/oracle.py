"""Exact small-scale transport oracles.

Entropy partial transport with entropy ``|s - 1|`` is solved as a balanced
transportation problem on the graph plus one extra point, the sink. Mass sent to the
sink is destroyed at cost ``w1(x)``, mass drawn from it is created at cost ``w2(y)``,
and the sink matches with itself for free. The transportation problem is solved with
a MODI (u-v) transportation simplex started from the northwest corner.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    CertificateError,
    DegenerateCycling,
    InvalidParams,
    InvalidWeightSlope,
    NegativeMass,
    Unbalanced,
    UnbalancedMasses,
)
from .graph import PhysicalGraph, distances_from
from .measure import DiscreteMeasure
from .ust import UstParams

logger = logging.getLogger(__name__)

SINK = "sink"
CERTIFY_TOL = 1e-8
# consecutive zero-step pivots tolerated under Dantzig pricing before switching to Bland's rule
DEGENERATE_STREAK = 50

Tag = Union[int, str]

__all__ = [
    "SINK",
    "TransportInstance",
    "TransportSolution",
    "EtResult",
    "SweepPoint",
    "WcmResult",
    "solve_transportation",
    "extend_problem",
    "solve_et",
    "et_lambda",
    "wasserstein",
    "solve_wasserstein",
    "mass_sweep",
    "partial_transport",
]


@dataclass(frozen=True, eq=False)
class TransportInstance:
    """Balanced transportation problem: ``supply[i]`` rows, ``demand[j]`` columns."""

    supply_tags: tuple[Tag, ...]
    supply: np.ndarray
    demand_tags: tuple[Tag, ...]
    demand: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        m, n = len(self.supply), len(self.demand)
        if self.cost.shape != (m, n):
            raise ValueError(f"cost has shape {self.cost.shape}, expected {(m, n)}")
        if len(self.supply_tags) != m or len(self.demand_tags) != n:
            raise ValueError("tags must match supplies and demands")
        if m == 0 or n == 0:
            raise ValueError("a transportation problem needs at least one row and one column")
        if (self.supply < 0).any() or (self.demand < 0).any():
            raise NegativeMass("supplies and demands must be >= 0")
        sa, sb = math.fsum(self.supply.tolist()), math.fsum(self.demand.tolist())
        if abs(sa - sb) > 1e-12 * max(abs(sa), abs(sb)):
            raise Unbalanced(f"total supply {sa!r} differs from total demand {sb!r}")

    @property
    def supplies(self) -> list[tuple[Tag, float]]:
        return list(zip(self.supply_tags, self.supply.tolist()))

    @property
    def demands(self) -> list[tuple[Tag, float]]:
        return list(zip(self.demand_tags, self.demand.tolist()))


@dataclass(frozen=True, eq=False)
class TransportSolution:
    value: float
    plan: np.ndarray
    dual_u: np.ndarray
    dual_v: np.ndarray
    iterations: int = 0

    def dual_value(self, inst: TransportInstance) -> float:
        return float(self.dual_u @ inst.supply + self.dual_v @ inst.demand)

    def dual_gap(self, inst: TransportInstance) -> float:
        return abs(self.value - self.dual_value(inst))

    def certify(self, inst: TransportInstance, tol: float = CERTIFY_TOL) -> None:
        """Check primal feasibility, dual feasibility and complementary slackness.

        Tolerances scale with the largest cost and the total mass.
        """
        scale = max(1.0, float(np.abs(inst.cost).max()))
        mass = max(1.0, float(inst.supply.sum()))
        plan = self.plan
        if (plan < -tol * mass).any():
            raise CertificateError("plan has negative entries")
        if np.abs(plan.sum(axis=1) - inst.supply).max() > tol * mass:
            raise CertificateError("plan row sums do not match the supplies")
        if np.abs(plan.sum(axis=0) - inst.demand).max() > tol * mass:
            raise CertificateError("plan column sums do not match the demands")
        reduced = inst.cost - self.dual_u[:, None] - self.dual_v[None, :]
        if reduced.min() < -tol * scale:
            raise CertificateError(f"dual infeasible by {-reduced.min()!r}")
        if (np.abs(reduced[plan > tol * mass]) > tol * scale).any():
            raise CertificateError("complementary slackness violated")
        if self.dual_gap(inst) > tol * scale * mass:
            raise CertificateError(f"duality gap {self.dual_gap(inst)!r}")


# --- transportation simplex ---

def _northwest_corner(supply: np.ndarray, demand: np.ndarray):
    m, n = len(supply), len(demand)
    ra, rb = supply.astype(np.float64).copy(), demand.astype(np.float64).copy()
    plan = np.zeros((m, n))
    basis = []
    i = j = 0
    while True:
        if i == m - 1:
            x = rb[j]
        elif j == n - 1:
            x = ra[i]
        else:
            x = min(ra[i], rb[j])
        x = max(x, 0.0)
        plan[i, j] = x
        ra[i] -= x
        rb[j] -= x
        basis.append((i, j))
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return plan, basis


def _adjacency(basis, m: int, n: int):
    row_adj = [[] for _ in range(m)]
    col_adj = [[] for _ in range(n)]
    for i, j in basis:
        row_adj[i].append(j)
        col_adj[j].append(i)
    return row_adj, col_adj


def _duals(cost: np.ndarray, row_adj, col_adj):
    """Potentials with ``u[0] = 0`` and ``u[i] + v[j] = cost[i, j]`` on the basis tree."""
    m, n = len(row_adj), len(col_adj)
    u = np.zeros(m)
    v = np.zeros(n)
    seen_r = np.zeros(m, dtype=bool)
    seen_c = np.zeros(n, dtype=bool)
    seen_r[0] = True
    queue = deque([(0, True)])
    while queue:
        k, is_row = queue.popleft()
        if is_row:
            for j in row_adj[k]:
                if not seen_c[j]:
                    v[j] = cost[k, j] - u[k]
                    seen_c[j] = True
                    queue.append((j, False))
        else:
            for i in col_adj[k]:
                if not seen_r[i]:
                    u[i] = cost[i, k] - v[k]
                    seen_r[i] = True
                    queue.append((i, True))
    return u, v


def _cycle(row_adj, col_adj, p: int, q: int):
    """Basis cells on the tree path from row ``p`` to column ``q``.

    Cells come back ordered from column ``q`` towards row ``p``, so after entering
    cell ``(p, q)`` they take signs ``-, +, -, ...``.
    """
    m = len(row_adj)
    start, target = p, m + q
    prev = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == target:
            break
        if node < m:
            nbrs = [m + j for j in row_adj[node]]
        else:
            nbrs = col_adj[node - m]
        for nb in nbrs:
            if nb not in prev:
                prev[nb] = node
                queue.append(nb)
    cells = []
    node = target
    while prev[node] is not None:
        a = prev[node]
        cells.append((a, node - m) if a < m else (node, a - m))
        node = a
    return cells


def solve_transportation(inst: TransportInstance, max_iter: int | None = None) -> TransportSolution:
    """Exact optimum of a balanced transportation problem, with optimal potentials.

    Pricing is Dantzig's most negative reduced cost. After a streak of degenerate
    pivots it falls back to Bland's lowest-index rule until a pivot moves mass again.

    Raises:
        DegenerateCycling: the iteration cap was reached.
        CertificateError: the final plan fails its optimality certificate.
    """
    cost = np.asarray(inst.cost, dtype=np.float64)
    m, n = cost.shape
    if max_iter is None:
        max_iter = 20 * m * n + 1000
    eps = 1e-12 * max(1.0, float(np.abs(cost).max()))

    plan, basis = _northwest_corner(inst.supply, inst.demand)
    in_basis = np.zeros((m, n), dtype=bool)
    for cell in basis:
        in_basis[cell] = True

    bland = False
    streak = 0
    it = 0
    while True:
        row_adj, col_adj = _adjacency(basis, m, n)
        u, v = _duals(cost, row_adj, col_adj)
        reduced = cost - u[:, None] - v[None, :]
        reduced[in_basis] = 0.0
        if bland:
            candidates = np.flatnonzero(reduced.ravel() < -eps)
            if candidates.size == 0:
                break
            flat = int(candidates[0])
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -eps:
                break
        if it >= max_iter:
            raise DegenerateCycling(f"transportation simplex did not converge in {max_iter} pivots")
        it += 1
        p, q = divmod(flat, n)

        cells = _cycle(row_adj, col_adj, p, q)
        minus, plus = cells[0::2], cells[1::2]
        step = min(plan[c] for c in minus)
        leaving = min((c for c in minus if plan[c] <= step), key=lambda c: c[0] * n + c[1])

        if step > 0:
            plan[p, q] += step
            for c in plus:
                plan[c] += step
            for c in minus:
                plan[c] -= step
            streak = 0
            bland = False
        else:
            streak += 1
            if streak >= DEGENERATE_STREAK and not bland:
                logger.debug("switching to Bland's rule after %d degenerate pivots", streak)
                bland = True
        plan[leaving] = 0.0
        basis.remove(leaving)
        in_basis[leaving] = False
        basis.append((p, q))
        in_basis[p, q] = True

    np.maximum(plan, 0.0, out=plan)
    value = float(np.sum(plan * cost))
    logger.debug("transportation %dx%d solved in %d pivots, value %r", m, n, it, value)
    sol = TransportSolution(value=value, plan=plan, dual_u=u, dual_v=v, iterations=it)
    sol.certify(inst)
    return sol


# --- entropy partial transport through the sink ---

@dataclass(frozen=True)
class EtResult:
    value: float
    plan_mass: float
    dual_gap: float
    solution: Optional[TransportSolution]


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    plan_mass: float
    et_value: float


@dataclass(frozen=True)
class WcmResult:
    mass: float
    value: float
    lam: float
    bracket: tuple[float, float]
    bracket_mass: tuple[float, float]


def _check_slope(params: UstParams, weight_a1: float) -> None:
    if not (0.0 <= weight_a1 <= params.b):
        raise InvalidWeightSlope(f"weight slope a1={weight_a1!r} must lie in [0, b={params.b!r}]")


def extend_problem(
    g: PhysicalGraph,
    params: UstParams,
    weight_a1: float,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    root: int = 0,
    lam: float | None = None,
) -> TransportInstance:
    """Balanced transportation problem whose optimum is the entropy partial transport.

    Weights are ``w_i(x) = a1 * d(root, x) + w_i_root``. ``lam`` overrides
    ``params.lam`` and may be negative.
    """
    _check_slope(params, weight_a1)
    mu.check_support(g.node_count)
    nu.check_support(g.node_count)
    lam = params.lam if lam is None else float(lam)

    to_root = distances_from(g, [root])[0]
    rows = distances_from(g, mu.nodes)
    d = rows[:, nu.nodes]

    km, kn = mu.support_size, nu.support_size
    cost = np.zeros((km + 1, kn + 1))
    cost[:km, :kn] = params.b * (d - lam)
    cost[:km, kn] = params.weight_at(to_root[mu.nodes], weight_a1, 1)
    cost[km, :kn] = params.weight_at(to_root[nu.nodes], weight_a1, 2)

    return TransportInstance(
        supply_tags=tuple(int(x) for x in mu.nodes) + (SINK,),
        supply=np.append(mu.masses, nu.total_mass),
        demand_tags=tuple(int(y) for y in nu.nodes) + (SINK,),
        demand=np.append(nu.masses, mu.total_mass),
        cost=cost,
    )


def solve_et(
    g: PhysicalGraph,
    params: UstParams,
    weight_a1: float,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    root: int = 0,
    lam: float | None = None,
) -> EtResult:
    inst = extend_problem(g, params, weight_a1, mu, nu, root=root, lam=lam)
    sol = solve_transportation(inst)
    return EtResult(
        value=sol.value,
        plan_mass=float(sol.plan[:-1, :-1].sum()),
        dual_gap=sol.dual_gap(inst),
        solution=sol,
    )


def et_lambda(
    g: PhysicalGraph,
    params: UstParams,
    weight_a1: float,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    root: int = 0,
    lam: float | None = None,
) -> float:
    return solve_et(g, params, weight_a1, mu, nu, root=root, lam=lam).value


def solve_wasserstein(g: PhysicalGraph, p: float, mu: DiscreteMeasure, nu: DiscreteMeasure) -> EtResult:
    """p-Wasserstein distance with ground cost ``d_G**p``; masses must agree.

    ``value`` is the distance itself, not its ``p``-th power.
    """
    if not (math.isfinite(p) and p >= 1):
        raise InvalidParams(f"Wasserstein order must be finite and >= 1, got {p!r}")
    mu.check_support(g.node_count)
    nu.check_support(g.node_count)
    ma, mb = mu.total_mass, nu.total_mass
    if abs(ma - mb) > 1e-9 * max(ma, mb):
        raise UnbalancedMasses(f"measures have masses {ma!r} and {mb!r}")
    if mu.is_zero() or nu.is_zero():
        return EtResult(value=0.0, plan_mass=0.0, dual_gap=0.0, solution=None)
    d = distances_from(g, mu.nodes)[:, nu.nodes]
    # rescale the demand side so the simplex sees an exactly balanced problem
    inst = TransportInstance(
        supply_tags=tuple(int(x) for x in mu.nodes),
        supply=mu.masses,
        demand_tags=tuple(int(y) for y in nu.nodes),
        demand=nu.masses * (ma / mb),
        cost=d if p == 1 else np.power(d, p),
    )
    sol = solve_transportation(inst)
    return EtResult(
        value=max(sol.value, 0.0) ** (1.0 / p),
        plan_mass=float(sol.plan.sum()),
        dual_gap=sol.dual_gap(inst),
        solution=sol,
    )


def wasserstein(g: PhysicalGraph, p: float, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    return solve_wasserstein(g, p, mu, nu).value


def mass_sweep(
    g: PhysicalGraph,
    params: UstParams,
    weight_a1: float,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    lambdas: Sequence[float],
    root: int = 0,
) -> list[SweepPoint]:
    """Transported mass and optimal value along an ascending grid of multipliers."""
    lams = [float(x) for x in lambdas]
    if any(b < a for a, b in zip(lams, lams[1:])):
        raise InvalidParams("lambdas must be sorted ascending")
    out = []
    for lam in lams:
        res = solve_et(g, params, weight_a1, mu, nu, root=root, lam=lam)
        out.append(SweepPoint(lam=lam, plan_mass=res.plan_mass, et_value=res.value))
    return out


def partial_transport(
    g: PhysicalGraph,
    params: UstParams,
    weight_a1: float,
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    mass: float,
    root: int = 0,
    rounds: int = 60,
) -> WcmResult:
    """Partial transport of exactly ``mass`` units, recovered from the multiplier sweep.

    ``ET(lam) + lam * b * mass`` is concave in ``lam``; its maximum sits where the
    transported mass crosses ``mass``. Bisection brackets that point, the two supporting
    lines at the bracket ends are intersected, and the best of the evaluated multipliers
    gives the value.
    """
    if params.b <= 0:
        raise InvalidParams("partial transport needs b > 0")
    cap = min(mu.total_mass, nu.total_mass)
    if not (0.0 <= mass <= cap * (1 + 1e-12)):
        raise InvalidParams(f"mass {mass!r} must lie in [0, {cap!r}]")
    _check_slope(params, weight_a1)

    def at(lam):
        res = solve_et(g, params, weight_a1, mu, nu, root=root, lam=lam)
        return res.value, res.plan_mass

    base = extend_problem(g, params, weight_a1, mu, nu, root=root, lam=0.0)
    span = float(np.abs(base.cost).max()) / params.b + 1.0
    lo, hi = -10.0 * span, 2.0 * span
    et_lo, m_lo = at(lo)
    et_hi, m_hi = at(hi)

    tol = 1e-12 * max(1.0, cap)
    for _ in range(rounds):
        if m_hi - m_lo <= tol or abs(m_lo - mass) <= tol or abs(m_hi - mass) <= tol:
            break
        mid = 0.5 * (lo + hi)
        et_mid, m_mid = at(mid)
        if m_mid < mass:
            lo, et_lo, m_lo = mid, et_mid, m_mid
        else:
            hi, et_hi, m_hi = mid, et_mid, m_mid

    bm = params.b
    candidates = [(lo, et_lo), (hi, et_hi)]
    if m_hi - m_lo > tol:
        # supporting lines ET(lo) - b*m_lo*(x - lo) and ET(hi) - b*m_hi*(x - hi)
        star = (et_hi - et_lo + bm * (m_hi * hi - m_lo * lo)) / (bm * (m_hi - m_lo))
        if lo <= star <= hi:
            candidates.append((star, at(star)[0]))
    lam_best, et_best = max(candidates, key=lambda c: c[1] + c[0] * bm * mass)
    return WcmResult(
        mass=float(mass),
        value=et_best + lam_best * bm * mass,
        lam=lam_best,
        bracket=(lo, hi),
        bracket_mass=(m_lo, m_hi),
    )
