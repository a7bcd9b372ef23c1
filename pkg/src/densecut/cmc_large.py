"""Large-optimal-value solver: decompose, enumerate profiles, round, rebalance.

The adjacency matrix is decomposed into cut terms; the possible contribution
of each term to the cut is discretized on a grid, and every grid profile is
checked by an exact LP over partition cells.  Feasible fractional solutions
are floored, assembled into a cut, and greedily rebalanced into the cost
interval.  The best cut over all profiles and decomposition repeats wins.

Theory-faithful grids are astronomical, so profile enumeration can be capped
(reported, never silent) or driven by a profile budget that coarsens the
grid until full enumeration fits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

from .errors import NoFeasibleProfile, Unsatisfiable
from .graph import Cut, Graph, Rational, VertexCosts, cost, cut_size, iter_bits
from .lp import build_cell_lp, lp_feasible
from .regularity import CellPartition, base_partition, refine_by_cost, weak_regularity_decompose
from .rng import derive_seed

if TYPE_CHECKING:  # pragma: no cover
    from .cmc import CmcInstance


@dataclass
class LargeConfig:
    """Knobs for the decomposition solver.

    eps0 defaults to alpha * eps (alpha supplied by the unified driver so
    both cases share one constant); grid_stride overrides the theoretical
    nu; profile_budget coarsens the grid until full enumeration fits within
    that many profiles; profile_cap truncates enumeration as a last resort,
    with the truncation reported.
    """

    eps0: Fraction | None = None
    eta: Fraction = Fraction(1, 10)
    width_cap: int | None = None
    grid_stride: Fraction | None = None
    profile_budget: int | None = None
    profile_cap: int = 1_000_000
    repeats: int | None = None
    decomp_mode: str = "randomized"
    decomp_effort: int = 8

    def __post_init__(self):
        self.eta = Fraction(self.eta)
        if self.eps0 is not None:
            self.eps0 = Fraction(self.eps0)
        if self.grid_stride is not None:
            self.grid_stride = Fraction(self.grid_stride)


def grid(n: int, eps0: Rational, w: int) -> tuple[Fraction, list[Fraction]]:
    """Discretization stride nu = eps0 n / (70 * 6 * w) and its value ladder.

    6 is a rational stand-in for sqrt(27) (6^2 = 36 >= 27, conservative),
    keeping all arithmetic exact.  Values run 0, nu, ..., ceil(n/nu)*nu.
    """
    if w < 1:
        raise ValueError("grid needs width >= 1")
    eps0 = Fraction(eps0)
    nu = eps0 * n / (70 * 6 * w)
    if nu <= 0:
        raise ValueError("eps0 must be positive")
    count = math.ceil(Fraction(n) / nu)
    return nu, [nu * i for i in range(count + 1)]


def round_down(x: Sequence[Fraction]) -> list[int]:
    """Componentwise floor of a fractional cell assignment."""
    return [math.floor(v) for v in x]


def assemble_cut(p: CellPartition, y: Sequence[int]) -> Cut:
    """Pick the y_P lowest-indexed vertices of each cell into the left side."""
    mask = 0
    for cell, take in zip(p.cells, y):
        if not (0 <= take <= cell.size):
            raise ValueError("cell take out of range")
        for v, _ in zip(iter_bits(cell.mask), range(take)):
            mask |= 1 << v
    return Cut(mask)


def rebalance(g: Graph, c: VertexCosts, l: Cut, rho: Rational, zeta: Rational) -> Cut:
    """Move vertices (ascending cost) until the cost lands in the interval.

    Adds from outside while below rho(1-zeta), removes members while above
    rho(1+zeta).  Raises Unsatisfiable when a single cost step jumps across
    the whole interval, which cannot happen when 2*rho*zeta >= max cost.
    """
    rho, zeta = Fraction(rho), Fraction(zeta)
    lo = rho * (1 - zeta)
    hi = rho * (1 + zeta)
    mask = l.mask
    cur = cost(c, l)
    if cur < lo:
        outside = sorted(
            (v for v in range(g.n) if not (mask >> v) & 1), key=lambda v: (c.c[v], v)
        )
        for v in outside:
            if cur >= lo:
                break
            mask |= 1 << v
            cur += c.c[v]
        if cur < lo:
            raise Unsatisfiable("ran out of vertices below the lower cost bound")
    elif cur > hi:
        inside = sorted(iter_bits(mask), key=lambda v: (c.c[v], v))
        for v in inside:
            if cur <= hi:
                break
            mask &= ~(1 << v)
            cur -= c.c[v]
    if not (lo <= cur <= hi):
        raise Unsatisfiable(
            f"cost {cur} cannot land inside [{lo}, {hi}]; interval narrower than a cost step"
        )
    return Cut(mask)


def profile_values(
    n: int, eps0: Fraction, w: int, cfg: LargeConfig
) -> tuple[Fraction, list[Fraction]]:
    """Grid values for profile enumeration, honoring overrides."""
    if cfg.grid_stride is not None:
        nu = cfg.grid_stride
        count = math.ceil(Fraction(n) / nu)
        return nu, [nu * i for i in range(count + 1)]
    if cfg.profile_budget is not None and w >= 1:
        # coarsest ladder whose full 2w-fold product fits in the budget
        n_values = max(2, int(cfg.profile_budget ** (1.0 / (2 * w))))
        n_values = max(2, n_values)
        nu = Fraction(n, n_values - 1)
        return nu, [nu * i for i in range(n_values)]
    return grid(n, eps0, w)


def constrained_mincut_large(
    inst: "CmcInstance",
    eps: Rational,
    cfg: LargeConfig | None = None,
    seed: int = 0,
) -> tuple[Cut, dict]:
    """Best feasible cut over all enumerated profiles and decomposition repeats."""
    from .cmc_small import alpha_threshold
    from .graph import density_params

    cfg = cfg or LargeConfig()
    g, c = inst.graph, inst.costs
    n = g.n
    eps = Fraction(eps)
    dens = density_params(g, c)
    if cfg.eps0 is not None:
        eps0 = cfg.eps0
    else:
        alpha = alpha_threshold(
            eps, dens.delta, dens.c0, inst.rho_prime, inst.zeta, Fraction(1, 10)
        )
        eps0 = alpha * eps
    if eps0 <= 0:
        raise NoFeasibleProfile("eps0 is zero; instance is not dense", truncated=False)
    kappa = dens.c0 * min(eps0, dens.delta) / 30 * n
    if kappa <= 0:
        raise NoFeasibleProfile("kappa is zero (c0 = 0); cannot bucket costs", truncated=False)
    eps_dec = min(eps0 / 10, Fraction(99, 100))
    repeats = cfg.repeats if cfg.repeats is not None else max(1, math.ceil(math.log2(1 / cfg.eta)))
    lo_i, hi_i = inst.cost_window_ints()
    best: tuple[int, int] | None = None
    truncated_any = False
    profiles_total = 0
    profiles_evaluated = 0
    feasible_lps = 0
    rebalance_failures = 0
    decomp_certs = []
    for rep in range(repeats):
        dec = weak_regularity_decompose(
            g,
            eps_dec,
            mode=cfg.decomp_mode,
            seed=derive_seed(seed, "large-decomp", rep),
            width_cap=cfg.width_cap,
            effort=cfg.decomp_effort,
        )
        decomp_certs.append(
            {
                "width": dec.width,
                "error_bound": str(dec.error_bound),
                "certified": dec.certified,
            }
        )
        w = dec.width
        nu, values = profile_values(n, eps0, max(1, w), cfg)
        cells = refine_by_cost(base_partition(dec), c, kappa)
        total = len(values) ** (2 * w)
        profiles_total += total
        cap = cfg.profile_cap
        count = 0
        for profile in itertools.product(values, repeat=2 * w):
            if count >= cap:
                truncated_any = True
                break
            count += 1
            fbar, gbar = profile[:w], profile[w:]
            lp = build_cell_lp(cells, fbar, gbar, nu, inst.rho, inst.zeta)
            x = lp_feasible(lp)
            if x is None:
                continue
            feasible_lps += 1
            y = round_down(x)
            l_star = assemble_cut(cells, y)
            try:
                l_hat = rebalance(g, c, l_star, inst.rho, inst.zeta)
            except Unsatisfiable:
                rebalance_failures += 1
                continue
            cc = cost(c, l_hat)
            if not (lo_i <= cc <= hi_i):
                rebalance_failures += 1
                continue
            key = (cut_size(g, l_hat), l_hat.mask)
            if best is None or key < best:
                best = key
        profiles_evaluated += count
    report = {
        "mode": "large",
        "eps0": str(eps0),
        "kappa": str(kappa),
        "repeats": repeats,
        "decompositions": decomp_certs,
        "profiles_total": profiles_total,
        "profiles_evaluated": profiles_evaluated,
        "feasible_lps": feasible_lps,
        "rebalance_failures": rebalance_failures,
        "truncated": truncated_any,
    }
    if best is None:
        if truncated_any:
            raise NoFeasibleProfile(
                "no feasible profile found before the profile cap", truncated=True
            )
        raise NoFeasibleProfile(
            "every profile LP infeasible; instance may be infeasible", truncated=False
        )
    return Cut(best[1]), report
