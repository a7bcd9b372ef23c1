"""Small-optimal-value solver: neighbor sampling, classification, adjustment.

A logarithmic sample is drawn with replacement; every consistent two-sided
assignment of the sampled occurrences induces per-vertex estimators, which
classify vertices into confident sides L, R and an uncertain set X.  An
exact knapsack-style dynamic program then moves sets across the cut to
restore the cost interval at minimum cut-size penalty.

Theory-faithful enumeration of all consistent partitions is exponential in
the number of distinct sampled vertices, so the default mode caps the
enumeration and says so in the report; enumerate-all and hint-driven modes
are available for small samples and experiments.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import DpInfeasible, NoFeasibleCut, TooLarge
from .graph import Cut, Graph, Rational, VertexCosts, cost, cut_size, iter_bits
from .rng import make_random

if TYPE_CHECKING:  # pragma: no cover
    from .cmc import CmcInstance

_NUMPY_CLASSIFY_CUTOFF = 50_000


def alpha_threshold(
    eps: Rational,
    delta: Rational,
    c0: Rational,
    rho_prime: Rational,
    zeta: Rational,
    a: Rational = Fraction(1, 10),
) -> Fraction:
    """Optimal-value threshold min{eps/22 (1/2-3a)^2 delta^2, 6 rho' zeta c0 delta / 35}."""
    eps, delta, c0 = Fraction(eps), Fraction(delta), Fraction(c0)
    rho_prime, zeta, a = Fraction(rho_prime), Fraction(zeta), Fraction(a)
    if a >= Fraction(1, 6):
        raise ValueError("margin a must be below 1/6")
    first = eps / 22 * (Fraction(1, 2) - 3 * a) ** 2 * delta**2
    second = 6 * rho_prime * zeta * c0 * delta / 35
    return min(first, second)


@dataclass(frozen=True)
class SampleSet:
    """Ordered vertex draws, duplicates allowed; multiplicities cached."""

    occurrences: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "_mult", Counter(self.occurrences))

    @property
    def multiplicity(self) -> Counter:
        return self._mult  # type: ignore[attr-defined]

    @property
    def distinct(self) -> tuple[int, ...]:
        return tuple(sorted(self.multiplicity))

    def __len__(self) -> int:
        return len(self.occurrences)


def sample_size(n: int, k: Rational) -> int:
    """Number of draws ceil(k * ln n); natural log, rounded up."""
    return max(1, math.ceil(float(k) * math.log(n)))


def sample(n: int, k: Rational, seed: int) -> SampleSet:
    """Uniform i.i.d. draws from V with replacement, deterministic under seed."""
    if n < 2:
        raise ValueError("sampling needs n >= 2")
    rng = make_random(seed, "sample")
    t = sample_size(n, k)
    return SampleSet(tuple(rng.randrange(n) for _ in range(t)))


@dataclass(frozen=True)
class ConsistentPartition:
    """Two-sided assignment of sampled vertices; occurrences of one vertex agree."""

    left: frozenset[int]
    right: frozenset[int]


def consistent_partitions(
    s: SampleSet,
    mode: str = "all",
    cap: int | None = None,
    hints: Sequence[Cut] = (),
) -> tuple[list[ConsistentPartition], bool]:
    """Consistent partitions of the sample's occurrences.

    mode "all" enumerates all 2^(#distinct) assignments, "cap" yields the
    first `cap` in Gray-code order and flags truncation, "hint" yields the
    assignments induced by restricting the given cuts to the sample.
    Returns (partitions, truncated).
    """
    verts = s.distinct
    m = len(verts)
    if mode == "hint":
        out = []
        seen = set()
        for h in hints:
            left = frozenset(v for v in verts if v in h)
            if left not in seen:
                seen.add(left)
                out.append(ConsistentPartition(left, frozenset(verts) - left))
        return out, False
    if mode == "all":
        if m > 30:
            raise TooLarge(f"enumerate-all over {m} distinct vertices")
        limit = 1 << m
        truncated = False
    elif mode == "cap":
        if cap is None:
            raise ValueError("cap mode needs a cap")
        limit = min(1 << min(m, 62), cap)
        truncated = limit < (1 << m if m < 62 else float("inf"))
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    out = []
    for i in range(limit):
        gray = i ^ (i >> 1)
        left = frozenset(verts[j] for j in range(m) if (gray >> j) & 1)
        out.append(ConsistentPartition(left, frozenset(verts) - left))
    return out, truncated


@dataclass(frozen=True)
class Classification:
    """Disjoint (L, R, X) cover of V with cached per-vertex estimator counts.

    nbr_total[v] and nbr_left[v] are occurrence counts of sampled neighbors
    of v (with multiplicity) overall and on the left side; the estimators
    are their exact ratios.
    """

    l: Cut
    r: Cut
    x: Cut
    nbr_total: np.ndarray
    nbr_left: np.ndarray
    a: Fraction

    def phat_l(self, v: int) -> Fraction | None:
        tot = int(self.nbr_total[v])
        if tot == 0:
            return None
        return Fraction(int(self.nbr_left[v]), tot)

    def phat_r(self, v: int) -> Fraction | None:
        tot = int(self.nbr_total[v])
        if tot == 0:
            return None
        return Fraction(tot - int(self.nbr_left[v]), tot)


def classify(g: Graph, s: SampleSet, p: ConsistentPartition, a: Rational) -> Classification:
    """Classify every vertex by its sampled-neighbor estimators.

    v joins L when phat_L(v) > 1/2 + 2a, R symmetrically; vertices with no
    sampled neighbor have undefined estimators and go to X (the adjustment
    DP re-places them).
    """
    a = Fraction(a)
    n = g.n
    mult = s.multiplicity
    distinct = s.distinct
    if n * max(1, len(distinct)) >= _NUMPY_CLASSIFY_CUTOFF:
        mvec = np.zeros(n, dtype=np.int64)
        for u, k in mult.items():
            mvec[u] = k
        lvec = np.zeros(n, dtype=np.int64)
        for u in p.left:
            lvec[u] = mult[u]
        adj = g.adj_matrix()
        tot = adj @ mvec
        left = adj @ lvec
    else:
        masks = g.adj_masks()
        tot = np.zeros(n, dtype=np.int64)
        left = np.zeros(n, dtype=np.int64)
        for v in range(n):
            mv = masks[v]
            tv = 0
            lv = 0
            for u in distinct:
                if (mv >> u) & 1:
                    tv += mult[u]
                    if u in p.left:
                        lv += mult[u]
            tot[v] = tv
            left[v] = lv
    # membership threshold 1/2 + 2a, checked exactly by cross-multiplication
    thr = Fraction(1, 2) + 2 * a
    p_num, p_den = thr.numerator, thr.denominator
    is_l = (left * p_den) > (tot * p_num)
    is_r = ((tot - left) * p_den) > (tot * p_num)
    lmask = rmask = xmask = 0
    for v in range(n):
        if tot[v] > 0 and is_l[v]:
            lmask |= 1 << v
        elif tot[v] > 0 and is_r[v]:
            rmask |= 1 << v
        else:
            xmask |= 1 << v
    return Classification(Cut(lmask), Cut(rmask), Cut(xmask), tot, left, a)


def adjust_dp(
    items_l: Sequence[tuple[int, int, int]],
    items_x: Sequence[tuple[int, int]],
    budget_deg: int,
    cost_bound_kind: str,
    c_base: int,
    bound: int,
    cell_cap: int = 2_000_000,
) -> tuple[list[int], list[int]] | None:
    """Exact minimizer of sum V_u (S) + sum V'_u (T) under both constraints.

    items_l are (V_u, c_u, d_u) triples; S must satisfy sum d_u <= budget_deg.
    items_x are (V'_u, c_u) pairs.  The cost constraint couples the sides:
      kind "upper":  c_base - c(S) + c(T) <= bound
      kind "lower":  c_base + c(S) - c(T) >= bound
    (branch 2 folds c(X) into c_base).  Both reduce to c(T) <= c(S) + offset.
    Tables are indexed by exact integer cost with a second degree dimension;
    sizes beyond cell_cap are refused.  Returns (indices into items_l,
    indices into items_x) or None when no pair satisfies the constraints.
    """
    if cost_bound_kind == "upper":
        offset = bound - c_base
    elif cost_bound_kind == "lower":
        offset = c_base - bound
    else:
        raise ValueError(f"unknown cost bound kind {cost_bound_kind!r}")
    budget_deg = max(-1, budget_deg)
    if budget_deg < 0:
        return None
    cost_l = sum(c for _, c, _ in items_l)
    deg_cap = min(budget_deg, sum(d for _, _, d in items_l))
    cost_x = sum(c for _, c in items_x)
    if (cost_l + 1) * (deg_cap + 1) > cell_cap:
        raise TooLarge("adjustment DP table exceeds the configured cell cap")
    NONE = None
    # dp_l[C][D] = (min sum V, chosen index mask) over S with c(S)=C, d(S)=D
    dp_l: list[list[tuple[int, int] | None]] = [
        [NONE] * (deg_cap + 1) for _ in range(cost_l + 1)
    ]
    dp_l[0][0] = (0, 0)
    for idx, (val, cu, du) in enumerate(items_l):
        if du > deg_cap:
            continue
        bit = 1 << idx
        for ci in range(cost_l - cu, -1, -1):
            row = dp_l[ci]
            dst = dp_l[ci + cu]
            for di in range(deg_cap - du, -1, -1):
                cur = row[di]
                if cur is None:
                    continue
                cand = (cur[0] + val, cur[1] | bit)
                old = dst[di + du]
                if old is None or cand[0] < old[0]:
                    dst[di + du] = cand
    # best over degree for each exact cost
    best_l: list[tuple[int, int] | None] = [NONE] * (cost_l + 1)
    for ci in range(cost_l + 1):
        bl = NONE
        for entry in dp_l[ci]:
            if entry is not None and (bl is None or entry[0] < bl[0]):
                bl = entry
        best_l[ci] = bl
    dp_x: list[tuple[int, int] | None] = [NONE] * (cost_x + 1)
    dp_x[0] = (0, 0)
    for idx, (val, cu) in enumerate(items_x):
        bit = 1 << idx
        for ci in range(cost_x - cu, -1, -1):
            cur = dp_x[ci]
            if cur is None:
                continue
            cand = (cur[0] + val, cur[1] | bit)
            old = dp_x[ci + cu]
            if old is None or cand[0] < old[0]:
                dp_x[ci + cu] = cand
    # prefix minima of dp_x by cost, for the coupled constraint c(T) <= C + offset
    prefix: list[tuple[int, int] | None] = [NONE] * (cost_x + 1)
    run = NONE
    for ci in range(cost_x + 1):
        e = dp_x[ci]
        if e is not None and (run is None or e[0] < run[0]):
            run = e
        prefix[ci] = run
    best = None
    for ci in range(cost_l + 1):
        bl = best_l[ci]
        if bl is None:
            continue
        lim = ci + offset
        if lim < 0:
            continue
        bx = prefix[min(lim, cost_x)]
        if bx is None:
            continue
        total = bl[0] + bx[0]
        if best is None or total < best[0]:
            best = (total, bl[1], bx[1])
    if best is None:
        return None
    sel_l = [i for i in range(len(items_l)) if (best[1] >> i) & 1]
    sel_x = [i for i in range(len(items_x)) if (best[2] >> i) & 1]
    return sel_l, sel_x


def _count_in(masks: list[int], u: int, side_mask: int) -> int:
    return (masks[u] & side_mask).bit_count()


def adjust(
    g: Graph,
    c: VertexCosts,
    cl: Classification,
    c_m: int,
    c_max: int,
    alpha: Rational,
    a: Rational,
) -> Cut:
    """Restore the cost interval [c_m, c_max] by moving sets across the cut.

    Three branches: when c(L)+c(X) >= c_max, move an optimal S out of L and
    T from X into L (exact DP, degree budget alpha n^2/(1/2+a)); when
    c(L) < c_m, the mirrored move out of R; otherwise place each uncertain
    vertex on its majority side.  The coupled lower bound is intentionally
    not part of the DP; infeasible outcomes surface as DpInfeasible.
    """
    alpha, a = Fraction(alpha), Fraction(a)
    n = g.n
    masks = g.adj_masks()
    lmask, rmask, xmask = cl.l.mask, cl.r.mask, cl.x.mask
    c_l = cost(c, cl.l)
    c_x = cost(c, cl.x)
    budget = int(alpha * n * n / (Fraction(1, 2) + a))
    if c_l + c_x >= c_max:
        l_verts = list(iter_bits(lmask))
        x_verts = list(iter_bits(xmask))
        items_l = [
            (
                _count_in(masks, u, lmask) - _count_in(masks, u, rmask),
                c.c[u],
                int(g.degrees[u]),
            )
            for u in l_verts
        ]
        items_x = [
            (_count_in(masks, u, rmask) - _count_in(masks, u, lmask), c.c[u])
            for u in x_verts
        ]
        sel = adjust_dp(items_l, items_x, budget, "upper", c_l, c_max)
        if sel is None:
            raise DpInfeasible("no (S, T) satisfies the upper-branch constraints")
        smask = sum(1 << l_verts[i] for i in sel[0])
        tmask = sum(1 << x_verts[i] for i in sel[1])
        return Cut((lmask & ~smask) | tmask)
    if c_l < c_m:
        r_verts = list(iter_bits(rmask))
        x_verts = list(iter_bits(xmask))
        items_r = [
            (
                _count_in(masks, u, rmask) - _count_in(masks, u, lmask),
                c.c[u],
                int(g.degrees[u]),
            )
            for u in r_verts
        ]
        items_x = [
            (_count_in(masks, u, lmask) - _count_in(masks, u, rmask), c.c[u])
            for u in x_verts
        ]
        sel = adjust_dp(items_r, items_x, budget, "lower", c_l + c_x, c_m)
        if sel is None:
            raise DpInfeasible("no (S, T) satisfies the lower-branch constraints")
        smask = sum(1 << r_verts[i] for i in sel[0])
        tmask = sum(1 << x_verts[i] for i in sel[1])
        return Cut(lmask | smask | (xmask & ~tmask))
    # in the interior: every uncertain vertex joins its majority side
    tmask = 0
    for u in iter_bits(xmask):
        if _count_in(masks, u, rmask) - _count_in(masks, u, lmask) < 0:
            tmask |= 1 << u
    return Cut(lmask | tmask)


@dataclass
class SmallConfig:
    """Knobs for the sampling solver.

    k defaults to max(2/(a^2 delta), 4/delta^2) at solve time; partition_mode
    is "cap" by default because enumerate-all is 2^(#distinct).
    """

    a: Fraction = Fraction(1, 10)
    k: Rational | None = None
    partition_mode: str = "cap"
    partition_cap: int = 64
    partition_hints: tuple[Cut, ...] = ()
    dp_cell_cap: int = 2_000_000

    def __post_init__(self):
        self.a = Fraction(self.a)
        if not (0 < self.a < Fraction(1, 6)):
            raise ValueError("margin a must lie in (0, 1/6)")


def default_k(a: Fraction, delta: Fraction) -> Fraction:
    """Sample multiplier max(2/(a^2 delta), 4/delta^2)."""
    if delta <= 0:
        raise ValueError("needs positive density")
    return max(2 / (a * a * delta), 4 / (delta * delta))


def constrained_mincut_small(
    inst: "CmcInstance",
    eps: Rational,
    cfg: SmallConfig | None = None,
    seed: int = 0,
) -> tuple[Cut, dict]:
    """Best feasible adjusted cut over the generated consistent partitions."""
    from .graph import density_params

    cfg = cfg or SmallConfig()
    g, c = inst.graph, inst.costs
    n = g.n
    eps = Fraction(eps)
    dens = density_params(g, c)
    if dens.delta <= 0:
        raise NoFeasibleCut("graph has an isolated vertex; sampling estimators undefined")
    a = cfg.a
    k = Fraction(cfg.k) if cfg.k is not None else default_k(a, dens.delta)
    alpha = alpha_threshold(eps, dens.delta, dens.c0, inst.rho_prime, inst.zeta, a)
    smp = sample(n, k, seed)
    parts, truncated = consistent_partitions(
        smp, cfg.partition_mode, cfg.partition_cap, cfg.partition_hints
    )
    lo, hi = inst.cost_window_ints()
    best: tuple[int, int] | None = None
    skipped_dp = 0
    skipped_cost = 0
    for part in parts:
        cl = classify(g, smp, part, a)
        try:
            cand = adjust(g, c, cl, lo, hi, alpha, a)
        except DpInfeasible:
            skipped_dp += 1
            continue
        cc = cost(c, cand)
        if not (lo <= cc <= hi):
            skipped_cost += 1
            continue
        key = (cut_size(g, cand), cand.mask)
        if best is None or key < best:
            best = key
    report = {
        "mode": "small",
        "sample_size": len(smp),
        "distinct_sampled": len(smp.distinct),
        "partitions_evaluated": len(parts),
        "truncated": truncated,
        "skipped_dp_infeasible": skipped_dp,
        "skipped_cost_violation": skipped_cost,
        "k": str(k),
        "alpha": str(alpha),
    }
    if best is None:
        raise NoFeasibleCut(
            f"all {len(parts)} partitions failed (dp={skipped_dp}, cost={skipped_cost})"
        )
    return Cut(best[1]), report
