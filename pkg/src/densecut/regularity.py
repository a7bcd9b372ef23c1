"""Cut-norm computation and cut decompositions of adjacency matrices.

The decomposer greedily peels rank-one cut terms off the adjacency matrix
until the residual's cut norm drops below eps * n * frobenius(A).  Working
arithmetic is exact: the residual is kept as an integer matrix over the
fixed dyadic denominator 2**DYADIC_BITS, term coefficients are stored as
exact dyadic rationals, and certification (exact enumeration for small n,
a local-search witness otherwise) is part of the returned object.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import TooLarge, WidthExceeded
from .graph import Cut, Graph, VertexCosts, Rational, iter_bits, mask_to_bools
from .rng import derive_seed, make_np

EXHAUSTIVE_THRESHOLD = 18

# Residual entries live over this fixed power-of-two denominator.  Entry
# magnitudes are bounded by n * 2**DYADIC_BITS (the residual's Frobenius
# norm never increases), which keeps every enumeration sum inside int64.
DYADIC_BITS = 36
_D = 1 << DYADIC_BITS

_BLOCK_BITS = 16


def _scaled_ints(m) -> tuple[np.ndarray, int]:
    """Scale a rational matrix to integers over a common denominator."""
    rows = [list(r) for r in m]
    denom = 1
    for r in rows:
        for x in r:
            denom = denom * Fraction(x).denominator // math.gcd(denom, Fraction(x).denominator)
    ints = [[int(Fraction(x) * denom) for x in r] for r in rows]
    maxabs = max((abs(x) for r in ints for x in r), default=0)
    nr = len(ints)
    nc = len(ints[0]) if nr else 0
    if maxabs * max(1, nr) * max(1, nc) < 2**62:
        return np.array(ints, dtype=np.int64).reshape(nr, nc), denom
    return np.array(ints, dtype=object).reshape(nr, nc), denom


def _subset_sums(rows: np.ndarray) -> np.ndarray:
    """All-subset column sums of the given rows; index bit i selects row i."""
    ncols = rows.shape[1]
    out = np.zeros((1, ncols), dtype=rows.dtype)
    for i in range(rows.shape[0]):
        out = np.vstack((out, out + rows[i]))
    return out


def _exact_witness(mat: np.ndarray) -> tuple[int, int, int]:
    """Exact max |sum over S x T| with a witness, by row-subset enumeration.

    Enumerates subsets of the smaller dimension in blocks; per subset the
    best column set is read off the signs of the partial column sums.
    Returns (value, row_mask, col_mask) with value as a plain int in the
    matrix's own scale.
    """
    transposed = mat.shape[0] > mat.shape[1]
    work = mat.T if transposed else mat
    r = work.shape[0]
    low = min(r, _BLOCK_BITS)
    m_low = _subset_sums(work[:low])
    best_val = -1
    best_sidx = 0
    for high_idx in range(1 << (r - low)):
        if high_idx:
            base = work[low:][mask_to_bools(high_idx, r - low)].sum(axis=0)
            block = m_low + base
        else:
            block = m_low
        pos = np.maximum(block, 0).sum(axis=1)
        neg = np.minimum(block, 0).sum(axis=1)
        ip = int(np.argmax(pos))
        iq = int(np.argmin(neg))
        if int(pos[ip]) > best_val:
            best_val = int(pos[ip])
            best_sidx = ip | (high_idx << low)
        if -int(neg[iq]) > best_val:
            best_val = -int(neg[iq])
            best_sidx = iq | (high_idx << low)
    if best_val <= 0:
        return 0, 0, 0
    sel = mask_to_bools(best_sidx, r)
    colsums = work[sel].sum(axis=0)
    csum = int(colsums[colsums > 0].sum())
    if csum >= -int(colsums[colsums < 0].sum()):
        cols = colsums > 0
        value = csum
    else:
        cols = colsums < 0
        value = -int(colsums[cols].sum())
    col_mask = 0
    for j in np.flatnonzero(cols):
        col_mask |= 1 << int(j)
    if transposed:
        return value, col_mask, best_sidx
    return value, best_sidx, col_mask


def _local_witness(mat: np.ndarray, effort: int, seed: int) -> tuple[int, int, int]:
    """Alternating row/column improvement until fixpoint, multi-restart."""
    nr, nc = mat.shape
    rng = make_np(seed, "cutnorm-ls")
    best = (0, 0, 0)
    for sign in (1, -1):
        work = mat if sign == 1 else -mat
        starts = [np.ones(nc, dtype=np.int64)]
        for _ in range(max(0, effort)):
            starts.append(rng.integers(0, 2, size=nc).astype(np.int64))
        for t_vec in starts:
            t = t_vec.copy()
            val = 0
            s = np.zeros(nr, dtype=np.int64)
            for _ in range(100):
                rsums = work @ t
                s = (rsums > 0).astype(np.int64)
                csums = s @ work
                t_next = (csums > 0).astype(np.int64)
                val = int(csums[t_next > 0].sum())
                if np.array_equal(t_next, t):
                    break
                t = t_next
            if val > best[0]:
                smask = 0
                for i in np.flatnonzero(s):
                    smask |= 1 << int(i)
                tmask = 0
                for j in np.flatnonzero(t):
                    tmask |= 1 << int(j)
                best = (val, smask, tmask)
    return best


def cut_norm_exact(m, *, threshold: int = EXHAUSTIVE_THRESHOLD) -> Fraction:
    """Exact cut norm max_{S,T} |sum_{i in S, j in T} m_ij| of a rational matrix."""
    ints, denom = _scaled_ints(m)
    if min(ints.shape) == 0:
        return Fraction(0)
    if min(ints.shape) > threshold:
        raise TooLarge(f"exact cut norm limited to {threshold} rows")
    val, _, _ = _exact_witness(ints)
    return Fraction(val, denom)


def cut_norm_lower_bound(m, effort: int = 16, seed: int = 0) -> tuple[Fraction, int, int]:
    """Certified cut-norm lower bound with an (S, T) witness.

    The returned value is the exact |sum over S x T| of the witness pair, so
    it is a true lower bound regardless of how good the local search was.
    """
    ints, denom = _scaled_ints(m)
    if min(ints.shape) == 0:
        return Fraction(0), 0, 0
    val, smask, tmask = _local_witness(ints, effort, seed)
    return Fraction(val, denom), smask, tmask


@dataclass(frozen=True)
class CutTerm:
    """One rank-one term d * indicator(S) indicator(T)^T."""

    d: Fraction
    s: int
    t: int


@dataclass(frozen=True)
class CutDecomposition:
    """Cut decomposition with its certification record.

    error_bound is the certified cut norm of the residual A - sum(terms):
    exact when certified == "exact", otherwise the best local-search witness
    value (a lower bound on the true residual norm that the search could not
    push past the target).
    """

    n: int
    terms: tuple[CutTerm, ...]
    error_bound: Fraction
    certified: str
    residual_frob_sq: Fraction | None = None
    coefficient_sq: Fraction | None = None

    @property
    def width(self) -> int:
        return len(self.terms)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "terms": [
                    {
                        "d": f"{t.d.numerator}/{t.d.denominator}",
                        "S": sorted(iter_bits(t.s)),
                        "T": sorted(iter_bits(t.t)),
                    }
                    for t in self.terms
                ],
                "error_bound": f"{self.error_bound.numerator}/{self.error_bound.denominator}",
                "certified": self.certified,
            }
        )

    @staticmethod
    def from_json(text: str) -> "CutDecomposition":
        obj = json.loads(text)
        terms = tuple(
            CutTerm(
                Fraction(t["d"]),
                sum(1 << v for v in t["S"]),
                sum(1 << v for v in t["T"]),
            )
            for t in obj["terms"]
        )
        return CutDecomposition(obj["n"], terms, Fraction(obj["error_bound"]), obj["certified"])


def residual_matrix(g: Graph, dec: CutDecomposition) -> list[list[Fraction]]:
    """Exact residual A - sum of terms, as a matrix of Fractions."""
    n = g.n
    adj = g.adj_matrix()
    res = [[Fraction(int(adj[i, j])) for j in range(n)] for i in range(n)]
    for term in dec.terms:
        for i in iter_bits(term.s):
            row = res[i]
            for j in iter_bits(term.t):
                row[j] -= term.d
    return res


def weak_regularity_decompose(
    g: Graph,
    eps: Rational,
    mode: str = "randomized",
    seed: int = 0,
    *,
    threshold: int = EXHAUSTIVE_THRESHOLD,
    width_cap: int | None = None,
    effort: int = 16,
) -> CutDecomposition:
    """Decompose the adjacency matrix to cut-norm error eps * n * frobenius(A).

    Greedy peeling: find a violating (S, T) pair (exhaustively for
    n <= threshold, by seeded local search otherwise), subtract the averaged
    rank-one term, repeat until no pair exceeds the target.  Coefficients
    are quantized to dyadic rationals with denominator 2**DYADIC_BITS, which
    keeps the residual integer-exact; the per-term potential drop this costs
    is negligible against the width cap's slack.
    """
    eps = Fraction(eps)
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    if mode not in ("randomized", "deterministic"):
        raise ValueError("mode must be randomized or deterministic")
    n = g.n
    two_e = 2 * g.m
    cap = width_cap if width_cap is not None else math.ceil(27 / (eps * eps))
    resid = g.adj_matrix().astype(np.int64) * _D
    terms: list[CutTerm] = []
    # squared stop target: (val / 2^b)^2 <= eps^2 * n^2 * 2|E|
    target_sq = eps.numerator**2 * n * n * two_e * _D * _D
    prev_frob = None
    exhaustive = n <= threshold
    while True:
        if n == 0:
            val, smask, tmask = 0, 0, 0
        elif exhaustive:
            val, smask, tmask = _exact_witness(resid)
        else:
            if mode == "deterministic":
                sub_seed = derive_seed(0xD37E7, n, len(terms))
            else:
                sub_seed = derive_seed(seed, "wrl", len(terms))
            val, smask, tmask = _local_witness(resid, effort, sub_seed)
        if val * val * eps.denominator**2 <= target_sq:
            error_bound = Fraction(val, _D)
            break
        if len(terms) >= cap:
            raise WidthExceeded(
                f"width cap {cap} hit with residual witness {Fraction(val, _D)} "
                f"above target eps*n*frob"
            )
        s_sel = mask_to_bools(smask, n)
        t_sel = mask_to_bools(tmask, n)
        st = int(s_sel.sum()) * int(t_sel.sum())
        block = int(resid[np.ix_(s_sel, t_sel)].sum())
        q = round(Fraction(block, st))
        if q == 0:
            # quantized coefficient vanished; the witness is too weak to act on
            error_bound = Fraction(val, _D)
            break
        frob_before = int((resid.astype(object) ** 2).sum())
        resid[np.ix_(s_sel, t_sel)] -= q
        frob_after = int((resid.astype(object) ** 2).sum())
        if prev_frob is None:
            prev_frob = frob_before
        if frob_after >= frob_before:
            raise AssertionError("residual Frobenius potential failed to decrease")
        prev_frob = frob_after
        terms.append(CutTerm(Fraction(q, _D), smask, tmask))
    frob_sq = Fraction(int((resid.astype(object) ** 2).sum()), _D * _D)
    coeff_sq = sum((t.d * t.d for t in terms), Fraction(0))
    return CutDecomposition(
        n=n,
        terms=tuple(terms),
        error_bound=error_bound,
        certified="exact" if exhaustive else "lower_bound",
        residual_frob_sq=frob_sq,
        coefficient_sq=coeff_sq,
    )


@dataclass(frozen=True)
class SignatureCell:
    """Vertices sharing one membership signature across all terms' S_t, T_t."""

    signature: tuple[int, ...]
    mask: int

    @property
    def size(self) -> int:
        return self.mask.bit_count()


@dataclass(frozen=True)
class CostCell:
    """A signature cell intersected with one cost bucket [kappa*m, kappa*(m+1))."""

    signature: tuple[int, ...]
    bucket: int
    mask: int
    delta: Fraction

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def in_s(self, t: int) -> bool:
        return self.signature[2 * t] == 1

    def in_t(self, t: int) -> bool:
        return self.signature[2 * t + 1] == 1


@dataclass(frozen=True)
class CellPartition:
    """Disjoint cover of V by (signature, cost bucket) cells."""

    cells: tuple[CostCell, ...]
    kappa: Fraction
    width: int

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def base_partition(dec: CutDecomposition) -> list[SignatureCell]:
    """Group vertices by their membership pattern across all S_t, T_t."""
    groups: dict[tuple[int, ...], int] = {}
    for v in range(dec.n):
        sig = []
        for term in dec.terms:
            sig.append((term.s >> v) & 1)
            sig.append((term.t >> v) & 1)
        key = tuple(sig)
        groups[key] = groups.get(key, 0) | (1 << v)
    return [SignatureCell(sig, groups[sig]) for sig in sorted(groups)]


def refine_by_cost(
    cells: Sequence[SignatureCell], c: VertexCosts, kappa: Rational
) -> CellPartition:
    """Intersect signature cells with half-open cost buckets of width kappa."""
    kappa = Fraction(kappa)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    width = len(cells[0].signature) // 2 if cells else 0
    out: list[CostCell] = []
    for cell in cells:
        if len(cell.signature) != 2 * width:
            raise ValueError("inconsistent signature widths")
        buckets: dict[int, int] = {}
        for v in iter_bits(cell.mask):
            m = int(Fraction(c.c[v]) / kappa)  # floor for nonnegative values
            buckets[m] = buckets.get(m, 0) | (1 << v)
        for m in sorted(buckets):
            out.append(CostCell(cell.signature, m, buckets[m], kappa * m))
    total = 0
    for cc in out:
        if total & cc.mask:
            raise AssertionError("cost cells overlap")
        total |= cc.mask
        for v in iter_bits(cc.mask):
            if not (cc.delta <= c.c[v] < cc.delta + kappa):
                raise AssertionError("cost bucket membership violated")
    return CellPartition(tuple(out), kappa, width)
