"""Sum-of-trees engine: array-backed binary trees and Metropolis-Hastings moves.

Every tree of a forest lives in fixed-capacity node arrays (one row per tree)
so the full backfitting sweep runs as a single compiled kernel.  Slot 0 is
the root and children are allocated as consecutive slot pairs, so
``right[k] == left[k] + 1``.  ``var[k] == LEAF`` marks a leaf and
``var[k] == FREE`` an unused slot.  ``leaf_of[j, i]`` caches the leaf of
tree ``j`` that training row ``i`` falls into.

Split rules send a row left iff ``x[var] < cut``.  Candidate cuts for a
variable are the midpoints between adjacent distinct training values of
that column, restricted at each node to the cuts lying strictly inside the
node's data range.  The tree prior is the usual depth-decaying split
probability ``alpha * (1 + d) ** -beta`` with a uniform choice of variable
(among those that vary inside the node) and cut; leaves must hold at least
``n_min`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._accel import dispatch, jit
from .exceptions import SamplerError

LEAF = -1
FREE = -2

GROW, PRUNE, CHANGE, SWAP = 0, 1, 2, 3
MOVE_NAMES = ("grow", "prune", "change", "swap")
DEFAULT_MOVE_PROBS = (0.25, 0.25, 0.40, 0.10)
# root plus 31 child pairs; far deeper than the prior ever reaches
DEFAULT_CAPACITY = 63


@dataclass(frozen=True)
class TreePrior:
    alpha: float = 0.95
    beta: float = 2.0
    sigma_mu: float = 0.5 / (2.0 * np.sqrt(50.0))
    n_min: int = 5

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise SamplerError("alpha must lie in [0, 1)")
        if self.beta < 0.0:
            raise SamplerError("beta must be non-negative")
        if not self.sigma_mu > 0.0:
            raise SamplerError("sigma_mu must be positive")
        if self.n_min < 1:
            raise SamplerError("n_min must be at least 1")

    def split_probability(self, depth: int) -> float:
        return self.alpha * (1.0 + depth) ** (-self.beta)


def leaf_sigma_mu(m: int, k_scale: float = 2.0, binary: bool = False) -> float:
    """Leaf-mean prior sd so the forest spans the (standardized) response."""
    half_range = 3.0 if binary else 0.5
    return half_range / (k_scale * np.sqrt(m))


@dataclass(frozen=True)
class SplitData:
    """Tree covariates in the layout the kernels need."""

    xt: np.ndarray      # (p, n) transposed covariates
    xflat: np.ndarray   # xt raveled, indexed var * n + row
    grid: np.ndarray    # concatenated cut grids
    gstart: np.ndarray  # grid offsets, length p + 1

    @classmethod
    def from_matrix(cls, L1) -> "SplitData":
        L1 = np.asarray(L1, dtype=float)
        if L1.ndim != 2:
            raise SamplerError("tree covariates must be a 2-D array")
        xt = np.ascontiguousarray(L1.T)
        cuts = []
        for col in xt:
            u = np.unique(col)
            mid = 0.5 * (u[:-1] + u[1:])
            cuts.append(mid[(mid > u[:-1]) & (mid < u[1:])])
        gstart = np.zeros(xt.shape[0] + 1, dtype=np.int64)
        gstart[1:] = np.cumsum([c.size for c in cuts])
        grid = np.concatenate(cuts) if cuts else np.zeros(0)
        return cls(xt=xt, xflat=xt.ravel(), grid=grid.astype(float), gstart=gstart)

    @property
    def n(self) -> int:
        return self.xt.shape[1]

    @property
    def p(self) -> int:
        return self.xt.shape[0]


# ---------------------------------------------------------------------------
# scalar helpers


@jit
def _log_split(alpha, beta, depth):
    ps = alpha * (1.0 + depth) ** (-beta)
    if ps <= 0.0:
        return -np.inf
    return np.log(ps)


@jit
def _log_nosplit(alpha, beta, depth):
    return np.log1p(-alpha * (1.0 + depth) ** (-beta))


@jit
def _leaf_loglik(k, s, ss, sigma2, sigma_mu2):
    # N(mu, sigma2) likelihood integrated over mu ~ N(0, sigma_mu2)
    return (-0.5 * k * np.log(2.0 * np.pi * sigma2)
            - 0.5 * np.log1p(k * sigma_mu2 / sigma2)
            - 0.5 * ss / sigma2
            + 0.5 * sigma_mu2 * s * s / (sigma2 * (sigma2 + k * sigma_mu2)))


def log_marginal_leaf(residuals, sigma2: float, sigma_mu: float) -> float:
    """log of the integral of prod_i N(r_i; mu, sigma2) N(mu; 0, sigma_mu^2) dmu."""
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise SamplerError("empty leaf")
    if not (sigma2 > 0 and sigma_mu > 0):
        raise SamplerError("sigma2 and sigma_mu must be positive")
    return float(_leaf_loglik(r.size, r.sum(), r @ r, float(sigma2), float(sigma_mu) ** 2))


# ---------------------------------------------------------------------------
# O(n) primitives: loop form for numba, vectorized form for numpy


def _spread_loop(col, rows):
    x0 = col[rows[0]]
    for i in range(1, rows.size):
        if col[rows[i]] != x0:
            return True
    return False


def _spread_numpy(col, rows):
    v = col[rows]
    return bool(np.any(v != v[0]))


_has_spread = dispatch(_spread_loop, _spread_numpy)


def _min_max_loop(col, rows):
    lo = col[rows[0]]
    hi = lo
    for i in range(1, rows.size):
        x = col[rows[i]]
        if x < lo:
            lo = x
        elif x > hi:
            hi = x
    return lo, hi


def _min_max_numpy(col, rows):
    v = col[rows]
    return v.min(), v.max()


_min_max = dispatch(_min_max_loop, _min_max_numpy)


def _route_loop(xflat, n, rows, root, var, cut, left):
    cur = np.empty(rows.size, dtype=np.int64)
    for i in range(rows.size):
        u = root
        row = rows[i]
        while var[u] >= 0:
            u = left[u] + (xflat[var[u] * n + row] >= cut[u])
        cur[i] = u
    return cur


def _route_numpy(xflat, n, rows, root, var, cut, left):
    cur = np.full(rows.size, root, dtype=np.int64)
    while True:
        v = var[cur]
        internal = v >= 0
        if not np.any(internal):
            return cur
        x = xflat[np.where(internal, v, 0) * n + rows]
        cur = np.where(internal, left[cur] + (x >= cut[cur]), cur)


_route = dispatch(_route_loop, _route_numpy)


def _leaf_stats_loop(cur, r, rows, cap):
    cnt = np.zeros(cap, dtype=np.int64)
    sm = np.zeros(cap)
    ss = np.zeros(cap)
    for i in range(cur.size):
        u = cur[i]
        x = r[rows[i]]
        cnt[u] += 1
        sm[u] += x
        ss[u] += x * x
    return cnt, sm, ss


def _leaf_stats_numpy(cur, r, rows, cap):
    rr = r[rows]
    return (np.bincount(cur, minlength=cap), np.bincount(cur, rr, cap),
            np.bincount(cur, rr * rr, cap))


_leaf_stats = dispatch(_leaf_stats_loop, _leaf_stats_numpy)


def _bucket_loop(rows, cur, rank, r, nb):
    """Rows grouped by ``rank[cur]`` plus per-group residual sums.

    Returns (grouped rows, group offsets, sum, sum of squares).
    """
    off = np.zeros(nb + 1, dtype=np.int64)
    sm = np.zeros(nb)
    ss = np.zeros(nb)
    for i in range(cur.size):
        b = rank[cur[i]]
        x = r[rows[i]]
        off[b + 1] += 1
        sm[b] += x
        ss[b] += x * x
    for b in range(nb):
        off[b + 1] += off[b]
    pos = off[:-1].copy()
    out = np.empty(rows.size, dtype=np.int64)
    for i in range(cur.size):
        b = rank[cur[i]]
        out[pos[b]] = rows[i]
        pos[b] += 1
    return out, off, sm, ss


def _bucket_numpy(rows, cur, rank, r, nb):
    keys = rank[cur]
    rr = r[rows]
    order = np.argsort(keys, kind="stable")
    off = np.zeros(nb + 1, dtype=np.int64)
    off[1:] = np.cumsum(np.bincount(keys, minlength=nb))
    return (rows[order], off, np.bincount(keys, rr, nb).astype(float),
            np.bincount(keys, rr * rr, nb).astype(float))


_bucket = dispatch(_bucket_loop, _bucket_numpy)


def _rows_in_loop(leaf_of, mask):
    k = 0
    for i in range(leaf_of.size):
        if mask[leaf_of[i]]:
            k += 1
    out = np.empty(k, dtype=np.int64)
    k = 0
    for i in range(leaf_of.size):
        if mask[leaf_of[i]]:
            out[k] = i
            k += 1
    return out


def _rows_in_numpy(leaf_of, mask):
    return np.nonzero(mask[leaf_of])[0]


_rows_in = dispatch(_rows_in_loop, _rows_in_numpy)


def _add_tree_loop(resid, mu, leaf, sign):
    for i in range(resid.size):
        resid[i] += sign * mu[leaf[i]]


def _add_tree_numpy(resid, mu, leaf, sign):
    resid += sign * mu[leaf]


_add_tree = dispatch(_add_tree_loop, _add_tree_numpy)


def _forest_fit_loop(mu, leaf_of):
    m, n = leaf_of.shape
    out = np.zeros(n)
    for j in range(m):
        for i in range(n):
            out[i] += mu[j, leaf_of[j, i]]
    return out


def _forest_fit_numpy(mu, leaf_of):
    return np.take_along_axis(mu, leaf_of, axis=1).sum(axis=0)


_forest_fit = dispatch(_forest_fit_loop, _forest_fit_numpy)


# ---------------------------------------------------------------------------
# node-set helpers


@jit
def _growable(xt, rows, n_min):
    if rows.size < 2 * n_min:
        return False
    for v in range(xt.shape[0]):
        if _has_spread(xt[v], rows):
            return True
    return False


@jit
def _eligible_vars(xt, rows):
    out = np.empty(xt.shape[0], dtype=np.int64)
    k = 0
    if rows.size < 2:
        return out[:0]
    for v in range(xt.shape[0]):
        if _has_spread(xt[v], rows):
            out[k] = v
            k += 1
    return out[:k]


@jit
def _cut_range(xt, grid, gstart, rows, v):
    """Offset into ``grid`` and number of cuts strictly inside the node range."""
    lo, hi = _min_max(xt[v], rows)
    g = grid[gstart[v]:gstart[v + 1]]
    i0 = np.searchsorted(g, lo, side="right")
    i1 = np.searchsorted(g, hi, side="left")
    return gstart[v] + i0, max(i1 - i0, 0)


@jit
def _preorder(var, left, root):
    """Subtree nodes in depth-first order, left child before right."""
    out = np.empty(var.size, dtype=np.int64)
    stack = np.empty(var.size + 1, dtype=np.int64)
    stack[0] = root
    top = 1
    k = 0
    while top > 0:
        top -= 1
        u = stack[top]
        out[k] = u
        k += 1
        if var[u] >= 0:
            stack[top] = left[u] + 1
            stack[top + 1] = left[u]
            top += 2
    return out[:k]


@jit
def _subtree_mask(var, left, root):
    mask = np.zeros(var.size, dtype=np.bool_)
    for u in _preorder(var, left, root):
        mask[u] = True
    return mask


@jit
def _nog_nodes(var, left):
    internal = var >= 0
    li = np.where(internal, left, 0)
    return np.nonzero(internal & (var[li] == LEAF) & (var[li + 1] == LEAF))[0]


@jit
def _swap_pairs(var, left):
    cap = var.size
    par = np.empty(2 * cap, dtype=np.int64)
    kid = np.empty(2 * cap, dtype=np.int64)
    k = 0
    for u in range(cap):
        if var[u] >= 0:
            for c in (left[u], left[u] + 1):
                if var[c] >= 0:
                    par[k] = u
                    kid[k] = c
                    k += 1
    return par[:k], kid[:k]


@jit
def _free_pair(var):
    for k in range(1, var.size - 1, 2):
        if var[k] == FREE:
            return k
    return -1


@jit
def _score_subtree(xt, grid, gstart, rows, cur, r, root, var, cut, left, depth,
                   alpha, beta, n_min, sigma2, sigma_mu2, grow_out):
    """Log prior x integrated likelihood of the subtree under ``root``.

    ``cur`` holds the leaf of each row in ``rows`` under this tree.  Terms for
    nodes outside the subtree are identical before and after any move, so
    they are left out.  Returns (valid, score); leaf growability is written
    into ``grow_out``.
    """
    cap = var.size
    nodes = _preorder(var, left, root)
    rank = np.full(cap, -1, dtype=np.int64)
    nleaf = 0
    for u in nodes:
        if var[u] == LEAF:
            rank[u] = nleaf
            nleaf += 1
    grouped, off, sm, ss = _bucket(rows, cur, rank, r, nleaf)
    # each node owns a contiguous block of ``grouped``; walk in reverse
    # preorder so children are resolved before parents
    seg_lo = np.zeros(cap, dtype=np.int64)
    seg_hi = np.zeros(cap, dtype=np.int64)
    score = 0.0
    for t in range(nodes.size - 1, -1, -1):
        u = nodes[t]
        if var[u] == LEAF:
            b = rank[u]
            seg_lo[u] = off[b]
            seg_hi[u] = off[b + 1]
            k = seg_hi[u] - seg_lo[u]
            if k < n_min:
                return False, -np.inf
            g = _growable(xt, grouped[seg_lo[u]:seg_hi[u]], n_min)
            grow_out[u] = g
            if g:
                score += _log_nosplit(alpha, beta, depth[u])
            score += _leaf_loglik(k, sm[b], ss[b], sigma2, sigma_mu2)
        else:
            seg_lo[u] = seg_lo[left[u]]
            seg_hi[u] = seg_hi[left[u] + 1]
            ru = grouped[seg_lo[u]:seg_hi[u]]
            nel = _eligible_vars(xt, ru).size
            if nel == 0:
                return False, -np.inf
            _, ncut = _cut_range(xt, grid, gstart, ru, var[u])
            if ncut == 0:
                return False, -np.inf
            score += _log_split(alpha, beta, depth[u]) - np.log(nel) - np.log(ncut)
    return True, score


@jit
def _metropolis(log_ratio, rng):
    u = rng.random()
    if log_ratio >= 0.0:
        return True
    return u < np.exp(log_ratio)


# ---------------------------------------------------------------------------
# the four moves; each returns (proposal_made, accepted) and edits the tree
# arrays in place only on acceptance


@jit
def _grow(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
          r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng):
    cand = np.nonzero((var == LEAF) & growable)[0]
    pair = _free_pair(var)
    if cand.size == 0 or pair < 0:
        return False, False
    root_only = var[0] == LEAF
    node = cand[rng.integers(0, cand.size)]
    rows = np.nonzero(leaf_of == node)[0]
    elig = _eligible_vars(xt, rows)
    if elig.size == 0:
        return False, False
    v = elig[rng.integers(0, elig.size)]
    start, ncuts = _cut_range(xt, grid, gstart, rows, v)
    if ncuts == 0:
        return False, False
    c = grid[start + rng.integers(0, ncuts)]

    nvar, ncut, nleft, ndepth = var.copy(), cut.copy(), left.copy(), depth.copy()
    nvar[node] = v
    ncut[node] = c
    nleft[node] = pair
    for k in (pair, pair + 1):
        nvar[k] = LEAF
        ncut[k] = 0.0
        nleft[k] = -1
        ndepth[k] = depth[node] + 1

    cur_old = np.full(rows.size, node, dtype=np.int64)
    gold = growable.copy()
    _, s_old = _score_subtree(xt, grid, gstart, rows, cur_old, r, node, var, cut, left, depth,
                              alpha, beta, n_min, sigma2, sigma_mu2, gold)
    cur = _route(xflat, xt.shape[1], rows, node, nvar, ncut, nleft)
    gnew = growable.copy()
    gnew[node] = False
    ok, s_new = _score_subtree(xt, grid, gstart, rows, cur, r, node, nvar, ncut, nleft, ndepth,
                               alpha, beta, n_min, sigma2, sigma_mu2, gnew)
    if not ok or s_new == -np.inf:
        return True, False
    p_grow = 1.0 if root_only else probs[GROW]
    log_fwd = np.log(p_grow) - np.log(cand.size) - np.log(elig.size) - np.log(ncuts)
    log_rev = np.log(probs[PRUNE]) - np.log(_nog_nodes(nvar, nleft).size)
    if not _metropolis(s_new - s_old + log_rev - log_fwd, rng):
        return True, False
    var[:] = nvar
    cut[:] = ncut
    left[:] = nleft
    depth[:] = ndepth
    growable[:] = gnew
    leaf_of[rows] = cur
    return True, True


@jit
def _prune(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
           r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng):
    nogs = _nog_nodes(var, left)
    if nogs.size == 0:
        return False, False
    node = nogs[rng.integers(0, nogs.size)]
    kid = left[node]
    rows = _rows_in(leaf_of, _subtree_mask(var, left, node))

    nvar, ncut, nleft, ndepth = var.copy(), cut.copy(), left.copy(), depth.copy()
    for k in (kid, kid + 1):
        nvar[k] = FREE
        ncut[k] = 0.0
        nleft[k] = -1
        ndepth[k] = 0
    nvar[node] = LEAF
    ncut[node] = 0.0
    nleft[node] = -1

    gold = growable.copy()
    _, s_old = _score_subtree(xt, grid, gstart, rows, leaf_of[rows], r, node, var, cut, left,
                              depth, alpha, beta, n_min, sigma2, sigma_mu2, gold)
    cur = np.full(rows.size, node, dtype=np.int64)
    gnew = growable.copy()
    gnew[kid] = False
    gnew[kid + 1] = False
    ok, s_new = _score_subtree(xt, grid, gstart, rows, cur, r, node, nvar, ncut, nleft, ndepth,
                               alpha, beta, n_min, sigma2, sigma_mu2, gnew)
    nel = _eligible_vars(xt, rows).size
    _, ncuts = _cut_range(xt, grid, gstart, rows, var[node])
    ngood = np.sum((nvar == LEAF) & gnew)
    if not ok or ngood == 0 or nel == 0 or ncuts == 0:
        return True, False
    p_grow = 1.0 if node == 0 else probs[GROW]
    log_fwd = np.log(probs[PRUNE]) - np.log(nogs.size)
    log_rev = np.log(p_grow) - np.log(ngood) - np.log(nel) - np.log(ncuts)
    if not _metropolis(s_new - s_old + log_rev - log_fwd, rng):
        return True, False
    var[:] = nvar
    cut[:] = ncut
    left[:] = nleft
    depth[:] = ndepth
    growable[:] = gnew
    leaf_of[rows] = cur
    return True, True


@jit
def _rewire(xt, xflat, grid, gstart, node, nvar, ncut, var, cut, left, depth, growable,
            leaf_of, r, sigma2, sigma_mu2, alpha, beta, n_min, log_q, rng):
    """Shared accept step for moves that only rewrite split rules below ``node``."""
    rows = _rows_in(leaf_of, _subtree_mask(var, left, node))
    gold = growable.copy()
    _, s_old = _score_subtree(xt, grid, gstart, rows, leaf_of[rows], r, node, var, cut, left,
                              depth, alpha, beta, n_min, sigma2, sigma_mu2, gold)
    cur = _route(xflat, xt.shape[1], rows, node, nvar, ncut, left)
    gnew = growable.copy()
    ok, s_new = _score_subtree(xt, grid, gstart, rows, cur, r, node, nvar, ncut, left, depth,
                               alpha, beta, n_min, sigma2, sigma_mu2, gnew)
    if not ok or s_new == -np.inf:
        return False
    if not _metropolis(s_new - s_old + log_q, rng):
        return False
    var[:] = nvar
    cut[:] = ncut
    growable[:] = gnew
    leaf_of[rows] = cur
    return True


@jit
def _change(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
            r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng):
    internal = np.nonzero(var >= 0)[0]
    if internal.size == 0:
        return False, False
    node = internal[rng.integers(0, internal.size)]
    rows = _rows_in(leaf_of, _subtree_mask(var, left, node))
    elig = _eligible_vars(xt, rows)
    v = elig[rng.integers(0, elig.size)]
    start, ncuts_new = _cut_range(xt, grid, gstart, rows, v)
    if ncuts_new == 0:
        return False, False
    c = grid[start + rng.integers(0, ncuts_new)]
    _, ncuts_old = _cut_range(xt, grid, gstart, rows, var[node])
    nvar, ncut = var.copy(), cut.copy()
    nvar[node] = v
    ncut[node] = c
    log_q = np.log(ncuts_new) - np.log(ncuts_old)
    acc = _rewire(xt, xflat, grid, gstart, node, nvar, ncut, var, cut, left, depth, growable,
                  leaf_of, r, sigma2, sigma_mu2, alpha, beta, n_min, log_q, rng)
    return True, acc


@jit
def _swap(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
          r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng):
    par, kid = _swap_pairs(var, left)
    if par.size == 0:
        return False, False
    k = rng.integers(0, par.size)
    node, child = par[k], kid[k]
    other = left[node] + 1 if left[node] == child else left[node]
    nvar, ncut = var.copy(), cut.copy()
    nvar[node] = var[child]
    ncut[node] = cut[child]
    nvar[child] = var[node]
    ncut[child] = cut[node]
    # both children carrying the same rule: the parent's rule goes to both
    if var[other] >= 0 and var[other] == var[child] and cut[other] == cut[child]:
        nvar[other] = var[node]
        ncut[other] = cut[node]
    acc = _rewire(xt, xflat, grid, gstart, node, nvar, ncut, var, cut, left, depth, growable,
                  leaf_of, r, sigma2, sigma_mu2, alpha, beta, n_min, 0.0, rng)
    return True, acc


@jit
def _propose(kind, xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
             r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng):
    if kind == GROW:
        return _grow(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
                     r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng)
    if kind == PRUNE:
        return _prune(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
                      r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng)
    if kind == CHANGE:
        return _change(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
                       r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng)
    return _swap(xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
                 r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng)


@jit
def _draw_leaves(var, mu, leaf_of, r, sigma2, sigma_mu2, rng):
    cap = var.size
    cnt, sm, _ = _leaf_stats(leaf_of, r, np.arange(leaf_of.size), cap)
    for u in range(cap):
        if var[u] == LEAF:
            if cnt[u] == 0:
                raise ValueError("empty leaf")
            v = 1.0 / (cnt[u] / sigma2 + 1.0 / sigma_mu2)
            mu[u] = v * sm[u] / sigma2 + np.sqrt(v) * rng.standard_normal()


@jit
def _choose_move(var, probs, rng):
    if var[0] == LEAF:
        return GROW
    u = rng.random()
    acc = 0.0
    for k in range(3):
        acc += probs[k]
        if u < acc:
            return k
    return SWAP


@jit
def _tree_step(xt, xflat, grid, gstart, var, cut, left, depth, mu, growable, leaf_of,
               r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng, counts):
    kind = _choose_move(var, probs, rng)
    _, acc = _propose(kind, xt, xflat, grid, gstart, var, cut, left, depth, growable, leaf_of,
                      r, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng)
    counts[0, kind] += 1
    if acc:
        counts[1, kind] += 1
    _draw_leaves(var, mu, leaf_of, r, sigma2, sigma_mu2, rng)


@jit
def backfit_sweep(xt, xflat, grid, gstart, var, cut, left, depth, mu, growable, leaf_of,
                  target, lin, sigma2, sigma_mu2, alpha, beta, n_min, probs, rng, counts):
    """Update every tree once against its partial residual; returns the new forest fit."""
    resid = target - lin - _forest_fit(mu, leaf_of)
    for j in range(var.shape[0]):
        _add_tree(resid, mu[j], leaf_of[j], 1.0)
        _tree_step(xt, xflat, grid, gstart, var[j], cut[j], left[j], depth[j], mu[j],
                   growable[j], leaf_of[j], resid, sigma2, sigma_mu2, alpha, beta, n_min,
                   probs, rng, counts)
        _add_tree(resid, mu[j], leaf_of[j], -1.0)
    return _forest_fit(mu, leaf_of)



# ---------------------------------------------------------------------------
# Python-facing forest object


@dataclass
class Forest:
    """``m`` trees stored as node arrays of shape ``(m, capacity)``."""

    var: np.ndarray
    cut: np.ndarray
    left: np.ndarray
    depth: np.ndarray
    mu: np.ndarray
    growable: np.ndarray
    leaf_of: np.ndarray

    @classmethod
    def empty(cls, m: int, data: SplitData, n_min: int = 5,
              capacity: int = DEFAULT_CAPACITY) -> "Forest":
        """``m`` single-leaf trees with ``mu = 0``."""
        if m < 1:
            raise SamplerError("need at least one tree")
        if capacity < 3 or capacity % 2 == 0:
            raise SamplerError("capacity must be odd and at least 3")
        var = np.full((m, capacity), FREE, dtype=np.int64)
        var[:, 0] = LEAF
        growable = np.zeros((m, capacity), dtype=np.bool_)
        growable[:, 0] = _growable(data.xt, np.arange(data.n), n_min)
        return cls(
            var=var,
            cut=np.zeros((m, capacity)),
            left=np.full((m, capacity), -1, dtype=np.int64),
            depth=np.zeros((m, capacity), dtype=np.int64),
            mu=np.zeros((m, capacity)),
            growable=growable,
            leaf_of=np.zeros((m, data.n), dtype=np.int64),
        )

    @property
    def m(self) -> int:
        return self.var.shape[0]

    def arrays(self, j):
        return (self.var[j], self.cut[j], self.left[j], self.depth[j], self.mu[j],
                self.growable[j], self.leaf_of[j])

    def right(self, j: int, node: int) -> int:
        return int(self.left[j, node]) + 1

    def copy(self) -> "Forest":
        return Forest(*(a.copy() for a in self.__dict__.values()))

    def n_leaves(self, j: int) -> int:
        return int(np.sum(self.var[j] == LEAF))

    def leaves(self, j: int) -> np.ndarray:
        return np.nonzero(self.var[j] == LEAF)[0]

    def fit(self) -> np.ndarray:
        """Forest prediction at every training row."""
        return _forest_fit(self.mu, self.leaf_of)

    def tree_fit(self, j: int) -> np.ndarray:
        return self.mu[j][self.leaf_of[j]]

    def split_leaf(self, j: int, node: int, var: int, cut: float, data: SplitData,
                   mu=(0.0, 0.0)) -> tuple:
        """Turn leaf ``node`` of tree ``j`` into a split; for building trees by hand."""
        if self.var[j, node] != LEAF:
            raise SamplerError(f"node {node} of tree {j} is not a leaf")
        lo = int(_free_pair(self.var[j]))
        if lo < 0:
            raise SamplerError("tree capacity exhausted")
        hi = lo + 1
        self.var[j, node] = var
        self.cut[j, node] = cut
        self.left[j, node] = lo
        for k, val in ((lo, mu[0]), (hi, mu[1])):
            self.var[j, k] = LEAF
            self.depth[j, k] = self.depth[j, node] + 1
            self.mu[j, k] = val
        self.growable[j, node] = False
        rows = np.nonzero(self.leaf_of[j] == node)[0]
        x = data.xt[var][rows]
        self.leaf_of[j, rows] = np.where(x < cut, lo, hi)
        return lo, hi

    def refresh_growable(self, j: int, data: SplitData, n_min: int) -> None:
        for u in self.leaves(j):
            rows = np.nonzero(self.leaf_of[j] == u)[0]
            self.growable[j, u] = bool(_growable(data.xt, rows, n_min))


def predict(forest: Forest, j: int, x_row) -> float:
    """Leaf mean of tree ``j`` reached by one covariate row."""
    x = np.asarray(x_row, dtype=float)
    var, cut, left = forest.var[j], forest.cut[j], forest.left[j]
    u = 0
    while var[u] >= 0:
        u = left[u] + int(x[var[u]] >= cut[u])
    return float(forest.mu[j, u])


def predict_forest(forest: Forest, x_row) -> float:
    """Sum of the tree predictions for one row."""
    return float(sum(predict(forest, j, x_row) for j in range(forest.m)))


def predict_matrix(forest: Forest, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    xt = np.ascontiguousarray(X.T)
    n = X.shape[0]
    out = np.zeros(n)
    rows = np.arange(n)
    for j in range(forest.m):
        cur = _route(xt.ravel(), n, rows, 0, forest.var[j], forest.cut[j], forest.left[j])
        out += forest.mu[j][cur]
    return out


@dataclass(frozen=True)
class MoveResult:
    kind: str
    proposed: bool
    accepted: bool


def propose(forest: Forest, j: int, kind: str, residuals, sigma2: float, prior: TreePrior,
            data: SplitData, rng: np.random.Generator,
            move_probs=DEFAULT_MOVE_PROBS) -> MoveResult:
    """One Metropolis-Hastings proposal of the given kind on tree ``j``.

    ``proposed`` is False when no valid proposal of that kind exists (for
    example pruning a single-leaf tree); the tree is then left untouched and
    the move counts as rejected.  Leaf means are not redrawn here.
    """
    kind_id = MOVE_NAMES.index(kind)
    r = np.ascontiguousarray(residuals, dtype=float)
    if r.shape != (data.n,):
        raise SamplerError("residuals must align with the tree covariate rows")
    if not sigma2 > 0:
        raise SamplerError("sigma2 must be positive")
    var, cut, left, depth, mu, growable, leaf_of = forest.arrays(j)
    made, acc = _propose(kind_id, data.xt, data.xflat, data.grid, data.gstart, var, cut, left,
                         depth, growable, leaf_of, r, float(sigma2),
                         prior.sigma_mu ** 2, prior.alpha, prior.beta, prior.n_min,
                         np.asarray(move_probs, dtype=float), rng)
    return MoveResult(kind, bool(made), bool(acc))


def draw_leaf_means(forest: Forest, j: int, residuals, sigma2: float, sigma_mu: float,
                    rng: np.random.Generator) -> None:
    """Redraw every leaf mean of tree ``j`` from its conjugate normal posterior."""
    r = np.ascontiguousarray(residuals, dtype=float)
    var, mu, leaf_of = forest.var[j], forest.mu[j], forest.leaf_of[j]
    cnt = np.bincount(leaf_of, minlength=var.size)
    if np.any(cnt[var == LEAF] == 0):
        raise SamplerError("empty leaf")
    _draw_leaves(var, mu, leaf_of, r, float(sigma2), float(sigma_mu) ** 2, rng)


def dump_tree(forest: Forest, j: int, names=None) -> str:
    """Indented text rendering of tree ``j`` for debugging."""
    lines = []

    def walk(u, indent):
        pad = "  " * indent
        v = forest.var[j, u]
        if v == LEAF:
            n = int(np.sum(forest.leaf_of[j] == u))
            lines.append(f"{pad}leaf mu={forest.mu[j, u]:.6g} n={n}")
            return
        label = names[v] if names is not None else f"x[{v}]"
        lines.append(f"{pad}{label} < {forest.cut[j, u]:.6g}")
        walk(forest.left[j, u], indent + 1)
        walk(forest.left[j, u] + 1, indent + 1)

    walk(0, 0)
    return "\n".join(lines)
