"""Random partitions, block-diagonal lifting and partition search.

The probability space is the set of assignments omega in {0..r-1}^m with the
uniform measure; omega_i names the block that index i joins.  Assignments are
0-based in the library (the CLI shifts to 1-based).

Lifting puts ``r * A_i`` in diagonal block ``omega_i`` of an ``rd x rd``
matrix.  Its expectation is ``A_i`` repeated in every block, and the
expected characteristic polynomial of the lifted sum equals the mixed
characteristic polynomial of those expectations.  From this follows that
some partition has every block sum of norm at most (1/sqrt(r) + sqrt(C))^2,
where C = max ||A_i||; :func:`partition_search` finds one.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .config import DEFAULT
from .errors import BoundNotCertified, BudgetExceeded, NotRankOne, PreconditionFailed, ShapeMismatch
from .mixedchar import mixed_char
from .realstable import PSDSystem
from .unipoly import RealPoly

EXHAUSTIVE = "exhaustive"
LOCAL = "local"


@dataclass(frozen=True)
class Assignment:
    omega: tuple
    r: int

    def __post_init__(self):
        if any(not 0 <= w < self.r for w in self.omega):
            raise ValueError(f"assignment {self.omega} has labels outside 0..{self.r - 1}")

    @property
    def m(self):
        return len(self.omega)

    def blocks(self):
        """S_j = {i : omega_i = j}, 0-based, one list per block (possibly empty)."""
        out = [[] for _ in range(self.r)]
        for i, w in enumerate(self.omega):
            out[w].append(i)
        return out


def enumerate_assignments(m, r, budget=DEFAULT.enum_budget):
    """All r^m assignments in lexicographic order."""
    if r < 1 or m < 0:
        raise ValueError("need r >= 1 and m >= 0")
    if r**m > budget:
        raise BudgetExceeded(f"{r}^{m} assignments exceed budget {budget}", size=r**m, budget=budget)
    return itertools.product(range(r), repeat=m)


@dataclass(frozen=True)
class LiftedSystem:
    base: PSDSystem
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be at least 1")

    @property
    def dim(self):
        return self.r * self.base.dim


def _block_diag(blocks):
    d = blocks[0].shape[0]
    n = len(blocks) * d
    out = np.zeros((n, n), dtype=complex)
    for k, B in enumerate(blocks):
        out[k * d:(k + 1) * d, k * d:(k + 1) * d] = B
    return out


def block_sums(S, omega, r):
    """Sum_{i in S_j} A_i for j = 0..r-1, added in index order."""
    sums = [np.zeros((S.dim, S.dim), dtype=complex) for _ in range(r)]
    for i, w in enumerate(omega):
        sums[w] = sums[w] + S.matrices[i]
    return sums


def lift(L, omega):
    """A(omega) = sum_i A_i(omega), block j equal to r * sum_{omega_i = j} A_i."""
    omega = tuple(omega.omega if isinstance(omega, Assignment) else omega)
    if len(omega) != L.base.m:
        raise ShapeMismatch(f"assignment has length {len(omega)}, system has {L.base.m} matrices")
    if any(not 0 <= w < L.r for w in omega):
        raise ShapeMismatch("assignment labels out of range")
    return _block_diag([L.r * B for B in block_sums(L.base, omega, L.r)])


def expected_lift(L):
    """E(A_i) = A_i (+) ... (+) A_i for each i."""
    return [_block_diag([A] * L.r) for A in L.base.matrices]


def _require_rank_one(L):
    if not L.base.all_rank_one:
        raise NotRankOne("base matrices must have rank at most one", ranks=list(L.base.ranks))


def expected_char_poly(L, budget=DEFAULT.enum_budget):
    """Uniform average of det(zI - A(omega)) over all assignments."""
    acc = np.zeros(L.dim + 1)
    count = 0
    for omega in enumerate_assignments(L.base.m, L.r, budget):
        acc += linalg.char_poly(lift(L, omega)).coeffs
        count += 1
    return RealPoly(acc / count)


def expectation_theorem_check(L, tol=DEFAULT):
    """Max coefficient deviation between E(p_A) and mu[E(A_1)..E(A_m)]."""
    _require_rank_one(L)
    avg = expected_char_poly(L, tol.enum_budget)
    E = PSDSystem.from_matrices(expected_lift(L), dim=L.dim)
    mu = mixed_char(E, tol, cross_check=False).mu
    n = max(avg.coeffs.size, mu.coeffs.size)
    a = np.pad(avg.coeffs, (0, n - avg.coeffs.size))
    b = np.pad(mu.coeffs, (0, n - mu.coeffs.size))
    return float(np.max(np.abs(a - b)))


@dataclass
class Sandwich:
    lower: np.ndarray    # min over omega of rho_j(p_A(omega))
    middle: np.ndarray   # rho_j(mu[E(A_1)..E(A_m)])
    upper: np.ndarray    # max over omega
    slack: float         # min over j of both gaps (negative means violated)
    holds: bool


def root_sandwich_check(L, j=None, tol=DEFAULT, slack_tol=1e-8):
    """min_w rho_j(p_A(w)) <= rho_j(mu of expectations) <= max_w rho_j(p_A(w)).

    ``j`` is 0-based (0 = largest root); ``None`` checks every j.
    """
    _require_rank_one(L)
    n = L.dim
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for omega in enumerate_assignments(L.base.m, L.r, tol.enum_budget):
        lam = linalg.eigenvalues(lift(L, omega))
        lo = np.minimum(lo, lam)
        hi = np.maximum(hi, lam)
    E = PSDSystem.from_matrices(expected_lift(L), dim=n)
    mid = mixed_char(E, tol, cross_check=False).roots
    idx = range(n) if j is None else [j]
    gaps = [min(mid[k] - lo[k], hi[k] - mid[k]) for k in idx]
    slack = float(min(gaps))
    return Sandwich(lower=lo, middle=mid, upper=hi, slack=slack, holds=slack >= -slack_tol)


@dataclass
class NormCorollary:
    min_norm: float
    bound: float
    epsilon: float
    argmin: tuple
    holds: bool


def norm_corollary_check(L, tol=DEFAULT):
    """min_w ||A(w)|| <= (1 + sqrt(eps))^2 with eps = max_i E(Tr A_i) = r max Tr A_i."""
    _require_rank_one(L)
    if not L.base.sum_is_identity:
        raise PreconditionFailed("base matrices must sum to the identity")
    best, arg = np.inf, None
    for omega in enumerate_assignments(L.base.m, L.r, tol.enum_budget):
        v = linalg.hermitian_norm(lift(L, omega))
        if v < best:
            best, arg = v, omega
    eps = L.r * L.base.trace_bound
    bound = float((1.0 + math.sqrt(eps)) ** 2)
    return NormCorollary(min_norm=float(best), bound=bound, epsilon=eps, argmin=arg,
                         holds=best <= bound + tol.bound_tol)


# ---------------------------------------------------------------------------
# Partition search


def partition_bound(r, C):
    return float((1.0 / math.sqrt(r) + math.sqrt(C)) ** 2)


def objective(S, omega, r):
    """max_j || sum_{i in S_j} A_i ||."""
    return max(linalg.hermitian_norm(B) for B in block_sums(S, omega, r))


@dataclass
class PartitionSearchResult:
    best: Assignment
    objective: float
    bound: float
    strategy: str
    iterations: int
    block_norms: list = field(default_factory=list)

    @property
    def certified(self):
        return self.objective <= self.bound + DEFAULT.bound_tol

    @property
    def status(self):
        return "certified" if self.certified else "bound_not_certified"

    @property
    def margin(self):
        return self.bound - self.objective

    def check(self):
        """Return self, or raise BoundNotCertified when above the bound."""
        if not self.certified:
            raise BoundNotCertified(
                "search ended above the bound", objective=self.objective, bound=self.bound
            )
        return self

    def to_dict(self):
        return {
            "assignment": [w + 1 for w in self.best.omega],
            "blocks": [[i + 1 for i in b] for b in self.best.blocks()],
            "block_norms": self.block_norms,
            "objective": self.objective,
            "bound": self.bound,
            "margin": self.margin,
            "strategy": self.strategy,
            "iterations": self.iterations,
            "status": self.status,
        }


def _result(S, omega, r, strategy, iterations, bound):
    norms = [linalg.hermitian_norm(B) for B in block_sums(S, omega, r)]
    return PartitionSearchResult(
        best=Assignment(tuple(int(w) for w in omega), r),
        objective=max(norms) if norms else 0.0,
        bound=bound,
        strategy=strategy,
        iterations=iterations,
        block_norms=norms,
    )


def _rgs_prefixes(m, r, depth):
    """Restricted-growth prefixes of length ``depth``, lexicographic."""
    out = [()]
    for _ in range(depth):
        nxt = []
        for p in out:
            top = max(p, default=-1)
            nxt.extend(p + (w,) for w in range(min(top + 2, r)))
        out = nxt
    return out


def _dfs_shard(S, r, prefix):
    """Lexicographically first minimizer among restricted-growth completions
    of ``prefix``.  Returns (objective, omega, nodes)."""
    m = S.m
    A = S.matrices
    d = S.dim
    sums = [np.zeros((d, d), dtype=complex) for _ in range(r)]
    norms = [0.0] * r
    for i, w in enumerate(prefix):
        sums[w] = sums[w] + A[i]
    for w in set(prefix):
        norms[w] = linalg.hermitian_norm(sums[w])
    best = [np.inf, None]
    nodes = [0]
    omega = list(prefix) + [0] * (m - len(prefix))

    def rec(i, top, current):
        nodes[0] += 1
        # completions only add PSD terms, so current is a lower bound; the
        # slack keeps rounding from pruning exact ties
        if current > best[0] + 1e-12 * max(1.0, best[0]):
            return
        if i == m:
            if current < best[0]:
                best[0], best[1] = current, tuple(omega)
            return
        for w in range(min(top + 2, r)):
            old_sum, old_norm = sums[w], norms[w]
            sums[w] = old_sum + A[i]
            norms[w] = linalg.hermitian_norm(sums[w])
            omega[i] = w
            rec(i + 1, max(top, w), max(current, norms[w]))
            sums[w], norms[w] = old_sum, old_norm

    start_top = max(prefix, default=-1)
    rec(len(prefix), start_top, max(norms))
    return best[0], best[1], nodes[0]


def _exhaustive(S, r, workers):
    m = S.m
    depth = min(m, 3)
    prefixes = _rgs_prefixes(m, r, depth)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda p: _dfs_shard(S, r, p), prefixes))
    else:
        parts = [_dfs_shard(S, r, p) for p in prefixes]
    nodes = sum(p[2] for p in parts)
    # schedule-independent reduction on (objective, omega)
    obj, omega, _ = min((p for p in parts if p[1] is not None), key=lambda p: (p[0], p[1]))
    return omega, nodes


def _sorted_norm_key(norms):
    return tuple(sorted(norms, reverse=True))


def _local(S, r, budget, seed, restarts, bound):
    """Multi-restart steepest descent over single-index moves.

    The descent key is the descending vector of block norms, compared
    lexicographically, so moves that shrink a non-maximal block still count
    as progress on plateaus of the max.  Ties go to the lexicographically
    smallest assignment.
    """
    m, A = S.m, S.matrices
    rng = np.random.default_rng(seed)
    evals = 0
    best_key, best_omega = None, None
    for _ in range(restarts):
        omega = [int(w) for w in rng.integers(0, r, size=m)]
        sums = block_sums(S, omega, r)
        norms = [linalg.hermitian_norm(B) for B in sums]
        key = _sorted_norm_key(norms)
        evals += 1
        while evals < budget:
            cand = None
            for i in range(m):
                src = omega[i]
                for w in range(r):
                    if w == src:
                        continue
                    new = list(norms)
                    new[src] = linalg.hermitian_norm(sums[src] - A[i])
                    new[w] = linalg.hermitian_norm(sums[w] + A[i])
                    evals += 1
                    k = _sorted_norm_key(new)
                    trial = omega.copy()
                    trial[i] = w
                    if cand is None or (k, trial) < (cand[0], cand[1]):
                        cand = (k, trial, new)
            if cand is None or not cand[0] < key:
                break
            key, omega, norms = cand
            sums = block_sums(S, omega, r)
        if best_key is None or (key, omega) < (best_key, best_omega):
            best_key, best_omega = key, list(omega)
        if best_key[0] <= bound + DEFAULT.bound_tol or evals >= budget:
            break
    return tuple(best_omega), evals


def partition_search(S, r, strategy=EXHAUSTIVE, budget=None, seed=0, restarts=100,
                     workers=1, require_identity=True):
    """Find a partition into r blocks with small block norms.

    ``exhaustive`` returns the global minimizer of max_j ||sum_{S_j} A_i||
    (ties broken by the lexicographically smallest assignment); its search
    space is r^m, which must fit the budget.  ``local`` runs seeded
    multi-restart descent and stops at the first assignment meeting the
    bound; ``budget`` caps objective evaluations.
    """
    if not isinstance(S, PSDSystem):
        S = PSDSystem.from_matrices(S)
    if require_identity and not S.sum_is_identity:
        raise PreconditionFailed("the matrices must sum to the identity")
    if r < 1:
        raise ValueError("r must be at least 1")
    bound = partition_bound(r, S.norm_bound)
    if S.m == 0:
        return _result(S, (), r, strategy, 0, bound)
    if strategy == EXHAUSTIVE:
        budget = DEFAULT.enum_budget if budget is None else budget
        if r**S.m > budget:
            raise BudgetExceeded(
                f"{r}^{S.m} assignments exceed budget {budget}", size=r**S.m, budget=budget
            )
        omega, nodes = _exhaustive(S, r, workers)
        return _result(S, omega, r, EXHAUSTIVE, nodes, bound)
    if strategy == LOCAL:
        budget = 10**6 if budget is None else budget
        omega, evals = _local(S, r, budget, seed, restarts, bound)
        return _result(S, omega, r, LOCAL, evals, bound)
    raise ValueError(f"unknown strategy {strategy!r}")
