"""Mixed characteristic polynomials.

    mu[A_1..A_m](z) = prod_i (1 - d/dz_i) det(z I + sum_i z_i A_i) at z_i = 0

Three independent evaluation routes exist.

* Interpolation: recover the determinantal polynomial on an integer grid
  and apply the operators to its coefficients; (d+1)^(m+1) determinants.
* Elementary-symmetric expansion, valid for every PSD system.  Expanding
  prod (1 - d_i) over subsets T leaves the coefficient of prod_{i in T} z_i,
  which sits in e_|T|(sum_{i in T} t_i A_i), a form homogeneous of degree
  |T| in t; its |T|-th mixed difference at 0 extracts it exactly.
  Collecting terms,

      [z^(d-k)] mu = sum_{|U| <= k} (-1)^|U| C(m - |U|, k - |U|) e_k(A_U),

  with A_U = sum_{i in U} A_i; sum_{j <= d} C(m, j) eigenvalue problems.
* Rank-one subset expansion.  For rank-one matrices the determinant is
  affine in each z_i, which gives

      mu(z) = sum_{T subset [m]} (-1)^|T| 2^(m - |T|) det(z I + sum_{i in T} A_i).

The interpolation route is preferred within budget and is cross-checked
against the others when they are cheap.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from . import linalg
from .config import DEFAULT
from .errors import CrossCheckFailed, DimensionTooLarge, NotRankOne, PreconditionFailed
from .realstable import PSDSystem, from_determinant, one_minus_partial, restrict
from .unipoly import RealPoly, max_coeff_deviation, real_roots

INTERPOLATION = "interpolation"
INCLUSION_EXCLUSION = "rank-one inclusion-exclusion"
ELEMENTARY = "elementary-symmetric expansion"


@dataclass
class MixedCharResult:
    mu: RealPoly
    roots: np.ndarray
    method: str
    bound: float | None = None
    cross_check_deviation: float | None = None

    def to_dict(self):
        return {
            "mu_ascending": self.mu.coeffs.tolist(),
            "mu_descending": self.mu.descending().tolist(),
            "roots": self.roots.tolist(),
            "method": self.method,
            "bound": self.bound,
            "cross_check_deviation": self.cross_check_deviation,
        }


def _as_system(S):
    return S if isinstance(S, PSDSystem) else PSDSystem.from_matrices(S)


def mu_interpolation(S, budget=DEFAULT.interp_budget):
    p = from_determinant(S, budget)
    for _ in range(S.m):
        # variable 1 is always the next z_i still present
        p = restrict(one_minus_partial(p, 1), 1, 0.0)
    return p.to_univariate()


def _shifted_char_poly(B):
    """det(z I + B) for Hermitian B."""
    return RealPoly.from_roots(-np.linalg.eigvalsh(B))


def mu_inclusion_exclusion(S, budget=DEFAULT.subset_budget):
    """Subset expansion of mu; valid only when every A_i has rank <= 1."""
    m, d = S.m, S.dim
    if 2**m > budget:
        raise DimensionTooLarge(f"2^{m} subsets exceed budget {budget}", subsets=2**m, budget=budget)
    acc = np.zeros(d + 1)
    A = S.matrices
    for size in range(m + 1):
        sign = (-1.0) ** size * 2.0 ** (m - size)
        for T in combinations(range(m), size):
            B = sum((A[i] for i in T), np.zeros((d, d), dtype=complex))
            acc += sign * _shifted_char_poly(B).coeffs
    return RealPoly(acc)


def expansion_size(m, d):
    """Number of subsets the elementary-symmetric expansion visits."""
    return sum(comb(m, j) for j in range(min(m, d) + 1))


def mu_elementary(S, budget=DEFAULT.expansion_budget):
    """mu from elementary symmetric functions of partial sums; any PSD system."""
    m, d = S.m, S.dim
    size = expansion_size(m, d)
    if size > budget:
        raise DimensionTooLarge(f"{size} subsets exceed budget {budget}", subsets=size,
                                budget=budget)
    acc = np.zeros(d + 1)
    A = S.matrices
    for u in range(min(m, d) + 1):
        ks = np.arange(u, d + 1)
        weights = (-1.0) ** u * np.array([comb(m - u, k - u) for k in ks], dtype=float)
        for U in combinations(range(m), u):
            B = sum((A[i] for i in U), np.zeros((d, d), dtype=complex))
            # det(zI + B) = sum_j e_j(B) z^(d-j)
            e = _shifted_char_poly(B).coeffs[::-1]
            acc[d - ks] += weights * e[ks]
    return RealPoly(acc)


def _check_agreement(mu, other, tol, what):
    deviation = max_coeff_deviation(mu, other)
    scale = max(1.0, float(np.max(np.abs(mu.coeffs))))
    if deviation > tol.cross_check_tol * scale:
        raise CrossCheckFailed(f"interpolation and {what} disagree", deviation=deviation)
    return deviation


def mixed_char(S, tol=DEFAULT, cross_check=True):
    """Mixed characteristic polynomial with roots and (when sum A_i = I) the
    bound (1 + sqrt(eps))^2, eps = max Tr A_i."""
    S = _as_system(S)
    evals = (S.dim + 1) ** (S.m + 1)
    deviation = None
    if evals <= tol.interp_budget:
        mu = mu_interpolation(S, tol.interp_budget)
        method = INTERPOLATION
        if cross_check:
            devs = []
            if S.all_rank_one and 2**S.m <= tol.subset_budget:
                fast = mu_inclusion_exclusion(S, tol.subset_budget)
                devs.append(_check_agreement(mu, fast, tol, "subset expansion"))
            if expansion_size(S.m, S.dim) <= tol.subset_budget:
                fast = mu_elementary(S, tol.expansion_budget)
                devs.append(_check_agreement(mu, fast, tol, "elementary expansion"))
            deviation = max(devs) if devs else None
    elif expansion_size(S.m, S.dim) <= tol.expansion_budget:
        mu = mu_elementary(S, tol.expansion_budget)
        method = ELEMENTARY
    elif S.all_rank_one and 2**S.m <= tol.subset_budget:
        mu = mu_inclusion_exclusion(S, tol.subset_budget)
        method = INCLUSION_EXCLUSION
    else:
        raise DimensionTooLarge(
            f"interpolation needs {evals} evaluations (budget {tol.interp_budget})",
            evaluations=evals, budget=tol.interp_budget,
        )
    # rounding can leave the leading coefficient a hair away from 1
    c = mu.coeffs.copy()
    c[-1] = 1.0
    mu = RealPoly(c)
    roots = real_roots(mu, tol.root_tol)
    bound = float((1.0 + np.sqrt(S.trace_bound)) ** 2) if S.sum_is_identity else None
    return MixedCharResult(mu=mu, roots=roots, method=method, bound=bound,
                           cross_check_deviation=deviation)


def mixed_real_rooted(S, tol=DEFAULT):
    return mixed_char(S, tol).roots


@dataclass
class RootBound:
    largest_root: float
    bound: float
    margin: float
    epsilon: float


def mixed_root_bound(S, tol=DEFAULT):
    """Largest root of mu against (1 + sqrt(eps))^2 for a system summing to I."""
    S = _as_system(S)
    if not S.sum_is_identity:
        raise PreconditionFailed("the matrices must sum to the identity")
    res = mixed_char(S, tol)
    eps = S.trace_bound
    bound = float((1.0 + np.sqrt(eps)) ** 2)
    top = float(res.roots[0]) if res.roots.size else 0.0
    return RootBound(largest_root=top, bound=bound, margin=bound - top, epsilon=eps)


@dataclass
class RankOneIdentity:
    char_poly: RealPoly
    mu: RealPoly
    deviation: float
    ok: bool


def rank_one_identity_check(S, tol=DEFAULT):
    """Compare det(zI - sum A_i) with mu[A_1..A_m] for rank-one A_i."""
    S = _as_system(S)
    if not S.all_rank_one:
        raise NotRankOne("every matrix must have rank at most one", ranks=list(S.ranks))
    total = sum(S.matrices, np.zeros((S.dim, S.dim), dtype=complex))
    pA = linalg.char_poly(total)
    mu = mu_interpolation(S, tol.interp_budget)
    dev = max_coeff_deviation(pA, mu)
    scale = max(1.0, float(np.max(np.abs(pA.coeffs))), float(np.max(np.abs(mu.coeffs))))
    return RankOneIdentity(char_poly=pA, mu=mu, deviation=dev, ok=dev <= 1e-8 * scale)


def affine_in_each_argument_check(S, i, A, B, t, tol=DEFAULT, atol=1e-8):
    """mu with slot i = tA + (1-t)B equals the same convex combination of mus."""
    S = _as_system(S)
    mix = S.replace_matrix(i, t * np.asarray(A) + (1 - t) * np.asarray(B))
    mu_mix = mu_interpolation(mix, tol.interp_budget)
    mu_a = mu_interpolation(S.replace_matrix(i, A), tol.interp_budget)
    mu_b = mu_interpolation(S.replace_matrix(i, B), tol.interp_budget)
    return mu_mix.allclose(t * mu_a + (1 - t) * mu_b, atol)
