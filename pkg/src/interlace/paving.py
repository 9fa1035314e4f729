"""Matrix paving: projections, self-adjoint matrices, then general matrices.

A paving of an m x m matrix T is a partition of {0..m-1} into blocks S such
that every compression T[S, S] has small norm.  Three stages:

* projections P: rank-one operators on range(P) built from the columns of P
  sum to the identity there, and a partition search over them bounds every
  ||Q P Q|| by (1/sqrt(r) + sqrt(max_i P_ii))^2;
* self-adjoint T with ||T|| <= 1: the 2m x 2m dilation is a projection with
  constant diagonal 1/2; paving it and splitting each block into its first-
  and second-half indices gives r^2 blocks with -eps Q <= QTQ <= eps Q as
  soon as 2(1/sqrt(r) + 1/sqrt(2))^2 - 1 <= eps;
* general T with zero diagonal: pave the Hermitian and anti-Hermitian parts
  at eps/2 each and intersect.

Blocks are 0-based here; the CLI reports them 1-based.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .config import DEFAULT
from .errors import (
    BadEpsilon,
    BadPartition,
    NonzeroDiagonal,
    NotContraction,
    NotHermitian,
    NotProjection,
    NotSelfAdjoint,
)
from .partition import EXHAUSTIVE, LOCAL, partition_search
from .realstable import PSDSystem

AUTO = "auto"


@dataclass
class PavingResult:
    m: int
    blocks: list             # 0-based index lists; empty blocks allowed
    norms: list              # ||Q T Q|| (or ||Q P Q||) per block
    bound: float             # absolute right-hand side the norms are held to
    r: int
    epsilon: float | None = None
    operator_norm: float | None = None
    strategy: str | None = None
    details: dict = field(default_factory=dict)

    @property
    def max_norm(self):
        return max(self.norms, default=0.0)

    @property
    def certified(self):
        return self.max_norm <= self.bound + DEFAULT.bound_tol

    @property
    def status(self):
        return "certified" if self.certified else "bound_not_certified"

    @property
    def relative_norms(self):
        if not self.operator_norm:
            return [0.0 for _ in self.norms]
        return [v / self.operator_norm for v in self.norms]

    def to_dict(self):
        return {
            "m": self.m,
            "r": self.r,
            "epsilon": self.epsilon,
            "blocks": [[i + 1 for i in b] for b in self.blocks],
            "norms": self.norms,
            "relative_norms": self.relative_norms,
            "operator_norm": self.operator_norm,
            "bound": self.bound,
            "max_norm": self.max_norm,
            "margin": self.bound - self.max_norm,
            "strategy": self.strategy,
            "status": self.status,
            "details": self.details,
        }


def compression_norm(T, block):
    """||Q T Q|| for the diagonal projection Q onto ``block``."""
    if len(block) == 0:
        return 0.0
    idx = np.asarray(block, dtype=int)
    return linalg.spectral_norm(np.asarray(T)[np.ix_(idx, idx)])


def check_partition(blocks, m):
    seen = []
    for b in blocks:
        seen.extend(int(i) for i in b)
    if sorted(seen) != list(range(m)):
        raise BadPartition(f"blocks do not partition {{0..{m - 1}}}")


def _pick_strategy(strategy, r, n, budget):
    if strategy != AUTO:
        return strategy
    limit = DEFAULT.enum_budget if budget is None else budget
    return EXHAUSTIVE if r**n <= limit else LOCAL


def projection_rank_one(P):
    """Rank-one operators A_i = c_i c_i^* on range(P), c_i = U^* e_i.

    U holds an orthonormal eigenbasis of the eigenvalue-1 space, so the A_i
    sum to the identity on range(P) and ||A_i|| = P_ii.
    """
    w, V = np.linalg.eigh(P)
    U = V[:, w > 0.5]
    return [np.outer(c, c.conj()) for c in U.conj()], U.shape[1]


def pave_projection(P, r, strategy=AUTO, budget=None, seed=0, workers=1, restarts=100,
                    tol=1e-8):
    P = linalg.as_matrix(P)
    if not linalg.is_projection(P, tol):
        raise NotProjection("input is not an orthogonal projection within tolerance")
    P = linalg.as_hermitian(P, tol)
    m = P.shape[0]
    diag_max = float(np.max(np.abs(np.diag(P))))
    bound = float((1.0 / math.sqrt(r) + math.sqrt(diag_max)) ** 2)
    mats, rank = projection_rank_one(P)
    # indices with P e_i = 0 carry A_i = 0 and go to block 0
    active = [i for i in range(m) if np.real(P[i, i]) > 1e-12]
    blocks = [[] for _ in range(r)]
    details = {"rank": rank, "diag_max": diag_max, "active_indices": len(active)}
    used = None
    if rank == 0 or not active:
        blocks[0] = list(range(m))
    else:
        S = PSDSystem.from_matrices([mats[i] for i in active], dim=rank)
        used = _pick_strategy(strategy, r, len(active), budget)
        res = partition_search(S, r, strategy=used, budget=budget, seed=seed,
                               restarts=restarts, workers=workers)
        for i, w in zip(active, res.best.omega):
            blocks[w].append(i)
        for i in range(m):
            if i not in active:
                blocks[0].append(i)
        blocks = [sorted(b) for b in blocks]
        details.update(search_objective=res.objective, search_bound=res.bound,
                       search_status=res.status, iterations=res.iterations)
    norms = [compression_norm(P, b) for b in blocks]
    return PavingResult(m=m, blocks=blocks, norms=norms, bound=bound, r=r,
                        operator_norm=linalg.spectral_norm(P), strategy=used, details=details)


@dataclass
class Dilation:
    source: np.ndarray
    P: np.ndarray


def dilate(T):
    """[[ (I+T)/2, (I-T^2)^(1/2)/2 ], [ (I-T^2)^(1/2)/2, (I-T)/2 ]]."""
    try:
        T = linalg.as_hermitian(T)
    except NotHermitian as exc:
        raise NotSelfAdjoint(str(exc), **exc.details) from None
    norm = linalg.hermitian_norm(T)
    if norm > 1.0 + 1e-12:
        raise NotContraction(f"||T|| = {norm} exceeds 1", norm=norm)
    m = T.shape[0]
    eye = np.eye(m)
    R = linalg.sqrt_psd(eye - T @ T)
    P = 0.5 * np.block([[eye + T, R], [R, eye - T]])
    return Dilation(source=T, P=0.5 * (P + P.conj().T))


def r_criterion(r):
    return 2.0 * (1.0 / math.sqrt(r) + 1.0 / math.sqrt(2.0)) ** 2 - 1.0


def choose_r(epsilon):
    """Smallest r >= 1 with 2(1/sqrt(r) + 1/sqrt(2))^2 - 1 <= epsilon."""
    if not epsilon > 0:
        raise BadEpsilon(f"epsilon must be positive, got {epsilon}")
    # closed-form estimate, then settle by direct evaluation
    a = (math.sqrt(2.0) / 2.0) * (math.sqrt(1.0 + epsilon) - 1.0)
    r = max(1, int(1.0 / (a * a)) - 2)
    while r > 1 and r_criterion(r - 1) <= epsilon + 1e-12:
        r -= 1
    while r_criterion(r) > epsilon + 1e-12:
        r += 1
    return r


def _as_selfadjoint(T):
    try:
        return linalg.as_hermitian(T)
    except NotHermitian as exc:
        raise NotSelfAdjoint(str(exc), **exc.details) from None


def pave_selfadjoint(T, epsilon, strategy=AUTO, budget=None, seed=0, workers=1, r=None,
                     restarts=100):
    """r^2 blocks with ||Q T Q|| <= epsilon ||T|| via the dilation."""
    T = _as_selfadjoint(T)
    m = T.shape[0]
    r = choose_r(epsilon) if r is None else r
    norm = linalg.hermitian_norm(T)
    if norm == 0.0:
        blocks = [list(range(m))] + [[] for _ in range(r * r - 1)]
        return PavingResult(m=m, blocks=blocks, norms=[0.0] * len(blocks), bound=0.0, r=r,
                            epsilon=epsilon, operator_norm=0.0, strategy=None,
                            details={"scale": 0.0})
    Ts = T / norm
    D = dilate(Ts)
    proj = pave_projection(D.P, r, strategy=strategy, budget=budget, seed=seed,
                           workers=workers, restarts=restarts)
    first = [[i for i in b if i < m] for b in proj.blocks]
    second = [[i - m for i in b if i >= m] for b in proj.blocks]
    blocks = []
    for a in range(r):
        fa = set(first[a])
        for b in range(r):
            blocks.append(sorted(fa.intersection(second[b])))
    norms = [compression_norm(T, blk) for blk in blocks]
    details = {
        "scale": norm,
        "criterion": r_criterion(r),
        "projection_bound": proj.bound,
        "projection_max_norm": proj.max_norm,
        "projection_status": proj.status,
        "projection_blocks": [[i + 1 for i in b] for b in proj.blocks],
        **{k: v for k, v in proj.details.items() if k.startswith("search") or k == "iterations"},
    }
    return PavingResult(m=m, blocks=blocks, norms=norms, bound=epsilon * norm, r=r,
                        epsilon=epsilon, operator_norm=norm, strategy=proj.strategy,
                        details=details)


def sandwich_margin(T, block, epsilon):
    """min eigenvalue of eps Q -+ QTQ on the block, for normalized T."""
    if not block:
        return math.inf
    idx = np.asarray(block)
    B = np.asarray(T)[np.ix_(idx, idx)]
    w = np.linalg.eigvalsh(0.5 * (B + B.conj().T))
    return float(min(epsilon - w[-1], epsilon + w[0]))


def pave_general(T, epsilon, strategy=AUTO, budget=None, seed=0, workers=1, restarts=100):
    """Pave a zero-diagonal matrix by paving its Hermitian and skew parts."""
    T = linalg.as_matrix(T)
    m = T.shape[0]
    norm = linalg.spectral_norm(T)
    if np.max(np.abs(np.diag(T))) > 1e-10 * norm:
        raise NonzeroDiagonal("T must have zero diagonal",
                              max_abs_diagonal=float(np.max(np.abs(np.diag(T)))))
    if norm == 0.0:
        return PavingResult(m=m, blocks=[list(range(m))], norms=[0.0], bound=0.0, r=1,
                            epsilon=epsilon, operator_norm=0.0, details={"scale": 0.0})
    Tn = T / norm
    A = 0.5 * (Tn + Tn.conj().T)
    B = (Tn - Tn.conj().T) / 2j
    half = epsilon / 2.0
    kw = dict(strategy=strategy, budget=budget, seed=seed, workers=workers, restarts=restarts)
    pa = pave_selfadjoint(A, half, **kw)
    pb = pave_selfadjoint(B, half, **kw)
    blocks = []
    for ba in pa.blocks:
        sa = set(ba)
        for bb in pb.blocks:
            inter = sorted(sa.intersection(bb))
            if inter:
                blocks.append(inter)
    norms = [compression_norm(T, b) for b in blocks]
    details = {
        "scale": norm,
        "r_hermitian": pa.r,
        "r_skew": pb.r,
        "block_count_bound": pa.r**2 * pb.r**2,
        "hermitian_status": pa.status,
        "skew_status": pb.status,
    }
    return PavingResult(m=m, blocks=blocks, norms=norms, bound=epsilon * norm,
                        r=len(blocks), epsilon=epsilon, operator_norm=norm,
                        strategy=pa.strategy or pb.strategy, details=details)


@dataclass
class PavingVerification:
    norms: list
    operator_norm: float
    max_ratio: float
    epsilon: float
    holds: bool

    def to_dict(self):
        return dict(self.__dict__)


def verify_paving(T, blocks, epsilon):
    """Recompute every ||Q T Q|| from scratch and compare with epsilon ||T||."""
    T = linalg.as_matrix(T)
    check_partition(blocks, T.shape[0])
    norm = linalg.spectral_norm(T)
    norms = [compression_norm(T, b) for b in blocks]
    ratio = max(norms, default=0.0) / norm if norm > 0 else 0.0
    return PavingVerification(norms=norms, operator_norm=norm, max_ratio=ratio,
                              epsilon=epsilon, holds=ratio <= epsilon + DEFAULT.bound_tol)
