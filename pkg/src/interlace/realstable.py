"""Dense multivariate polynomials, determinantal real-stable polynomials and
barrier functions.

The central object is

    q(z, z_1, ..., z_m) = det(z I + sum_i z_i A_i)

for PSD matrices ``A_i``.  It is real stable (no zeros when every variable
has positive imaginary part) and homogeneous of degree ``d``.  It is
recovered exactly, up to rounding, by tensor-product interpolation on the
integer grid ``{0..d}^(m+1)``.

Variable indices are 0-based throughout the library.  In a polynomial built
by :func:`from_determinant`, variable 0 is ``z`` and variable ``i + 1`` is
``z_{i+1}``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import linalg
from .config import DEFAULT
from .errors import (
    BadIndex,
    DimensionTooLarge,
    NotPSD,
    PreconditionFailed,
    PreconditionUnverifiable,
    ShapeMismatch,
    SingularPoint,
)
from .unipoly import RealPoly, unexplained_nonreal


class MultiPoly:
    """Real polynomial in ``nvars`` variables stored as a dense coefficient
    tensor; ``coeffs[e_0, ..., e_{n-1}]`` multiplies ``prod z_k ** e_k``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim == 0:
            c = c.reshape(())
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        self.coeffs = c

    @property
    def nvars(self):
        return self.coeffs.ndim

    @property
    def degree_bounds(self):
        return tuple(s - 1 for s in self.coeffs.shape)

    def degree_in(self, i):
        """Actual degree in variable ``i`` (-1 for the zero polynomial)."""
        self._check(i)
        other = tuple(k for k in range(self.nvars) if k != i)
        mass = np.abs(self.coeffs).sum(axis=other) if other else np.abs(self.coeffs)
        nz = np.flatnonzero(mass)
        return int(nz[-1]) if nz.size else -1

    def total_degree(self):
        if not np.any(self.coeffs):
            return -1
        idx = np.argwhere(self.coeffs != 0)
        return int(idx.sum(axis=1).max())

    def is_zero(self, atol=0.0):
        return bool(np.all(np.abs(self.coeffs) <= atol))

    def _check(self, i):
        if not 0 <= i < self.nvars:
            raise BadIndex(f"variable index {i} out of range for {self.nvars} variables")

    def __call__(self, point):
        return eval_poly(self, point)

    def __sub__(self, other):
        a, b = _pad_common(self.coeffs, other.coeffs)
        return MultiPoly(a - b)

    def __add__(self, other):
        a, b = _pad_common(self.coeffs, other.coeffs)
        return MultiPoly(a + b)

    def allclose(self, other, atol=1e-9):
        a, b = _pad_common(self.coeffs, other.coeffs)
        return bool(np.max(np.abs(a - b), initial=0.0) <= atol)

    def to_univariate(self):
        if self.nvars != 1:
            raise ShapeMismatch(f"expected 1 variable, have {self.nvars}")
        return RealPoly(self.coeffs)

    def __repr__(self):
        return f"MultiPoly(nvars={self.nvars}, bounds={self.degree_bounds})"


def _pad_common(a, b):
    if a.ndim != b.ndim:
        raise ShapeMismatch("polynomials have different numbers of variables")
    shape = tuple(max(x, y) for x, y in zip(a.shape, b.shape))
    pa = np.zeros(shape)
    pb = np.zeros(shape)
    pa[tuple(slice(0, s) for s in a.shape)] = a
    pb[tuple(slice(0, s) for s in b.shape)] = b
    return pa, pb


def eval_poly(p, point):
    """Evaluate at a complex point (one value per variable)."""
    z = np.asarray(point, dtype=complex).ravel()
    if z.size != p.nvars:
        raise ShapeMismatch(f"point has {z.size} coordinates, polynomial has {p.nvars} variables")
    T = p.coeffs.astype(complex)
    # contract the last axis first so remaining axes keep their positions
    for k in range(p.nvars - 1, -1, -1):
        T = npoly.polyval(z[k], np.moveaxis(T, k, 0), tensor=False)
    return complex(T)


def partial(p, i):
    p._check(i)
    if p.coeffs.shape[i] == 1:
        shape = list(p.coeffs.shape)
        return MultiPoly(np.zeros(shape))
    return MultiPoly(npoly.polyder(p.coeffs, 1, axis=i))


def restrict(p, i, t):
    """Substitute the real value ``t`` for variable ``i``; one fewer variable."""
    p._check(i)
    c = np.moveaxis(p.coeffs, i, 0)
    return MultiPoly(npoly.polyval(float(t), c, tensor=False))


def one_minus_partial(p, i):
    """(1 - d/dz_i) p."""
    return p - partial(p, i)


# ---------------------------------------------------------------------------
# PSD systems and the determinantal polynomial


@dataclass(frozen=True)
class PSDSystem:
    """A validated tuple of PSD matrices of a common dimension.

    Use :meth:`from_matrices`; the cached flags are computed there.
    """

    dim: int
    matrices: tuple
    sum_is_identity: bool
    all_rank_one: bool
    trace_bound: float
    norm_bound: float
    ranks: tuple = field(default=())

    @classmethod
    def from_matrices(cls, matrices, dim=None, psd_tol=DEFAULT.psd_clamp_tol,
                      hermitian_tol=DEFAULT.hermitian_tol, rank_tol=1e-9):
        mats = []
        for k, M in enumerate(matrices):
            A = linalg.as_hermitian(M, hermitian_tol)
            w = np.linalg.eigvalsh(A)
            if w[0] < -psd_tol * max(1.0, abs(w[-1])):
                raise NotPSD(f"matrix {k} is not PSD", index=k, min_eigenvalue=float(w[0]))
            mats.append(A)
        if dim is None:
            if not mats:
                raise ShapeMismatch("dimension required for an empty system")
            dim = mats[0].shape[0]
        for k, A in enumerate(mats):
            if A.shape != (dim, dim):
                raise ShapeMismatch(f"matrix {k} has shape {A.shape}, expected {(dim, dim)}")
        total = sum(mats, np.zeros((dim, dim), dtype=complex))
        sum_is_identity = linalg.spectral_norm(total - np.eye(dim)) <= 1e-9
        ranks = tuple(linalg.numeric_rank(A, rank_tol) for A in mats)
        all_rank_one = all(r <= 1 for r in ranks)
        traces = [float(np.trace(A).real) for A in mats]
        norms = [linalg.hermitian_norm(A) for A in mats]
        return cls(
            dim=int(dim),
            matrices=tuple(mats),
            sum_is_identity=bool(sum_is_identity),
            all_rank_one=bool(all_rank_one),
            trace_bound=max(traces, default=0.0),
            norm_bound=max(norms, default=0.0),
            ranks=ranks,
        )

    @property
    def m(self):
        return len(self.matrices)

    def stack(self):
        if not self.matrices:
            return np.zeros((0, self.dim, self.dim), dtype=complex)
        return np.stack(self.matrices)

    def replace_matrix(self, i, A):
        mats = list(self.matrices)
        mats[i] = A
        return PSDSystem.from_matrices(mats, dim=self.dim)


def _vandermonde_inverse(n_nodes):
    nodes = np.arange(n_nodes, dtype=float)
    V = np.vander(nodes, n_nodes, increasing=True)
    return np.linalg.inv(V)


def determinant_grid(S, chunk=1 << 16):
    """det(z I + sum z_i A_i) on the grid {0..d}^(m+1), as a tensor."""
    d, m = S.dim, S.m
    n = d + 1
    shape = (n,) * (m + 1)
    total = n ** (m + 1)
    A = S.stack()
    eye = np.eye(d)
    out = np.empty(total)
    # each flat index owns one output slot, so chunking order is irrelevant
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        coords = np.array(np.unravel_index(idx, shape), dtype=float).T
        M = coords[:, :1, None] * eye
        if m:
            M = M + np.einsum("nk,kij->nij", coords[:, 1:], A)
        out[idx] = np.linalg.det(M).real
    return out.reshape(shape)


def from_determinant(S, budget=DEFAULT.interp_budget):
    """Coefficient tensor of q(z, z_1..z_m) = det(zI + sum z_i A_i)."""
    d, m = S.dim, S.m
    evals = (d + 1) ** (m + 1)
    if evals > budget:
        raise DimensionTooLarge(
            f"interpolation needs {evals} determinant evaluations (budget {budget})",
            evaluations=evals, budget=budget,
        )
    values = determinant_grid(S)
    Vinv = _vandermonde_inverse(d + 1)
    C = values
    for axis in range(m + 1):
        C = np.moveaxis(np.tensordot(Vinv, C, axes=([1], [axis])), 0, axis)
    # q is homogeneous of degree d and has degree <= rank(A_i) in z_i; every
    # other coefficient vanishes exactly, so rounding noise there is dropped
    exps = np.indices(C.shape)
    keep = exps.sum(axis=0) == d
    for i, rank in enumerate(S.ranks):
        keep &= exps[i + 1] <= rank
    C = np.where(keep, C, 0.0)
    return MultiPoly(C)


def direct_determinant(S, point):
    """det(z I + sum z_i A_i) evaluated straight from the matrices."""
    z = np.asarray(point, dtype=complex).ravel()
    M = z[0] * np.eye(S.dim, dtype=complex)
    for zi, A in zip(z[1:], S.matrices):
        M = M + zi * A
    return complex(np.linalg.det(M))


# ---------------------------------------------------------------------------
# Stability falsification


def _univariate_slices(C, k, others):
    """Coefficients in variable k after substituting sampled values.

    ``others`` has shape (N, nvars - 1) (values for every variable but k);
    returns an (N, deg_k + 1) complex array.
    """
    T = np.moveaxis(C, k, -1).astype(complex)
    N = others.shape[0]
    T = np.broadcast_to(T, (N,) + T.shape)
    for col in range(others.shape[1]):
        n = T.shape[1]
        powers = others[:, col, None] ** np.arange(n)
        T = np.einsum("na,na...->n...", powers, T)
    return T


def stability_falsifier(p, samples=10_000, seed=0, tol=DEFAULT.stab_tol, batch=2048):
    """Look for a zero of ``p`` with every coordinate in the upper half-plane.

    Each sample fixes all variables but one at random upper-half-plane
    values, solves the remaining univariate polynomial and tests its roots
    for membership in the half-plane.  Returns the first such zero as a
    tuple of complex numbers, or ``None``.  A ``None`` result is evidence,
    not proof, of stability.
    """
    C = p.coeffs
    nv = p.nvars
    if nv == 0 or not np.any(C):
        return None
    active = [k for k in range(nv) if p.degree_in(k) > 0]
    if not active:
        return None
    rng = np.random.default_rng(seed)
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        k = active[(done // batch) % len(active)]
        re = rng.standard_normal((n, nv - 1)) * 2.0
        im = np.exp(rng.uniform(np.log(1e-2), np.log(1e1), (n, nv - 1)))
        others = re + 1j * im
        slices = _univariate_slices(C, k, others)
        for row, coeffs in enumerate(slices):
            hit = _upper_root(coeffs, tol)
            if hit is None:
                continue
            point = np.insert(others[row], k, hit)
            if _is_genuine_zero(p, point, tol):
                return tuple(complex(v) for v in point)
        done += n
    return None


def _upper_root(coeffs, tol):
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return None
    c = np.where(np.abs(coeffs) > 1e-13 * scale, coeffs, 0)
    nz = np.flatnonzero(c)
    if nz.size == 0 or nz[-1] == 0:
        return None
    c = c[: nz[-1] + 1]
    roots = npoly.polyroots(c)
    _, bad = unexplained_nonreal(roots, tol)
    for i in bad:
        if roots[i].imag > tol * (1 + abs(roots[i])):
            return roots[i]
    return None


def _is_genuine_zero(p, point, tol):
    absc = MultiPoly(np.abs(p.coeffs))
    scale = abs(eval_poly(absc, np.abs(point)))
    return abs(eval_poly(p, point)) <= tol * max(scale, 1e-300)


# ---------------------------------------------------------------------------
# Barrier functions of p(z_1..z_m) = det(sum z_i A_i)


def _weighted_sum(S, x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size != S.m:
        raise ShapeMismatch(f"point has {x.size} coordinates, system has {S.m} matrices")
    return np.einsum("k,kij->ij", x.astype(complex), S.stack())


def _inverse_at(S, x):
    M = _weighted_sum(S, x)
    w = np.linalg.eigvalsh(M)
    if w[0] <= 1e-12 * max(1.0, abs(w[-1])):
        raise SingularPoint("sum x_i A_i is not positive definite at this point",
                            min_eigenvalue=float(w[0]))
    return np.linalg.inv(M)


def barrier(S, x, j):
    """Phi^j(x) = Tr((sum x_i A_i)^{-1} A_j), the log-derivative of det."""
    if not 0 <= j < S.m:
        raise BadIndex(f"index {j} out of range for {S.m} matrices")
    Minv = _inverse_at(S, x)
    return float(np.trace(Minv @ S.matrices[j]).real)


def barrier_poly(p, x, i):
    """d_i p / p at a real point, from the coefficient tensor."""
    val = eval_poly(p, x)
    if val == 0:
        raise SingularPoint("polynomial vanishes at this point")
    return (eval_poly(partial(p, i), x) / val).real


def barrier_derivatives(S, x, i, j, kmax):
    """(-1)^k d^k/dx_j^k Phi^i(x) for k = 0..kmax, in closed form.

    Along the ray x + t e_j the matrix is M + t A_j, so the k-th derivative
    of Tr((M + t A_j)^{-1} A_i) is (-1)^k k! Tr((M^{-1} A_j)^k M^{-1} A_i).
    """
    Minv = _inverse_at(S, x)
    B = Minv @ S.matrices[j]
    out = []
    P = Minv @ S.matrices[i]
    for k in range(kmax + 1):
        out.append(math.factorial(k) * float(np.trace(P).real))
        P = B @ P
    return np.array(out)


def _central_weights(k, half):
    """Finite-difference weights for the k-th derivative on -half..half."""
    s = np.arange(-half, half + 1, dtype=float)
    V = np.vander(s, increasing=True).T
    rhs = np.zeros(s.size)
    rhs[k] = math.factorial(k)
    return s, np.linalg.solve(V, rhs)


def fd_derivatives(f, kmax, h):
    """Central differences of f at 0 for k = 1..kmax (fourth-order stencils).

    The step grows tenfold per order beyond the second so that rounding
    error stays below truncation error.
    """
    out = []
    for k in range(1, kmax + 1):
        hk = h * 10.0 ** max(0, k - 2)
        half = (k + 1) // 2 + 1
        s, w = _central_weights(k, half)
        vals = np.array([f(si * hk) for si in s])
        out.append(float(w @ vals) / hk**k)
    return np.array(out)


def _orthant_scan(S, x, points_per_axis=5):
    """Heuristic check that sum y_i A_i > 0 for y >= x.

    Grid: x plus offsets {0, .25, 1, 4, 16} * (1 + |x_i|) per axis, plus the
    limit direction sum A_i.
    """
    x = np.asarray(x, dtype=float)
    A = S.stack()
    m = S.m
    offsets = np.array([0.0, 0.25, 1.0, 4.0, 16.0])[:points_per_axis]
    grids = np.meshgrid(*[x[i] + offsets * (1 + abs(x[i])) for i in range(m)], indexing="ij")
    Y = np.stack([g.ravel() for g in grids], axis=1)
    M = np.einsum("nk,kij->nij", Y.astype(complex), A)
    w = np.linalg.eigvalsh(M)
    ok = bool(np.all(w[:, 0] > 1e-12 * np.maximum(1.0, np.abs(w[:, -1]))))
    lim = np.linalg.eigvalsh(A.sum(axis=0))
    return ok and bool(lim[0] > 1e-12 * max(1.0, abs(lim[-1])))


@dataclass
class BarrierReport:
    point: list
    i: int
    j: int
    value: float
    exact: list            # (-1)^k d^k Phi^i / dx_j^k, k = 0..kmax
    finite_diff: list      # same quantity from central differences, k = 1..kmax
    sign_verdicts: list    # "pass" / "fail" per k = 0..kmax
    fd_agreement: list     # "pass" / "fail" per k = 1..kmax
    ray_monotone: list     # per coordinate ray e_1..e_m
    ray_convex: list
    ray_length: float
    fd_tol: float
    h: float

    @property
    def passed(self):
        verdicts = self.sign_verdicts + self.fd_agreement + self.ray_monotone + self.ray_convex
        return all(v != "fail" for v in verdicts)

    def to_dict(self):
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def barrier_sign_check(S, x, i, j, kmax=3, h=None, fd_tol=DEFAULT.fd_tol, ray_points=41):
    """Check that t -> Phi^i(x + t e_j) is positive with alternating-sign
    derivatives, by closed form and by finite differences, and that Phi^i is
    nonincreasing and convex along every coordinate ray from ``x`` on
    ``[0, 10 (1 + |x|)]``.
    """
    x = np.asarray(x, dtype=float).ravel()
    for idx in (i, j):
        if not 0 <= idx < S.m:
            raise BadIndex(f"index {idx} out of range for {S.m} matrices")
    barrier(S, x, i)  # a singular base point is reported as such
    if not _orthant_scan(S, x):
        raise PreconditionUnverifiable("could not verify sum y_i A_i > 0 on {y >= x}")
    if h is None:
        h = 1e-4 * (1.0 + abs(x[j]))
    exact = barrier_derivatives(S, x, i, j, kmax)
    ej = np.eye(S.m)[j]

    def f(t):
        return barrier(S, x + t * ej, i)

    fd = fd_derivatives(f, kmax, h) if kmax else np.zeros(0)
    signed_fd = fd * (-1.0) ** np.arange(1, kmax + 1)
    signs = ["pass" if exact[0] > 0 else "fail"]
    signs += ["pass" if v >= -fd_tol else "fail" for v in signed_fd]
    agree = [
        "pass" if abs(a - b) <= fd_tol * max(1.0, abs(b)) else "fail"
        for a, b in zip(signed_fd, exact[1:])
    ]
    length = 10.0 * (1.0 + float(np.linalg.norm(x)))
    ts = np.linspace(0.0, length, ray_points)
    mono, conv = [], []
    for k in range(S.m):
        ek = np.eye(S.m)[k]
        vals = np.array([barrier(S, x + t * ek, i) for t in ts])
        scale = fd_tol * max(1.0, float(np.max(np.abs(vals))))
        mono.append("pass" if np.all(np.diff(vals) <= scale) else "fail")
        conv.append("pass" if np.all(np.diff(vals, 2) >= -scale) else "fail")
    return BarrierReport(
        point=x.tolist(), i=i, j=j, value=float(exact[0]),
        exact=exact.tolist(), finite_diff=signed_fd.tolist(),
        sign_verdicts=signs, fd_agreement=agree,
        ray_monotone=mono, ray_convex=conv, ray_length=length,
        fd_tol=fd_tol, h=h,
    )


@dataclass
class ShiftReport:
    lhs: list       # Phi^i of (1 - d_j) p at x + delta e_j, per i
    rhs: list       # Phi^i of p at x, per i
    holds: bool
    phi_j: float
    delta: float

    def __bool__(self):
        return self.holds

    def to_dict(self):
        return dict(self.__dict__)


def restricted_determinant(S, budget=DEFAULT.interp_budget):
    """p(z_1..z_m) = det(sum z_i A_i) as a MultiPoly (q with z := 0)."""
    return restrict(from_determinant(S, budget), 0, 0.0)


def barrier_shift_check(S, x, j, delta, fd_tol=DEFAULT.fd_tol, budget=DEFAULT.interp_budget):
    """Phi^i_{(1 - d_j) p}(x + delta e_j) <= Phi^i_p(x) for every i.

    Requires Phi^j_p(x) + 1/delta <= 1.  The left side goes through the
    coefficient tensor; the right side through the matrix inverse.
    """
    x = np.asarray(x, dtype=float).ravel()
    if not 0 <= j < S.m:
        raise BadIndex(f"index {j} out of range for {S.m} matrices")
    if not delta > 0:
        raise PreconditionFailed("delta must be positive")
    phi_j = barrier(S, x, j)
    if phi_j + 1.0 / delta > 1.0:
        raise PreconditionFailed(
            "barrier precondition Phi^j(x) + 1/delta <= 1 fails",
            phi_j=phi_j, delta=float(delta),
        )
    p = restricted_determinant(S, budget)
    pj = one_minus_partial(p, j)
    y = x.copy()
    y[j] += delta
    lhs = [barrier_poly(pj, y, i) for i in range(S.m)]
    rhs = [barrier(S, x, i) for i in range(S.m)]
    holds = all(a <= b + fd_tol for a, b in zip(lhs, rhs))
    return ShiftReport(lhs=lhs, rhs=rhs, holds=holds, phi_j=phi_j, delta=float(delta))
