"""Univariate real polynomials, real-root extraction and nice families.

A family of equal-degree polynomials is *nice* (has a common interlacing)
when every member has a positive leading coefficient, is real-rooted, and
the j-th largest roots of all members sit at or below the (j-1)-th largest
roots of all members.  Nice families are exactly those whose convex
combinations stay real-rooted, and the roots of any such combination are
bracketed by the members' roots.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config import DEFAULT
from .errors import (
    BadPoints,
    BadWeights,
    NotRealRooted,
    PointNotAboveRoots,
    ZeroPolynomial,
)

MAX_DEGREE = 64


class RealPoly:
    """Real polynomial ``sum_k coeffs[k] * z**k`` (ascending coefficients).

    Trailing zero coefficients are trimmed on construction, so ``degree`` is
    the index of the last nonzero coefficient.  The zero polynomial keeps a
    single ``0.0`` coefficient and has degree ``-1``.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        if c.size - 1 > MAX_DEGREE:
            raise ValueError(f"degree {c.size - 1} exceeds cap {MAX_DEGREE}")
        c.setflags(write=False)
        self._c = c

    @classmethod
    def from_roots(cls, roots):
        """Monic polynomial with the given (real) roots."""
        roots = np.asarray(roots, dtype=float)
        if roots.size == 0:
            return cls([1.0])
        return cls(np.poly(roots)[::-1])

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        return -1 if self.is_zero() else self._c.size - 1

    @property
    def leading(self):
        return float(self._c[-1])

    def is_zero(self):
        return self._c.size == 1 and self._c[0] == 0.0

    def __call__(self, x):
        return npoly.polyval(x, self._c)

    def deriv(self, k=1):
        return RealPoly(npoly.polyder(self._c, k))

    def __add__(self, other):
        return RealPoly(npoly.polyadd(self._c, _coeffs(other)))

    def __sub__(self, other):
        return RealPoly(npoly.polysub(self._c, _coeffs(other)))

    def __mul__(self, other):
        if isinstance(other, RealPoly):
            return RealPoly(npoly.polymul(self._c, other._c))
        return RealPoly(self._c * float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return RealPoly(-self._c)

    def __eq__(self, other):
        return isinstance(other, RealPoly) and np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def allclose(self, other, atol=1e-10):
        a, b = self._c, _coeffs(other)
        n = max(a.size, b.size)
        a = np.pad(a, (0, n - a.size))
        b = np.pad(b, (0, n - b.size))
        return bool(np.max(np.abs(a - b)) <= atol)

    def descending(self):
        """Coefficients highest power first (the CLI's display order)."""
        return self._c[::-1].copy()

    def __repr__(self):
        return f"RealPoly({self._c.tolist()})"


def _coeffs(p):
    if isinstance(p, RealPoly):
        return p.coeffs
    return np.atleast_1d(np.asarray(p, dtype=float))


def max_coeff_deviation(p, q):
    a, b = _coeffs(p), _coeffs(q)
    n = max(a.size, b.size)
    return float(np.max(np.abs(np.pad(a, (0, n - a.size)) - np.pad(b, (0, n - b.size)))))


def real_roots(p, tol=DEFAULT.root_tol):
    """All roots of ``p`` in descending order, which must be real.

    Roots come from the eigenvalues of the companion matrix (LAPACK balances
    it).  A root counts as real when its imaginary part is at most
    ``tol * (1 + |root|)``.  Floating-point noise splits a k-fold real root
    into a small circle of radius ~ tol**(1/k); such clusters are accepted
    when their centroid is real and their radius is within
    ``tol**(1/k) * (1 + |centroid|)``, and are then reported as the centroid
    repeated k times.
    """
    if not isinstance(p, RealPoly):
        p = RealPoly(p)
    if p.is_zero():
        raise ZeroPolynomial("the zero polynomial has no well-defined roots")
    c = p.coeffs
    if c.size == 1:
        return np.zeros(0)
    nz = np.flatnonzero(c)
    n_zero = int(nz[0])
    core = c[n_zero:]
    if core.size > 1:
        z = npoly.polyroots(core).astype(complex)
    else:
        z = np.zeros(0, dtype=complex)
    out = _resolve_real(z, tol)
    out = np.concatenate([out, np.zeros(n_zero)])
    return np.sort(out)[::-1]


def unexplained_nonreal(z, tol):
    """Split complex roots into real values and genuinely non-real indices.

    Returns ``(real, bad)`` where ``real[i]`` is the real value assigned to
    root ``i`` (NaN when it is genuinely non-real) and ``bad`` lists the
    indices that neither pass the imaginary-part test nor belong to an
    accepted multiple-root cluster.
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    real = np.full(n, np.nan)
    good = np.abs(z.imag) <= tol * (1.0 + np.abs(z))
    real[good] = z.real[good]
    done = set(np.flatnonzero(good).tolist())
    bad = []
    for i in np.argsort(-z.real, kind="stable"):
        if i in done:
            continue
        order = np.argsort(np.abs(z - z[i].real), kind="stable")
        for k in range(2, n + 1):
            members = order[:k]
            center = z[members].mean()
            radius = float(np.max(np.abs(z[members] - center)))
            scale = 1.0 + abs(center)
            # the next root must sit clearly outside the cluster
            gap = float(np.abs(z[order[k]] - center)) if k < n else np.inf
            if (
                abs(center.imag) <= tol * scale
                and radius <= tol ** (1.0 / k) * scale
                and gap > 3.0 * radius
            ):
                real[members] = center.real
                done.update(members.tolist())
                break
        else:
            bad.append(int(i))
            done.add(int(i))
    return real, bad


def _resolve_real(z, tol):
    real, bad = unexplained_nonreal(z, tol)
    if bad:
        raise NotRealRooted("polynomial has a non-real root", root=complex(z[bad[0]]))
    return real


def try_real_roots(p, tol=DEFAULT.root_tol):
    try:
        return real_roots(p, tol)
    except NotRealRooted:
        return None


@dataclass(frozen=True)
class NiceVerdict:
    """Outcome of :func:`is_nice_family`; truthy iff the family is nice."""

    nice: bool
    reason: str = ""
    index: int = -1

    def __bool__(self):
        return self.nice


def _family(F):
    F = [f if isinstance(f, RealPoly) else RealPoly(f) for f in F]
    if not F:
        raise ValueError("a family must be nonempty")
    return F


def family_roots(F, tol=DEFAULT.root_tol):
    """Matrix of roots, one descending row per member."""
    return np.array([real_roots(f, tol) for f in _family(F)])


def is_nice_family(F, interlace_tol=DEFAULT.interlace_tol, root_tol=DEFAULT.root_tol):
    """Check the three defining conditions of a nice family."""
    F = _family(F)
    degs = {f.degree for f in F}
    if len(degs) != 1:
        return NiceVerdict(False, "unequal_degrees")
    for i, f in enumerate(F):
        if f.leading <= 0:
            return NiceVerdict(False, "nonpositive_leading_coefficient", i)
    rows = []
    for i, f in enumerate(F):
        r = try_real_roots(f, root_tol)
        if r is None:
            return NiceVerdict(False, "not_real_rooted", i)
        rows.append(r)
    R = np.array(rows)
    n = R.shape[1]
    hi = R.max(axis=0)
    lo = R.min(axis=0)
    # column j holds the (j+1)-th largest roots; index reports that column
    for j in range(1, n):
        if hi[j] > lo[j - 1] + interlace_tol:
            return NiceVerdict(False, "roots_not_interlaced", j)
    return NiceVerdict(True)


def _check_weights(F, weights):
    w = np.asarray(weights, dtype=float).ravel()
    if w.size != len(F):
        raise BadWeights(f"expected {len(F)} weights, got {w.size}")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-12:
        raise BadWeights("weights must be nonnegative and sum to 1")
    return w


def convex_combo(F, weights):
    F = _family(F)
    w = _check_weights(F, weights)
    n = max(f.coeffs.size for f in F)
    acc = np.zeros(n)
    for wi, f in zip(w, F):
        acc[: f.coeffs.size] += wi * f.coeffs
    return RealPoly(acc)


def simplex_sample(rng, k):
    """Uniform point of the (k-1)-simplex from sorted-uniform spacings."""
    u = np.sort(rng.random(k - 1))
    return np.diff(np.concatenate([[0.0], u, [1.0]]))


def _structured_weights(k):
    eye = np.eye(k)
    yield from eye
    for a, b in combinations(range(k), 2):
        yield 0.5 * (eye[a] + eye[b])
    if k > 2:
        yield np.full(k, 1.0 / k)


def nice_family_falsifier(F, trials=1000, seed=0, root_tol=DEFAULT.root_tol):
    """Search for convex weights whose combination has a non-real root.

    Vertices, pairwise midpoints and the barycenter are tried first, then
    ``trials`` uniform simplex samples.  Returns the first offending weight
    vector, or ``None``.
    """
    F = _family(F)
    k = len(F)
    rng = np.random.default_rng(seed)

    def bad(w):
        return try_real_roots(convex_combo(F, w), root_tol) is None

    for w in _structured_weights(k):
        if bad(w):
            return w
    if k == 1:
        return None
    for _ in range(trials):
        w = simplex_sample(rng, k)
        w = w / w.sum()
        if bad(w):
            return w
    return None


def root_bracket_check(F, weights, interlace_tol=DEFAULT.interlace_tol, root_tol=DEFAULT.root_tol):
    """min_i rho_j(f_i) <= rho_j(f) <= max_i rho_j(f_i) for every j."""
    F = _family(F)
    R = family_roots(F, root_tol)
    r = real_roots(convex_combo(F, weights), root_tol)
    if r.size != R.shape[1]:
        return False
    return bool(
        np.all(R.min(axis=0) - interlace_tol <= r) and np.all(r <= R.max(axis=0) + interlace_tol)
    )


def sign_alternation_check(p, points, sign_tol=None):
    """(-1)**(j-1) p(a_j) >= 0 at points a_{n+1} < ... < a_1.

    ``points`` is given in increasing order (a_{n+1} first) and must hold
    exactly ``degree + 1`` values.  Every one of them is checked.
    """
    if not isinstance(p, RealPoly):
        p = RealPoly(p)
    a = np.asarray(points, dtype=float).ravel()
    if a.size != p.degree + 1:
        raise BadPoints(f"need {p.degree + 1} points for degree {p.degree}, got {a.size}")
    if np.any(np.diff(a) <= 0):
        raise BadPoints("points must be strictly increasing")
    if sign_tol is None:
        sign_tol = DEFAULT.sign_tol * float(np.max(np.abs(p.coeffs)))
    top_first = a[::-1]
    signs = (-1.0) ** np.arange(top_first.size)
    return bool(np.all(signs * p(top_first) >= -sign_tol))


def log_derivative_values(p, x, kmax, tol=DEFAULT.root_tol):
    """(-1)^k (d/dx)^k (p'/p)(x) for k = 0..kmax via sum k!/(x - rho_i)^(k+1)."""
    if not isinstance(p, RealPoly):
        p = RealPoly(p)
    rho = real_roots(p, tol)
    if rho.size and not x > rho[0]:
        raise PointNotAboveRoots(f"x={x} is not above the largest root {rho[0]}")
    gaps = x - rho
    return np.array([math.factorial(k) * np.sum(gaps ** -(k + 1.0)) for k in range(kmax + 1)])


def log_derivative_signs(p, x, kmax, tol=DEFAULT.root_tol):
    return bool(np.all(log_derivative_values(p, x, kmax, tol) > 0))
