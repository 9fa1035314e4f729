"""Exception hierarchy.

Every error raised by the library derives from :class:`InterlaceError`, so the
CLI can map the whole family to exit code 2 with a machine-readable payload.
"""


class InterlaceError(Exception):
    """Base class for all library errors."""

    code = "interlace_error"

    def __init__(self, message="", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


class NotHermitian(InterlaceError):
    code = "not_hermitian"


class NotSelfAdjoint(NotHermitian):
    code = "not_self_adjoint"


class NotPSD(InterlaceError):
    code = "not_psd"


class NotProjection(InterlaceError):
    code = "not_projection"


class NotContraction(InterlaceError):
    code = "not_contraction"


class NotRealRooted(InterlaceError):
    code = "not_real_rooted"


class ZeroPolynomial(InterlaceError):
    code = "zero_polynomial"


class BadWeights(InterlaceError):
    code = "bad_weights"


class BadPoints(InterlaceError):
    code = "bad_points"


class PointNotAboveRoots(InterlaceError):
    code = "point_not_above_roots"


class BadIndex(InterlaceError):
    code = "bad_index"


class ShapeMismatch(InterlaceError):
    code = "shape_mismatch"


class DimensionTooLarge(InterlaceError):
    code = "dimension_too_large"


class SingularPoint(InterlaceError):
    code = "singular_point"


class PreconditionFailed(InterlaceError):
    code = "precondition_failed"


class PreconditionUnverifiable(InterlaceError):
    code = "precondition_unverifiable"


class CrossCheckFailed(InterlaceError):
    code = "cross_check_failed"


class NotRankOne(InterlaceError):
    code = "not_rank_one"


class BudgetExceeded(InterlaceError):
    code = "budget_exceeded"


class BoundNotCertified(InterlaceError):
    """A search finished without reaching the certified bound."""

    code = "bound_not_certified"


class BadEpsilon(InterlaceError):
    code = "bad_epsilon"


class NonzeroDiagonal(InterlaceError):
    code = "nonzero_diagonal"


class BadPartition(InterlaceError):
    code = "bad_partition"


class InputError(InterlaceError):
    """Malformed or schema-violating CLI input."""

    code = "input_error"
