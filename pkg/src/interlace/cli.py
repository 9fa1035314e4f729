"""Command-line front end: JSON in, JSON (and optional CSV) out.

Exit codes: 0 when every certificate passes, 1 when a bound is violated or
could not be certified, 2 on input or validation errors.  Output JSON is
written with sorted keys and never contains timings or worker counts, so a
fixed (input, seed, config) always gives the same bytes.
"""

import argparse
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io, linalg
from .config import DEFAULT, Tolerances, load_config
from .errors import BoundNotCertified, CrossCheckFailed, InputError, InterlaceError
from .mixedchar import INCLUSION_EXCLUSION, INTERPOLATION, mixed_char, mu_inclusion_exclusion, \
    mu_interpolation
from .partition import EXHAUSTIVE, LOCAL, partition_bound, partition_search
from .paving import AUTO, compression_norm, pave_general, pave_projection, pave_selfadjoint
from .realstable import (
    PSDSystem,
    barrier,
    barrier_derivatives,
    barrier_poly,
    barrier_shift_check,
    barrier_sign_check,
    one_minus_partial,
    restricted_determinant,
)
from .unipoly import (
    convex_combo,
    is_nice_family,
    nice_family_falsifier,
    root_bracket_check,
    try_real_roots,
)

COMMANDS = ("mixed-char", "pave", "partition-search", "barrier", "nice-family", "verify")
PAVE_KINDS = ("auto", "projection", "selfadjoint", "general")

# tolerance fields exposed as --tol-<name> flags
TOL_FLAGS = {
    f.replace("_tol", "").replace("_", "-"): f
    for f in Tolerances.__dataclass_fields__
    if f.endswith("_tol")
}

# the violation family maps to exit 1, everything else to exit 2
_VIOLATIONS = (BoundNotCertified, CrossCheckFailed)


@dataclass
class JobSpec:
    command: str
    input: str | None = None
    output: str | None = None
    csv: str | None = None
    epsilon: float | None = None
    r: int | None = None
    strategy: str = AUTO
    budget: int | None = None
    seed: int = 0
    workers: int = 1
    restarts: int = 100
    kind: str = "auto"
    i: int | None = None
    j: int | None = None
    point: list | None = None
    delta: float | None = None
    kmax: int = 3
    trials: int = 1000
    config: str | None = None
    tol_overrides: dict = field(default_factory=dict)

    def options(self):
        """The options that shape the result (workers and paths excluded)."""
        return {
            "epsilon": self.epsilon, "r": self.r, "strategy": self.strategy,
            "budget": self.budget, "restarts": self.restarts, "kind": self.kind,
            "i": self.i, "j": self.j, "point": self.point, "delta": self.delta,
            "kmax": self.kmax, "trials": self.trials,
        }


def resolve_tolerances(job):
    """Defaults, then the config file, then --tol-* flags."""
    try:
        overrides = dict(load_config(job.config))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read config: {exc}") from None
    overrides.update(job.tol_overrides)
    try:
        return DEFAULT.replace(**overrides)
    except (KeyError, TypeError) as exc:
        raise InputError(str(exc)) from None


def _system(payload, tol):
    mats, dim = io.system_from_json(payload)
    return PSDSystem.from_matrices(mats, dim=dim, psd_tol=tol.psd_clamp_tol,
                                   hermitian_tol=tol.hermitian_tol)


def _matrix(payload):
    if isinstance(payload, dict) and "matrix" in payload:
        return io.matrix_from_json(payload["matrix"])
    return io.matrix_from_json(payload)


def _index(value, m, name):
    if value is None:
        raise InputError(f"--{name} is required")
    if not 1 <= value <= m:
        raise InputError(f"--{name} must lie in 1..{m}", value=value)
    return value - 1


def _pick(job, payload, key, default=None):
    v = getattr(job, key)
    if v is None and isinstance(payload, dict):
        v = payload.get(key)
    return default if v is None else v


# ---------------------------------------------------------------------------
# commands; each returns (result dict, ok flag)


def cmd_mixed_char(job, payload, tol):
    S = _system(payload, tol)
    res = mixed_char(S, tol)
    top = float(res.roots[0]) if res.roots.size else None
    out = {
        "m": S.m,
        "dim": S.dim,
        "coefficients": res.mu.coeffs.tolist(),
        "coefficients_descending": res.mu.descending().tolist(),
        "roots": res.roots.tolist(),
        "largest_root": top,
        "method": res.method,
        "cross_check_deviation": res.cross_check_deviation,
        "sum_is_identity": S.sum_is_identity,
        "all_rank_one": S.all_rank_one,
        "epsilon": S.trace_bound,
        "bound": res.bound,
        "margin": None if res.bound is None or top is None else res.bound - top,
    }
    ok = out["margin"] is None or out["margin"] >= -tol.bound_tol
    if job.csv:
        emit_roots_csv(res, job.csv)
    return out, ok


def cmd_pave(job, payload, tol):
    T = _matrix(payload)
    eps = _pick(job, payload, "epsilon")
    r = _pick(job, payload, "r")
    kind = job.kind
    if kind == "auto":
        if eps is None:
            kind = "projection"
        elif linalg.is_hermitian(T, tol.hermitian_tol):
            kind = "selfadjoint"
        else:
            kind = "general"
    kw = dict(strategy=job.strategy, budget=job.budget, seed=job.seed, workers=job.workers,
              restarts=job.restarts)
    if kind == "projection":
        if r is None:
            raise InputError("projection paving needs --r")
        res = pave_projection(T, int(r), **kw)
    else:
        if eps is None:
            raise InputError(f"{kind} paving needs --epsilon")
        if kind == "selfadjoint":
            res = pave_selfadjoint(T, float(eps), r=None if r is None else int(r), **kw)
        else:
            res = pave_general(T, float(eps), **kw)
    nonempty = [(b, v) for b, v in zip(res.blocks, res.norms) if b]
    opnorm = res.operator_norm or 0.0
    norms = [v for _, v in nonempty]
    max_norm = max(norms, default=0.0)
    out = {
        "kind": kind,
        "m": res.m,
        "r": res.r,
        "epsilon": res.epsilon,
        "total_blocks": len(res.blocks),
        "blocks": [[i + 1 for i in b] for b, _ in nonempty],
        "norms": norms,
        "operator_norm": opnorm,
        "max_norm": max_norm,
        "max_ratio": max_norm / opnorm if opnorm > 0 else 0.0,
        "bound": res.bound,
        "margin": res.bound - max_norm,
        "strategy": res.strategy,
        "details": res.details,
    }
    ok = max_norm <= res.bound + tol.bound_tol
    out["status"] = "certified" if ok else "bound_not_certified"
    return out, ok


def cmd_partition_search(job, payload, tol):
    S = _system(payload, tol)
    r = _pick(job, payload, "r")
    if r is None:
        raise InputError("partition-search needs --r")
    strategy = job.strategy
    if strategy == AUTO:
        limit = tol.enum_budget if job.budget is None else job.budget
        strategy = EXHAUSTIVE if int(r) ** S.m <= limit else LOCAL
    res = partition_search(S, int(r), strategy=strategy, budget=job.budget, seed=job.seed,
                           restarts=job.restarts, workers=job.workers)
    out = res.to_dict()
    out["C"] = S.norm_bound
    ok = res.objective <= res.bound + tol.bound_tol
    out["status"] = "certified" if ok else "bound_not_certified"
    return out, ok


def cmd_barrier(job, payload, tol):
    S = _system(payload, tol)
    point = _pick(job, payload, "point")
    if point is None:
        raise InputError("barrier needs --point")
    x = np.asarray(point, dtype=float).ravel()
    if x.size != S.m:
        raise InputError(f"point must have {S.m} coordinates", given=int(x.size))
    i = _index(_pick(job, payload, "i", 1), S.m, "i")
    j = _index(_pick(job, payload, "j", 1), S.m, "j")
    kmax = int(_pick(job, payload, "kmax", 3))
    rep = barrier_sign_check(S, x, i, j, kmax=kmax, fd_tol=tol.fd_tol)
    out = {"i": i + 1, "j": j + 1, "report": rep.to_dict(), "passed": rep.passed}
    ok = rep.passed
    delta = _pick(job, payload, "delta")
    if delta is not None:
        shift = barrier_shift_check(S, x, j, float(delta), fd_tol=tol.fd_tol,
                                    budget=tol.interp_budget)
        out["shift"] = shift.to_dict()
        out["shift"]["margins"] = [b - a for a, b in zip(shift.lhs, shift.rhs)]
        ok = ok and shift.holds
    out["status"] = "pass" if ok else "fail"
    return out, ok


def cmd_nice_family(job, payload, tol):
    F = io.family_from_json(payload)
    verdict = is_nice_family(F, tol.interlace_tol, tol.root_tol)
    witness = nice_family_falsifier(F, trials=job.trials, seed=job.seed, root_tol=tol.root_tol)
    out = {
        "nice": verdict.nice,
        "reason": verdict.reason,
        "index": verdict.index + 1 if verdict.index >= 0 else None,
        "degree": F[0].degree,
        "falsifier_weights": None if witness is None else witness.tolist(),
        "trials": job.trials,
    }
    ok = not (verdict.nice and witness is not None)
    weights = payload.get("weights")
    if weights is not None:
        if verdict.nice:
            out["bracket_holds"] = root_bracket_check(F, weights, tol.interlace_tol, tol.root_tol)
            ok = ok and out["bracket_holds"]
        combo = try_real_roots(convex_combo(F, weights), tol.root_tol)
        out["combination_roots"] = None if combo is None else combo.tolist()
    out["status"] = "consistent" if ok else "inconsistent"
    return out, ok


# ---------------------------------------------------------------------------
# verify: recompute every numeric claim of a previous report from its inputs


def _close(a, b, rtol=1e-8):
    if a is None or b is None:
        return a is None and b is None
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return False
    return bool(np.all(np.abs(a - b) <= rtol * np.maximum(1.0, np.abs(b))))


class _Audit:
    def __init__(self):
        self.checks = []

    def add(self, name, claimed, recomputed, ok=None, rtol=1e-8):
        if ok is None:
            ok = _close(claimed, recomputed, rtol)
        self.checks.append({"claim": name, "claimed": claimed, "recomputed": recomputed,
                            "ok": bool(ok)})

    @property
    def ok(self):
        return all(c["ok"] for c in self.checks)


def _verify_mixed_char(payload, claim, tol, audit):
    S = _system(payload, tol)
    # use the route the report did not, when one exists
    if claim.get("method") == INTERPOLATION and S.all_rank_one and 2**S.m <= tol.subset_budget:
        mu, route = mu_inclusion_exclusion(S, tol.subset_budget), INCLUSION_EXCLUSION
    elif (S.dim + 1) ** (S.m + 1) <= tol.interp_budget:
        mu, route = mu_interpolation(S, tol.interp_budget), INTERPOLATION
    else:
        mu, route = mu_inclusion_exclusion(S, tol.subset_budget), INCLUSION_EXCLUSION
    audit.add("coefficients", claim["coefficients"], mu.coeffs.tolist(), rtol=1e-7)
    # plain companion eigenvalues, without the cluster logic of real_roots
    roots = np.sort(np.roots(mu.descending()).real)[::-1]
    audit.add("roots", claim["roots"], roots.tolist(), rtol=1e-5)
    bound = (1.0 + math.sqrt(S.trace_bound)) ** 2 if S.sum_is_identity else None
    audit.add("bound", claim["bound"], bound)
    if bound is not None and roots.size:
        margin = bound - float(roots[0])
        audit.add("margin", claim["margin"], margin, rtol=1e-5)
        respected = margin >= -1e-6
        audit.add("bound_respected", claim["margin"] >= -tol.bound_tol, respected,
                  ok=(claim["margin"] >= -tol.bound_tol) == respected)
    return route


def _verify_pave(payload, options, claim, tol, audit):
    T = _matrix(payload)
    m = T.shape[0]
    blocks = io.blocks_from_json({"blocks": claim["blocks"]}, m)
    flat = sorted(i for b in blocks for i in b)
    audit.add("partition", True, flat == list(range(m)), ok=flat == list(range(m)))
    norms = [compression_norm(T, b) for b in blocks]
    audit.add("norms", claim["norms"], norms, rtol=1e-7)
    opnorm = linalg.spectral_norm(T)
    audit.add("operator_norm", claim["operator_norm"], opnorm)
    if claim["kind"] == "projection":
        dmax = float(np.max(np.abs(np.diag(T))))
        bound = (1.0 / math.sqrt(claim["r"]) + math.sqrt(dmax)) ** 2
    else:
        bound = claim["epsilon"] * opnorm
    audit.add("bound", claim["bound"], bound)
    max_norm = max(norms, default=0.0)
    audit.add("max_norm", claim["max_norm"], max_norm, rtol=1e-7)
    certified = max_norm <= bound + tol.bound_tol
    audit.add("status", claim["status"], "certified" if certified else "bound_not_certified",
              ok=claim["status"] == ("certified" if certified else "bound_not_certified"))


def _verify_partition(payload, options, claim, tol, audit):
    S = _system(payload, tol)
    r = int(options.get("r") or payload.get("r"))
    blocks = io.blocks_from_json({"blocks": claim["blocks"]}, S.m)
    flat = sorted(i for b in blocks for i in b)
    audit.add("partition", True, flat == list(range(S.m)), ok=flat == list(range(S.m)))
    norms = []
    for b in blocks:
        B = sum((S.matrices[i] for i in b), np.zeros((S.dim, S.dim), dtype=complex))
        norms.append(linalg.hermitian_norm(B))
    audit.add("block_norms", claim["block_norms"], norms, rtol=1e-7)
    obj = max(norms, default=0.0)
    audit.add("objective", claim["objective"], obj, rtol=1e-7)
    bound = partition_bound(r, S.norm_bound)
    audit.add("bound", claim["bound"], bound)
    certified = obj <= bound + tol.bound_tol
    audit.add("status", claim["status"], "certified" if certified else "bound_not_certified",
              ok=claim["status"] == ("certified" if certified else "bound_not_certified"))


def _verify_barrier(payload, options, claim, tol, audit):
    S = _system(payload, tol)
    rep = claim["report"]
    x = np.asarray(rep["point"], dtype=float)
    i, j = claim["i"] - 1, claim["j"] - 1
    # the value goes through the determinant's coefficient tensor
    p = restricted_determinant(S, tol.interp_budget)
    audit.add("value", rep["value"], barrier_poly(p, x, i), rtol=1e-6)
    exact = barrier_derivatives(S, x, i, j, len(rep["exact"]) - 1)
    audit.add("exact_derivatives", rep["exact"], exact.tolist(), rtol=1e-7)
    signs = ["pass" if exact[0] > 0 else "fail"] + [
        "pass" if v >= -tol.fd_tol else "fail" for v in exact[1:]
    ]
    audit.add("sign_verdicts_exact", rep["sign_verdicts"], signs,
              ok=all(a == b or b == "pass" for a, b in zip(rep["sign_verdicts"], signs)))
    if "shift" in claim:
        sh = claim["shift"]
        y = x.copy()
        y[j] += sh["delta"]
        pj = one_minus_partial(p, j)
        lhs = [barrier_poly(pj, y, k) for k in range(S.m)]
        rhs = [barrier(S, x, k) for k in range(S.m)]
        audit.add("shift_lhs", sh["lhs"], lhs, rtol=1e-6)
        audit.add("shift_rhs", sh["rhs"], rhs, rtol=1e-7)
        holds = all(a <= b + tol.fd_tol for a, b in zip(lhs, rhs))
        audit.add("shift_holds", sh["holds"], holds, ok=sh["holds"] == holds)


def _verify_nice_family(payload, claim, tol, audit):
    F = io.family_from_json(payload)
    verdict = is_nice_family(F, tol.interlace_tol, tol.root_tol)
    audit.add("nice", claim["nice"], verdict.nice, ok=claim["nice"] == verdict.nice)
    w = claim.get("falsifier_weights")
    if w is not None:
        combo = convex_combo(F, np.asarray(w) / np.sum(w))
        nonreal = try_real_roots(combo, tol.root_tol) is None
        audit.add("falsifier_witness_nonreal", True, nonreal, ok=nonreal)


def cmd_verify(job, payload, tol):
    if not isinstance(payload, dict) or not {"command", "inputs", "result"} <= set(payload):
        raise InputError("verify expects a report with 'command', 'inputs' and 'result'")
    command = payload["command"]
    if command not in COMMANDS or command == "verify":
        raise InputError(f"cannot audit command {command!r}")
    raw = payload["inputs"].get("payload")
    options = payload["inputs"].get("options", {})
    claim = payload["result"]
    audit = _Audit()
    try:
        if command == "mixed-char":
            _verify_mixed_char(raw, claim, tol, audit)
        elif command == "pave":
            _verify_pave(raw, options, claim, tol, audit)
        elif command == "partition-search":
            _verify_partition(raw, options, claim, tol, audit)
        elif command == "barrier":
            _verify_barrier(raw, options, claim, tol, audit)
        else:
            _verify_nice_family(raw, claim, tol, audit)
    except (KeyError, TypeError) as exc:
        raise InputError(f"report is missing or mangles a field: {exc}") from None
    # a report that already flagged a violation cannot verify as a success
    reported_ok = payload.get("exit_code", 0) == 0
    out = {"audited_command": command, "checks": audit.checks, "claims_match": audit.ok,
           "reported_success": reported_ok}
    return out, audit.ok and reported_ok


HANDLERS = {
    "mixed-char": cmd_mixed_char,
    "pave": cmd_pave,
    "partition-search": cmd_partition_search,
    "barrier": cmd_barrier,
    "nice-family": cmd_nice_family,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------


def emit_roots_csv(result, path):
    """Plot-ready ``index,root,bound`` CSV from a mixed-char result or dict."""
    if isinstance(result, dict):
        roots, bound = result.get("roots", []), result.get("bound")
    else:
        roots, bound = result.roots, result.bound
    io.write_roots_csv(roots, bound, path)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        sys.stdout.write(io.dumps({"exit_code": 2, "error": InputError(
            f"cannot write output: {exc}").to_dict()}))
        raise SystemExit(2) from None


def run(job):
    """Execute one job, write its report, return the exit code."""
    report = {"command": job.command, "seed": job.seed}
    try:
        tol = resolve_tolerances(job)
        report["tolerances"] = tol.to_dict()
        payload = io.load_payload(job.input)
        report["inputs"] = {"payload": payload, "options": job.options()}
        result, ok = HANDLERS[job.command](job, payload, tol)
        report["result"] = result
        code = 0 if ok else 1
    except _VIOLATIONS as exc:
        report["error"] = exc.to_dict()
        code = 1
    except InterlaceError as exc:
        report["error"] = exc.to_dict()
        code = 2
    except (ValueError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        report["error"] = {"error": "invalid_input", "message": str(exc)}
        code = 2
    report["exit_code"] = code
    _write(io.dumps(report), job.output)
    return code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", "-i", dest="input", required=True,
                        help="JSON file, '-' for stdin, or inline JSON")
    common.add_argument("--output", "-o", help="report path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--config", help="tolerance config (default $INTERLACE_CONFIG)")
    for flag, name in TOL_FLAGS.items():
        common.add_argument(f"--tol-{flag}", dest=f"tol__{name}", type=float, metavar="VALUE")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--r", type=int)
    search.add_argument("--strategy", choices=(AUTO, EXHAUSTIVE, LOCAL), default=AUTO)
    search.add_argument("--budget", type=int)
    search.add_argument("--restarts", type=int, default=100)

    parser = argparse.ArgumentParser(prog="interlace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("mixed-char", parents=[common], help="mixed characteristic polynomial")
    p.add_argument("--csv", help="write index,root,bound rows here")
    p = sub.add_parser("pave", parents=[common, search], help="pave a matrix")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--kind", choices=PAVE_KINDS, default="auto")
    sub.add_parser("partition-search", parents=[common, search], help="partition search")
    p = sub.add_parser("barrier", parents=[common], help="barrier function report")
    p.add_argument("--point", type=lambda s: [float(v) for v in s.split(",")])
    p.add_argument("--i", type=int, help="1-based barrier index")
    p.add_argument("--j", type=int, help="1-based direction index")
    p.add_argument("--delta", type=float)
    p.add_argument("--kmax", type=int, default=3)
    p = sub.add_parser("nice-family", parents=[common], help="common interlacing check")
    p.add_argument("--trials", type=int, default=1000)
    sub.add_parser("verify", parents=[common], help="recompute a report's claims")
    return parser


def job_from_args(ns):
    tol = {k[len("tol__"):]: v for k, v in vars(ns).items() if k.startswith("tol__") and v is not None}
    fields = {k: v for k, v in vars(ns).items() if not k.startswith("tol__")}
    return JobSpec(tol_overrides=tol, **{k: v for k, v in fields.items()
                                        if k in JobSpec.__dataclass_fields__})


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; keep the exit-code contract
        return 0 if exc.code == 0 else 2
    return run(job_from_args(ns))


if __name__ == "__main__":
    raise SystemExit(main())
