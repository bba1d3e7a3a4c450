"""Invariant pipelines: Frobenius constants, LMHS period columns, Apery
constants, difference-equation extensions, and the associated diagnostics.

The computations combine three ingredients:

  * exact recurrences from :mod:`kforge.seq`;
  * extrapolated limits of coefficient ratios (the convergence is 1/k-like,
    accelerated by Neville extrapolation over thinned nodes);
  * the conifold point c of the operator, entering through powers of log c.

The headline formulas:

  kappa_m   = sum_{j<=m} log(c)^j/j! * lim_k a_k^(m-j)/a_k
  alpha     = coefficientwise inverse of the kappa series
  kappa(l)  = c^l * lim_k A_k(l)/a_k   (cross-checked against lim b_k/a_k)
  extension = sum_k Q_k(-s-k)/(s+k)^r * kappa(s+k) = 0, Q_k from adjoint(L)

Results carry per-coefficient error estimates (extrapolation table spreads);
a value whose spread exceeds the requested tolerance is flagged UNRELIABLE
rather than silently reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import mpmath as mp

from . import numeric, seq
from .errors import (
    DomainError,
    IntegerArgumentError,
    PathDisagreementError,
    SingularStepError,
)
from .numeric import DEFAULT_PREC, ExtrapolationDiagnostics, FloatSeries
from .opalg import Operator, PairingInput, adjoint, conifold_point, solve_p, validate_mum
from .qpoly import QPoly

DEFAULT_K = 2000
DEFAULT_DEPTH = 12


@dataclass(frozen=True)
class SeriesResult:
    """A computed coefficient series with per-coefficient diagnostics."""

    series: FloatSeries
    err_est: tuple
    diagnostics: tuple[ExtrapolationDiagnostics, ...]
    c: object
    flags: tuple[str, ...] = ()

    def __getitem__(self, k: int):
        return self.series[k]

    @property
    def order(self) -> int:
        return self.series.order


@dataclass(frozen=True)
class AperyConstant:
    """kappa(ell) with its two computation paths."""

    ell: int
    value: object
    err_est: object
    diagnostics: ExtrapolationDiagnostics
    b_path_value: object = None
    b_path_diagnostics: Optional[ExtrapolationDiagnostics] = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class LMHSColumnReport:
    """Leading column and full lower-triangular period matrix at the MUM point."""

    column: tuple
    matrix: tuple
    err_est: tuple
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class GrowthReport:
    """Tail of a_m * c^m * m^((n+1)/2) and its observed drift."""

    samples: tuple
    drift: object
    plateau: bool


@dataclass(frozen=True)
class InvariantReport:
    operator_text: str
    order: int
    degree: int
    c: object
    selfadjoint: bool
    p_text: str
    kappa: SeriesResult
    alpha: SeriesResult
    apery: dict
    precision_bits: int
    K: int
    depth: int
    flags: tuple[str, ...] = ()


def _tolerance(prec: int, tol=None):
    return mp.mpf(2) ** (-(prec // 4)) if tol is None else mp.mpf(tol)


def _log_conifold(c, prec: int):
    """log c on the principal branch; real when c is real positive."""
    with mp.workprec(prec + 16):
        c = mp.mpc(c)
        if c.imag == 0 and c.real > 0:
            return mp.log(c.real), False
        return mp.log(c), True


def _resolve_c(L: Operator, prec: int, c_override=None):
    c = conifold_point(L, prec + 16, override=c_override)
    if mp.mpc(c).imag == 0:
        return mp.mpc(c).real
    return c


# -- Frobenius constants -------------------------------------------------------


def kappa_coeffs(
    L: Operator,
    M: int,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
    basis: str = "integer",
    dagger: bool = False,
    tol=None,
) -> SeriesResult:
    """Frobenius constants kappa_0..kappa_M of L as extrapolated limits.

    Componentwise limits of a_k^(ell)/a_k are combined with powers of log c.
    kappa_0 is checked against its exact value 1; with dagger=True the same
    pipeline runs on adjoint(L), whose coefficient sequence is atilde.
    """
    L = validate_mum(L)
    if dagger:
        L = validate_mum(adjoint(L))
    c = _resolve_c(L, prec, c_override)
    nodes = numeric.thinned_nodes(K, depth)
    samples = seq.frobenius_ratio_samples(L, K, M, nodes, prec + 32)
    limits = []
    diags = []
    for ell in range(M + 1):
        pairs = [(k, samples[k][ell]) for k in nodes]
        est, diag = numeric.extrapolate_limit(pairs, depth, prec, basis=basis)
        limits.append(est)
        diags.append(diag)
    logc, complex_branch = _log_conifold(c, prec)
    tolv = _tolerance(prec, tol)
    coeffs = []
    errs = []
    out_diags = []
    flags: list[str] = ["DAGGER_SERIES"] if dagger else []
    if complex_branch:
        flags.append("COMPLEX_LOG_BRANCH")
    with mp.workprec(prec + 16):
        for m in range(M + 1):
            acc = mp.mpmathify(0)
            err = mp.mpf(0)
            for j in range(m + 1):
                w = logc ** j / mp.factorial(j)
                acc += w * limits[m - j]
                err += abs(w) * diags[m - j].spread
            coeffs.append(acc)
            errs.append(err)
            dflags = tuple(diags[m].flags) + (("UNRELIABLE",) if err > tolv else ())
            out_diags.append(
                ExtrapolationDiagnostics(
                    depth=depth, spread=err, nodes=diags[m].nodes, flags=dflags
                )
            )
    if abs(coeffs[0] - 1) > max(errs[0] * 16, tolv):
        flags.append("KAPPA0_DEVIATION")
    return SeriesResult(
        series=FloatSeries(tuple(coeffs)),
        err_est=tuple(errs),
        diagnostics=tuple(out_diags),
        c=c,
        flags=tuple(flags),
    )


def alpha_coeffs(
    L: Operator,
    M: int,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
    basis: str = "integer",
    dagger: Optional[bool] = None,
    tol=None,
) -> SeriesResult:
    """Coefficients alpha_0..alpha_M of the inverse kappa series.

    With dagger=None the dagger variant is selected automatically whenever
    the intertwiner p is nontrivial (the extended coefficients beyond order
    n are the ones with period meaning in that case); the plain and dagger
    series agree through order n either way.
    """
    if dagger is None:
        p = solve_p(L)
        dagger = p.degree > 0
    kres = kappa_coeffs(
        L, M, K=K, prec=prec, depth=depth, c_override=c_override,
        basis=basis, dagger=dagger, tol=tol,
    )
    inv = numeric.series_invert(kres.series, prec)
    with mp.workprec(prec + 16):
        scale = sum(abs(x) for x in inv)
        errs = tuple(+(kres.err_est[m] * scale) for m in range(M + 1))
    tolv = _tolerance(prec, tol)
    diags = tuple(
        ExtrapolationDiagnostics(
            depth=depth,
            spread=errs[m],
            nodes=kres.diagnostics[m].nodes,
            flags=(("UNRELIABLE",) if errs[m] > tolv else ()),
        )
        for m in range(M + 1)
    )
    return SeriesResult(
        series=inv, err_est=errs, diagnostics=diags, c=kres.c, flags=kres.flags
    )


def lmhs_column(
    L: Operator,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
    extension: int = 0,
    tol=None,
) -> LMHSColumnReport:
    """Leading LMHS period column (alpha_0..alpha_n) and the full matrix.

    The matrix is lower triangular with ones on the diagonal; column j+1 is
    column j shifted down.  extension > 0 appends the unipotent-extension
    periods alpha_{n+1}..alpha_{n+extension}.
    """
    n = validate_mum(L).order - 1
    M = n + extension
    ares = alpha_coeffs(L, M, K=K, prec=prec, depth=depth, c_override=c_override, tol=tol)
    column = tuple(ares.series[m] for m in range(M + 1))
    size = M + 1
    zero = mp.mpf(0)
    matrix = tuple(
        tuple(column[i - j] if i >= j else zero for j in range(size))
        for i in range(size)
    )
    return LMHSColumnReport(
        column=column, matrix=matrix, err_est=ares.err_est, flags=ares.flags
    )


# -- Apery constants --------------------------------------------------------------


def apery_constant(
    L: Operator,
    ell: int,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
    tol=None,
) -> AperyConstant:
    """kappa(ell) = c^ell * lim_k A_k(ell)/a_k for a positive integer ell.

    For 1 <= ell <= d-1 the driven-solution route ell^r * lim b_k/a_k is also
    computed; the two must agree within combined error estimates.
    """
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    L = validate_mum(L)
    r, d = L.order, L.degree
    c = _resolve_c(L, prec, c_override)
    nodes = numeric.thinned_nodes(K, depth)
    vsamp = seq.value_ratio_samples(L, K, ell, nodes, prec + 32)
    est, diag = numeric.extrapolate_limit([(k, vsamp[k]) for k in nodes], depth, prec)
    with mp.workprec(prec + 16):
        cl = mp.mpc(c) ** ell
        if mp.mpc(c).imag == 0:
            cl = cl.real
        value = cl * est
        err = abs(cl) * diag.spread
    b_value = None
    b_diag = None
    flags: list[str] = []
    if 1 <= ell <= d - 1:
        bsamp = seq.b_ratio_samples(L, K, ell, nodes, prec + 32)
        best, b_diag = numeric.extrapolate_limit([(k, bsamp[k]) for k in nodes], depth, prec)
        with mp.workprec(prec + 16):
            b_value = mp.mpf(ell) ** r * best
            b_err = mp.mpf(ell) ** r * b_diag.spread
            combined = 16 * (err + b_err) + mp.mpf(2) ** (-(prec // 2)) * (1 + abs(value))
            if abs(value - b_value) > combined:
                raise PathDisagreementError(
                    f"kappa({ell}) paths disagree: {value} vs {b_value} (tol {combined})"
                )
    tolv = _tolerance(prec, tol)
    if err > tolv:
        flags.append("UNRELIABLE")
    return AperyConstant(
        ell=ell,
        value=value,
        err_est=err,
        diagnostics=diag,
        b_path_value=b_value,
        b_path_diagnostics=b_diag,
        flags=tuple(flags),
    )


def kappa_extend(
    L: Operator,
    known: Mapping[int, object],
    target: int,
    prec: int = DEFAULT_PREC,
):
    """Solve the kappa difference equation for kappa(target).

    Writing adjoint(L) = sum_k t^k Q_k(D), the equation at s = target - d is

        sum_{k=0}^{d} Q_k(-s-k)/(s+k)^r * kappa(s+k) = 0,

    where the s+k = 0 slot is read as (-1)^r * kappa(0) (the analytic limit
    of (-u)^r/u^r).  known must contain kappa at target-d..target-1.
    """
    L = validate_mum(L)
    r, d = L.order, L.degree
    if target < d:
        raise DomainError("target must be at least the operator degree")
    Q = adjoint(L).rows
    s0 = target - d
    for k in range(d):
        if s0 + k not in known:
            raise DomainError(f"known values must include kappa({s0 + k})")
    lead = Q[d].eval(Fraction(-target)) if d < len(Q) else Fraction(0)
    if lead == 0:
        raise SingularStepError(f"Q_d(-{target}) = 0; cannot step the difference equation")
    with mp.workprec(prec + 16):
        acc = mp.mpmathify(0)
        for k in range(d):
            s = s0 + k
            kv = mp.mpmathify(known[s])
            if s == 0:
                coeff = mp.mpf(-1) ** r
            else:
                q = Q[k].eval(Fraction(-s)) if k < len(Q) else Fraction(0)
                coeff = numeric.to_mpf(q, prec + 16) / mp.mpf(s) ** r
            acc += coeff * kv
        lead_f = numeric.to_mpf(lead, prec + 16) / mp.mpf(target) ** r
        result = -acc / lead_f
    return numeric.to_mpf(result, prec) if isinstance(result, mp.mpf) else result


# -- closed forms -------------------------------------------------------------------


def hypergeom_kappa(
    params: Sequence[Fraction | int | str],
    M: int,
    prec: int = DEFAULT_PREC,
) -> tuple[FloatSeries, FloatSeries]:
    """Closed-form kappa and alpha series of a one-term operator
    D^r - t*prod_j (D + a_j), via

        1/kappa(s) = prod_j Gamma(s + a_j) / (Gamma(s + 1) Gamma(a_j)).

    Returns (kappa, alpha) truncated at order M; the special-function path is
    the cross-check for the limit pipeline on such operators.
    """
    avals = [Fraction(a) for a in params]
    if not avals:
        raise DomainError("need at least one parameter")
    if any(a <= 0 for a in avals):
        raise DomainError("parameters must be positive")
    r = len(avals)
    wp = prec + 32 + 8 * M
    with mp.workprec(wp):
        log_inv = [mp.mpf(0)] * (M + 1)
        for a in avals:
            ser = numeric.lngamma_series(a, M, wp - 16)
            for j in range(1, M + 1):
                log_inv[j] += ser[j]
        one_ser = numeric.lngamma_series(1, M, wp - 16)
        for j in range(1, M + 1):
            log_inv[j] -= r * one_ser[j]
        alpha = numeric._s_exp(log_inv, M)
    with mp.workprec(prec):
        alpha_series = FloatSeries(tuple(+x for x in alpha))
    kappa_series = numeric.series_invert(alpha_series, prec)
    return kappa_series, alpha_series


def kappa_negative_leading(L: Operator, m: int) -> tuple[Fraction, mp.mpf]:
    """Exact leading Laurent coefficient (-m)^r * atilde_m of kappa at s = -m."""
    if m < 1:
        raise DomainError("m must be a positive integer")
    L = validate_mum(L)
    r = L.order
    p = solve_p(L)
    a = seq.period_coeffs(L, m)
    atil = seq.atilde_coeffs(a, p, m)
    exact = Fraction(-m) ** r * atil[m]
    return exact, numeric.to_mpf(exact, DEFAULT_PREC)


# -- conifold Gamma prefactor ---------------------------------------------------------


def gamma_prefactor(kappa_value, s, pairing: PairingInput, n: int, prec: int = DEFAULT_PREC):
    """Gamma_c(s) from kappa(s) at non-integer s:

        Gamma_c(s) = kappa(s) * (Qc/Q0) * (1 - e^(2 pi i s))^r / ((2 pi i)^n s^r)

    with r = n + 1.  At integers the prefactor degenerates; use
    gamma_at_integer instead.
    """
    r = n + 1
    with mp.workprec(prec + 16):
        sv = mp.mpmathify(s)
        if abs(sv - mp.nint(sv.real if isinstance(sv, mp.mpc) else sv)) < mp.mpf(2) ** (-(prec // 2)):
            raise IntegerArgumentError("s is an integer; use gamma_at_integer")
        two_pi_i = mp.mpc(0, 2) * mp.pi
        ratio = numeric.to_mpf(Fraction(pairing.qc) / Fraction(pairing.q0), prec + 16)
        val = (
            mp.mpmathify(kappa_value)
            * ratio
            * (1 - mp.exp(two_pi_i * sv)) ** r
            / (two_pi_i ** n * sv ** r)
        )
    return val


def gamma_at_integer(L: Operator, m: int, pairing: PairingInput, prec: int = DEFAULT_PREC):
    """Gamma_c at integer arguments: the value at 0 is (-1)^r (Qc/Q0) 2 pi i;
    positive integers give 0; negative integers give Gamma_c(0) * atilde_{-m}.
    """
    L = validate_mum(L)
    r = L.order
    with mp.workprec(prec + 16):
        ratio = numeric.to_mpf(Fraction(pairing.qc) / Fraction(pairing.q0), prec + 16)
        gamma0 = mp.mpf(-1) ** r * ratio * mp.mpc(0, 2) * mp.pi
        if m == 0:
            return gamma0
        if m > 0:
            return mp.mpc(0)
        p = solve_p(L)
        a = seq.period_coeffs(L, -m)
        atil = seq.atilde_coeffs(a, p, -m)
        return gamma0 * numeric.to_mpf(atil[-m], prec + 16)


# -- self-consistency checks -------------------------------------------------------


def difference_residual(
    L: Operator,
    s0,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
):
    """|sum_k Q_k(-s0-k)/(s0+k)^r * kappa(s0+k)|, with each kappa value from
    the limit pipeline.  Expected to be at the scale of the extrapolation
    error; returns (residual, combined_error_estimate).
    """
    L = validate_mum(L)
    r, d = L.order, L.degree
    c = _resolve_c(L, prec, c_override)
    Q = adjoint(L).rows
    nodes = numeric.thinned_nodes(K, depth)
    with mp.workprec(prec + 16):
        s0v = mp.mpmathify(s0)
        for k in range(d + 1):
            sv = s0v + k
            if abs(sv - mp.nint(sv.real if isinstance(sv, mp.mpc) else sv)) < mp.mpf(2) ** (-(prec // 2)) and sv.real <= 0:
                raise DomainError("s0 + k must avoid nonpositive integers")
        acc = mp.mpmathify(0)
        err = mp.mpf(0)
        for k in range(d + 1):
            sv = s0v + k
            samp = seq.float_value_ratio_samples(L, K, sv, nodes, prec + 32)
            est, diag = numeric.extrapolate_limit([(kk, samp[kk]) for kk in nodes], depth, prec)
            kap = mp.power(c, sv) * est
            qv = _qpoly_eval_float(Q[k] if k < len(Q) else QPoly.zero(), -sv, prec + 16)
            coeff = qv / sv ** r
            acc += coeff * kap
            err += abs(coeff) * abs(mp.power(c, sv)) * diag.spread
        residual = abs(acc)
    return residual, err


def _qpoly_eval_float(p: QPoly, x, prec: int):
    with mp.workprec(prec):
        acc = mp.mpmathify(0)
        for cf in reversed(p.coeffs):
            acc = acc * x + numeric.to_mpf(cf, prec)
        return acc


def growth_check(
    L: Operator,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    c_override=None,
) -> GrowthReport:
    """Tail of a_m * c^m * m^((n+1)/2), the normalization under which the
    holomorphic coefficients plateau.  drift is the relative wobble of the
    tail over its last half; plateau requires successive differences to keep
    shrinking like 1/m.
    """
    L = validate_mum(L)
    n = L.order - 1
    c = _resolve_c(L, prec, c_override)
    nodes = numeric.thinned_nodes(K, max(16, DEFAULT_DEPTH))
    a = seq.period_coeffs(L, K)
    with mp.workprec(prec + 16):
        cabs = abs(mp.mpc(c))
        w = mp.mpf(n + 1) / 2
        vals = []
        for k in nodes:
            av = numeric.to_mpf(a[k], prec + 16)
            vals.append((k, av * mp.power(cabs, k) * mp.power(k, w)))
        tail = [v for _, v in vals[len(vals) // 2:]]
        ref = tail[-1]
        drift = max(abs(v - ref) for v in tail) / abs(ref) if ref != 0 else mp.mpf("inf")
        diffs = [abs(b - a_) for a_, b in zip(tail, tail[1:])]
        shrinking = all(b <= a_ * mp.mpf("1.5") for a_, b in zip(diffs, diffs[1:])) if len(diffs) > 1 else True
    return GrowthReport(samples=tuple(vals), drift=drift, plateau=bool(shrinking))


def vphi_expansion(
    L: Operator,
    pairing: PairingInput,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
) -> list[tuple[int, object]]:
    """Leading log-expansion of the truncated higher normal function:

        V(t) = (1/Q0) sum_{k=0}^{n+1} alpha_{n+1-k} log(t)^k / k!  + o(1),

    returned as (log power, coefficient) pairs, k = 0..n+1.  The constant
    term is alpha_{n+1}/Q0.  Dagger coefficients are used automatically when
    the intertwiner p is nontrivial.
    """
    L = validate_mum(L)
    n = L.order - 1
    ares = alpha_coeffs(L, n + 1, K=K, prec=prec, depth=depth, c_override=c_override, dagger=None)
    q0inv = numeric.to_mpf(Fraction(1) / Fraction(pairing.q0), prec + 16)
    out = []
    with mp.workprec(prec + 16):
        for k in range(n + 2):
            out.append((k, q0inv * ares.series[n + 1 - k] / mp.factorial(k)))
    return out


# -- report assembly -------------------------------------------------------------------


def invariant_report(
    L: Operator,
    M: Optional[int] = None,
    K: int = DEFAULT_K,
    prec: int = DEFAULT_PREC,
    depth: int = DEFAULT_DEPTH,
    c_override=None,
    apery_orders: Sequence[int] = (),
    tol=None,
) -> InvariantReport:
    """One-stop pipeline: kappa, alpha, optional Apery values, and flags."""
    Lv = validate_mum(L)
    r, d = Lv.order, Lv.degree
    if M is None:
        M = r + 2
    p = solve_p(Lv)
    sa = p.degree == 0
    kres = kappa_coeffs(Lv, M, K=K, prec=prec, depth=depth, c_override=c_override, tol=tol)
    inv = numeric.series_invert(kres.series, prec)
    ares = alpha_coeffs(Lv, M, K=K, prec=prec, depth=depth, c_override=c_override, tol=tol,
                        dagger=False if sa else None)
    apery = {}
    for ell in apery_orders:
        apery[ell] = apery_constant(Lv, ell, K=K, prec=prec, depth=depth, c_override=c_override, tol=tol)
    flags = list(kres.flags)
    # kappa * alpha = 1 consistency to working precision
    with mp.workprec(prec):
        prod = numeric.series_mul(kres.series, inv, prec)
        defect = max(abs(prod[m] - (1 if m == 0 else 0)) for m in range(M + 1))
        if defect > _tolerance(prec, tol):
            flags.append("SERIES_INVERSE_DEFECT")
    return InvariantReport(
        operator_text=Lv.to_text(),
        order=r,
        degree=d,
        c=kres.c,
        selfadjoint=sa,
        p_text=p.format("t"),
        kappa=kres,
        alpha=ares,
        apery=apery,
        precision_bits=prec,
        K=K,
        depth=depth,
        flags=tuple(flags),
    )
