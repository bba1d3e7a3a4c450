"""Exact recurrence engines for the rational sequences the pipelines consume.

Everything here runs in exact rational arithmetic (gmpy2.mpq internally,
Fraction at the API boundary).  The recurrences:

  holomorphic coefficients   sum_{k=0}^{d} P_k(m-k) a_{m-k} = 0,  a_0 = 1
  deformed coefficients      A_m(s) = -(m+s)^{-r} sum_{j>=1} A_{m-j}(s) P_j(m-j+s)
  driven solution            sum_{k=0}^{d} P_k(m-k) b_{m-k} = delta_{m,ell}

with P_0(D) = D^r enforced by validate_mum.  The (m+s)^{-r} factor is
expanded once per index as an exact geometric series in s/m.

For large runs only the last d states are retained; the ratio-sample helpers
stream high-precision float ratios at requested indices instead of storing
exact history.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import mpmath as mp
from gmpy2 import mpq

from .errors import DomainError
from .opalg import Operator, validate_mum
from .qpoly import QPoly


@dataclass(frozen=True)
class RationalSequence:
    """Contiguously indexed exact rational sequence."""

    terms: tuple[Fraction, ...]
    start_index: int = 0

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, k: int) -> Fraction:
        return self.terms[k - self.start_index]

    def __iter__(self):
        return iter(self.terms)


@dataclass(frozen=True)
class SeriesSRational:
    """Truncated power series in the deformation variable s, exact rationals."""

    coefficients: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, k: int) -> Fraction:
        return self.coefficients[k]


# -- mpq plumbing -------------------------------------------------------------


def _mpq_rows(L: Operator) -> list[list[mpq]]:
    return [[mpq(c.numerator, c.denominator) for c in row.coeffs] for row in L.rows]


def _polyval(row: Sequence[mpq], x) -> mpq:
    acc = mpq(0)
    for c in reversed(row):
        acc = acc * x + c
    return acc

def _poly_shift_series(row: Sequence[mpq], a, M: int) -> list[mpq]:
    """P(a + s) as a polynomial in s, truncated at order M."""
    out = [mpq(0)] * (M + 1)
    for c in reversed(row):
        new = [mpq(0)] * (M + 1)
        for i in range(M + 1):
            v = out[i] * a
            if i > 0:
                v += out[i - 1]
            new[i] = v
        new[0] += c
        out = new
    return out


def _inv_pow_series(m: int, r: int, M: int) -> list[mpq]:
    """(m + s)^{-r} = m^{-r} (1 + s/m)^{-r}, exact, truncated at order M."""
    out = [mpq(0)] * (M + 1)
    binom = mpq(1)
    for i in range(M + 1):
        out[i] = binom / mpq(m) ** (r + i)
        binom = binom * (-(r + i)) / (i + 1)
    return out


def _series_mul(f: Sequence[mpq], g: Sequence[mpq], M: int) -> list[mpq]:
    out = [mpq(0)] * (M + 1)
    for i, fi in enumerate(f):
        if fi == 0:
            continue
        for j in range(M + 1 - i):
            gj = g[j]
            if gj != 0:
                out[i + j] += fi * gj
    return out


def _to_fraction(q: mpq) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _ratio_to_mpf(num: mpq, den: mpq, prec: int):
    q = num / den
    with mp.workprec(prec + 16):
        return mp.mpf(int(q.numerator)) / mp.mpf(int(q.denominator))


# -- exact public sequences ----------------------------------------------------


def period_coeffs(L: Operator, K: int) -> RationalSequence:
    """Holomorphic period coefficients a_0..a_K, a_0 = 1, exact."""
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    a: list[mpq] = [mpq(1)]
    for m in range(1, K + 1):
        acc = mpq(0)
        for k in range(1, min(m, d) + 1):
            acc += _polyval(rows[k], m - k) * a[m - k]
        a.append(-acc / mpq(m) ** r)
    return RationalSequence(tuple(_to_fraction(x) for x in a))


def frobenius_series(L: Operator, K: int, M: int) -> list[SeriesSRational]:
    """Deformed coefficients A_0(s)..A_K(s), each exact mod s^(M+1).

    Coefficient ell of A_k is a_k^(ell); specializing at s = 0 recovers
    period_coeffs exactly.
    """
    if M < 0:
        raise DomainError("series order must be >= 0")
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    hist: list[list[mpq]] = [[mpq(1)] + [mpq(0)] * M]
    out = [hist[0]]
    for m in range(1, K + 1):
        acc = [mpq(0)] * (M + 1)
        for j in range(1, min(m, d) + 1):
            pj = _poly_shift_series(rows[j], m - j, M)
            term = _series_mul(out[m - j], pj, M)
            for i in range(M + 1):
                acc[i] += term[i]
        inv = _inv_pow_series(m, r, M)
        out.append([-x for x in _series_mul(acc, inv, M)])
    return [SeriesSRational(tuple(_to_fraction(c) for c in row)) for row in out]


def frobenius_values(L: Operator, K: int, ell: int) -> RationalSequence:
    """Exact values A_0(ell)..A_K(ell) for a positive integer ell."""
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    A: list[mpq] = [mpq(1)]
    for m in range(1, K + 1):
        acc = mpq(0)
        for j in range(1, min(m, d) + 1):
            acc += A[m - j] * _polyval(rows[j], m - j + ell)
        A.append(-acc / mpq(m + ell) ** r)
    return RationalSequence(tuple(_to_fraction(x) for x in A))


def atilde_coeffs(a: RationalSequence | Sequence[Fraction], p: QPoly, K: int) -> RationalSequence:
    """Coefficients of A(t)/p(t) to index K; requires p(0) = 1."""
    if p.is_zero() or p[0] != 1:
        raise DomainError("p(0) must equal 1")
    seq = [Fraction(x) for x in (a.terms if isinstance(a, RationalSequence) else a)]
    if len(seq) < K + 1:
        raise DomainError(f"need {K + 1} coefficients of A, got {len(seq)}")
    out: list[Fraction] = []
    for m in range(K + 1):
        v = seq[m]
        for i in range(1, min(m, p.degree) + 1):
            v -= p[i] * out[m - i]
        out.append(v)
    return RationalSequence(tuple(out))


def b_sequence(L: Operator, K: int, ell: int) -> RationalSequence:
    """The rational solution with sum_k P_k(m-k) b_{m-k} = delta_{m,ell}.

    Equivalently b_k = 0 for k < ell and A_{k-ell}(ell)/ell^r for k >= ell.
    """
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    b: list[mpq] = []
    for m in range(K + 1):
        acc = mpq(1) if m == ell else mpq(0)
        for k in range(1, min(m, d) + 1):
            acc -= _polyval(rows[k], m - k) * b[m - k]
        b.append(acc / mpq(m) ** r if m > 0 else acc)
    return RationalSequence(tuple(_to_fraction(x) for x in b))


# -- streaming ratio samples for the limit pipelines --------------------------


def frobenius_ratio_samples(
    L: Operator, K: int, M: int, nodes: Iterable[int], prec: int
) -> dict[int, tuple]:
    """a_k^(ell)/a_k for ell = 0..M at the requested indices, as floats.

    The recurrence itself is exact; only the final ratios are rounded.
    Retains the last d states only.
    """
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    want = set(nodes)
    if min(want, default=1) < 1 or max(want, default=0) > K:
        raise DomainError("sample indices out of range")
    hist: list[list[mpq]] = [[mpq(1)] + [mpq(0)] * M]
    samples: dict[int, tuple] = {}
    for m in range(1, K + 1):
        acc = [mpq(0)] * (M + 1)
        for j in range(1, min(m, d) + 1):
            pj = _poly_shift_series(rows[j], m - j, M)
            term = _series_mul(hist[-j], pj, M)
            for i in range(M + 1):
                acc[i] += term[i]
        inv = _inv_pow_series(m, r, M)
        Am = [-x for x in _series_mul(acc, inv, M)]
        hist.append(Am)
        if len(hist) > d:
            hist.pop(0)
        if m in want:
            am = Am[0]
            samples[m] = tuple(_ratio_to_mpf(Am[i], am, prec) for i in range(M + 1))
    return samples


def value_ratio_samples(
    L: Operator, K: int, ell: int, nodes: Iterable[int], prec: int
) -> dict[int, mp.mpf]:
    """A_k(ell)/a_k at the requested indices, exact recurrences then rounded."""
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    want = set(nodes)
    a: list[mpq] = [mpq(1)]
    A: list[mpq] = [mpq(1)]
    samples: dict[int, mp.mpf] = {}
    for m in range(1, K + 1):
        s1 = mpq(0)
        s2 = mpq(0)
        for j in range(1, min(m, d) + 1):
            s1 += _polyval(rows[j], m - j) * a[-j]
            s2 += A[-j] * _polyval(rows[j], m - j + ell)
        a.append(-s1 / mpq(m) ** r)
        A.append(-s2 / mpq(m + ell) ** r)
        if len(a) > d:
            a.pop(0)
            A.pop(0)
        if m in want:
            samples[m] = _ratio_to_mpf(A[-1], a[-1], prec)
    return samples


def b_ratio_samples(
    L: Operator, K: int, ell: int, nodes: Iterable[int], prec: int
) -> dict[int, mp.mpf]:
    """b_k/a_k at the requested indices (second Apery-limit route)."""
    if ell < 1:
        raise DomainError("ell must be a positive integer")
    L = validate_mum(L)
    rows = _mpq_rows(L)
    d, r = L.degree, L.order
    want = set(nodes)
    a: list[mpq] = [mpq(1)]
    b: list[mpq] = [mpq(0)]
    samples: dict[int, mp.mpf] = {}
    for m in range(1, K + 1):
        s1 = mpq(0)
        s2 = mpq(1) if m == ell else mpq(0)
        for j in range(1, min(m, d) + 1):
            s1 += _polyval(rows[j], m - j) * a[-j]
            s2 -= _polyval(rows[j], m - j) * b[-j]
        a.append(-s1 / mpq(m) ** r)
        b.append(s2 / mpq(m) ** r)
        if len(a) > d:
            a.pop(0)
            b.pop(0)
        if m in want:
            samples[m] = _ratio_to_mpf(b[-1], a[-1], prec)
    return samples


def float_value_ratio_samples(
    L: Operator, K: int, s0, nodes: Iterable[int], prec: int
) -> dict[int, mp.mpf]:
    """A_k(s0)/a_k for arbitrary (non-negative-integer-shifted) s0, in floats.

    Forward recurrence on the dominant solution is self-correcting, so a
    fixed-precision run is accurate; used where exact rational s0 would make
    bit growth pointless (difference-equation residuals at real s0).
    """
    L = validate_mum(L)
    d, r = L.degree, L.order
    want = set(nodes)
    samples: dict[int, mp.mpf] = {}
    with mp.workprec(prec + 32):
        s0 = mp.mpmathify(s0)
        rows = [[mp.mpf(c.numerator) / mp.mpf(c.denominator) for c in row.coeffs] for row in L.rows]

        def pv(row, x):
            acc = mp.mpf(0)
            for c in reversed(row):
                acc = acc * x + c
            return acc

        a = [mp.mpf(1)]
        A = [mp.mpmathify(1)]
        for m in range(1, K + 1):
            s1 = mp.mpf(0)
            s2 = mp.mpmathify(0)
            for j in range(1, min(m, d) + 1):
                s1 += pv(rows[j], m - j) * a[-j]
                s2 += A[-j] * pv(rows[j], m - j + s0)
            a.append(-s1 / mp.mpf(m) ** r)
            A.append(-s2 / (m + s0) ** r)
            if len(a) > d:
                a.pop(0)
                A.pop(0)
            if m in want:
                samples[m] = A[-1] / a[-1]
    return samples
