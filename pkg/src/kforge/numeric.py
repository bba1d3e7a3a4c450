"""Arbitrary-precision numeric kernel.

Floats are mpmath values computed under an explicit working precision; every
public function takes the target precision in bits and pads internally.  The
pieces:

  * Neville extrapolation of sequence limits in the variable 1/k (with a
    1/sqrt(k) fallback basis), plus node thinning;
  * truncated power series arithmetic over floats, including inversion;
  * log-Gamma by argument raising and the Stirling series with Bernoulli
    numbers, in scalar and series-in-s forms;
  * reference constants (zeta by Euler-Maclaurin summation; pi and log
    delegated to mpmath's implementations);
  * simultaneous-iteration + Newton polynomial root finding for the smallest
    root of q0;
  * the unipotent exp(lambda*N) rescaling of period columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import mpmath as mp

from .errors import (
    ConstantQ0Error,
    DomainError,
    InsufficientDataError,
    TieError,
    ZeroConstantTermError,
)
from .qpoly import QPoly

DEFAULT_PREC = 256


def to_mpf(x, prec: int = DEFAULT_PREC):
    with mp.workprec(prec):
        if isinstance(x, Fraction):
            return mp.mpf(x.numerator) / mp.mpf(x.denominator)
        return mp.mpf(x)


def to_mpc(x, prec: int = DEFAULT_PREC):
    with mp.workprec(prec):
        if isinstance(x, Fraction):
            return mp.mpc(x.numerator) / mp.mpf(x.denominator)
        return mp.mpc(x)


# -- extrapolation -------------------------------------------------------------


@dataclass(frozen=True)
class ExtrapolationDiagnostics:
    """Quality record for one extrapolated limit.

    spread is the absolute difference of the two deepest Neville estimates
    and doubles as the reported error estimate.
    """

    depth: int
    spread: object
    nodes: tuple[int, ...]
    flags: tuple[str, ...] = ()

    @property
    def err_est(self):
        return self.spread


def thinned_nodes(K: int, depth: int, ratio: float = 0.9, floor: int = 8) -> list[int]:
    """Geometrically thinned sample indices K, [0.9K], [0.81K], ... (ascending).

    Consecutive indices are nearly collinear in 1/k and condition the Neville
    table badly; thinning fixes that.
    """
    nodes: list[int] = []
    k = K
    while k > floor and (not nodes or k < nodes[-1]):
        nodes.append(k)
        k = int(k * ratio)
    return sorted(set(nodes))


def extrapolate_limit(
    samples: Sequence[tuple[int, object]],
    depth: int,
    prec: int = DEFAULT_PREC,
    basis: str = "integer",
):
    """Neville extrapolation of x_k to k = infinity over the last depth+1 samples.

    samples are (index, value) pairs with strictly increasing indices.  The
    interpolation variable is 1/k for the default integer-power error model,
    or 1/sqrt(k) with basis="half".  Exact (up to rounding) whenever x_k is a
    polynomial of degree <= depth in the chosen variable.
    """
    if len(samples) < depth + 1:
        raise InsufficientDataError(
            f"need {depth + 1} samples for depth {depth}, got {len(samples)}"
        )
    idx = [k for k, _ in samples]
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise DomainError("sample indices must be strictly increasing")
    if basis not in ("integer", "half"):
        raise DomainError(f"unknown extrapolation basis {basis!r}")
    window = list(samples[-(depth + 1):])
    with mp.workprec(prec + 16):
        if basis == "integer":
            xs = [mp.mpf(1) / k for k, _ in window]
        else:
            xs = [mp.mpf(1) / mp.sqrt(k) for k, _ in window]
        tab = [mp.mpmathify(v) for _, v in window]
        n = len(tab)
        for j in range(1, n):
            for i in range(n - 1, j - 1, -1):
                tab[i] = tab[i] + (-xs[i]) * (tab[i] - tab[i - 1]) / (xs[i] - xs[i - j])
        estimate = tab[-1]
        spread = abs(tab[-1] - tab[-2])
    flags: tuple[str, ...] = ()
    if spread > mp.mpf(2) ** (-(prec // 4)):
        flags = ("PRECISION_WARNING",)
    diag = ExtrapolationDiagnostics(
        depth=depth, spread=spread, nodes=tuple(k for k, _ in window), flags=flags
    )
    return estimate, diag


# -- float series --------------------------------------------------------------


@dataclass(frozen=True)
class FloatSeries:
    """Truncated power series with arbitrary-precision float coefficients."""

    coefficients: tuple

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, k: int):
        return self.coefficients[k]

    def __len__(self) -> int:
        return len(self.coefficients)

    def __iter__(self):
        return iter(self.coefficients)


def _s_mul(f: Sequence, g: Sequence, M: int) -> list:
    out = [mp.mpf(0)] * (M + 1)
    for i in range(min(len(f), M + 1)):
        if f[i] == 0:
            continue
        for j in range(min(len(g), M + 1 - i)):
            out[i + j] += f[i] * g[j]
    return out


def _s_exp(f: Sequence, M: int) -> list:
    # exp of a series with zero constant term: e_n = (1/n) sum k f_k e_{n-k}
    e = [mp.mpf(1)] + [mp.mpf(0)] * M
    for n in range(1, M + 1):
        acc = mp.mpf(0)
        for k in range(1, n + 1):
            if k < len(f) and f[k] != 0:
                acc += k * f[k] * e[n - k]
        e[n] = acc / n
    return e


def series_mul(f: FloatSeries, g: FloatSeries, prec: int = DEFAULT_PREC) -> FloatSeries:
    M = min(f.order, g.order)
    with mp.workprec(prec + 16):
        return FloatSeries(tuple(_s_mul(f.coefficients, g.coefficients, M)))


def series_invert(f: FloatSeries, prec: int = DEFAULT_PREC) -> FloatSeries:
    """g with f*g = 1 mod s^(M+1); requires f[0] != 0."""
    if len(f) == 0 or f[0] == 0:
        raise ZeroConstantTermError("cannot invert a series with zero constant term")
    M = f.order
    with mp.workprec(prec + 16):
        g = [1 / mp.mpmathify(f[0])] + [mp.mpf(0)] * M
        for n in range(1, M + 1):
            acc = mp.mpmathify(0)
            for i in range(1, n + 1):
                if f[i] != 0:
                    acc += f[i] * g[n - i]
            g[n] = -acc / f[0]
        return FloatSeries(tuple(g))


# -- log-Gamma ------------------------------------------------------------------


def _bernoulli(k: int, wp: int):
    with mp.workprec(wp):
        return mp.bernoulli(k)


def _lngamma_series_raw(x, M: int, wp: int) -> list:
    """Coefficients of lnGamma(x + s) mod s^(M+1) at working precision wp.

    Argument raising moves x into the zone where the Stirling tail drops
    below 2^-wp; every series composition here has a monomial argument s/z,
    so the expansions are written down directly.
    """
    x = mp.mpf(x)
    if x <= 0:
        raise DomainError("lngamma requires a positive argument")
    # minimal z for a convergent-enough Stirling tail: min term ~ exp(-2 pi z)
    zmin = wp * math.log(2) / (2 * math.pi) + 4
    n = max(0, int(math.ceil(zmin - x)))
    z = x + n
    inv_z = 1 / z
    logz = mp.log(z)
    # log(z + s) = log z + sum_{j>=1} (-1)^(j+1) (s/z)^j / j
    log_series = [logz] + [
        (mp.mpf(-1) ** (j + 1)) * inv_z ** j / j for j in range(1, M + 1)
    ]
    # (z + s - 1/2) * log(z + s) - (z + s) + log(2 pi)/2
    linear = [z - mp.mpf(1) / 2, mp.mpf(1)] + [mp.mpf(0)] * max(0, M - 1)
    out = _s_mul(linear, log_series, M)
    out[0] += -z + mp.log(2 * mp.pi) / 2
    if M >= 1:
        out[1] -= 1
    # Stirling sum: B_{2k}/(2k(2k-1)) * (z+s)^(1-2k)
    eps = mp.mpf(2) ** (-wp - 4)
    kmax = int(math.pi * float(z)) + 16
    pow_base = inv_z  # z^(-(2k-1)) accumulates
    for k in range(1, kmax + 1):
        coef = _bernoulli(2 * k, wp) / (2 * k * (2 * k - 1))
        term0 = coef * pow_base
        if abs(term0) < eps:
            out[0] += term0
            break
        # (z+s)^e = z^e sum_j binom(e, j) (s/z)^j with e = 1 - 2k
        e = 1 - 2 * k
        binom = mp.mpf(1)
        for j in range(M + 1):
            out[j] += coef * pow_base * binom * inv_z ** j
            binom = binom * (e - j) / (j + 1)
        pow_base = pow_base * inv_z * inv_z
    else:
        raise DomainError("Stirling series failed to reach target accuracy")
    # undo the raising: subtract log(x + i + s) for i = 0..n-1
    for i in range(n):
        w = x + i
        inv_w = 1 / w
        out[0] -= mp.log(w)
        for j in range(1, M + 1):
            out[j] -= (mp.mpf(-1) ** (j + 1)) * inv_w ** j / j
    return out


def lngamma(x, prec: int = DEFAULT_PREC):
    """log Gamma(x) for x > 0 by argument raising plus the Stirling series."""
    xv = to_mpf(x, prec + 48)
    if xv <= 0:
        raise DomainError("lngamma requires a positive argument")
    with mp.workprec(prec + 48):
        val = _lngamma_series_raw(xv, 0, prec + 40)[0]
    return to_mpf(val, prec)


def lngamma_series(x, M: int, prec: int = DEFAULT_PREC) -> FloatSeries:
    """Taylor coefficients of lnGamma(x + s) at s = 0, through order M."""
    wp = prec + 48 + 8 * M
    xv = to_mpf(x, wp)
    if xv <= 0:
        raise DomainError("lngamma requires a positive argument")
    with mp.workprec(wp):
        coeffs = _lngamma_series_raw(xv, M, wp - 8)
    with mp.workprec(prec):
        return FloatSeries(tuple(+c for c in coeffs))


# -- reference constants ---------------------------------------------------------


def zeta_int(n: int, prec: int = DEFAULT_PREC):
    """zeta(n) for integer n >= 2 by Euler-Maclaurin-accelerated summation."""
    if n < 2:
        raise DomainError("zeta_int requires n >= 2")
    wp = prec + 24
    with mp.workprec(wp):
        N = max(16, int(0.13 * wp) + 8)
        acc = mp.mpf(0)
        for k in range(1, N):
            acc += mp.mpf(k) ** (-n)
        acc += mp.mpf(N) ** (1 - n) / (n - 1)
        acc += mp.mpf(N) ** (-n) / 2
        # derivative corrections: B_{2j}/(2j)! * n(n+1)...(n+2j-2) * N^(1-n-2j)
        rising = mp.mpf(n)
        fact = mp.mpf(2)
        eps = mp.mpf(2) ** (-wp)
        j = 1
        while True:
            term = _bernoulli(2 * j, wp) / fact * rising * mp.mpf(N) ** (1 - n - 2 * j)
            acc += term
            if abs(term) < eps:
                break
            j += 1
            if j > 4 * N:
                raise DomainError("Euler-Maclaurin tail failed to converge")
            rising *= (n + 2 * j - 3) * (n + 2 * j - 2)
            fact *= (2 * j - 1) * (2 * j)
        result = acc
    return to_mpf(result, prec)


def pi_const(prec: int = DEFAULT_PREC):
    with mp.workprec(prec + 16):
        val = +mp.pi
    return to_mpf(val, prec)


def log_rational(q, prec: int = DEFAULT_PREC):
    q = Fraction(q)
    if q <= 0:
        raise DomainError("log requires a positive argument")
    with mp.workprec(prec + 16):
        val = mp.log(mp.mpf(q.numerator)) - mp.log(mp.mpf(q.denominator))
    return to_mpf(val, prec)


def reference_constant(name: str, prec: int = DEFAULT_PREC):
    """Named constant at the stated precision.

    Accepted names: "one", "pi", "zeta<n>" or "zeta(<n>)" for integer n >= 2,
    and "log:<rational>" with a positive rational argument.
    """
    name = name.strip()
    if name == "one":
        return to_mpf(1, prec)
    if name == "pi":
        return pi_const(prec)
    if name.startswith("zeta"):
        body = name[4:].strip("()")
        try:
            n = int(body)
        except ValueError:
            raise DomainError(f"bad zeta index in {name!r}") from None
        return zeta_int(n, prec)
    if name.startswith("log:"):
        return log_rational(Fraction(name[4:]), prec)
    raise DomainError(f"unknown constant {name!r}")


# -- polynomial roots -------------------------------------------------------------


def _durand_kerner(coeffs: list[complex], iters: int = 500) -> list[complex]:
    """Simultaneous iteration for all roots, complex double precision."""
    deg = len(coeffs) - 1
    lead = coeffs[-1]
    monic = [c / lead for c in coeffs]

    def pv(z):
        acc = 0j
        for c in reversed(monic):
            acc = acc * z + c
        return acc

    radius = 1.0 + max(abs(c) for c in monic[:-1])
    roots = [
        radius * complex(math.cos(2 * math.pi * (k + 0.25) / deg),
                         math.sin(2 * math.pi * (k + 0.25) / deg))
        for k in range(deg)
    ]
    for _ in range(iters):
        moved = 0.0
        for k in range(deg):
            den = 1.0 + 0j
            for j in range(deg):
                if j != k:
                    den *= roots[k] - roots[j]
            if den == 0:
                roots[k] += 1e-6 * (1 + 1j)
                continue
            delta = pv(roots[k]) / den
            roots[k] -= delta
            moved = max(moved, abs(delta))
        if moved < 1e-14 * radius:
            break
    return roots


def smallest_root(q, precision_bits: int = DEFAULT_PREC, tie_bits: Optional[int] = None):
    """Root of q of strictly smallest modulus, as an mpc at precision_bits.

    Globalizes with Durand-Kerner on the monic reversal in double precision
    (the smallest root of q is the dominant root of the reversal), then
    Newton-refines every root in big floats.  Raises TieError when the two
    smallest moduli agree within 2^(-precision_bits/2) relative.
    """
    coeffs = list(q.coeffs) if isinstance(q, QPoly) else [Fraction(c) for c in q]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg < 1:
        raise ConstantQ0Error("polynomial is constant")
    if coeffs[0] == 0:
        raise DomainError("polynomial has a root at 0; smallest modulus undefined")
    wp = precision_bits + 32
    if deg == 1:
        root = Fraction(-1) * coeffs[0] / coeffs[1]
        return to_mpc(root, precision_bits)
    rev = [complex(c) for c in reversed(coeffs)]
    seeds = [1 / w for w in _durand_kerner(rev) if w != 0]
    with mp.workprec(wp):
        cs = [to_mpc(c, wp) for c in coeffs]
        ds = [i * c for i, c in enumerate(cs)][1:]

        def pv(z, poly):
            acc = mp.mpc(0)
            for c in reversed(poly):
                acc = acc * z + c
            return acc

        refined = []
        for seed in seeds:
            z = mp.mpc(seed)
            for _ in range(80):
                dz = pv(z, ds)
                if dz == 0:
                    break
                step = pv(z, cs) / dz
                z -= step
                if abs(step) <= mp.mpf(2) ** (-wp + 4) * max(mp.mpf(1), abs(z)):
                    break
            refined.append(z)
        refined.sort(key=lambda z: abs(z))
        tol = mp.mpf(2) ** (-(precision_bits if tie_bits is None else tie_bits) // 2)
        if len(refined) > 1:
            m0, m1 = abs(refined[0]), abs(refined[1])
            if m1 - m0 <= tol * max(mp.mpf(1), m0):
                raise TieError(
                    f"two roots share the minimal modulus within tolerance: |{refined[0]}|, |{refined[1]}|"
                )
        result = refined[0]
        # snap a negligible imaginary part to zero so logs stay on the real branch
        if abs(result.imag) <= mp.mpf(2) ** (-precision_bits // 2) * max(mp.mpf(1), abs(result)):
            result = mp.mpc(result.real, 0)
    return to_mpc(result, precision_bits)


# -- unipotent rescaling -----------------------------------------------------------


def nilpotent_rescale(column: Sequence, lam, prec: int = DEFAULT_PREC) -> list:
    """Apply exp(lambda*N) with N the lower shift matrix (N e_j = e_{j+1}):

        out_j = sum_{i <= j} lambda^(j-i)/(j-i)! * column_i
    """
    with mp.workprec(prec + 16):
        lam = mp.mpmathify(lam)
        vals = [mp.mpmathify(v) for v in column]
        out = []
        for j in range(len(vals)):
            acc = mp.mpmathify(0)
            power = mp.mpf(1)
            for i in range(j, -1, -1):
                acc += vals[i] * power / mp.factorial(j - i)
                power *= lam
            out.append(acc)
    return out
