"""Exact univariate polynomials over Q.

QPoly is the shared representation for both families of coefficient
polynomials of an operator: polynomials in the theta symbol D (the P_j) and
polynomials in t (the q_i).  Coefficients are stored low degree first with
trailing zeros trimmed; the zero polynomial has an empty coefficient tuple.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


def _trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    return tuple(coeffs[:n])


class QPoly:
    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Fraction | int | str] = ()):
        self.coeffs = _trim([Fraction(c) for c in coeffs])

    @classmethod
    def zero(cls) -> "QPoly":
        return cls(())

    @classmethod
    def one(cls) -> "QPoly":
        return cls((1,))

    @classmethod
    def x(cls) -> "QPoly":
        return cls((0, 1))

    @classmethod
    def constant(cls, c) -> "QPoly":
        return cls((Fraction(c),))

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial assigned -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __getitem__(self, k: int) -> Fraction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, QPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other: "QPoly") -> "QPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return QPoly([self[i] + other[i] for i in range(n)])

    def __sub__(self, other: "QPoly") -> "QPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return QPoly([self[i] - other[i] for i in range(n)])

    def __neg__(self) -> "QPoly":
        return QPoly([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, QPoly):
            if not self.coeffs or not other.coeffs:
                return QPoly.zero()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return QPoly(out)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c) -> "QPoly":
        c = Fraction(c)
        return QPoly([a * c for a in self.coeffs])

    def __pow__(self, n: int) -> "QPoly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = QPoly.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def eval(self, x):
        """Horner evaluation; works for any ring element (Fraction, mpq, mpf)."""
        acc = 0 * x if self.coeffs else 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def compose_shift(self, a) -> "QPoly":
        """p(x + a), computed by Horner in (x + a)."""
        a = Fraction(a)
        out: list[Fraction] = []
        for c in reversed(self.coeffs):
            # out <- out*(x+a) + c
            new = [Fraction(0)] * (len(out) + 1)
            for i, v in enumerate(out):
                new[i] += v * a
                new[i + 1] += v
            new[0] += c
            out = new
        return QPoly(out)

    def derivative(self) -> "QPoly":
        return QPoly([i * c for i, c in enumerate(self.coeffs)][1:])

    def theta(self) -> "QPoly":
        """x * p'(x): the action of the logarithmic derivative on p."""
        return QPoly([i * c for i, c in enumerate(self.coeffs)])

    def format(self, var: str) -> str:
        """Render highest degree first, in the operator DSL syntax."""
        if not self.coeffs:
            return "0"
        parts: list[str] = []
        for k in range(self.degree, -1, -1):
            c = self[k]
            if c == 0:
                continue
            mag = abs(c)
            if k == 0:
                body = _frac_str(mag)
            elif mag == 1:
                body = var if k == 1 else f"{var}^{k}"
            else:
                body = f"{_frac_str(mag)}*{var}" if k == 1 else f"{_frac_str(mag)}*{var}^{k}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f" + {body}" if c > 0 else f" - {body}")
        return "".join(parts)

    def __repr__(self) -> str:
        return f"QPoly({self.format('x')})"


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
