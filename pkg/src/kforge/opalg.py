"""Exact differential operators in the noncommutative ring Q[t, D].

D is the logarithmic derivative t*d/dt, so the commutation rule is
D*t^j = t^j*(D + j).  An operator is stored in its P-form

    L = sum_j t^j P_j(D),

from which the q-form  L = sum_i q_{r-i}(t) D^i  is the transpose of the same
coefficient table.  All arithmetic is exact over Fraction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    AmbiguousError,
    ConstantQ0Error,
    DomainError,
    NoOperatorError,
    NonPolynomialError,
    NoSolutionError,
    NotMUMError,
    ParseError,
)
from .linalg import solve_unique
from .qpoly import QPoly, _frac_str


@dataclass(frozen=True)
class PairingInput:
    """User-supplied topological pairing constants Q0 and Qc.

    These are Betti data the operator alone does not determine; both must be
    nonzero rationals.
    """

    q0: Fraction
    qc: Fraction

    def __post_init__(self):
        object.__setattr__(self, "q0", Fraction(self.q0))
        object.__setattr__(self, "qc", Fraction(self.qc))
        if self.q0 == 0 or self.qc == 0:
            raise DomainError("pairing constants must be nonzero")


class Operator:
    """Immutable element of Q[t, D] in normalized P-form.

    rows[j] holds P_j(D); trailing zero rows are trimmed, so the degree in t
    is len(rows) - 1 and the order r is the maximal D-degree over the rows.
    """

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[QPoly]):
        rows = list(rows)
        while rows and rows[-1].is_zero():
            rows.pop()
        object.__setattr__(self, "rows", tuple(rows))

    def __setattr__(self, *args):
        raise AttributeError("Operator is immutable")

    # -- basic structure ---------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.rows

    @property
    def order(self) -> int:
        """Maximal degree in D (r).  Zero operator has order -1."""
        return max((p.degree for p in self.rows), default=-1)

    @property
    def degree(self) -> int:
        """Degree in t (d).  Zero operator has degree -1."""
        return len(self.rows) - 1

    @property
    def p_polys(self) -> tuple[QPoly, ...]:
        """P-form rows: p_polys[j] = P_j(D)."""
        return self.rows

    @property
    def q_polys(self) -> tuple[QPoly, ...]:
        """q-form columns: q_polys[m] = q_m(t), the coefficient of D^(r-m)."""
        r = self.order
        return tuple(
            QPoly([row[r - m] for row in self.rows]) for m in range(r + 1)
        )

    def coeff(self, j: int, i: int) -> Fraction:
        """Coefficient of t^j D^i."""
        if 0 <= j < len(self.rows):
            return self.rows[j][i]
        return Fraction(0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Operator):
            return self.rows == other.rows
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.rows)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "Operator") -> "Operator":
        n = max(len(self.rows), len(other.rows))
        return Operator([self._row(j) + other._row(j) for j in range(n)])

    def __sub__(self, other: "Operator") -> "Operator":
        n = max(len(self.rows), len(other.rows))
        return Operator([self._row(j) - other._row(j) for j in range(n)])

    def __neg__(self) -> "Operator":
        return Operator([-p for p in self.rows])

    def _row(self, j: int) -> QPoly:
        return self.rows[j] if 0 <= j < len(self.rows) else QPoly.zero()

    def scale(self, c) -> "Operator":
        return Operator([p.scale(c) for p in self.rows])

    def __mul__(self, other):
        if isinstance(other, Operator):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        # scalar * operator only; operator * operator goes through __mul__
        return self.scale(other)

    def __pow__(self, n: int) -> "Operator":
        if n < 0:
            raise NonPolynomialError("negative operator power")
        out = Operator.one()
        for _ in range(n):
            out = multiply(out, self)
        return out

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls) -> "Operator":
        return cls(())

    @classmethod
    def one(cls) -> "Operator":
        return cls((QPoly.one(),))

    @classmethod
    def d_symbol(cls) -> "Operator":
        return cls((QPoly.x(),))

    @classmethod
    def t_symbol(cls) -> "Operator":
        return cls((QPoly.zero(), QPoly.one()))

    @classmethod
    def constant(cls, c) -> "Operator":
        return cls((QPoly.constant(c),))

    @classmethod
    def from_p_form(cls, rows: Sequence[Sequence[Fraction | int]]) -> "Operator":
        return cls([QPoly(row) for row in rows])

    # -- evaluation ----------------------------------------------------------

    def apply_p_form(self, a: int) -> dict[int, Fraction]:
        """L(t^a) via the P-form: sum_j P_j(a) t^(a+j)."""
        out: dict[int, Fraction] = {}
        for j, row in enumerate(self.rows):
            v = row.eval(Fraction(a))
            if v != 0:
                out[a + j] = v
        return out

    def apply_q_form(self, a: int) -> dict[int, Fraction]:
        """L(t^a) via the q-form: sum_i q_{r-i}(t) a^i t^a."""
        r = self.order
        out: dict[int, Fraction] = {}
        qs = self.q_polys
        for m in range(r + 1):
            i = r - m
            w = Fraction(a) ** i
            for j, c in enumerate(qs[m].coeffs):
                v = c * w
                if v != 0:
                    out[a + j] = out.get(a + j, Fraction(0)) + v
        return {k: v for k, v in out.items() if v != 0}

    def to_text(self) -> str:
        """Canonical DSL rendering; parse_operator round-trips it."""
        if self.is_zero:
            return "0"
        parts: list[str] = []
        for j, row in enumerate(self.rows):
            if row.is_zero():
                continue
            body = row.format("D")
            single = _is_single_term(body)
            if j == 0:
                parts.append(body if single else f"({body})")
            else:
                tj = "t" if j == 1 else f"t^{j}"
                parts.append(f"{tj}*{body}" if single and "-" not in body and "+" not in body else f"{tj}*({body})")
        text = parts[0]
        for p in parts[1:]:
            text += f" + {p}"
        return text

    def __repr__(self) -> str:
        return f"Operator({self.to_text()})"


def _is_single_term(body: str) -> bool:
    return " + " not in body and " - " not in body and not body.startswith("-")


# -- multiplication and adjoint ---------------------------------------------


def multiply(a: Operator, b: Operator) -> Operator:
    """Noncommutative product a*b (a applied after b), D kept right of t.

    Uses P(D) * t^j = t^j * P(D + j) termwise.
    """
    if a.is_zero or b.is_zero:
        return Operator.zero()
    rows: list[QPoly] = [QPoly.zero()] * (a.degree + b.degree + 1)
    for ja, pa in enumerate(a.rows):
        if pa.is_zero():
            continue
        for jb, pb in enumerate(b.rows):
            if pb.is_zero():
                continue
            rows[ja + jb] = rows[ja + jb] + pa.compose_shift(jb) * pb
    return Operator(rows)


def adjoint(L: Operator) -> Operator:
    """Formal adjoint (-1)^r * sum_i (-D)^i q_{r-i}(t), normalized to P-form.

    Satisfies adjoint(adjoint(L)) = L and
    adjoint(multiply(A, B)) = multiply(adjoint(B), adjoint(A)).
    """
    if L.is_zero:
        return L
    r = L.order
    rows: list[QPoly] = [QPoly.zero()] * (L.degree + 1)
    # (-D)^i t^m = t^m * (-1)^i (D + m)^i
    for m, row in enumerate(L.rows):
        for i in range(row.degree + 1):
            c = row[i]
            if c == 0:
                continue
            sign = Fraction(-1) ** (r + i)
            shifted = (QPoly.x() + QPoly.constant(m)) ** i
            rows[m] = rows[m] + shifted.scale(c * sign)
    return Operator(rows)


# -- DSL parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*^()/]))"
)


class _Tokens:
    """Token stream over the shared operator / Laurent grammar."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.kind = ""
        self.value = ""
        self.tok_pos = 0
        self.advance()

    def advance(self):
        # strip comments: '#' to end of line
        while True:
            m = _TOKEN_RE.match(self.text, self.pos)
            if m is None:
                rest = self.text[self.pos:].strip()
                if rest:
                    raise ParseError(f"unrecognized input {rest[:8]!r}", self.pos)
                self.kind, self.value, self.tok_pos = "end", "", len(self.text)
                return
            self.tok_pos = m.start(m.lastgroup)  # type: ignore[arg-type]
            self.pos = m.end()
            if m.group("num") is not None:
                self.kind, self.value = "num", m.group("num")
            elif m.group("name") is not None:
                self.kind, self.value = "name", m.group("name")
            else:
                self.kind, self.value = "op", m.group("op")
            return

    def expect_op(self, op: str):
        if self.kind != "op" or self.value != op:
            raise ParseError(f"found {self.value!r}", self.tok_pos, expected=repr(op))
        self.advance()


class _OperatorParser:
    """Recursive descent over:  expr := term (('+'|'-') term)*,
    term := factor ('*' factor)*, factor := atom ('^' natural)?,
    atom := 'D' | 't' | rational | '(' expr ')'.

    '*' is mandatory; multiplication is noncommutative, applied left to right.
    """

    def __init__(self, text: str):
        self.toks = _Tokens(text)

    def parse(self) -> Operator:
        out = self.expr()
        if self.toks.kind != "end":
            raise ParseError(
                f"trailing input {self.toks.value!r}", self.toks.tok_pos, expected="end of input"
            )
        return out

    def expr(self) -> Operator:
        # allow a leading sign on the first term
        negate = False
        if self.toks.kind == "op" and self.toks.value in "+-":
            negate = self.toks.value == "-"
            self.toks.advance()
            if self.toks.kind == "num":
                # fold the sign into the rational atom, per the grammar
                term = self.term(first_negative=negate)
                negate = False
            else:
                term = self.term()
        else:
            term = self.term()
        out = -term if negate else term
        while self.toks.kind == "op" and self.toks.value in "+-":
            sub = self.toks.value == "-"
            self.toks.advance()
            nxt = self.term()
            out = out - nxt if sub else out + nxt
        return out

    def term(self, first_negative: bool = False) -> Operator:
        out = self.factor(negative=first_negative)
        while self.toks.kind == "op" and self.toks.value == "*":
            self.toks.advance()
            out = multiply(out, self.factor())
        return out

    def factor(self, negative: bool = False) -> Operator:
        atom = self.atom(negative=negative)
        if self.toks.kind == "op" and self.toks.value == "^":
            self.toks.advance()
            if self.toks.kind == "op" and self.toks.value == "-":
                raise NonPolynomialError(
                    f"negative exponent at position {self.toks.tok_pos}"
                )
            if self.toks.kind != "num":
                raise ParseError(
                    f"found {self.toks.value!r}", self.toks.tok_pos, expected="natural exponent"
                )
            n = int(self.toks.value)
            self.toks.advance()
            return atom ** n
        return atom

    def atom(self, negative: bool = False) -> Operator:
        t = self.toks
        if t.kind == "name":
            if negative:
                raise ParseError("sign must precede a rational", t.tok_pos, expected="digits")
            if t.value == "D":
                t.advance()
                return Operator.d_symbol()
            if t.value == "t":
                t.advance()
                return Operator.t_symbol()
            raise ParseError(f"unknown symbol {t.value!r}", t.tok_pos, expected="'D', 't' or rational")
        if t.kind == "num":
            num = int(t.value)
            t.advance()
            den = 1
            if t.kind == "op" and t.value == "/":
                t.advance()
                if t.kind != "num":
                    raise NonPolynomialError(
                        f"division by non-number at position {t.tok_pos}"
                    )
                den = int(t.value)
                t.advance()
            return Operator.constant(Fraction(-num if negative else num, den))
        if t.kind == "op" and t.value == "(":
            t.advance()
            inner = self.expr()
            t.expect_op(")")
            return inner
        if t.kind == "op" and t.value == "/":
            raise NonPolynomialError(f"division at position {t.tok_pos}")
        raise ParseError(f"found {t.value!r}", t.tok_pos, expected="'D', 't', rational or '('")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def parse_operator(text: str) -> Operator:
    """Parse the operator DSL into a normalized Operator, exactly."""
    return _OperatorParser(_strip_comments(text)).parse()


# -- structural operations ---------------------------------------------------


def validate_mum(L: Operator) -> Operator:
    """Gate for all sequence computations: require P_0(D) = gamma * D^r.

    Returns L / gamma so that P_0 = D^r exactly; any other indicial root (or
    a degree drop in P_0) raises NotMUMError.
    """
    if L.is_zero:
        raise NotMUMError("zero operator")
    r = L.order
    p0 = L.rows[0]
    if p0.degree != r:
        raise NotMUMError(
            f"indicial polynomial {p0.format('D')} has degree {p0.degree} < order {r}"
        )
    gamma = p0[r]
    if any(p0[i] != 0 for i in range(r)):
        raise NotMUMError(
            f"indicial polynomial {p0.format('D')} has roots other than 0"
        )
    if gamma == 1:
        return L
    return L.scale(Fraction(1) / gamma)


def selfadjoint_test(L: Operator) -> bool:
    """Exact test of q1 = (r/2) * t * q0'(t), equivalent to adjoint(L) = L."""
    qs = L.q_polys
    r = L.order
    q0, q1 = qs[0], qs[1] if r >= 1 else QPoly.zero()
    return q1 == q0.theta().scale(Fraction(r, 2))


def solve_p(L: Operator, degree_bound: Optional[int] = None) -> QPoly:
    """Unique polynomial p with p(0) = 1 and p * adjoint(L) = L * p.

    The coefficients are found by an exact rational nullspace computation on
    the operator identity; p == 1 exactly when L is self-adjoint.
    """
    L = validate_mum(L)
    bound = L.degree if degree_bound is None else degree_bound
    Ld = adjoint(L)
    # unknowns p_1..p_bound (p_0 = 1); equation sum_m p_m (t^m Ld - L t^m) = 0
    diffs: list[Operator] = []
    for m in range(bound + 1):
        tm = Operator([QPoly.zero()] * m + [QPoly.one()])
        diffs.append(multiply(tm, Ld) - multiply(L, tm))
    keys = sorted(
        {(j, i) for Dm in diffs for j, row in enumerate(Dm.rows) for i in range(row.degree + 1)}
    )
    rows = [[diffs[m].coeff(j, i) for m in range(1, bound + 1)] for (j, i) in keys]
    rhs = [-diffs[0].coeff(j, i) for (j, i) in keys]
    if not rows:
        return QPoly.one()
    try:
        sol = solve_unique(rows, rhs, ambiguous_error=AmbiguousError, inconsistent_error=NoSolutionError)
    except NoSolutionError:
        raise NoSolutionError(
            f"no intertwining polynomial of degree <= {bound}"
        ) from None
    return QPoly([Fraction(1)] + sol)


def fit_operator(terms, order: int, degree: int) -> Operator:
    """Invert the coefficient recurrence: find L with P_0 = D^order whose
    recurrence annihilates all supplied terms.

    terms may be a RationalSequence or any sequence of rationals with
    terms[0] = 1.  The solved operator is re-verified against every term.
    """
    seq = [Fraction(x) for x in getattr(terms, "terms", terms)]
    if not seq or seq[0] != 1:
        raise NoOperatorError("term sequence must start with 1")
    r, d = order, degree
    if r < 1 or d < 1:
        raise DomainError("order and degree must be positive")
    nunk = d * (r + 1)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for m in range(1, len(seq)):
        row = [Fraction(0)] * nunk
        for k in range(1, min(m, d) + 1):
            base = (k - 1) * (r + 1)
            x = Fraction(m - k)
            w = seq[m - k]
            pw = Fraction(1)
            for i in range(r + 1):
                row[base + i] = w * pw
                pw *= x
        rows.append(row)
        rhs.append(-(Fraction(m) ** r) * seq[m])
    sol = solve_unique(rows, rhs, ambiguous_error=AmbiguousError, inconsistent_error=NoOperatorError)
    p_rows: list[QPoly] = [QPoly([0] * r + [1])]
    for k in range(1, d + 1):
        p_rows.append(QPoly(sol[(k - 1) * (r + 1): k * (r + 1)]))
    L = Operator(p_rows)
    # verify against every supplied term
    check = [Fraction(1)]
    for m in range(1, len(seq)):
        acc = Fraction(0)
        for k in range(1, min(m, d) + 1):
            acc += L.rows[k].eval(Fraction(m - k)) * check[m - k]
        check.append(-acc / Fraction(m) ** r)
        if check[m] != seq[m]:
            raise NoOperatorError(f"fitted operator fails to reproduce term {m}")
    return L


def conifold_point(L: Operator, precision_bits: int = 256, override=None):
    """Root of q0 of strictly smallest modulus, refined to precision_bits.

    An override value is returned verbatim (escape hatch for apparent
    singularities).  Ties within 2^(-precision_bits/2) raise TieError.
    """
    from . import numeric  # deferred: numeric pulls in mpmath

    if override is not None:
        return numeric.to_mpc(override, precision_bits)
    q0 = L.q_polys[0]
    if q0.degree < 1:
        raise ConstantQ0Error("q0 is constant; no finite singularity")
    if q0[0] == 0:
        raise DomainError("q0(0) = 0; operator is singular at t = 0")
    return numeric.smallest_root(q0, precision_bits)
