"""Truncated formal Laurent calculus.

Series here are finite windows [e_min, e_max] of exponents with sparse
vector coefficients; an absent exponent is zero.  Nothing is lazy or
infinite: every equality claim made with these objects is explicitly
"exact on a stated window", which keeps all downstream checks decidable
and the reports reproducible.

The binomial convention is fixed once and for all: a power (x + y)^m with
m < 0 expands in non-negative powers of the SECOND listed variable, with
coefficients gen_binomial(m, i).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Dict, Optional, Tuple

from .exactlin import Rational, SparseVec, iadd_scaled, vscale

Window = Tuple[int, int]


@dataclass
class TruncatedLaurent:
    """A formal Laurent series known exactly on [e_min, e_max]."""

    e_min: int
    e_max: int
    coeffs: Dict[int, SparseVec] = field(default_factory=dict)

    def __post_init__(self):
        if self.e_min > self.e_max:
            raise ValueError("empty exponent window")
        for e in self.coeffs:
            if not (self.e_min <= e <= self.e_max):
                raise ValueError(f"exponent {e} outside window [{self.e_min}, {self.e_max}]")

    def coeff(self, e: int) -> SparseVec:
        if not (self.e_min <= e <= self.e_max):
            raise ValueError(f"exponent {e} outside window [{self.e_min}, {self.e_max}]")
        return self.coeffs.get(e, {})

    def set_coeff(self, e: int, v: SparseVec) -> None:
        if not (self.e_min <= e <= self.e_max):
            raise ValueError(f"exponent {e} outside window [{self.e_min}, {self.e_max}]")
        if v:
            self.coeffs[e] = v
        else:
            self.coeffs.pop(e, None)

    def add_term(self, e: int, v: SparseVec, c: Rational = 1) -> None:
        """self += c * v * x^e, silently dropping exponents outside the window."""
        if not v or not c or not (self.e_min <= e <= self.e_max):
            return
        acc = self.coeffs.setdefault(e, {})
        iadd_scaled(acc, v, c)
        if not acc:
            del self.coeffs[e]


def residue(p: TruncatedLaurent) -> SparseVec:
    """The coefficient at exponent -1."""
    if not (p.e_min <= -1 <= p.e_max):
        raise ValueError("window does not contain exponent -1")
    return p.coeff(-1)


def gen_binomial(m: int, i: int) -> int:
    """Generalized binomial m(m-1)...(m-i+1)/i!, an integer for integer m.

    This is the coefficient of y^i in the expansion of (x+y)^m in
    non-negative powers of y (times x^{m-i}).
    """
    if i < 0:
        raise ValueError("lower index must be non-negative")
    if m >= 0:
        return comb(m, i)
    # (-1)^i * C(-m+i-1, i)
    c = comb(-m + i - 1, i)
    return -c if i % 2 else c


def deriv(p: TruncatedLaurent) -> TruncatedLaurent:
    """Term-wise formal derivative; the window shifts down by one."""
    out = TruncatedLaurent(p.e_min - 1, p.e_max - 1)
    for e, v in p.coeffs.items():
        if e != 0:
            out.set_coeff(e - 1, vscale(e, v))
    return out


def exp_xD(s: SparseVec, apply_D: Callable[[SparseVec], SparseVec], max_power: int) -> TruncatedLaurent:
    """The series sum_{k=0}^{max_power} x^k D^k(s) / k!.

    apply_D must eventually kill s (degree-raising past a cutoff, or
    nilpotent) for the truncation to be meaningful; the caller owns that
    guarantee.
    """
    if max_power < 0:
        raise ValueError("max_power must be non-negative")
    out = TruncatedLaurent(0, max_power)
    cur = dict(s)
    out.set_coeff(0, dict(cur))
    for k in range(1, max_power + 1):
        cur = apply_D(cur)
        if not cur:
            break
        out.set_coeff(k, vscale(Fraction(1, factorial(k)), cur))
    return out


def series_equal(a: TruncatedLaurent, b: TruncatedLaurent, window: Window):
    """Exact coefficient comparison on the window.

    Returns (True, None, None) on agreement, else (False, e, defect) for
    the smallest differing exponent e, with defect = a_e - b_e.
    """
    lo, hi = window
    if lo > hi:
        raise ValueError("empty comparison window")
    for p in (a, b):
        if p.e_min > lo or p.e_max < hi:
            raise ValueError("comparison window not covered by both operands")
    for e in range(lo, hi + 1):
        ca = a.coeffs.get(e, {})
        cb = b.coeffs.get(e, {})
        if ca != cb:
            defect = dict(ca)
            for k, v in cb.items():
                d = defect.get(k, 0) - v
                if d:
                    defect[k] = d
                else:
                    defect.pop(k, None)
            return False, e, defect
    return True, None, None
