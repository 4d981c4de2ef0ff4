"""Exact rational sparse linear algebra.

Scalars are plain ints, with fractions.Fraction entering only where a
division forces it; the two mix freely through Python's numeric tower and
compare equal when they represent the same number.  No floating point
anywhere.

Vectors are dicts mapping a basis index to a nonzero scalar; absent keys
are zero.  The helpers below never store a zero coefficient.

Row reduction keeps pivot choice deterministic (lowest index first) so
that ranks, bases and every downstream report are reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

Rational = Union[int, Fraction]

# sparse vector: basis index -> nonzero Rational
SparseVec = Dict[int, Rational]


def qparse(text) -> Rational:
    """Parse "p/q" or "p" (or pass through ints/Fractions)."""
    if isinstance(text, int):
        return text
    if isinstance(text, Fraction):
        return _tighten(text)
    s = str(text).strip()
    if "/" in s:
        num, den = s.split("/", 1)
        return _tighten(Fraction(int(num), int(den)))
    return int(s)


def qstr(x: Rational) -> str:
    """Render as "p/q", or plain "p" when the denominator is 1."""
    return str(x)


def _tighten(x: Rational) -> Rational:
    # keep integers as ints; the int fast path matters in hot loops
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    return x


def vec(*pairs) -> SparseVec:
    return {k: v for k, v in pairs if v}


def vadd(a: SparseVec, b: SparseVec) -> SparseVec:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, 0) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vsub(a: SparseVec, b: SparseVec) -> SparseVec:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, 0) - v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vscale(c: Rational, a: SparseVec) -> SparseVec:
    if not c:
        return {}
    return {k: c * v for k, v in a.items()}


def iadd_scaled(acc: SparseVec, a: SparseVec, c: Rational) -> None:
    """acc += c*a, in place, pruning zeros."""
    if not c:
        return
    for k, v in a.items():
        s = acc.get(k, 0) + c * v
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)


def vneg(a: SparseVec) -> SparseVec:
    return {k: -v for k, v in a.items()}


@dataclass
class SubspaceBasis:
    """Reduced row-echelon basis of a subspace of an enumerated space.

    rows are pairwise reduced, each scaled to a leading 1, and sorted by
    strictly increasing pivot index; rank == len(rows).
    """

    ambient_dim: int
    rows: List[SparseVec]
    pivots: List[int]

    @property
    def rank(self) -> int:
        return len(self.rows)

    def contains(self, v: SparseVec) -> bool:
        return membership(v, self) is not None


def rref(rows: Sequence[SparseVec], ambient_dim: int) -> SubspaceBasis:
    """Reduced row echelon form of the span of the given sparse rows.

    Deterministic for a fixed input order: rows are absorbed one at a
    time, each new pivot is the lowest surviving index, and earlier rows
    are back-substituted immediately.
    """
    basis_rows: List[SparseVec] = []
    pivots: List[int] = []
    for row in rows:
        r = dict(row)
        for k in r:
            if not (0 <= k < ambient_dim):
                raise IndexError(f"index {k} out of range for ambient dim {ambient_dim}")
        # forward-reduce against current basis
        for bi, p in enumerate(pivots):
            c = r.get(p)
            if c:
                iadd_scaled(r, basis_rows[bi], -c)
        if not r:
            continue
        p = min(r)
        inv = Fraction(1, 1) / r[p] if r[p] != 1 else 1
        if inv != 1:
            r = {k: _tighten(inv * v) for k, v in r.items()}
        # back-substitute into the rows we already have
        for bi in range(len(basis_rows)):
            c = basis_rows[bi].get(p)
            if c:
                iadd_scaled(basis_rows[bi], r, -c)
        pos = 0
        while pos < len(pivots) and pivots[pos] < p:
            pos += 1
        basis_rows.insert(pos, r)
        pivots.insert(pos, p)
    return SubspaceBasis(ambient_dim, basis_rows, pivots)


def membership(v: SparseVec, basis: SubspaceBasis) -> Optional[List[Rational]]:
    """Coordinates of v in the basis rows, or None when v is outside the span.

    The zero vector is a member with all-zero coordinates.
    """
    for k in v:
        if not (0 <= k < basis.ambient_dim):
            raise IndexError(f"index {k} out of range for ambient dim {basis.ambient_dim}")
    r = dict(v)
    coords: List[Rational] = []
    for row, p in zip(basis.rows, basis.pivots):
        c = r.get(p, 0)
        coords.append(c)
        if c:
            iadd_scaled(r, row, -c)
    if r:
        return None
    return coords


def sum_basis(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    return rref(list(a.rows) + list(b.rows), a.ambient_dim)


def intersect(a: SubspaceBasis, b: SubspaceBasis) -> SubspaceBasis:
    """Intersection of two subspaces by the kernel-of-stacked-matrix method.

    Stack [x|x] for x in a and [y|0] for y in b over a doubled ambient
    space and reduce; rows supported entirely in the right half carry the
    intersection (Zassenhaus trick).
    """
    if a.ambient_dim != b.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    n = a.ambient_dim
    stacked: List[SparseVec] = []
    for x in a.rows:
        row = dict(x)
        for k, v in x.items():
            row[k + n] = v
        stacked.append(row)
    for y in b.rows:
        stacked.append(dict(y))
    red = rref(stacked, 2 * n)
    meet: List[SparseVec] = []
    for row in red.rows:
        if all(k >= n for k in row):
            meet.append({k - n: v for k, v in row.items()})
    return rref(meet, n)


def kernel_basis(rows: Sequence[SparseVec], ncols: int) -> SubspaceBasis:
    """Basis of {x : M x = 0} for the matrix M with the given sparse rows."""
    red = rref(rows, ncols)
    pivot_set = set(red.pivots)
    kernel: List[SparseVec] = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        v: SparseVec = {f: 1}
        for row, p in zip(red.rows, red.pivots):
            c = row.get(f)
            if c:
                v[p] = -c
        kernel.append(v)
    return rref(kernel, ncols)


def transpose(rows: Sequence[SparseVec], ncols: int) -> List[SparseVec]:
    """Columns of the matrix with the given rows, as sparse vectors."""
    cols: List[SparseVec] = [dict() for _ in range(ncols)]
    for i, row in enumerate(rows):
        for j, v in row.items():
            cols[j][i] = v
    return cols
