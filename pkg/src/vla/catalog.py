"""The worked example algebras that anchor the test suite.

Each builder returns a fresh object, so tests can mutate copies freely.
`write_corpus` regenerates the JSON documents shipped under algebras/.
"""

from __future__ import annotations

import json
import os
from typing import Callable, Dict

from .leibniz import LeibnizAlgebra, dump_algebra_doc
from .vertex import PermAlgebra, dump_perm_doc


def n2() -> LeibnizAlgebra:
    """The 2-dim nilpotent Leibniz algebra [x,x] = y (not Lie, not abelian)."""
    table = [[{} for _ in range(2)] for _ in range(2)]
    table[0][0] = {1: 1}
    return LeibnizAlgebra(2, ["x", "y"], table, name="n2")


def abelian(dim: int, name: str = "") -> LeibnizAlgebra:
    names = [chr(ord("a") + i) for i in range(dim)]
    table = [[{} for _ in range(dim)] for _ in range(dim)]
    return LeibnizAlgebra(dim, names, table, name=name or f"abelian{dim}")


def abelian1() -> LeibnizAlgebra:
    return abelian(1)


def abelian2() -> LeibnizAlgebra:
    return abelian(2)


def r2() -> LeibnizAlgebra:
    """The nonabelian 2-dim Lie algebra [a,b] = b, with its Killing form."""
    table = [[{} for _ in range(2)] for _ in range(2)]
    table[0][1] = {1: 1}
    table[1][0] = {1: -1}
    form = [[1, 0], [0, 0]]
    return LeibnizAlgebra(2, ["a", "b"], table, form=form, name="r2")


def sl2() -> LeibnizAlgebra:
    """sl2 in the basis (e, f, h): [e,f] = h, [h,e] = 2e, [h,f] = -2f."""
    table = [[{} for _ in range(3)] for _ in range(3)]
    table[0][1] = {2: 1}
    table[1][0] = {2: -1}
    table[2][0] = {0: 2}
    table[0][2] = {0: -2}
    table[2][1] = {1: -2}
    table[1][2] = {1: 2}
    form = [[0, 4, 0], [4, 0, 0], [0, 0, 8]]  # Killing form
    return LeibnizAlgebra(3, ["e", "f", "h"], table, form=form, name="sl2")


def perm_projection(dim: int = 2) -> PermAlgebra:
    """Projection product e_i e_j = e_j with zero derivation."""
    product = [[{j: 1} for j in range(dim)] for _ in range(dim)]
    derivation = [[0] * dim for _ in range(dim)]
    return PermAlgebra(dim, [f"e{j}" for j in range(dim)], product, derivation)


def borcherds_t4() -> PermAlgebra:
    """C[t]/(t^4) with D = d/dt, the commutative example.

    The degrees mark this as the degree-3 window of C[t]: products that
    would land above t^3 are outside the window, not zero.  (Read flat, the
    4-dimensional quotient does not admit d/dt as a derivation at all —
    D(t*t3) = 0 but D(t)t3 + t D(t3) = 4 t3.)
    """
    dim = 4
    product = [
        [({i + j: 1} if i + j < dim else {}) for j in range(dim)] for i in range(dim)
    ]
    derivation = [[0] * dim for _ in range(dim)]
    for j in range(1, dim):
        derivation[j - 1][j] = j  # D t^j = j t^{j-1}
    return PermAlgebra(dim, ["1", "t", "t2", "t3"], product, derivation,
                       degrees=[0, 1, 2, 3])


LEIBNIZ_BUILDERS: Dict[str, Callable[[], LeibnizAlgebra]] = {
    "n2": n2,
    "abelian1": abelian1,
    "abelian2": abelian2,
    "r2": r2,
    "sl2": sl2,
}

PERM_BUILDERS: Dict[str, Callable[[], PermAlgebra]] = {
    "perm_projection": perm_projection,
    "borcherds_t4": borcherds_t4,
}


def write_corpus(directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    for name, build in LEIBNIZ_BUILDERS.items():
        doc = dump_algebra_doc(build())
        with open(os.path.join(directory, f"{name}.json"), "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    for name, build in PERM_BUILDERS.items():
        doc = dump_perm_doc(build())
        with open(os.path.join(directory, f"{name}.json"), "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")


if __name__ == "__main__":  # pragma: no cover
    import sys

    write_corpus(sys.argv[1] if len(sys.argv) > 1 else "algebras")
