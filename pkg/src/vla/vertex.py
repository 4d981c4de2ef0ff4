"""Vertex-Leibniz realizations and the skew-defect ideal machinery.

The central object is the induced module V = V_g(adjoint) acting on
itself through the iterate recursion: a generator acts by its loop modes,
and a composite monomial c_{-m} v' acts by

    (c_{-m} v')_n w = sum_{i>=0} (-1)^i C(-m,i)
        [ c_{-m-i} (v'_{n+i} w)  -  (-1)^m v'_{n-m-i} (c_i w) ],

both sums cut off exactly by annihilation bounds.  The recursion is the
component expansion of the residue iterate formula and is validated
against a formal-series oracle in the test suite before anything else is
trusted.

On top of V sits the free translation extension C[D] (x) V: states are
formal sums of D-powers applied to module states, with

    (D^j u)_n = (-1)^j j! C(n,j) u_{n-j}        (translation rule)
    u_n (D w) = D(u_n w) + n u_{n-1} w          (commutator rule).

Skew-symmetry defects u_n v - sum (-1)^{n+i-1}/i! D^i(v_{n+i} u) span a
left ideal of the extension; saturating it degree by degree and cutting
with the D-free slice yields the embedding kernel, whose vanishing is
necessary and sufficient for V to sit inside a vertex algebra.  Finite
windows can only certify lower bounds on the ideal's graded ranks, and
every report says so.

Also here: vacuum adjunction (a fresh vacuum line over any realization
with D), Perm-algebra realizations Y(a,x)b = (e^{xD}a)b with only
non-negative powers of x, and the hemisemidirect product on V + W whose
W-slot never embeds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Optional, Protocol, Tuple

from .exactlin import (
    Rational,
    SparseVec,
    SubspaceBasis,
    iadd_scaled,
    kernel_basis,
    qparse,
    qstr,
    rref,
    transpose,
    vscale,
)
from .formal import gen_binomial
from .leibniz import LeibnizAlgebra, LieQuotientData, format_vec, lie_quotient
from .loopmod import (
    DegreeOverflow,
    GradedBasis,
    ModeEngine,
    ModuleSpec,
    MonKey,
    adjoint_module,
    build_basis,
    trivial_module,
)
from .verify import SweepWindow, VerificationReport, new_report, skew_defect_state

# A D-extension state: formal sum of D^k applied to module basis monomials.
DKey = Tuple[int, Tuple, int]  # (k, word, bottom)
DState = Dict[DKey, Rational]


def apply_D(v: DState) -> DState:
    """The free translation operator on C[D] (x) V: bump every D-power."""
    return {(k + 1, w, b): c for (k, w, b), c in v.items()}


class VertexRealization(Protocol):
    """What every realization exposes to the verification layer."""

    name: str
    max_degree: int
    vacuum: Optional[dict]
    apply_D: Optional[Callable[[dict], dict]]

    def sweep_states(self, max_degree: int) -> List[Tuple[str, dict]]: ...

    def mode(self, u: dict, n: int, w: dict) -> dict: ...

    def ann(self, u: dict, w: dict) -> int: ...

    def state_str(self, v: dict) -> str: ...


def mode_product(r, u: dict, n: int, w: dict) -> dict:
    """u_n w in the given realization (thin dispatch wrapper)."""
    return r.mode(u, n, w)


# re-export: the defect formula lives with the checkers so both layers
# share a single implementation
skew_defect = skew_defect_state


class LoopRealization:
    """C[D] (x) V_g(adjoint) acting on itself by the iterate recursion."""

    def __init__(self, g: LeibnizAlgebra, max_degree: int, name: Optional[str] = None):
        self.g = g
        self.lqd = lie_quotient(g)
        self.engine = ModeEngine(g, adjoint_module(g), max_degree, self.lqd)
        self.basis = self.engine.basis
        self.delta = 1
        self.max_degree = max_degree
        self.name = name or g.name
        self.vacuum = None
        self.apply_D = apply_D
        self._mm_cache: Dict[Tuple[MonKey, int, MonKey], DState] = {}
        self._deg_cache: Dict[MonKey, int] = {}
        self._layer_cache: Dict[int, List[DKey]] = {}
        self._layer_index: Dict[int, Dict[DKey, int]] = {}

    # -- degrees -----------------------------------------------------------

    def key_degree(self, key: DKey) -> int:
        k, word, _ = key
        return k + self.delta - sum(m for m, _ in word)

    def state_degree(self, v: DState) -> int:
        degs = {self.key_degree(k) for k in v}
        if len(degs) != 1:
            raise ValueError(f"state is not homogeneous (degrees {sorted(degs)})")
        return degs.pop()

    def ann(self, u: DState, w: DState) -> int:
        """u_n w = 0 for all n >= this bound (pure degree bookkeeping)."""
        if not u or not w:
            return 0
        du = max(self.key_degree(k) for k in u)
        dw = max(self.key_degree(k) for k in w)
        return du + dw - self.delta

    # -- basis enumeration ---------------------------------------------------

    def sweep_states(self, max_degree: int) -> List[Tuple[str, DState]]:
        """D-free basis states (the module slice) through max_degree."""
        out = []
        for d in range(self.delta, min(max_degree, self.max_degree) + 1):
            for mon in self.basis.monomials(d):
                key = (0, mon.word, mon.bottom)
                out.append((self.basis.mon_str(mon.key), {key: 1}))
        return out

    def sweep_states_extended(self, max_degree: int) -> List[Tuple[str, DState]]:
        """Full D-extension basis states through max_degree."""
        out = []
        for d in range(self.delta, min(max_degree, self.max_degree) + 1):
            for key in self.dstate_layer(d):
                out.append((self.dkey_str(key), {key: 1}))
        return out

    def extended_view(self) -> "ExtendedView":
        return ExtendedView(self)

    def dstate_layer(self, d: int) -> List[DKey]:
        """Degree-d basis of C[D] (x) V: D-free monomials first, then by D-power."""
        hit = self._layer_cache.get(d)
        if hit is None:
            hit = []
            for k in range(0, d - self.delta + 1):
                for mon in self.basis.monomials(d - k):
                    hit.append((k, mon.word, mon.bottom))
            self._layer_cache[d] = hit
            self._layer_index[d] = {key: i for i, key in enumerate(hit)}
        return hit

    def flatten(self, v: DState, d: int) -> SparseVec:
        self.dstate_layer(d)
        idx = self._layer_index[d]
        out: SparseVec = {}
        for key, c in v.items():
            out[idx[key]] = c
        return out

    def unflatten(self, d: int, row: SparseVec) -> DState:
        layer = self.dstate_layer(d)
        return {layer[i]: c for i, c in row.items()}

    # -- the mode product ----------------------------------------------------

    def mode(self, u: DState, n: int, w: DState) -> DState:
        """u_n w.  Results may be shared with internal caches: treat as
        read-only and copy before mutating."""
        if len(u) == 1 and len(w) == 1:
            ((uk, cu),) = u.items()
            ((wk, cw),) = w.items()
            t = self._mode_kk(uk, n, wk)
            c = cu * cw
            if c == 1 or not t:
                return t
            return {k: c * val for k, val in t.items()}
        out: DState = {}
        for uk, cu in u.items():
            for wk, cw in w.items():
                t = self._mode_kk(uk, n, wk)
                if t:
                    iadd_scaled(out, t, cu * cw)
        return out

    def _mode_kk(self, uk: DKey, n: int, wk: DKey) -> DState:
        ku, wu, bu = uk
        if ku:
            # (D^j u)_n = (-1)^j j! C(n,j) u_{n-j}
            c = gen_binomial(n, ku) * factorial(ku)
            if not c:
                return {}
            if ku & 1:
                c = -c
            return vscale(c, self._mode_kk((0, wu, bu), n - ku, wk))
        kw, ww, bw = wk
        if kw:
            # u_n (D w') = D(u_n w') + n u_{n-1} w'
            w2 = (kw - 1, ww, bw)
            out = {
                (k + 1, w, b): c for (k, w, b), c in self._mode_kk(uk, n, w2).items()
            }
            if n:
                iadd_scaled(out, self._mode_kk(uk, n - 1, w2), n)
            return out
        return self._mode_mm((wu, bu), n, (ww, bw))

    def _mon_degree(self, mon: MonKey) -> int:
        d = self._deg_cache.get(mon)
        if d is None:
            d = self._deg_cache[mon] = self.engine.key_degree(mon)
        return d

    def _mode_mm(self, umon: MonKey, n: int, wmon: MonKey) -> DState:
        """Module-slice mode product, the memoized word recursion."""
        ck = (umon, n, wmon)
        hit = self._mm_cache.get(ck)
        if hit is not None:
            return hit
        eng = self.engine
        du = self._mon_degree(umon)
        dw = self._mon_degree(wmon)
        out_deg = du + dw - n - 1
        if out_deg < self.delta:
            self._mm_cache[ck] = {}
            return {}
        if out_deg > self.max_degree:
            raise DegreeOverflow(out_deg, self.max_degree)
        word, bottom = umon
        res: DState = {}
        if not word:
            # generator: the loop-mode action (adjoint bottom index = g index)
            for mk, c in eng.act(bottom, n, {wmon: 1}).items():
                res[(0, mk[0], mk[1])] = c
        else:
            hm, hs = word[0]
            vmon: MonKey = (word[1:], bottom)
            ann_vw = (du + hm) + dw - self.delta  # deg v' = du - m = du + hm
            i = 0
            while n + i < ann_vw:
                c = gen_binomial(hm, i)
                if i & 1:
                    c = -c
                inner = self._mode_mm(vmon, n + i, wmon)
                for (k2, w2, b2), c2 in inner.items():
                    if k2:
                        raise AssertionError("module product left the module slice")
                    for mk, c3 in eng.rep_act(hs, hm - i, (w2, b2)).items():
                        key = (0, mk[0], mk[1])
                        v = res.get(key, 0) + c * c2 * c3
                        if v:
                            res[key] = v
                        else:
                            del res[key]
                i += 1
            # - (-1)^m sum_i (-1)^i C(-m,i) v'_{n-m-i} (c_i w)
            ann_cw = 1 + dw - self.delta
            i = 0
            while i < ann_cw:
                c = gen_binomial(hm, i)
                if (i + hm) & 1 == 0:
                    c = -c
                cw = eng.rep_act(hs, i, wmon)
                if cw:
                    for mk, c2 in cw.items():
                        t = self._mode_mm(vmon, n + hm - i, mk)
                        if t:
                            iadd_scaled(res, t, c * c2)
                i += 1
        self._mm_cache[ck] = res
        return res

    # -- rendering -----------------------------------------------------------

    def dkey_str(self, key: DKey) -> str:
        k, word, bottom = key
        mon = self.basis.mon_str((word, bottom))
        return mon if k == 0 else f"D{k}.{mon}" if k > 1 else f"D.{mon}"

    def state_str(self, v: DState) -> str:
        if not v:
            return "0"
        bits = []
        for key in sorted(v):
            c = qstr(v[key])
            mon = self.dkey_str(key)
            bits.append(mon if c == "1" else f"-{mon}" if c == "-1" else f"{c}*{mon}")
        return " + ".join(bits).replace("+ -", "- ")

    def gen_state(self, i: int) -> DState:
        """The degree-1 generator e_i as a D-extension state."""
        return {(0, (), i): 1}

    def module_state(self, v: Dict[MonKey, Rational]) -> DState:
        return {(0, w, b): c for (w, b), c in v.items()}


class ExtendedView:
    """The same realization with the D-extended sweep domain."""

    def __init__(self, base: LoopRealization):
        self.base = base
        self.name = base.name + "[D]"
        self.max_degree = base.max_degree
        self.vacuum = base.vacuum
        self.apply_D = base.apply_D
        self.mode = base.mode
        self.ann = base.ann
        self.state_str = base.state_str
        self.unflatten = base.unflatten

    def sweep_states(self, max_degree: int):
        return self.base.sweep_states_extended(max_degree)


# ---------------------------------------------------------------------------
# Ideal saturation and the embedding kernel


def saturate_ideal(r: LoopRealization, max_degree: Optional[int] = None,
                   window: Optional[SweepWindow] = None) -> Dict[int, SubspaceBasis]:
    """Graded lower bounds on the skew-defect ideal of C[D] (x) V.

    Starts from every defect skew_defect(u, v, n) with u, v basis states
    of the extension and n chosen so the output degree stays within the
    built window, then closes under D and under the generator modes c_k
    allowed by the mode window, iterating the graded ranks to a fixpoint.

    A finite window cannot certify completeness in a degree, so the
    resulting ranks are lower bounds on dim J-bar per degree.
    """
    if max_degree is None:
        max_degree = r.max_degree
    if max_degree > r.max_degree:
        raise DegreeOverflow(max_degree, r.max_degree)
    window = window or SweepWindow()
    delta = r.delta

    keys: List[Tuple[DKey, int]] = []
    for d in range(delta, max_degree + 1):
        for key in r.dstate_layer(d):
            keys.append((key, d))

    rows: Dict[int, List[SparseVec]] = {d: [] for d in range(delta, max_degree + 1)}
    for uk, du in keys:
        u = {uk: 1}
        for vk, dv in keys:
            v = {vk: 1}
            n_lo = du + dv - 1 - max_degree
            n_hi = du + dv - delta - 1  # beyond this every term dies
            for n in range(n_lo, n_hi + 1):
                d_out = du + dv - n - 1
                defect = skew_defect_state(r, u, v, n)
                if defect:
                    rows[d_out].append(r.flatten(defect, d_out))

    bases: Dict[int, SubspaceBasis] = {}
    for d in range(delta, max_degree + 1):
        bases[d] = rref(rows[d], len(r.dstate_layer(d)))

    gens = [i for i in range(r.g.dim) if r.lqd.proj[i]]
    changed = True
    while changed:
        changed = False
        fresh: Dict[int, List[SparseVec]] = {d: [] for d in bases}
        for d, basis in bases.items():
            for row in basis.rows:
                state = r.unflatten(d, row)
                if d + 1 <= max_degree:
                    fresh[d + 1].append(r.flatten(apply_D(state), d + 1))
                k_lo = max(window.mode_min, d - max_degree)
                k_hi = min(window.mode_max, d - delta)
                for c in gens:
                    cu = r.gen_state(c)
                    for k in range(k_lo, k_hi + 1):
                        res = r.mode(cu, k, state)
                        if res:
                            fresh[d - k].append(r.flatten(res, d - k))
        for d in bases:
            if not fresh[d]:
                continue
            merged = rref(list(bases[d].rows) + fresh[d], len(r.dstate_layer(d)))
            if merged.rank > bases[d].rank:
                bases[d] = merged
                changed = True
    return bases


def jv_kernel(r: LoopRealization, jbar: Dict[int, SubspaceBasis]) -> Dict[int, SubspaceBasis]:
    """Intersection of the saturated ideal with the D-free module slice.

    The returned bases live on the module's own degree layers; any nonzero
    rank certifies that V embeds into no vertex algebra.
    """
    out: Dict[int, SubspaceBasis] = {}
    for d in sorted(jbar):
        basis = jbar[d]
        mod_dim = r.basis.dim(d)
        if basis.rank == 0:
            out[d] = SubspaceBasis(mod_dim, [], [])
            continue
        # combos of ideal rows with vanishing D-part = left kernel of the
        # D-coordinate block
        d_rows: List[SparseVec] = []
        for row in basis.rows:
            d_rows.append({i - mod_dim: c for i, c in row.items() if i >= mod_dim})
        combos = kernel_basis(transpose(d_rows, len(r.dstate_layer(d)) - mod_dim),
                              len(basis.rows))
        mod_rows: List[SparseVec] = []
        for combo in combos.rows:
            acc: SparseVec = {}
            for i, c in combo.items():
                iadd_scaled(acc, {j: v for j, v in basis.rows[i].items() if j < mod_dim}, c)
            if acc:
                mod_rows.append(acc)
        out[d] = rref(mod_rows, mod_dim)
    return out


def reduce_mod_J(r: LoopRealization, jbar: Dict[int, SubspaceBasis], v: DState) -> DState:
    """Canonical coset representative: subtract the ideal projection."""
    by_deg: Dict[int, DState] = {}
    for key, c in v.items():
        by_deg.setdefault(r.key_degree(key), {})[key] = c
    out: DState = {}
    for d, part in by_deg.items():
        basis = jbar.get(d)
        if basis is None or basis.rank == 0:
            out.update(part)
            continue
        flat = r.flatten(part, d)
        for row, p in zip(basis.rows, basis.pivots):
            c = flat.get(p, 0)
            if c:
                iadd_scaled(flat, row, -c)
        out.update(r.unflatten(d, flat))
    return out


class QuotientRealization:
    """V-bar / J-bar on the window: every product is reduced mod the ideal."""

    def __init__(self, base: LoopRealization, jbar: Dict[int, SubspaceBasis]):
        self.base = base
        self.jbar = jbar
        self.name = base.name + "/J"
        self.max_degree = max(jbar) if jbar else base.max_degree
        self.vacuum = None
        self.state_str = base.state_str
        self.ann = base.ann

    def apply_D(self, v: DState) -> DState:
        return reduce_mod_J(self.base, self.jbar, apply_D(v))

    def mode(self, u: DState, n: int, w: DState) -> DState:
        return reduce_mod_J(self.base, self.jbar, self.base.mode(u, n, w))

    def sweep_states(self, max_degree: int):
        return self.base.sweep_states_extended(min(max_degree, self.max_degree))


# ---------------------------------------------------------------------------
# The level-zero cross check


class LevelZeroMap:
    """The module map V_g(adjoint) -> V_g(C1), word.b -> word.(b_{-1} 1).

    Its graded kernel contains the embedding kernel (the level-zero target
    is a genuine module, and J_V dies in every module), which is the
    cross-check the jv command offers.
    """

    def __init__(self, g: LeibnizAlgebra, max_degree: int,
                 lqd: Optional[LieQuotientData] = None):
        self.g = g
        self.lqd = lqd if lqd is not None else lie_quotient(g)
        self.domain = build_basis(g, adjoint_module(g), max_degree, self.lqd)
        self.engine = ModeEngine(g, trivial_module(g), max_degree, self.lqd)
        self.adjoint = ModeEngine(g, adjoint_module(g), max_degree, self.lqd)
        self.max_degree = max_degree

    def apply_mon(self, key: MonKey) -> Dict[MonKey, Rational]:
        word, b = key
        st = self.engine.act(b, -1, {((), 0): 1})
        for m, s in reversed(word):
            nxt: Dict[MonKey, Rational] = {}
            for mk, c in st.items():
                iadd_scaled(nxt, self.engine.rep_act(s, m, mk), c)
            st = nxt
        return st

    def apply(self, v: Dict[MonKey, Rational]) -> Dict[MonKey, Rational]:
        out: Dict[MonKey, Rational] = {}
        for key, c in v.items():
            iadd_scaled(out, self.apply_mon(key), c)
        return out

    def kernel(self) -> Dict[int, SubspaceBasis]:
        out: Dict[int, SubspaceBasis] = {}
        for d in range(1, self.max_degree + 1):
            mons = self.domain.monomials(d)
            images: List[SparseVec] = []
            tgt_index = {mon.key: i for i, mon in enumerate(self.engine.basis.monomials(d))}
            for mon in mons:
                img = self.apply_mon(mon.key)
                images.append({tgt_index[k]: c for k, c in img.items()})
            out[d] = kernel_basis(
                transpose(images, len(tgt_index)), len(mons)
            )
        return out

    def check_module_map(self, trials: int = 40, seed: int = 20240811) -> VerificationReport:
        """phi(c_n v) = c_n phi(v) on pseudo-random states (exact each time)."""
        report = new_report(
            "level_zero_module_map",
            {"algebra": self.g.name, "trials": trials, "seed": seed},
        )
        rng = random.Random(seed)
        for t in range(trials):
            d = rng.randint(1, max(1, self.max_degree - 2))
            mons = self.domain.monomials(d)
            v: Dict[MonKey, Rational] = {}
            for _ in range(rng.randint(1, 3)):
                mon = mons[rng.randrange(len(mons))]
                c = rng.randint(-3, 3)
                if c:
                    iadd_scaled(v, {mon.key: 1}, c)
            c_idx = rng.randrange(self.g.dim)
            n = rng.randint(-(self.max_degree - d), d - 1) if self.max_degree > d else 0
            lhs = self.apply(self.adjoint.act(c_idx, n, v))
            rhs = self.engine.act(c_idx, n, self.apply(v))
            if lhs != rhs:
                report.findings.append(
                    {"trial": t, "degree": d, "generator": self.g.basis[c_idx], "n": n,
                     "defect": self.engine.state_str(_msub(lhs, rhs))}
                )
        return report.done()


def _msub(a, b):
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, 0) - v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def level_zero_map(g: LeibnizAlgebra, max_degree: int) -> Dict[int, SubspaceBasis]:
    """Graded kernel of the level-zero comparison map."""
    return LevelZeroMap(g, max_degree).kernel()


def level_zero_containment(r: LoopRealization, jv: Dict[int, SubspaceBasis],
                           lz: LevelZeroMap) -> VerificationReport:
    """Every embedding-kernel vector must die under the level-zero map."""
    report = new_report(
        "level_zero_containment", {"algebra": r.name, "degrees": sorted(jv)}
    )
    for d in sorted(jv):
        mons = r.basis.monomials(d)
        for row in jv[d].rows:
            state = {mons[i].key: c for i, c in row.items()}
            img = lz.apply(state)
            if img:
                report.findings.append(
                    {"degree": d,
                     "state": format_state_mon(r.basis, state),
                     "image": lz.engine.state_str(img)}
                )
    return report.done()


def format_state_mon(basis: GradedBasis, v: Dict[MonKey, Rational]) -> str:
    if not v:
        return "0"
    bits = []
    for key in sorted(v):
        c = qstr(v[key])
        mon = basis.mon_str(key)
        bits.append(mon if c == "1" else f"-{mon}" if c == "-1" else f"{c}*{mon}")
    return " + ".join(bits).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# The vacuum module V_g(C1) as an honest vertex algebra


class VacuumModuleRealization:
    """V_g(C1): vacuum at the bottom, structural D, modes by the recursion."""

    def __init__(self, g: LeibnizAlgebra, max_degree: int, name: Optional[str] = None):
        self.g = g
        self.lqd = lie_quotient(g)
        self.engine = ModeEngine(g, trivial_module(g), max_degree, self.lqd)
        self.basis = self.engine.basis
        self.delta = 0
        self.max_degree = max_degree
        self.name = (name or g.name) + ".vac"
        self.vacuum = {((), 0): 1}
        self._mm_cache: Dict[Tuple[MonKey, int, MonKey], dict] = {}
        self._d_cache: Dict[MonKey, dict] = {}

    def key_degree(self, key: MonKey) -> int:
        word, _ = key
        return -sum(m for m, _ in word)

    def ann(self, u, w) -> int:
        if not u or not w:
            return 0
        du = max(self.key_degree(k) for k in u)
        dw = max(self.key_degree(k) for k in w)
        return du + dw

    def sweep_states(self, max_degree: int):
        out = []
        for d in range(0, min(max_degree, self.max_degree) + 1):
            for mon in self.basis.monomials(d):
                out.append((self.basis.mon_str(mon.key), {mon.key: 1}))
        return out

    def apply_D(self, v: dict) -> dict:
        """The canonical translation: D 1 = 0, [D, c_k] = -k c_{k-1}."""
        out: dict = {}
        for key, c in v.items():
            iadd_scaled(out, self._D_mon(key), c)
        return out

    def _D_mon(self, key: MonKey) -> dict:
        word, b = key
        if not word:
            return {}
        hit = self._d_cache.get(key)
        if hit is not None:
            return hit
        hm, hs = word[0]
        rest: MonKey = (word[1:], b)
        res: dict = {}
        # head times D(rest)
        for k2, c2 in self._D_mon(rest).items():
            iadd_scaled(res, self.engine.rep_act(hs, hm, k2), c2)
        # [D, c_{hm}] = -hm c_{hm-1}
        iadd_scaled(res, self.engine.rep_act(hs, hm - 1, rest), -hm)
        self._d_cache[key] = res
        return res

    def mode(self, u: dict, n: int, w: dict) -> dict:
        out: dict = {}
        for uk, cu in u.items():
            for wk, cw in w.items():
                t = self._mode_mm(uk, n, wk)
                if t:
                    iadd_scaled(out, t, cu * cw)
        return out

    def _mode_mm(self, umon: MonKey, n: int, wmon: MonKey) -> dict:
        du = self.key_degree(umon)
        dw = self.key_degree(wmon)
        out_deg = du + dw - n - 1
        if out_deg < 0:
            return {}
        if out_deg > self.max_degree:
            raise DegreeOverflow(out_deg, self.max_degree)
        ck = (umon, n, wmon)
        hit = self._mm_cache.get(ck)
        if hit is not None:
            return hit
        word, _ = umon
        res: dict
        if not word:
            # the vacuum: Y(1,x) = identity
            res = {wmon: 1} if n == -1 else {}
        else:
            hm, hs = word[0]
            vmon: MonKey = (word[1:], umon[1])
            res = {}
            ann_vw = (du + hm) + dw
            i = 0
            while n + i < ann_vw:
                c = gen_binomial(hm, i)
                if i & 1:
                    c = -c
                inner = self._mode_mm(vmon, n + i, wmon)
                for k2, c2 in inner.items():
                    for mk, c3 in self.engine.rep_act(hs, hm - i, k2).items():
                        v = res.get(mk, 0) + c * c2 * c3
                        if v:
                            res[mk] = v
                        else:
                            del res[mk]
                i += 1
            ann_cw = 1 + dw
            i = 0
            while i < ann_cw:
                c = gen_binomial(hm, i)
                if (i + hm) & 1 == 0:
                    c = -c
                cw = self.engine.rep_act(hs, i, wmon)
                for mk, c2 in cw.items():
                    t = self._mode_mm(vmon, n + hm - i, mk)
                    if t:
                        iadd_scaled(res, t, c * c2)
                i += 1
        self._mm_cache[ck] = res
        return res

    def state_str(self, v: dict) -> str:
        return format_state_mon(self.basis, v)


# ---------------------------------------------------------------------------
# Vacuum adjunction


class VacuumRealization:
    """A fresh vacuum line adjoined to a realization with D.

    Y(u + a.1, x)(w + b.1) = Y(u,x)w + b e^{xD}u + a (w + b.1), with
    D extended by D1 = 0.
    """

    VAC = ("vac",)

    def __init__(self, base, name: Optional[str] = None):
        if base.apply_D is None:
            raise ValueError("vacuum adjunction needs a translation operator")
        self.base = base
        self.name = name or base.name + "+1"
        self.max_degree = base.max_degree
        self.vacuum = {self.VAC: 1}
        self.window_limited = getattr(base, "window_limited", False)

    def key_degree(self, key) -> int:
        if key == self.VAC:
            return 0
        return self.base.key_degree(key[1])

    def _split(self, v: dict):
        lam = 0
        inner: dict = {}
        for key, c in v.items():
            if key == self.VAC:
                lam = c
            else:
                inner[key[1]] = c
        return inner, lam

    def _tag(self, v: dict) -> dict:
        return {("s", k): c for k, c in v.items()}

    def mode(self, u: dict, n: int, w: dict) -> dict:
        ub, ulam = self._split(u)
        wb, wmu = self._split(w)
        out: dict = {}
        if ub and wb:
            t = self.base.mode(ub, n, wb)
            if t:
                out.update(self._tag(t))
        if ub and wmu and n <= -1:
            j = -n - 1
            cur = dict(ub)
            for _ in range(j):
                cur = self.base.apply_D(cur)
            if cur:
                c = wmu if j < 2 else wmu * Fraction(1, factorial(j))
                iadd_scaled(out, self._tag(cur), c)
        if ulam and n == -1:
            iadd_scaled(out, w, ulam)
        return out

    def apply_D(self, v: dict) -> dict:
        inner, _ = self._split(v)  # D kills the new vacuum
        return self._tag(self.base.apply_D(inner))

    def ann(self, u: dict, w: dict) -> int:
        ub, ulam = self._split(u)
        wb, wmu = self._split(w)
        bound = 0
        if ub and wb:
            bound = max(bound, self.base.ann(ub, wb))
        return bound

    def sweep_states(self, max_degree: int):
        out = [("vac", dict(self.vacuum))]
        for label, st in self.base.sweep_states(max_degree):
            out.append((label, self._tag(st)))
        return out

    def state_str(self, v: dict) -> str:
        if not v:
            return "0"
        inner, lam = self._split(v)
        bits = []
        if lam:
            bits.append("vac" if lam == 1 else f"{qstr(lam)}*vac")
        if inner:
            s = self.base.state_str(inner)
            bits.append(s)
        return " + ".join(bits).replace("+ -", "- ")


def adjoin_vacuum(r) -> VacuumRealization:
    return VacuumRealization(r)


# ---------------------------------------------------------------------------
# Perm algebras


@dataclass
class PermAlgebra:
    """Associative algebra with a(bc) = b(ac), plus a derivation.

    When ``degrees`` is given the table is read as the degree window of a
    graded algebra: a product whose degree would exceed max(degrees) is not
    recorded by the table (the entry is a truncation artifact, conventionally
    zero) and mul refuses to evaluate it.  The derivation matrix is taken as
    exact.  Truncated polynomial rings land here: C[t] cut at degree 3 keeps
    d/dt an honest derivation, whereas the flat 4-dimensional quotient would
    not (d/dt does not preserve the ideal (t^4)).
    """

    dim: int
    basis: List[str]
    product: List[List[SparseVec]]  # product[i][j] = e_i e_j
    derivation: List[List[Rational]]  # D e_j = sum_i derivation[i][j] e_i
    degrees: Optional[List[int]] = None  # None: everything in degree 0

    @property
    def max_degree(self) -> int:
        return max(self.degrees) if self.degrees else 0

    def mul(self, u: SparseVec, v: SparseVec) -> SparseVec:
        out: SparseVec = {}
        degs = self.degrees
        top = max(degs) if degs else 0
        for i, ci in u.items():
            row = self.product[i]
            for j, cj in v.items():
                if degs is not None and degs[i] + degs[j] > top:
                    raise DegreeOverflow(degs[i] + degs[j], top)
                iadd_scaled(out, row[j], ci * cj)
        return out

    def d_apply(self, v: SparseVec) -> SparseVec:
        out: SparseVec = {}
        for j, c in v.items():
            for i in range(self.dim):
                x = self.derivation[i][j]
                if x:
                    s = out.get(i, 0) + c * x
                    if s:
                        out[i] = s
                    else:
                        out.pop(i, None)
        return out

    def vec_str(self, v: SparseVec) -> str:
        return format_vec(v, self.basis)


def load_perm_doc(doc: dict) -> PermAlgebra:
    dim = int(doc["dim"])
    basis = list(doc["basis"])
    product = [
        [
            {k: qparse(x) for k, x in enumerate(doc["product"][i][j]) if qparse(x)}
            for j in range(dim)
        ]
        for i in range(dim)
    ]
    derivation = [[qparse(x) for x in row] for row in doc.get(
        "derivation", [[0] * dim for _ in range(dim)]
    )]
    degrees = [int(x) for x in doc["degrees"]] if "degrees" in doc else None
    return PermAlgebra(dim, basis, product, derivation, degrees)


def dump_perm_doc(p: PermAlgebra) -> dict:
    doc = {
        "dim": p.dim,
        "basis": list(p.basis),
        "product": [
            [[qstr(p.product[i][j].get(k, 0)) for k in range(p.dim)] for j in range(p.dim)]
            for i in range(p.dim)
        ],
        "derivation": [[qstr(x) for x in row] for row in p.derivation],
    }
    if p.degrees is not None:
        doc["degrees"] = list(p.degrees)
    return doc


def check_perm_axioms(p: PermAlgebra) -> VerificationReport:
    """Associativity, the left-permutation identity, and D-compatibility.

    Triples whose intermediate products leave a declared degree window are
    unverifiable from the table and are skipped (counted in params).
    """
    report = new_report("check_perm_axioms", {"dim": p.dim})
    skipped = 0
    for i in range(p.dim):
        for j in range(p.dim):
            for k in range(p.dim):
                a, b, c = {i: 1}, {j: 1}, {k: 1}
                triple = [p.basis[i], p.basis[j], p.basis[k]]
                try:
                    assoc = _msub(p.mul(p.mul(a, b), c), p.mul(a, p.mul(b, c)))
                    if assoc:
                        report.findings.append(
                            {"axiom": "associativity", "triple": triple,
                             "defect": p.vec_str(assoc)}
                        )
                except DegreeOverflow:
                    skipped += 1
                try:
                    perm = _msub(p.mul(a, p.mul(b, c)), p.mul(b, p.mul(a, c)))
                    if perm:
                        report.findings.append(
                            {"axiom": "perm_identity", "triple": triple,
                             "defect": p.vec_str(perm)}
                        )
                except DegreeOverflow:
                    skipped += 1
                # (D(ab) - D(a)b - a D(b)) c = 0
                try:
                    lhs = p.d_apply(p.mul(a, b))
                    iadd_scaled(lhs, p.mul(p.d_apply(a), b), -1)
                    iadd_scaled(lhs, p.mul(a, p.d_apply(b)), -1)
                    bad = p.mul(lhs, c)
                    if bad:
                        report.findings.append(
                            {"axiom": "derivation_compat", "triple": triple,
                             "defect": p.vec_str(bad)}
                        )
                except DegreeOverflow:
                    skipped += 1
    if skipped:
        report.params["skipped"] = skipped
    return report.done()


class PermRealization:
    """Y(a,x)b = (e^{xD} a) b: only non-negative powers of x appear.

    The carrier is intrinsically finite, so sweeps treat components that
    leave its degree window as unverifiable rather than as user error.
    """

    window_limited = True

    def __init__(self, p: PermAlgebra, name: str = "perm"):
        self.p = p
        self.name = name
        self.max_degree = p.max_degree
        self.vacuum = None

    def key_degree(self, k: int) -> int:
        return self.p.degrees[k] if self.p.degrees else 0

    def mode(self, u: SparseVec, n: int, w: SparseVec) -> SparseVec:
        if n >= 0:
            return {}
        j = -n - 1
        cur = dict(u)
        for _ in range(j):
            cur = self.p.d_apply(cur)
        if not cur:
            return {}
        if j >= 2:
            cur = vscale(Fraction(1, factorial(j)), cur)
        return self.p.mul(cur, w)

    def apply_D(self, v: SparseVec) -> SparseVec:
        return self.p.d_apply(v)

    def ann(self, u, w) -> int:
        return 0

    def sweep_states(self, max_degree: int):
        return [(self.p.basis[i], {i: 1}) for i in range(self.p.dim)]

    def state_str(self, v: SparseVec) -> str:
        return self.p.vec_str(v)


def perm_vertex(p: PermAlgebra, name: str = "perm") -> PermRealization:
    report = check_perm_axioms(p)
    if not report.passed:
        f = report.findings[0]
        raise ValueError(f"not a Perm algebra with derivation: {f['axiom']} fails "
                         f"at {tuple(f['triple'])} with defect {f['defect']}")
    return PermRealization(p, name=name)


def extract_perm(r, window: SweepWindow) -> PermAlgebra:
    """Recover the Perm product u.v = u_{-1} v from a non-negative realization.

    Raises if any negative x-power (a mode u_n with n >= 0 acting
    nontrivially) shows up on the window, or if the recovered table fails
    the Perm axioms.
    """
    limited = bool(getattr(r, "window_limited", False))
    states = r.sweep_states(window.max_degree)
    dim = len(states)
    for lu, u in states:
        for lw, w in states:
            for n in range(0, max(window.mode_max, r.ann(u, w)) + 1):
                try:
                    got = r.mode(u, n, w)
                except DegreeOverflow:
                    if limited:
                        continue
                    raise
                if got:
                    raise ValueError(
                        f"negative powers present: ({lu})_{n} ({lw}) = {r.state_str(got)}"
                    )
    product: List[List[SparseVec]] = []
    index = {}
    for i, (_, u) in enumerate(states):
        (key,) = u.keys()
        index[key] = i
    for _, u in states:
        row = []
        for _, w in states:
            try:
                got = r.mode(u, -1, w)
            except DegreeOverflow:
                if not limited:
                    raise
                got = {}  # out of window; tables record these as zero
            row.append({index[k]: c for k, c in got.items()})
        product.append(row)
    derivation: List[List[Rational]] = [[0] * dim for _ in range(dim)]
    if getattr(r, "apply_D", None) is not None:
        for j, (_, u) in enumerate(states):
            for k, c in r.apply_D(u).items():
                derivation[index[k]][j] = c
    degrees: Optional[List[int]] = None
    if limited and hasattr(r, "key_degree"):
        degrees = [r.key_degree(key) for (_, u) in states for key in u]
        if not any(degrees):
            degrees = None
    p = PermAlgebra(dim, [label for label, _ in states], product, derivation,
                    degrees)
    report = check_perm_axioms(p)
    if not report.passed:
        f = report.findings[0]
        raise ValueError(f"extracted product is not Perm: {f['axiom']} fails at "
                         f"{tuple(f['triple'])} with defect {f['defect']}")
    return p


# ---------------------------------------------------------------------------
# Hemisemidirect product


class HemiRealization:
    """V + W with Y(u + w, x)(v + w') = Y(u,x)v + Y(u,x)w'.

    W is the adjoint copy of the vacuum-bearing base by default; every
    pure-W state has zero vertex operator, which plants W inside the
    skew-defect ideal of the product.
    """

    def __init__(self, base, wmod=None, name: Optional[str] = None):
        if base.vacuum is None:
            raise ValueError("hemisemidirect product needs a vacuum-bearing left factor")
        self.base = base
        self.wmod = wmod if wmod is not None else base
        self.name = name or base.name + "+W"
        self.max_degree = base.max_degree
        self.vacuum = {("V", k): c for k, c in base.vacuum.items()}
        self.window_limited = getattr(base, "window_limited", False) or getattr(
            self.wmod, "window_limited", False
        )
        if getattr(base, "apply_D", None) is None:
            self.apply_D = None  # shadow the method: no translation on the product

    def key_degree(self, key) -> int:
        tag, inner = key
        src = self.base if tag == "V" else self.wmod
        return src.key_degree(inner)

    def _split(self, v: dict):
        a: dict = {}
        b: dict = {}
        for (tag, key), c in v.items():
            (a if tag == "V" else b)[key] = c
        return a, b

    def mode(self, u: dict, n: int, w: dict) -> dict:
        uv, _ = self._split(u)  # the W-slot of u acts by zero
        wv, ww = self._split(w)
        out: dict = {}
        if uv:
            if wv:
                for k, c in self.base.mode(uv, n, wv).items():
                    out[("V", k)] = c
            if ww:
                for k, c in self.wmod.mode(uv, n, ww).items():
                    out[("W", k)] = c
        return out

    def apply_D(self, v: dict) -> dict:
        a, b = self._split(v)
        out = {("V", k): c for k, c in self.base.apply_D(a).items()}
        for k, c in self.wmod.apply_D(b).items():
            out[("W", k)] = c
        return out

    def ann(self, u: dict, w: dict) -> int:
        uv, _ = self._split(u)
        wv, ww = self._split(w)
        bound = 0
        if uv and wv:
            bound = max(bound, self.base.ann(uv, wv))
        if uv and ww:
            bound = max(bound, self.wmod.ann(uv, ww))
        return bound

    def sweep_states(self, max_degree: int):
        out = []
        for label, st in self.base.sweep_states(max_degree):
            out.append((label, {("V", k): c for k, c in st.items()}))
        for label, st in self.wmod.sweep_states(max_degree):
            out.append((f"w[{label}]", {("W", k): c for k, c in st.items()}))
        return out

    def state_str(self, v: dict) -> str:
        a, b = self._split(v)
        bits = []
        if a:
            bits.append(self.base.state_str(a))
        if b:
            bits.append(f"w[{self.wmod.state_str(b)}]")
        return " + ".join(bits) if bits else "0"


def hemisemidirect(v_real, w_real=None) -> HemiRealization:
    return HemiRealization(v_real, w_real)
