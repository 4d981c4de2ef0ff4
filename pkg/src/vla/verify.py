"""Identity verification for vertex-Leibniz realizations.

Every checker here is exact — integer/Fraction arithmetic, zero
tolerance — and works against a small realization protocol rather than a
concrete class:

    r.name                          identifying string
    r.max_degree                    depth the realization was built to
    r.sweep_states(max_degree)      [(label, state), ...] basis states
    r.mode(u, n, w)                 the mode product u_n w (states are
                                    dicts key -> scalar)
    r.ann(u, w)                     bound N with u_n w = 0 for all n >= N
    r.apply_D(state) or None        the translation operator, if any
    r.vacuum                        vacuum state or None
    r.state_str(state)              rendering used in findings

Identities are always checked in component (mode) form: finite sums with
integer binomial weights, truncated exactly by the annihilation bounds.
Two-variable kernels are never materialized.

Default sweep domain: state degrees <= 3, modes in [-2, 3].
"""

from __future__ import annotations

import itertools
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Tuple

from .exactlin import iadd_scaled, vscale, vsub
from .formal import gen_binomial


class DegreeOverflow(Exception):
    """A mode product left the built degree window."""

    def __init__(self, required: int, built: int):
        self.required = required
        self.built = built
        super().__init__(
            f"mode product needs basis degree {required}, built only to {built}"
        )


@dataclass(frozen=True)
class SweepWindow:
    max_degree: int = 3
    mode_min: int = -2
    mode_max: int = 3

    def as_params(self) -> dict:
        return {
            "max_degree": self.max_degree,
            "mode_min": self.mode_min,
            "mode_max": self.mode_max,
        }

    def modes(self):
        return range(self.mode_min, self.mode_max + 1)


@dataclass
class VerificationReport:
    """Outcome of one check: pass iff the findings list is empty."""

    name: str
    params: dict
    findings: List[dict] = field(default_factory=list)
    graded_dims: Optional[object] = None
    timing: float = 0.0
    _t0: float = field(default=0.0, repr=False, compare=False)

    @property
    def passed(self) -> bool:
        return not self.findings

    def done(self) -> "VerificationReport":
        self.timing = time.perf_counter() - self._t0
        return self

    def to_doc(self, command: Optional[str] = None) -> dict:
        params = self.params
        if command and command != self.name:
            params = {"check": self.name, **self.params}
        return {
            "command": command or self.name,
            "params": params,
            "pass": self.passed,
            "findings": self.findings,
            "graded_dims": self.graded_dims,
            "timing": self.timing,
        }

    def text(self) -> str:
        lines = [f"== {self.name} =="]
        for k in sorted(self.params):
            lines.append(f"  {k}: {self.params[k]}")
        if self.graded_dims is not None:
            lines.append(f"  graded dims: {self.graded_dims}")
        lines.append(f"  pass: {str(self.passed).lower()}")
        if self.findings:
            lines.append(f"  findings ({len(self.findings)}):")
            for f in self.findings:
                lines.append("    " + ", ".join(f"{k}={f[k]}" for k in sorted(f)))
        return "\n".join(lines)


def new_report(name: str, params: dict) -> VerificationReport:
    return VerificationReport(name, dict(params), _t0=time.perf_counter())


def worker_count() -> int:
    """Worker bound from VLA_THREADS, defaulting to the CPU count."""
    env = os.environ.get("VLA_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def _window_limited(r) -> bool:
    """Whether out-of-window components mean "skip" rather than "error".

    Engine-backed realizations pick their depth at build time, so a mode
    product that leaves the window is the caller's problem and the
    DegreeOverflow propagates.  Realizations over intrinsically finite
    carriers (truncated polynomial algebras and their wrappers) mark
    themselves window_limited: no deeper window exists, identity instances
    with out-of-window intermediates are unverifiable by anyone, and the
    sweeps skip them while counting the skips.
    """
    return bool(getattr(r, "window_limited", False))


# ---------------------------------------------------------------------------
# Jacobi identity, component form


def jacobi_defect(r, l: int, m: int, n: int, u, v, w):
    """LHS - RHS of the component Jacobi identity; {} means it holds.

        sum_i (-1)^i C(l,i) [ u_{m+l-i} (v_{n+i} w) - (-1)^l v_{n+l-i} (u_{m+i} w) ]
      = sum_i C(m,i) (u_{l+i} v)_{m+n-i} w

    All three sums truncate exactly: the inner mode index grows with i, so
    the annihilation bound cuts each one off (and C(l,i) = 0 past i = l
    when l >= 0).
    """
    ann_vw = r.ann(v, w)
    ann_uw = r.ann(u, w)
    ann_uv = r.ann(u, v)
    acc: dict = {}
    i = 0
    while n + i < ann_vw and (l < 0 or i <= l):
        c = gen_binomial(l, i)
        if c:
            inner = r.mode(v, n + i, w)
            if inner:
                term = r.mode(u, m + l - i, inner)
                if term:
                    iadd_scaled(acc, term, -c if i & 1 else c)
        i += 1
    i = 0
    while m + i < ann_uw and (l < 0 or i <= l):
        c = gen_binomial(l, i)
        if c:
            inner = r.mode(u, m + i, w)
            if inner:
                term = r.mode(v, n + l - i, inner)
                if term:
                    # -(-1)^{i+l} C(l,i)
                    iadd_scaled(acc, term, c if (i + l) & 1 else -c)
        i += 1
    i = 0
    while l + i < ann_uv and (m < 0 or i <= m):
        c = gen_binomial(m, i)
        if c:
            uv = r.mode(u, l + i, v)
            if uv:
                term = r.mode(uv, m + n - i, w)
                if term:
                    iadd_scaled(acc, term, -c)
        i += 1
    return acc


def check_jacobi_component(r, l: int, m: int, n: int, u, v, w) -> VerificationReport:
    report = new_report(
        "check_jacobi_component",
        {"algebra": r.name, "l": l, "m": m, "n": n},
    )
    defect = jacobi_defect(r, l, m, n, u, v, w)
    if defect:
        report.findings.append(
            {
                "at": f"l={l} m={m} n={n}",
                "u": r.state_str(u),
                "v": r.state_str(v),
                "w": r.state_str(w),
                "defect": r.state_str(defect),
            }
        )
    return report.done()


def _jacobi_triple_findings(r, window: SweepWindow, u, v, w, labels) -> Tuple[List[dict], int]:
    """All window (l,m,n) failures for one state triple, plus a skip count.

    Shares mode tables across the 6^3 (l,m,n) combinations: the inner
    products v_q w / u_q w and the iterate states u_j v are computed once
    per triple and reused.  On window-limited realizations, instances whose
    intermediates leave the window are skipped and counted.
    """
    ann_vw = r.ann(v, w)
    ann_uw = r.ann(u, w)
    ann_uv = r.ann(u, v)
    mode = r.mode
    vw: dict = {}
    uw: dict = {}
    uv: dict = {}
    A: dict = {}
    B: dict = {}
    C: dict = {}

    def getA(p, q):
        key = (p, q)
        t = A.get(key)
        if t is None:
            inner = vw.get(q)
            if inner is None:
                inner = vw[q] = mode(v, q, w)
            t = A[key] = mode(u, p, inner) if inner else {}
        return t

    def getB(p, q):
        key = (p, q)
        t = B.get(key)
        if t is None:
            inner = uw.get(q)
            if inner is None:
                inner = uw[q] = mode(u, q, w)
            t = B[key] = mode(v, p, inner) if inner else {}
        return t

    def getC(j, s):
        key = (j, s)
        t = C.get(key)
        if t is None:
            st = uv.get(j)
            if st is None:
                st = uv[j] = mode(u, j, v)
            t = C[key] = mode(st, s, w) if st else {}
        return t

    def assemble(l, m, n):
        acc: dict = {}
        i = 0
        while n + i < ann_vw and (l < 0 or i <= l):
            c = gen_binomial(l, i)
            if c:
                t = getA(m + l - i, n + i)
                if t:
                    iadd_scaled(acc, t, -c if i & 1 else c)
            i += 1
        i = 0
        while m + i < ann_uw and (l < 0 or i <= l):
            c = gen_binomial(l, i)
            if c:
                t = getB(n + l - i, m + i)
                if t:
                    iadd_scaled(acc, t, c if (i + l) & 1 else -c)
            i += 1
        i = 0
        while l + i < ann_uv and (m < 0 or i <= m):
            c = gen_binomial(m, i)
            if c:
                t = getC(l + i, m + n - i)
                if t:
                    iadd_scaled(acc, t, -c)
            i += 1
        return acc

    findings: List[dict] = []
    skipped = 0
    limited = _window_limited(r)
    modes = range(window.mode_min, window.mode_max + 1)
    for l in modes:
        for m in modes:
            for n in modes:
                if limited:
                    try:
                        acc = assemble(l, m, n)
                    except DegreeOverflow:
                        skipped += 1
                        continue
                else:
                    acc = assemble(l, m, n)
                if acc:
                    findings.append(
                        {
                            "at": f"l={l} m={m} n={n}",
                            "u": labels[0],
                            "v": labels[1],
                            "w": labels[2],
                            "defect": r.state_str(acc),
                        }
                    )
    return findings, skipped


def jacobi_sweep(r, window: Optional[SweepWindow] = None, max_findings: int = 20) -> VerificationReport:
    """The component Jacobi identity over every basis triple in the window."""
    window = window or SweepWindow()
    report = new_report(
        "jacobi_sweep", {"algebra": r.name, **window.as_params()}
    )
    states = r.sweep_states(window.max_degree)
    report.params["states"] = len(states)
    report.params["instances"] = 0
    count = (window.mode_max - window.mode_min + 1) ** 3
    triples = list(itertools.product(range(len(states)), repeat=3))

    nworkers = min(worker_count(), len(states))
    if nworkers > 1:
        chunks = _parallel_triples(r, window, states, triples, nworkers)
    else:
        chunks = (
            _jacobi_triple_findings(
                r, window, states[a][1], states[b][1], states[c][1],
                (states[a][0], states[b][0], states[c][0]),
            )
            for a, b, c in triples
        )
    skipped_total = 0
    for findings, skipped in chunks:
        report.params["instances"] += count - skipped
        skipped_total += skipped
        for f in findings:
            if len(report.findings) < max_findings:
                report.findings.append(f)
            else:
                report.params["findings_truncated"] = True
                if skipped_total:
                    report.params["skipped"] = skipped_total
                return report.done()
    if skipped_total:
        report.params["skipped"] = skipped_total
    return report.done()


def _parallel_triples(r, window, states, triples, nworkers):
    """Fork-based fan-out over state triples; falls back to serial."""
    import multiprocessing as mp

    try:
        ctx = mp.get_context("fork")
    except ValueError:  # platform without fork
        ctx = None
    if ctx is None:
        for a, b, c in triples:
            yield _jacobi_triple_findings(
                r, window, states[a][1], states[b][1], states[c][1],
                (states[a][0], states[b][0], states[c][0]),
            )
        return

    global _FORK_JOB
    _FORK_JOB = (r, window, states)
    chunk = (len(triples) + nworkers - 1) // nworkers
    parts = [triples[i : i + chunk] for i in range(0, len(triples), chunk)]
    with ctx.Pool(len(parts)) as pool:
        for out in pool.map(_fork_worker, parts):
            yield from out


_FORK_JOB = None


def _fork_worker(triples):
    r, window, states = _FORK_JOB
    out = []
    for a, b, c in triples:
        out.append(
            _jacobi_triple_findings(
                r, window, states[a][1], states[b][1], states[c][1],
                (states[a][0], states[b][0], states[c][0]),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Locality


def locality_order(r, u, v, window: SweepWindow, k_max: Optional[int] = None) -> Optional[int]:
    """Smallest k with (x1-x2)^k [Y(u,x1), Y(v,x2)] = 0 on the window.

    Component form: for all p, q in the mode window and all basis states w,

        sum_{j=0}^{k} (-1)^j C(k,j) ( u_{p+k-j}(v_{q+j}w) - v_{q+j}(u_{p+k-j}w) ) = 0.

    Returns None when no k up to k_max is witnessed ("exceeds window").
    """
    if k_max is None:
        k_max = 2 * window.max_degree + 2
    states = r.sweep_states(window.max_degree)
    mode = r.mode
    limited = _window_limited(r)
    for k in range(0, k_max + 1):
        ok = True
        for p in window.modes():
            if not ok:
                break
            for q in window.modes():
                if not ok:
                    break
                for _, w in states:
                    try:
                        acc: dict = {}
                        for j in range(0, k + 1):
                            c = gen_binomial(k, j)
                            if j & 1:
                                c = -c
                            inner = mode(v, q + j, w)
                            if inner:
                                t = mode(u, p + k - j, inner)
                                if t:
                                    iadd_scaled(acc, t, c)
                            inner = mode(u, p + k - j, w)
                            if inner:
                                t = mode(v, q + j, inner)
                                if t:
                                    iadd_scaled(acc, t, -c)
                    except DegreeOverflow:
                        if not limited:
                            raise
                        continue  # unverifiable at this (p, q, w)
                    if acc:
                        ok = False
                        break
        if ok:
            return k
    return None


# ---------------------------------------------------------------------------
# Weak associativity


def check_weak_associativity(r, u, v, w, window: SweepWindow, l_max: Optional[int] = None) -> VerificationReport:
    """Search for l >= 0 making the two (x0+x2)^l-weighted products agree.

    Both sides are compared as coefficients of x0^alpha x2^beta over the
    mode window, with (x0+x2)^{negative} expanded in non-negative powers
    of x2:

      LHS(a,b) = sum_{i=0}^{l} C(l,i) (u_{l-i-a-1} v)_{i-b-1} w
      RHS(a,b) = sum_{j<=l-1-a} C(l-j-1, l-j-1-a) u_j (v_{l-j-a-b-2} w)

    The smallest witnessing l lands in params["l"]; if none is found up
    to l_max that is reported as a finding (not fatal).
    """
    report = new_report(
        "check_weak_associativity",
        {"algebra": r.name, **window.as_params()},
    )
    ann_uw = r.ann(u, w)
    ann_vw = r.ann(v, w)
    if l_max is None:
        l_max = max(ann_uw, 0) + 2
    mode = r.mode
    uv_cache: dict = {}
    vw_cache: dict = {}

    def uv_state(s):
        st = uv_cache.get(s)
        if st is None:
            st = uv_cache[s] = mode(u, s, v)
        return st

    def vw_state(t):
        st = vw_cache.get(t)
        if st is None:
            st = vw_cache[t] = mode(v, t, w)
        return st

    first_fail = None
    limited = _window_limited(r)
    for l in range(0, l_max + 1):
        good = True
        for alpha in window.modes():
            if not good:
                break
            for beta in window.modes():
                try:
                    lhs: dict = {}
                    for i in range(0, l + 1):
                        c = gen_binomial(l, i)
                        st = uv_state(l - i - alpha - 1)
                        if st:
                            t = mode(st, i - beta - 1, w)
                            if t:
                                iadd_scaled(lhs, t, c)
                    rhs: dict = {}
                    j_hi = l - 1 - alpha
                    j_lo = l - alpha - beta - 1 - ann_vw
                    for j in range(j_lo, j_hi + 1):
                        c = gen_binomial(l - j - 1, l - j - 1 - alpha)
                        if not c:
                            continue
                        inner = vw_state(l - j - alpha - beta - 2)
                        if inner:
                            t = mode(u, j, inner)
                            if t:
                                iadd_scaled(rhs, t, c)
                except DegreeOverflow:
                    if not limited:
                        raise
                    continue  # unverifiable at this (alpha, beta)
                if lhs != rhs:
                    good = False
                    if first_fail is None:
                        first_fail = {
                            "l": l,
                            "alpha": alpha,
                            "beta": beta,
                            "defect": r.state_str(vsub(lhs, rhs)),
                        }
                    break
        if good:
            report.params["l"] = l
            return report.done()
    report.findings.append(
        {
            "issue": f"no l <= {l_max} witnesses weak associativity on the window",
            "u": r.state_str(u),
            "v": r.state_str(v),
            "w": r.state_str(w),
            **(first_fail or {}),
        }
    )
    return report.done()


# ---------------------------------------------------------------------------
# Skew symmetry and the D-properties


def skew_defect_state(r, u, v, n: int):
    """u_n v - sum_{i>=0} (-1)^{n+i-1} (1/i!) D^i (v_{n+i} u)."""
    apply_D = r.apply_D
    if apply_D is None:
        raise ValueError("realization has no translation operator D")
    acc = dict(r.mode(u, n, v))
    limit = r.ann(v, u)
    i = 0
    term = None
    while n + i < limit:
        base = r.mode(v, n + i, u)
        if base:
            cur = base
            for _ in range(i):
                cur = apply_D(cur)
            c = Fraction(1, factorial(i)) if i > 1 else 1
            # subtract (-1)^{n+i-1} / i! * D^i(...)
            sign = -1 if (n + i - 1) & 1 else 1
            iadd_scaled(acc, cur, -sign * c)
        i += 1
    return acc


def check_skew_symmetry(r, u, v, window: SweepWindow) -> VerificationReport:
    """Skew symmetry mode-wise on the window; defects are ideal generators."""
    report = new_report(
        "check_skew_symmetry", {"algebra": r.name, **window.as_params()}
    )
    if r.apply_D is None:
        raise ValueError("realization has no translation operator D")
    limited = _window_limited(r)
    skipped = 0
    for n in window.modes():
        try:
            defect = skew_defect_state(r, u, v, n)
        except DegreeOverflow:
            if not limited:
                raise
            skipped += 1
            continue
        if defect:
            report.findings.append(
                {
                    "n": n,
                    "u": r.state_str(u),
                    "v": r.state_str(v),
                    "defect": r.state_str(defect),
                }
            )
    if skipped:
        report.params["skipped"] = skipped
    return report.done()


def check_D_properties(r, window: SweepWindow, max_findings: int = 20) -> VerificationReport:
    """Both D-properties, reported separately.

    commutator:  D(u_n w) - u_n (D w) = -n u_{n-1} w
    translation: (D u)_n w = -n u_{n-1} w
    """
    report = new_report(
        "check_D_properties", {"algebra": r.name, **window.as_params()}
    )
    apply_D = r.apply_D
    if apply_D is None:
        raise ValueError("realization has no translation operator D")
    states = r.sweep_states(window.max_degree)
    limited = _window_limited(r)
    skipped = 0
    for ul, u in states:
        du = apply_D(u)
        for wl, w in states:
            for n in window.modes():
                if len(report.findings) >= max_findings:
                    report.params["findings_truncated"] = True
                    if skipped:
                        report.params["skipped"] = skipped
                    return report.done()
                try:
                    lower = r.mode(u, n - 1, w)
                except DegreeOverflow:
                    if not limited:
                        raise
                    skipped += 2  # u_{n-1} w feeds both properties
                    continue
                try:
                    d1 = dict(apply_D(r.mode(u, n, w)))
                    iadd_scaled(d1, r.mode(u, n, apply_D(w)), -1)
                    iadd_scaled(d1, lower, n)
                    if d1:
                        report.findings.append(
                            {"property": "commutator", "u": ul, "w": wl, "n": n,
                             "defect": r.state_str(d1)}
                        )
                except DegreeOverflow:
                    if not limited:
                        raise
                    skipped += 1
                try:
                    d2 = dict(r.mode(du, n, w))
                    iadd_scaled(d2, lower, n)
                    if d2:
                        report.findings.append(
                            {"property": "translation", "u": ul, "w": wl, "n": n,
                             "defect": r.state_str(d2)}
                        )
                except DegreeOverflow:
                    if not limited:
                        raise
                    skipped += 1
    if skipped:
        report.params["skipped"] = skipped
    return report.done()


# ---------------------------------------------------------------------------
# Embedding obstruction


def embedding_obstruction(r, u, v, m_min: int, window: SweepWindow) -> VerificationReport:
    """Necessary condition for embeddability, scanned over m.

    For every m in [m_min, mode_max] such that v_{m+j} u = 0 for all j > 0
    (decided exactly through the annihilation bound), the identity
    u_m v = (-1)^{m-1} v_m u must hold in any vertex algebra containing
    the pair; a failure certifies an obstruction.  When no m qualifies the
    verdict is "not_applicable" — never "pass".
    """
    report = new_report(
        "embedding_obstruction",
        {"algebra": r.name, "m_min": m_min, "m_max": window.mode_max,
         "u": r.state_str(u), "v": r.state_str(v)},
    )
    limit = r.ann(v, u)
    qualifying: List[int] = []
    for m in range(m_min, window.mode_max + 1):
        ok = True
        j = 1
        while m + j < limit:
            if r.mode(v, m + j, u):
                ok = False
                break
            j += 1
        if not ok:
            continue
        qualifying.append(m)
        lhs = r.mode(u, m, v)
        rhs = r.mode(v, m, u)
        sign = -1 if m & 1 == 0 else 1  # (-1)^{m-1}
        defect = dict(lhs)
        iadd_scaled(defect, rhs, -sign)
        if defect:
            report.findings.append(
                {"m": m, "defect": r.state_str(defect)}
            )
    report.params["qualifying_m"] = qualifying
    if not qualifying:
        report.params["verdict"] = "not_applicable"
    elif report.findings:
        report.params["verdict"] = "obstructed"
    else:
        report.params["verdict"] = "consistent"
    return report.done()


# ---------------------------------------------------------------------------
# Vacuum axioms and ideal annihilation


def check_vacuum_axioms(r, window: SweepWindow, max_findings: int = 20) -> VerificationReport:
    """1_n v = delta_{n,-1} v;  v_n 1 = 0 for n >= 0 and v_{-1} 1 = v;  D 1 = 0."""
    report = new_report(
        "check_vacuum_axioms", {"algebra": r.name, **window.as_params()}
    )
    vac = r.vacuum
    if vac is None:
        raise ValueError("realization has no vacuum")
    states = r.sweep_states(window.max_degree)
    limited = _window_limited(r)
    skipped = 0
    def finish() -> VerificationReport:
        if skipped:
            report.params["skipped"] = skipped
        return report.done()

    for label, w in states:
        n_hi = max(window.mode_max, r.ann(vac, w) - 1)
        for n in range(min(window.mode_min, -1), n_hi + 1):
            if len(report.findings) >= max_findings:
                report.params["findings_truncated"] = True
                return finish()
            try:
                got = r.mode(vac, n, w)
            except DegreeOverflow:
                if not limited:
                    raise
                skipped += 1
                continue
            want = w if n == -1 else {}
            if got != want:
                report.findings.append(
                    {"axiom": "vacuum_identity", "state": label, "n": n,
                     "defect": r.state_str(vsub(got, want))}
                )
        n_hi = max(window.mode_max, r.ann(w, vac) - 1)
        for n in range(-1, n_hi + 1):
            try:
                got = r.mode(w, n, vac)
            except DegreeOverflow:
                if not limited:
                    raise
                skipped += 1
                continue
            if n == -1:
                if got != w:
                    report.findings.append(
                        {"axiom": "creation_constant", "state": label,
                         "defect": r.state_str(vsub(got, w))}
                    )
            elif got:
                report.findings.append(
                    {"axiom": "creation", "state": label, "n": n,
                     "defect": r.state_str(got)}
                )
            if len(report.findings) >= max_findings:
                report.params["findings_truncated"] = True
                return finish()
    if r.apply_D is not None:
        dv = r.apply_D(vac)
        if dv:
            report.findings.append({"axiom": "D_vacuum", "defect": r.state_str(dv)})
    return finish()


def check_ideal_annihilation(r, jbar, window: SweepWindow, max_findings: int = 20) -> VerificationReport:
    """Every ideal basis element acts as zero: a_n w = 0 for a in the ideal.

    jbar maps degree -> SubspaceBasis over the realization's flattened
    degree layer (r.unflatten recovers states).
    """
    report = new_report(
        "check_ideal_annihilation",
        {"algebra": r.name, **window.as_params(),
         "ideal_ranks": {d: b.rank for d, b in sorted(jbar.items())}},
    )
    states = r.sweep_states(window.max_degree)
    for d in sorted(jbar):
        for ridx, row in enumerate(jbar[d].rows):
            a = r.unflatten(d, row)
            for label, w in states:
                for n in range(window.mode_min, r.ann(a, w)):
                    got = r.mode(a, n, w)
                    if got:
                        report.findings.append(
                            {"ideal_degree": d, "row": ridx, "state": label,
                             "n": n, "value": r.state_str(got)}
                        )
                        if len(report.findings) >= max_findings:
                            report.params["findings_truncated"] = True
                            return report.done()
    return report.done()
