"""Command-line driver: load algebra documents, run constructions and sweeps.

Exit codes: 0 all checks passed, 1 at least one check failed (findings
emitted), 2 input or usage error (bad document, window exceeded).

The jv subcommand is special: a nonzero embedding kernel is the computed
answer, not a failure, so it reports with exit 0 unless --expect-emb is
given (asserting the algebra should embed).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .leibniz import (
    check_invariant_form,
    check_left_leibniz,
    is_lie,
    lie_quotient,
    load_algebra_doc,
    squares_ideal,
)
from .loopmod import DegreeOverflow, build_basis, module_from_doc
from .verify import (
    SweepWindow,
    VerificationReport,
    check_D_properties,
    check_vacuum_axioms,
    check_weak_associativity,
    embedding_obstruction,
    jacobi_sweep,
    locality_order,
    new_report,
)
from .vertex import (
    LevelZeroMap,
    LoopRealization,
    adjoin_vacuum,
    check_perm_axioms,
    extract_perm,
    hemisemidirect,
    jv_kernel,
    level_zero_containment,
    load_perm_doc,
    perm_vertex,
    reduce_mod_J,
    saturate_ideal,
    skew_defect,
)


class UsageError(Exception):
    pass


@dataclass
class CommandConfig:
    command: str
    path: Optional[str] = None
    doc: Optional[dict] = None  # inline document (used by the HTTP service)
    doc_name: str = "inline"
    max_degree: int = 3
    mode_min: int = -2
    mode_max: int = 3
    module: str = "adjoint"
    fmt: str = "text"
    cross_check: bool = False
    expect_emb: bool = False
    host: str = "127.0.0.1"
    port: int = 8000

    def __post_init__(self):
        if self.mode_min > self.mode_max:
            raise UsageError(
                f"mode window is empty: mode_min {self.mode_min} > mode_max {self.mode_max}"
            )
        if self.max_degree < 1:
            raise UsageError("max_degree must be at least 1")

    def window(self) -> SweepWindow:
        return SweepWindow(self.max_degree, self.mode_min, self.mode_max)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc


def _algebra_name(path: str) -> str:
    base = path.rsplit("/", 1)[-1]
    return base[:-5] if base.endswith(".json") else base


def _resolve_doc(cfg: CommandConfig) -> Tuple[dict, str]:
    if cfg.doc is not None:
        return cfg.doc, cfg.doc_name
    if cfg.path is None:
        raise UsageError(f"{cfg.command} needs an input document")
    return _load_json(cfg.path), _algebra_name(cfg.path)


def _load_algebra(cfg: CommandConfig):
    doc, name = _resolve_doc(cfg)
    where = cfg.path or name
    if "product" in doc:
        raise UsageError(
            f"{where} looks like a Perm document; use the perm/adjoin/hemi commands"
        )
    try:
        return load_algebra_doc(doc, name=name)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{where}: {exc}") from exc


def _load_perm(cfg: CommandConfig):
    doc, name = _resolve_doc(cfg)
    where = cfg.path or name
    if "product" not in doc:
        raise UsageError(f"{where}: not a Perm document (no product table)")
    try:
        return load_perm_doc(doc), name
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise UsageError(f"{where}: {exc}") from exc


def _module_spec(cfg: CommandConfig, g):
    if cfg.module in ("adjoint", "trivial"):
        return module_from_doc(g, cfg.module)
    return module_from_doc(g, _load_json(cfg.module))


# Each subcommand returns (report, counts_toward_exit) pairs.
Outcome = List[Tuple[VerificationReport, bool]]


def _cmd_check(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    out: Outcome = [(check_left_leibniz(g), True)]
    sq = squares_ideal(g)
    rep = new_report(
        "squares_ideal",
        {"algebra": g.name, "rank": sq.rank, "is_lie": is_lie(g),
         "span": [g.vec_str(row) for row in sq.rows]},
    )
    out.append((rep.done(), True))
    qrep = new_report("lie_quotient", {"algebra": g.name})
    try:
        lqd = lie_quotient(g)
        qrep.params["qdim"] = lqd.qdim
        qrep.params["representatives"] = list(lqd.rep_names)
    except RuntimeError as exc:
        qrep.findings.append({"issue": str(exc)})
    out.append((qrep.done(), True))
    if g.form is not None:
        out.append((check_invariant_form(g), True))
    return out


def _cmd_vg(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    mspec = _module_spec(cfg, g)
    basis = build_basis(g, mspec, cfg.max_degree)
    rep = new_report(
        "graded_basis",
        {"algebra": g.name, "module": cfg.module, "max_degree": cfg.max_degree},
    )
    rep.graded_dims = basis.dims()
    rep.params["monomials"] = {
        d: [basis.mon_str(m.key) for m in basis.monomials(d)]
        for d in range(mspec.delta, cfg.max_degree + 1)
    }
    return [(rep.done(), True)]


def _cmd_jacobi(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    D, lo = cfg.max_degree, cfg.mode_min
    depth = max(D, 3 * D - 3 * lo - 2, 2 * D - lo - 1)
    r = LoopRealization(g, depth)
    rep = jacobi_sweep(r, cfg.window())
    rep.graded_dims = r.basis.dims()[: D + 1]
    return [(rep, True)]


def _cmd_dprops(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    depth = max(cfg.max_degree, 2 * cfg.max_degree - cfg.mode_min)
    r = LoopRealization(g, depth)
    return [(check_D_properties(r.extended_view(), cfg.window()), True)]


def _cmd_assoc(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    D, hi = cfg.max_degree, max(cfg.mode_max, 0)
    r = LoopRealization(g, max(D, 3 * D + 2 * hi))
    window = cfg.window()
    rep = new_report(
        "weak_associativity_sweep", {"algebra": g.name, **window.as_params()}
    )
    states = r.sweep_states(D)
    witnessed = []
    for ul, u in states:
        for vl, v in states:
            for wl, w in states:
                sub = check_weak_associativity(r, u, v, w, window)
                if sub.findings:
                    rep.findings.extend(
                        {"u": ul, "v": vl, "w": wl, **f} for f in sub.findings
                    )
                else:
                    witnessed.append(sub.params["l"])
    if witnessed:
        rep.params["max_l"] = max(witnessed)
    rep.params["triples"] = len(states) ** 3
    rep.graded_dims = r.basis.dims()[: D + 1]
    return [(rep, True)]


def _skew_defect_domain(r: LoopRealization, max_degree: int):
    """All (u, v, n) whose defect lands inside the built window."""
    keys = []
    for d in range(r.delta, max_degree + 1):
        keys.extend((key, d) for key in r.dstate_layer(d))
    for uk, du in keys:
        for vk, dv in keys:
            for n in range(du + dv - 1 - max_degree, du + dv - r.delta):
                yield uk, du, vk, dv, n


def _cmd_skew(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    D = cfg.max_degree
    r = LoopRealization(g, D)
    jbar = saturate_ideal(r, D, cfg.window())
    rep = new_report(
        "quotient_skew_symmetry",
        {"algebra": g.name, **cfg.window().as_params(),
         "ideal_ranks_lower_bounds": {d: b.rank for d, b in sorted(jbar.items())}},
    )
    checked = 0
    for uk, du, vk, dv, n in _skew_defect_domain(r, D):
        defect = skew_defect(r, {uk: 1}, {vk: 1}, n)
        residue = reduce_mod_J(r, jbar, defect)
        checked += 1
        if residue:
            rep.findings.append(
                {"u": r.dkey_str(uk), "v": r.dkey_str(vk), "n": n,
                 "residue": r.state_str(residue)}
            )
    rep.params["defects_checked"] = checked
    rep.graded_dims = r.basis.dims()[: D + 1]
    return [(rep, True)]


def _cmd_jv(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    D = cfg.max_degree
    r = LoopRealization(g, D)
    jbar = saturate_ideal(r, D, cfg.window())
    jv = jv_kernel(r, jbar)
    rep = new_report(
        "jv_kernel",
        {"algebra": g.name, **cfg.window().as_params(),
         "ideal_ranks_lower_bounds": {d: b.rank for d, b in sorted(jbar.items())},
         "jv_ranks": {d: b.rank for d, b in sorted(jv.items())}},
    )
    for d, basis in sorted(jv.items()):
        mons = r.basis.monomials(d)
        for row in basis.rows:
            state = {(0, mons[i].word, mons[i].bottom): c for i, c in row.items()}
            rep.findings.append(
                {"degree": d, "witness": r.state_str(state)}
            )
    rep.graded_dims = r.basis.dims()[: D + 1]
    out: Outcome = [(rep.done(), cfg.expect_emb)]
    if cfg.cross_check:
        lz = LevelZeroMap(g, D, lqd=r.lqd)
        contain = level_zero_containment(r, jv, lz)
        contain.params["level_zero_kernel_ranks"] = {
            d: b.rank for d, b in sorted(lz.kernel().items())
        }
        out.append((contain, True))
        out.append((lz.check_module_map(), True))
    return out


def _cmd_embed(cfg: CommandConfig) -> Outcome:
    g = _load_algebra(cfg)
    depth = max(cfg.max_degree, 1 - cfg.mode_min)
    r = LoopRealization(g, depth)
    out: Outcome = []
    for i in range(g.dim):
        for j in range(g.dim):
            rep = embedding_obstruction(
                r, r.gen_state(i), r.gen_state(j), cfg.mode_min, cfg.window()
            )
            out.append((rep, True))
    return out


def _cmd_perm(cfg: CommandConfig) -> Outcome:
    p, name = _load_perm(cfg)
    axioms = check_perm_axioms(p)
    axioms.params["algebra"] = name
    out: Outcome = [(axioms, True)]
    if not axioms.passed:
        return out
    r = perm_vertex(p, name=name)
    back = extract_perm(r, cfg.window())
    rep = new_report("perm_round_trip", {"algebra": name, "dim": p.dim})
    if back.product != p.product:
        rep.findings.append({"issue": "extracted product differs from input table"})
    out.append((rep.done(), True))
    return out


def _perm_realization(cfg: CommandConfig):
    p, name = _load_perm(cfg)
    axioms = check_perm_axioms(p)
    if not axioms.passed:
        f = axioms.findings[0]
        raise UsageError(
            f"{cfg.path or name}: {f['axiom']} fails at {tuple(f['triple'])} "
            f"with defect {f['defect']}"
        )
    return perm_vertex(p, name=name)


def _cmd_adjoin(cfg: CommandConfig) -> Outcome:
    rv = adjoin_vacuum(_perm_realization(cfg))
    window = cfg.window()
    out: Outcome = [(check_vacuum_axioms(rv, window), True)]
    loc = new_report("locality_orders", {"algebra": rv.name, **window.as_params()})
    orders = {}
    states = rv.sweep_states(window.max_degree)
    for ul, u in states:
        for vl, v in states:
            k = locality_order(rv, u, v, window)
            orders[f"({ul},{vl})"] = k
            if k is None:
                loc.findings.append(
                    {"u": ul, "v": vl, "issue": "locality not witnessed on window"}
                )
    loc.params["orders"] = orders
    out.append((loc.done(), True))
    out.append((check_D_properties(rv, window), True))
    out.append((jacobi_sweep(rv, window), True))
    return out


def _cmd_hemi(cfg: CommandConfig) -> Outcome:
    rv = adjoin_vacuum(_perm_realization(cfg))
    h = hemisemidirect(rv)
    window = cfg.window()
    out: Outcome = [(jacobi_sweep(h, window), True)]
    cert = new_report(
        "w_slot_in_ideal", {"algebra": h.name, **window.as_params()}
    )
    for label, w in rv.sweep_states(window.max_degree):
        tagged = {("W", k): c for k, c in w.items()}
        got = skew_defect(h, h.vacuum, tagged, -1)
        if got != tagged:
            cert.findings.append(
                {"state": label, "expected": h.state_str(tagged),
                 "got": h.state_str(got)}
            )
    out.append((cert.done(), True))
    return out


def _cmd_serve(cfg: CommandConfig) -> int:
    try:
        import uvicorn
    except ImportError as exc:  # pragma: no cover
        raise UsageError(f"serve needs uvicorn: {exc}") from exc
    from .service import app

    uvicorn.run(app, host=cfg.host, port=cfg.port)
    return 0


_DISPATCH = {
    "check": _cmd_check,
    "vg": _cmd_vg,
    "jacobi": _cmd_jacobi,
    "skew": _cmd_skew,
    "dprops": _cmd_dprops,
    "assoc": _cmd_assoc,
    "jv": _cmd_jv,
    "embed": _cmd_embed,
    "perm": _cmd_perm,
    "adjoin": _cmd_adjoin,
    "hemi": _cmd_hemi,
}


def run(cfg: CommandConfig, stream=None) -> int:
    stream = stream if stream is not None else sys.stdout
    if cfg.command == "serve":
        return _cmd_serve(cfg)
    handler = _DISPATCH.get(cfg.command)
    if handler is None:
        print(f"unknown command: {cfg.command}", file=sys.stderr)
        return 2
    try:
        outcome = handler(cfg)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except DegreeOverflow as exc:
        print(
            f"window exceeded: an intermediate state needs degree {exc.required} "
            f"but the basis was built to {exc.built}; raise --max-degree or "
            f"narrow the mode window",
            file=sys.stderr,
        )
        return 2
    if cfg.fmt == "json":
        docs = [rep.to_doc(cfg.command) for rep, _ in outcome]
        json.dump(docs[0] if len(docs) == 1 else docs, stream, indent=1)
        stream.write("\n")
    else:
        for rep, _ in outcome:
            stream.write(rep.text() + "\n")
    return 1 if any(counts and not rep.passed for rep, counts in outcome) else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vla",
        description="Exact verification engine for vertex Leibniz algebras",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, path_help):
        p.add_argument("path", help=path_help)
        p.add_argument("--max-degree", type=int, default=3, dest="max_degree")
        p.add_argument("--mode-min", type=int, default=-2, dest="mode_min")
        p.add_argument("--mode-max", type=int, default=3, dest="mode_max")
        p.add_argument(
            "--format", choices=("text", "json"), default="text", dest="fmt"
        )

    common(sub.add_parser("check", help="Leibniz axioms, squares ideal, Lie quotient"),
           "algebra document (JSON)")
    p = sub.add_parser("vg", help="build the graded module and print dimensions")
    common(p, "algebra document (JSON)")
    p.add_argument("--module", default="adjoint",
                   help="adjoint | trivial | path to a module document")
    common(sub.add_parser("jacobi", help="Jacobi component identity sweep"),
           "algebra document (JSON)")
    common(sub.add_parser("skew", help="quotient skew symmetry after ideal saturation"),
           "algebra document (JSON)")
    common(sub.add_parser("dprops", help="translation-operator properties"),
           "algebra document (JSON)")
    common(sub.add_parser("assoc", help="weak associativity sweep"),
           "algebra document (JSON)")
    p = sub.add_parser("jv", help="embedding kernel via ideal saturation")
    common(p, "algebra document (JSON)")
    p.add_argument("--cross-check", action="store_true", dest="cross_check",
                   help="also verify containment in the level-zero kernel")
    p.add_argument("--expect-emb", action="store_true", dest="expect_emb",
                   help="exit 1 if the embedding kernel is nonzero")
    common(sub.add_parser("embed", help="mode-symmetry obstruction over generator pairs"),
           "algebra document (JSON)")
    common(sub.add_parser("perm", help="Perm-algebra axioms and round trip"),
           "Perm document (JSON)")
    common(sub.add_parser("adjoin", help="vacuum adjunction over a Perm realization"),
           "Perm document (JSON)")
    common(sub.add_parser("hemi", help="hemisemidirect product and its certificates"),
           "Perm document (JSON)")
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return ap


def main(argv: Optional[List[str]] = None) -> None:
    args = build_parser().parse_args(argv)
    fields = (
        "path", "max_degree", "mode_min", "mode_max", "module", "fmt",
        "cross_check", "expect_emb", "host", "port",
    )
    kwargs = {k: getattr(args, k) for k in fields if hasattr(args, k)}
    try:
        cfg = CommandConfig(command=args.command, **kwargs)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        sys.exit(2)
    sys.exit(run(cfg))


if __name__ == "__main__":  # pragma: no cover
    main()
