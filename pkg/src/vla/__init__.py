"""Exact-arithmetic engine for vertex Leibniz algebras.

From a finite-dimensional Leibniz algebra, build the graded loop-algebra
module on which its generators act by vertex-operator modes, extend by a
formal translation operator, saturate the skew-defect ideal, and decide
the embedding question — entirely over the rationals, with every axiom
verified coefficient by coefficient on explicit windows.
"""

from .exactlin import Rational, SparseVec, SubspaceBasis, qparse, qstr, rref
from .formal import TruncatedLaurent, gen_binomial
from .leibniz import (
    LeibnizAlgebra,
    LieQuotientData,
    check_left_leibniz,
    dump_algebra_doc,
    is_lie,
    lie_quotient,
    load_algebra_doc,
    loop_bracket,
    squares_ideal,
)
from .loopmod import (
    DegreeOverflow,
    GradedBasis,
    ModeEngine,
    ModuleSpec,
    adjoint_module,
    annihilation_bound,
    build_basis,
    mode_action,
    module_from_doc,
    trivial_module,
)
from .verify import (
    SweepWindow,
    VerificationReport,
    check_D_properties,
    check_ideal_annihilation,
    check_jacobi_component,
    check_skew_symmetry,
    check_vacuum_axioms,
    check_weak_associativity,
    embedding_obstruction,
    jacobi_sweep,
    locality_order,
)
from .vertex import (
    HemiRealization,
    LevelZeroMap,
    LoopRealization,
    PermAlgebra,
    PermRealization,
    QuotientRealization,
    VacuumModuleRealization,
    VacuumRealization,
    adjoin_vacuum,
    apply_D,
    check_perm_axioms,
    dump_perm_doc,
    extract_perm,
    hemisemidirect,
    jv_kernel,
    level_zero_map,
    load_perm_doc,
    mode_product,
    perm_vertex,
    reduce_mod_J,
    saturate_ideal,
    skew_defect,
)

__version__ = "0.1.0"
