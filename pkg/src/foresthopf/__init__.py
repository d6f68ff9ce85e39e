"""Exact symbolic Hopf-algebra machinery on decorated rooted forests:
coproducts, antipodes, rules and BPHZ renormalisation."""

from ._kernel import BACKEND
from .comb import LinComb, SpaceTag, TensorComb, project
from .degrees import Degree, ExtendedLabel, Scaling, TypeSymbol
from .forest import (
    DecoratedForest,
    StructuralError,
    canonical_key,
    contract,
    degree,
    forest_product,
    make_forest,
    normalize,
    tree_product,
)
from .grammar import latex_forest, parse_forest, parse_tree, print_forest
from .coalgebra import (
    admissible_subforests,
    cointeraction_residual,
    delta2_recursive,
    delta_generic,
    delta_minus_ex,
    delta_plus_ex,
)
from .hopf import (
    Character,
    antipode,
    char_convolve,
    char_inverse,
    counit_character,
    semidirect_inverse,
    semidirect_mul,
    twisted_antipode,
)
from .renorm import (
    LMaps,
    ReducedRenorm,
    Valuation,
    bphz_centering_residual,
    bphz_character,
    delta_minus_reduced,
    reduce_element,
    renorm_map,
)
from .rules import (
    RegMap,
    Rule,
    basis,
    complete,
    compute_reg,
    conforms,
    completion_data,
    enumerate_trees,
    is_complete,
    is_normal,
    load_rule,
    parse_rule,
)

__version__ = "0.1.0"
