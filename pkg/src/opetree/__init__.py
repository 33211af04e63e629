"""Tree-operad calculus for boundary CFT operator product expansions.

Subpackages by topic:

* :mod:`opetree.trees` -- labeled binary trees, 2-colored trees, the
  (colored) operad structure and the doubling map.
* :mod:`opetree.coords` -- tree-adapted coordinates on configuration
  space, polynomial inverses, admissible-radius certificates and
  convergence-region membership.
* :mod:`opetree.series` -- truncated multivariate generalized power
  series (rational exponents, log powers) and the expansion
  homomorphism from power products into tree coordinates.
* :mod:`opetree.braids` -- braid words, cabling/strand deletion, and
  colored doubled-braid morphisms with their five generators.
* :mod:`opetree.latticecft` -- the rank-one even unimodular lattice
  free-boson model: cocycles, closed-form correlators, per-tree
  expansions, and the bootstrap/consistency verification suites.
* :mod:`opetree.cli` -- command-line front end.
"""

from opetree.trees import (
    EMPTY,
    ClosedLeaf,
    Leaf,
    Node,
    OpenLeaf,
    Tau,
    compose,
    compose_colored,
    doubling,
    format_tree,
    parse_tree,
    permute,
)
from opetree.coords import (
    CoordSystem,
    CoordValues,
    a_coordinates,
    admissibility_certificate,
    pair_difference,
    psi,
    region_membership,
    region_membership_open,
)
from opetree.series import GenSeries, PowerProduct, evaluate_closed, evaluate_series, expand
from opetree.braids import BraidWord, braid_permutation, cable_compose, mirror, papb_generator
from opetree.latticecft import NarainModel, build_boundary

__all__ = [
    "EMPTY",
    "ClosedLeaf",
    "Leaf",
    "Node",
    "OpenLeaf",
    "Tau",
    "compose",
    "compose_colored",
    "doubling",
    "format_tree",
    "parse_tree",
    "permute",
    "CoordSystem",
    "CoordValues",
    "a_coordinates",
    "admissibility_certificate",
    "pair_difference",
    "psi",
    "region_membership",
    "region_membership_open",
    "GenSeries",
    "PowerProduct",
    "evaluate_closed",
    "evaluate_series",
    "expand",
    "BraidWord",
    "braid_permutation",
    "cable_compose",
    "mirror",
    "papb_generator",
    "NarainModel",
    "build_boundary",
]
