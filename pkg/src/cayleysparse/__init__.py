"""Sparsification of Cayley and Schreier graphs by generator importance sampling."""

from .cayley import (
    CayleyGraph,
    GeneratorSet,
    GeneratorSetError,
    cut_value,
    generator_laplacian,
    graph_laplacian,
    random_generators,
)
from .gadget import build_and_gadget, verify_and_gadget
from .groups import (
    GroupAction,
    GroupTable,
    GroupTableError,
    coset_action,
    make_cyclic,
    make_dihedral,
    make_f2k,
    make_product,
    make_symmetric,
    regular_action,
)
from .sparsifier import (
    importance,
    importances,
    important_count,
    sample_sparsifier,
    score,
    scores,
    sparsify_directed,
    sparsify_weighted,
    upper_triangular_greedy,
)
from .spectral import NumericalToleranceError, RangeContainmentError, relative_spectrum
from .verify import verify_cuts_exhaustive, verify_cuts_sampled, verify_spectral

__version__ = "0.1.0"
