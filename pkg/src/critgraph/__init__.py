"""critgraph: critical random graphs with prescribed degrees, and their limits.

Samplers (plane trees, configuration model, uniform connected graphs, vacant
sets of random walks), exact enumeration identities, and discretized
continuum objects for comparing the two sides.
"""

from .degrees import ChildSequence, CriticalityParams, check_assumption, criticality, ecd_from_degrees
from .plane_tree import (
    BOUNDARY,
    PlaneTree,
    ReducedTree,
    ancestral_sets,
    count_trees,
    decode_counts,
    permutation_concentration_stat,
    reduced_subtree,
    sample_tree,
)
from .surgery import (
    AdmissiblePair,
    TiltedTreePair,
    admissible_pairs,
    identify_I,
    identify_Q,
    sample_tilted,
)
from .graphs import (
    ComponentCensus,
    MultiGraph,
    cm_pmf,
    component_census,
    sample_cm,
    sample_connected,
    sample_simple,
)
from .vacant import VacantCritical, annealed_pipeline, random_walk_vacant, vacant_critical, vacant_graph
from .exact import enumerate_connected, enumerate_tilted, verify_counting_identity, wright_ratio
from .limits import (
    ExcursionPath,
    MarkedExcursionList,
    area_moment,
    build_MD,
    build_Mk,
    build_Mvac,
    reflected_process,
    sample_excursion,
    sample_tilted_excursion,
)
from .mmspace import (
    FiniteMMSpace,
    distortion,
    g_phi_k,
    gh_exact,
    polynomial,
    scale,
    two_sample_distance_law,
)

__version__ = "0.1.0"
