"""Graph weights, KMS functionals, spectral-flow pairings and currents on zhyvot graphs."""

from .algebra import (
    AlgebraElement,
    Monomial,
    adjoint,
    classify_fixed,
    graded_degree,
    modular_sigma,
    multiply,
    phi,
)
from .currents import (
    Current,
    CylinderFunction,
    ThetaDescriptor,
    build_theta,
    current_from_virtual,
    current_from_weight,
    current_space_rank,
    decompose,
    k0_pairing,
    period_current,
    refine,
    star_function,
    verify_current,
    walk_period,
    weight_from_current,
)
from .errors import *  # noqa: F401,F403
from .graph import (
    Cycle,
    Edge,
    OrientedGraph,
    Path,
    ZhyvotGraph,
    cycle_basis,
    enumerate_paths,
    field_extension,
    first_betti_number,
    genus_template,
    sigma_length,
    validate_zhyvot,
)
from .index import (
    PairingReport,
    ProjTraceQuery,
    proj_trace,
    recover_schottky,
    spectral_flow_pairing,
    trace_by_paths,
)
from .io import (
    FormatError,
    parse_current_file,
    parse_graph_file,
    parse_weight_file,
    serialize_current,
    serialize_graph,
    serialize_weight,
)
from .scalars import QuadraticNumber, exact_sqrt, format_exact, parse_exact
from .weights import (
    GraphWeight,
    InhomWeight,
    SpecialWeight,
    VirtualWeight,
    alpha_k,
    averaging_weight,
    extend_to_trees,
    inhom_chain,
    inhom_from_alpha,
    insert_vertex_extend,
    integerize,
    solve_special_state,
    solve_with_stubs,
    virtual_from_two,
    virtual_weight,
    weight_after_field_extension,
)
