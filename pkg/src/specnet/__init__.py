"""specnet: spectral prescription on measured graphs and verification of
heavy-vertex / long-corridor network models."""

__version__ = "0.1.0"

from .graph import (
    EigenResult,
    MeasuredGraph,
    dirichlet_energy,
    laplacian_apply,
    spectrum_dense,
    spectrum_smallest_k,
)
from .prescribe import (
    SpectralTarget,
    WeightSolution,
    pad_targets,
    prescribe_complete_graph,
    solve_p3_closed_form,
    spectral_jacobian,
)
from .topology import (
    ColorAssignment,
    SurfaceModel,
    euler_genus_of_dual,
    genus_complete_construction,
    walecki_decomposition,
)
from .surface import pinch_model, rescaled_spectrum
from .expander import (
    ClusterWiring,
    cheeger_bounds,
    cheeger_exact,
    expose_ports,
    sample_wiring,
)
from .homogenize import (
    BlockModel,
    CellSolution,
    MacroNetwork,
    assemble_network,
    corridor_length,
    corridor_min_energy,
    default_block,
    diamond_block,
    effective_conductance,
    macro_laplacian,
)
from .harness import (
    ConvergenceReport,
    corridor_mass_profile,
    cluster_flatness_profile,
    example_013,
    ratio_report,
    sweep_convergence,
)
