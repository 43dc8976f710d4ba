"""2D fast multipole method with cost modeling, SFC load balancing and a
simulated parallel timeline."""
from .costmodel import (
    CellWork,
    CommEstimate,
    CostParams,
    MemoryEstimate,
    estimate_comm,
    estimate_memory,
    estimate_work,
)
from .errors import DomainError, InputFormatError
from .evaluator import direct_solve, error_report, fmm_solve
from .expansions import (
    Expansion,
    evaluate_local,
    evaluate_multipole,
    l2l,
    m2l,
    m2m,
    p2m,
    p2p_direct,
)
from .generate import clustered_particles, uniform_particles
from .parsim import MachineModel, Timeline, simulate, sweep
from .partition import (
    ObjectiveWeights,
    Partition,
    SubtreeUnit,
    SyntheticLoadModel,
    TreeLoadModel,
    brute_force_partition,
    initial_partition,
    objective,
    refine_partition,
    sfc_units,
    work_imbalance,
)
from .quadtree import (
    MortonKey,
    Quadtree,
    build_tree,
    interaction_list,
    morton_decode,
    morton_encode,
    neighbor_list,
    parent_and_children,
)
from .vortex import Backend, Vortices, step, velocities

__version__ = "0.1.0"
