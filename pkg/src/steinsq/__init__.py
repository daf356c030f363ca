"""Equi-n-squares without large partial transversals.

Builds the block construction, searches for partial transversals and
certifies upper bounds on their size.
"""

__version__ = "0.1.0"

from .certify import (
    DeficiencyCertificate,
    TransversalAudit,
    audit_transversal,
    check_certificate,
    verify_structure,
)
from .construct import (
    build,
    build_bipartite_deleted,
    build_structured,
    build_symmetric,
    generate,
    pad,
    shuffle,
)
from .grid import (
    Grid,
    OccurrenceStats,
    PartialTransversal,
    is_equi_square,
    missed_symbols,
    occurrence_stats,
    read_grid,
    validate_transversal,
    write_grid,
)
from .layout import (
    ConstructionParams,
    RegionLayout,
    SymbolPartition,
    plan_layout,
    region_of,
)
from .seq import SequencePlan, build_sequence_plan, check_p1, check_squares, x_value
from .solve import (
    NibbleConfig,
    SolveResult,
    solve_brute,
    solve_exact,
    solve_greedy,
    solve_nibble,
)
