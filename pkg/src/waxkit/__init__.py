"""Decentralized MIMO processing via WAX decompositions, H = W A X."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BlockDiag,
    DimensionError,
    Dims,
    InvalidInputError,
    PreconditionError,
    RngSpec,
    load_matrix,
    matrix_from_json,
    matrix_to_json,
    sample_gaussian,
    save_matrix,
)
from .solver import (  # noqa: E402
    DimensionPlan,
    WaxFactors,
    WaxInfeasible,
    apply_processing,
    build_system,
    expand_combiner,
    lossless_feasible,
    plan_dimensions,
    t_opt,
    wax_decompose,
)
from .validity import (  # noqa: E402
    check_block_rank,
    check_row_rank,
    ones_lower_bound,
    rank_profile_cap,
    validate_combiner,
)
from .sparse import minimize_ones, random_sparse_a, valid_fraction  # noqa: E402
from .lossy import (  # noqa: E402
    approx_mf,
    mutual_info_y,
    mutual_info_z,
    panel_select_rate,
    refine_rate,
    select_panels,
)

__all__ = [name for name in dir() if not name.startswith("_")]
