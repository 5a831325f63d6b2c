"""Online and offline maximization of weakly up-concave functions by boosted
linearization over convex sets."""
from .domains import (ConstraintSet, ThetaSpec, UnsupportedError, make_box,
                      make_partition_matroid, make_singleton, make_uniform_matroid,
                      maximal_convex_subset, project, radial_bounds)
from .harness import find_comparator, load_config, parse_config, run_experiment
from .kernels import BACKEND
from .linearization import (alpha_at, alpha_star, estimate_surrogate, make_context,
                            sample_z, surrogate_exact)
from .objectives import (Objective, check_oss, check_up_concave, make_linear,
                         make_monotone_quadratic, make_norm_power,
                         make_weakly_dr_quadratic, random_quadratic)
from .online import online_to_batch, run_online
from .oracles import QueryOracle

__version__ = "0.1.0"
