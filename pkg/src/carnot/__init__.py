"""Sub-Riemannian geometry of corank-1 Carnot groups and discrete transport checks."""

from .group import GroupSpec, LayoutError, frame_at, group_op, inverse, is_abnormal_dir, is_in_D, make_spec
from .expmap import GeodesicPath, exp_from, exp_from_identity, jac_exp, reverse_param
from .distance import (
    CutClass,
    CutLocusError,
    LogBatch,
    LogResult,
    d_cc,
    grad_dsq_half,
    intermediate_point,
    log_batch,
    log_from_identity,
    pairwise_sq_dist,
    probe_cut_nonsemiconvexity,
    relative_log,
)
from .distortion import bbl_exponent, gardner_exponent, pmean, tau, tau_pairs, tau_set, tau_tilde
from .transport import DiscreteMeasure, TransportPlan, example36_instance, interpolate, solve_ot, wasserstein2

__version__ = "0.1.0"
