"""Cascade factorization for linear quantum networks with delayed feedback."""

from ._kernels import HAVE_NUMBA, IMPLEMENTATION
from .algebra import (
    BLOCK,
    INTERLEAVED,
    DoubledUpMatrix,
    flat,
    indefinite_complete,
    is_doubled_up,
    is_j_unitary,
    j_dual,
    random_j_unitary_doubled_up,
    signature_matrix,
    sigma_matrix,
)
from .cascade import (
    CascadeResult,
    detach,
    factorize,
    factorize_rational,
    plan_order,
    static_factorize,
    static_sinh_oracle,
)
from .factors import (
    CanonicalFactor,
    SLHParams,
    build_complex_factor,
    build_modified_degenerate_factor,
    build_real_factor,
    canonicalize_omega,
    factor_to_slh,
    to_blaschke_potapov_form,
)
from .network import (
    DelayNetwork,
    DelaySpec,
    SearchStrip,
    delay_operator,
    load_network,
    network_from_slh,
    save_network,
)
from .rootfind import (
    ZeroPoleRecord,
    count_in_rectangle,
    pair_records,
    scan_window,
    subdivide_and_refine,
)
from .statespace import (
    RationalTF,
    SLHModel,
    StateSpaceModel,
    concat,
    feedback,
    limit_at_infinity,
    load_model,
    save_model,
    series,
    slh_to_statespace,
    static_tf,
)

__version__ = "0.1.0"

apply_loop_phase_shift = DelayNetwork.with_loop_phase
