"""etacalc: index pairings and relative eta cocycles on lattice cylinder ends."""

from .backend import BACKEND, HAS_NUMBA
from .cocycles import (
    hilbert_identity_check,
    melrose_s1,
    regularized_trace,
    roe_sigma1,
    trace_tau0,
)
from .cyclic import (
    Cochain,
    RelativeCochain,
    cyclic_residual,
    cyclicize,
    hochschild_b,
    relative_coboundary,
    suspension_sum,
)
from .cylinder import (
    CompactKernel,
    ExtendedKernel,
    GridGeometry,
    InvariantKernel,
    MalformedKernel,
    WindowTooSmall,
    chi_commutator,
    commutator,
    compose,
    identity_extended,
    identity_invariant,
    kernel_from_text,
    kernel_to_text,
    project_pi,
    read_kernel,
    section_s,
    section_t,
    shift_kernel,
    toeplitz_extend,
    write_kernel,
    zero_invariant,
)
from .dirac import (
    PRESETS,
    BoundaryOperator,
    DiracModel,
    ProjectionPath,
    aps_parametrix,
    connes_skandalis_projector,
    eta_integrand_lattice,
    folded_line_model,
    graph_projection,
    preset_model,
    pure_cylinder_model,
    sigma1_freq,
    spectral_flow,
    spectral_gap_check,
    wassermann_projection,
)
from .foliated import (
    FoliatedBandKernel,
    FoliatedExtendedKernel,
    FoliatedKernel,
    FoliatedToy,
    Multiplier,
    Weight,
    as_sigma_phi,
    as_tau_phi,
    as_tau_phi_r,
    gv_sigma,
    gv_tau,
    gv_tau_r,
    shatten_norm,
    suspend,
    weight_omega,
    weight_omega_reg,
)
from .pairing import (
    PairingReport,
    absolute_pairing,
    eta_invariant,
    eta_signature_fit,
    excision_check,
    relative_pairing,
    rescaling_sweep,
    window_idempotent,
)
from .windowcalc import (
    WindowOperator,
    retail,
    snap_compact,
    symbol_band,
    wop_compose,
    wop_from_tail,
    wop_identity,
    wop_reg_trace,
    wop_trace,
)

__version__ = "0.1.0"
