"""Order-by-order eigenvalue and eigenfunction corrections."""
from .energy import (
    RESONANCE_THRESHOLD,
    first_order_degenerate,
    first_order_nondegenerate,
    mode_energy,
    mode_zero,
    resonance_ratio,
    second_order_degenerate,
    second_order_nondegenerate,
    unperturbed_energy,
)
from .types import (
    BC,
    EnergyResult,
    ModeIndex,
    NearResonance,
    PartialResultWarning,
    TruncationFlag,
    WavefunctionExpansion,
)
from .wavefunction import (
    boundary_consistency,
    evaluate_wavefunction,
    first_order_wavefunction,
    normalization_constant,
    normalize,
    norm_squared,
    second_order_wavefunction,
)
from .checks import boundary_residual, boundary_values, residual_order_check, verify_inner_product
