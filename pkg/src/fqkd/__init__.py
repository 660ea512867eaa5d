"""Simulation and security analysis for high-dimensional QKD with F-qubits."""

from .channel import (
    Composite,
    DensityMatrix,
    Depolarizing,
    FourierStochastic,
    Ideal,
    InterceptResend,
    apply,
    detection_probability,
    eve_from_stochastic,
)
from .estimation import (
    KeyRateReport,
    alpha_coefficient,
    beta,
    dit_error_rate,
    fit_physical_transition,
    forward_map,
    invert_map,
    normalize_counts,
    phase_error_rate,
    secret_key_rate,
    shannon_entropy_d,
)
from .hilbert import (
    BasisId,
    FQubitLabel,
    StateVector,
    computational_state,
    enumerate_fqubit_labels,
    fourier_state,
    fqubit_fourier_coefficients,
    fqubit_state,
    overlap_probability,
    root_of_unity,
    symmetric_subset_state,
)
from .protocol import MeasurementMode, ProtocolConfig, run_protocol, simulate_detection_matrix

__version__ = "0.1.0"
