"""Three-tank hydraulic benchmark: plant modeling, observer-based fault
detection, and adaptive/consensus Kalman filtering."""

from .analysis import (
    Polynomial,
    RankReport,
    TransferFunction,
    characteristic_polynomial,
    controllability_matrix,
    eigenvalues,
    is_asymptotically_stable,
    observability_matrix,
    transfer_function,
)
from .askf import (
    DiscreteModel,
    FilterState,
    ScalingParams,
    innovation_decomposition,
    predict,
    run_askf,
    update,
    update_scaling,
)
from .consensus import (
    ConsensusState,
    SensorNetwork,
    consensus_predict,
    consensus_update,
    fused_information,
    run_consensus,
)
from .detect import (
    DetectionReport,
    ResidualTrace,
    ThresholdCurve,
    build_threshold,
    detect,
    initial_error_bound,
    residual,
)
from .errors import (
    DivergenceError,
    InvalidParameterError,
    NotObservableError,
    NumericalError,
    SingularityError,
    UnsupportedShapeError,
    ValidationError,
)
from .harness import (
    ExperimentConfig,
    RunArtifacts,
    calibrate_delta_bar,
    default_config,
    emit_csv,
    emit_plots,
    load_config,
    run_experiment,
)
from .model import (
    FaultProfile,
    PiecewiseConstantSignal,
    StateSpace,
    TankParams,
    Trajectory,
    benchmark_params,
    build_faulty,
    build_healthy,
    discretize_zoh,
    fault_flow,
    simulate,
    steady_state,
)
from .observer import (
    CanonicalRealization,
    ObserverDesign,
    canonical_form,
    co_simulate,
    place_observer_poles,
    run_luenberger,
)

__version__ = "0.1.0"
