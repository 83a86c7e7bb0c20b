"""Hybrid quantum-classical diffusion laboratory.

A self-contained numpy stack: statevector circuit simulation with
parameter-shift gradients, classical and depolarizing diffusion processes,
trainable non-local measurements, a hybrid denoising model with a classical
skip connection, and circuit quality benchmarks (expressibility,
entangling capability).
"""

from .qcore import (
    DensityMatrix,
    StateVector,
    basis_state,
    expm_hermitian,
    outer_product,
    partial_trace,
    purity,
    sqrtm_psd,
    state_fidelity,
    tensor_product,
)
from .circuit import (
    Gate,
    ParamCircuit,
    build_ansatz,
    circuit_unitary,
    cnot,
    controlled,
    cz,
    dump_circuit,
    h,
    mixing_layer,
    phase,
    run_circuit,
    rx,
    ry,
    rz,
    vw_block,
    x,
)
from .encode import (
    EncodingKind,
    encode,
    encode_amplitude,
    encode_angle,
    encode_basis,
    encode_dense_angle,
    encode_phase,
)
from .measure import (
    AdaptiveObservable,
    GlobalProbe,
    ObservableBank,
    ano_features,
    expectation,
    grad_expectation_wrt_circuit,
    grad_features_wrt_circuit,
    grad_features_wrt_observables,
    grad_hadamard_wrt_probe,
    hadamard_test,
    hermitize,
    load_bank,
    random_bank,
    save_bank,
)
from .diffusion import (
    DepolSchedule,
    DiffusionSample,
    NoiseSchedule,
    depol_from_noise,
    depolarize_closed,
    depolarize_step,
    forward_sample,
    infidelity_loss,
    linear_schedule,
    reverse_step,
    schedule_from_json,
    schedule_to_json,
    simple_loss,
)
from .bench import (
    BenchReport,
    FidelityHistogram,
    entangling_capability,
    expressibility,
    frechet_gaussian,
    haar_fidelities,
    haar_state,
    meyer_wallach,
    sample_fidelities,
)
from .data import (
    ImageBatch,
    SyntheticSpec,
    downsample,
    load_idx,
    parse_idx,
    serialize_idx,
    synth_modes,
)
from .model import (
    HybridModel,
    TrainConfig,
    backward,
    forward,
    gradient_audit,
    init_model,
    load_checkpoint,
    loss,
    sample,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
