"""Recurrent neural network with parametric bias units (RNNPB)."""

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DimensionMismatchError,
    ModelFormatError,
    ModelVersionError,
    NumericError,
    NumericOverflowError,
    RNNPBError,
    StreamError,
    UnknownLabelError,
)
from .evaluate import DistanceReport, distance_matrix, emit_report, regen_error_table
from .generation import generate, generate_by_label, interpolate_pb
from .learning import TrainerConfig, TrainReport, TrainerState, bptt_gradients, train
from .network import (
    ModelSnapshot,
    NetworkTopology,
    PBState,
    StepState,
    WeightMatrices,
    forward_sequence,
    forward_step,
    init_network,
    load_model,
    save_model,
)
from .recognition import RecognitionConfig, RecognitionResult, pb_distance, recognize, recognize_stream
from .seqdata import (
    NormStats,
    Sequence,
    SequenceSet,
    SynthSpec,
    apply_normalizer,
    fit_normalizer,
    invert_normalizer,
    load_sequences,
    save_sequences,
    synth_corpus,
)
