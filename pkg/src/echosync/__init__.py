"""Automatic audio/ultrasound synchronisation toolkit.

Pipeline: load raw utterances, resample and resize both streams, cut
aligned five-frame windows with MFCC features, train a two-stream
embedding model on self-supervised true/false pairings, then pick the
candidate offset whose windows sit closest in embedding space.
"""

from .config import CONFIG_ENV_VAR, PipelineConfig, load_config, parse_grid_spec
from .container import load_container, save_container
from .data_io import (
    AudioSignal,
    RawUltrasoundSequence,
    UltrasoundParams,
    UtteranceRecord,
    list_utterance_ids,
    load_utterance,
    parse_param,
    parse_ult,
    read_wav,
    write_param,
    write_ult,
    write_utterance,
    write_wav,
)
from .dsp import (
    MfccConfig,
    mel_filterbank,
    mfcc,
    mfcc_frame_count,
    resample_audio,
    resample_ultrasound,
    resize_frame,
    round_half_up,
    window_time,
)
from .errors import (
    CapacityError,
    ConflictError,
    DataError,
    EchosyncError,
    EmptyDataError,
    FormatError,
    LimitError,
    NumericFailureError,
    PreconditionError,
    RangeError,
    SequenceError,
    ShapeError,
    StoreError,
    TruncationError,
    UnsyncableError,
    UsageError,
    ValidationError,
)
from .evaluate import (
    GROUP_KEYS,
    HARD,
    SOFT,
    EvalRow,
    GroupStats,
    ScoringBoundary,
    aggregate,
    discrepancy,
    score,
)
from .fan import FanImage, bilinear_sample, fan_transform
from .neural import (
    CONTRASTIVE_MARGIN,
    ConvSpec,
    StreamSpec,
    TrainConfig,
    TrainReport,
    TwoStreamModel,
    check_layer,
    check_model,
    classify,
    contrastive_loss,
    default_audio_spec,
    default_ultrasound_spec,
    load_model,
    save_model,
    train,
)
from .sampling import (
    ShortUtteranceWarning,
    TrainingSample,
    WindowPair,
    extract_window_pairs,
    make_selfsup_set,
)
from .stats import (
    JudgmentRecord,
    LogisticModel,
    build_design_matrix,
    exact_binomial_test,
    fit_logistic,
    mcfadden_r2,
    null_log_likelihood,
    pairwise_agreement,
    parse_pronunciation_dict,
    phone_features,
    wald_ci,
)
from .sync import (
    CLEFT_GRID,
    CandidateGrid,
    SyncPrediction,
    apply_offset,
    build_grid,
    read_predictions,
    synchronise,
    write_predictions,
)

__version__ = "0.1.0"
