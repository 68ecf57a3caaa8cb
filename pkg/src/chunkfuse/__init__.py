"""Overlapping-chunk encoding with cumulative boundary fusion.

Long token streams are cut into fixed overlapping windows, each window
is encoded independently by a frozen transformer, and the per-chunk
boundary states are blended with running averages of everything before
and after them. The decoder then reads a short assembled memory
instead of every encoded token.
"""

from .bench import ScalingReport, compare_naive_concat, run_scaling
from .cumulation import (
    BoundarySet,
    FusedSequence,
    FusionConfig,
    assemble,
    backward_context,
    boundaries_from_encodings,
    extract_boundaries,
    forward_context,
    fuse,
    fused_sequence_manifest,
    fusion_jacobian,
    sample_middle,
    sample_middle_indices,
    with_contexts,
)
from .decoder import DecoderConfig, attention_mass_by_chunk, decode_step, init_decoder_weights
from .encoder import (
    ChunkEncoding,
    EncoderConfig,
    EncoderWeights,
    encode,
    encode_all,
    init_weights,
    load_weights,
    save_weights,
)
from .errors import (
    ChunkfuseError,
    ConfigError,
    ContractError,
    DegenerateChunkError,
    InputError,
    NumericalError,
)
from .metrics import (
    ProbeResult,
    RougeScore,
    lcs_length,
    make_random_doc,
    make_repeated_chunk_doc,
    position_probe,
    rouge_l,
    rouge_n,
)
from .numerics import (
    SeededRng,
    layer_norm,
    load_matrix,
    matmul,
    matrix_from_text,
    matrix_to_text,
    mean_of,
    row_softmax,
    save_matrix,
)
from .pipeline import DocumentRun, PipelineConfig, greedy_decode, run_document
from .segmenter import Segment, SegmentSet, reconstruct, segment, segment_count

__version__ = "0.1.0"
