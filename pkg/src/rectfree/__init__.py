"""Greedy rectangle-free 0-1 matrices and their folded configurations.

The package streams the row-by-row greedy construction that places a one
wherever row cap, column cap and rectangle-freeness allow, detects the
eventual periodicity of that infinite matrix, folds one period band into
a finite symmetric incidence matrix, and verifies the result as an
incidence-geometry configuration — with atomic checkpoints for runs that
take months and a CLI tying the pieces together.
"""
from .checkpoint import (Checkpoint, EMPTY_ROW_HASH, RowLog, chain_row_hash,
                         iter_row_log, load_checkpoint, log_prefix_hash,
                         save_checkpoint)
from .errors import (BudgetExhaustedError, CheckpointError,
                     ConstraintViolationError, CorruptCheckpointError,
                     InvalidParameterError, InvariantViolationError,
                     RectfreeError, SizeLimitError, VersionMismatchError)
from .folding import (FoldParams, compact_plane, fold, hypothesis_status,
                      regenerate_rows)
from .generator import (GeneratorState, MAX_ORDER, Params, SparseRow,
                        compute_galfs, format_row_line, generate_naive,
                        generate_prefix, is_admissible, length_bound,
                        new_generator, next_row, parse_row_line)
from .matrix import IncidenceMatrix, parse_matrix_text
from .period import (DefiningMatrix, DetectorSnapshot, PeriodResult,
                     ResumeState, defining_matrix, detect_period,
                     minimal_fold_multiplier)
from .verify import (Configuration, ConfigurationViolation,
                     automorphism_count, canonical_form, find_rectangle,
                     is_desarguesian, is_projective_plane, isomorphic,
                     levi_dot, reference_plane, verify_configuration)

__version__ = "0.1.0"

__all__ = [
    "BudgetExhaustedError", "Checkpoint", "CheckpointError", "Configuration",
    "ConfigurationViolation", "ConstraintViolationError",
    "CorruptCheckpointError", "DefiningMatrix", "DetectorSnapshot",
    "EMPTY_ROW_HASH", "FoldParams", "GeneratorState", "IncidenceMatrix",
    "InvalidParameterError", "InvariantViolationError", "MAX_ORDER",
    "Params", "PeriodResult", "RectfreeError", "ResumeState", "RowLog",
    "SizeLimitError", "SparseRow", "VersionMismatchError",
    "automorphism_count", "canonical_form", "chain_row_hash",
    "compact_plane", "compute_galfs", "defining_matrix", "detect_period",
    "find_rectangle", "fold", "format_row_line", "generate_naive",
    "generate_prefix", "hypothesis_status", "is_admissible",
    "is_desarguesian", "is_projective_plane", "isomorphic", "iter_row_log",
    "length_bound", "levi_dot", "load_checkpoint", "log_prefix_hash",
    "minimal_fold_multiplier", "new_generator", "next_row",
    "parse_matrix_text", "parse_row_line", "reference_plane",
    "regenerate_rows", "save_checkpoint", "verify_configuration",
]
