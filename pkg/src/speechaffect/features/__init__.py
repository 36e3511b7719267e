"""Frame-level paralinguistic and spectral descriptors."""

from .aggregate import bucketize_by_percentile, group_mean, hierarchical_aggregate, hierarchy
from .extract import FEATURE_COLUMNS, ExtractionConfig, FeatureMatrix, extract_features
from .formants import FormantResult, formants_lpc
from .framing import FrameConfig, frame_signal, raw_frames
from .mfcc import mfcc
from .pitch import PitchTrack, track_pitch
from .spectral import SpectralDescriptors, spectral_descriptors
from .voice import hnr, jitter_shimmer

__all__ = [
    "FEATURE_COLUMNS",
    "ExtractionConfig",
    "FeatureMatrix",
    "FormantResult",
    "FrameConfig",
    "PitchTrack",
    "SpectralDescriptors",
    "bucketize_by_percentile",
    "extract_features",
    "formants_lpc",
    "frame_signal",
    "group_mean",
    "hierarchical_aggregate",
    "hierarchy",
    "hnr",
    "jitter_shimmer",
    "mfcc",
    "raw_frames",
    "spectral_descriptors",
    "track_pitch",
]
