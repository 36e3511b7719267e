"""Speech affect analysis toolkit: paralinguistic features, CCA probing, ASR error
analytics, emotion metrics, FAD pseudo-labels and multi-view semi-supervised training."""

__version__ = "0.1.0"
