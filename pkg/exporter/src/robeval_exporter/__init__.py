"""Adapter that runs a trained image classifier over image directories
and writes logit files in the robeval wire format.

The adapter is deliberately independent of the engine package: it talks
to robeval only through the on-disk formats (logit CSV plus manifest
fragment), so either side can be swapped out without touching the other.
It always emits raw pre-activation logits, never probabilities, because
the max-logit and energy scores cannot be recovered after a softmax.
"""

from .export import ExportJob, KNOWN_TYPES, TYPE_TAGS, discover_images, export_logits
from .models import load_model
from .preprocess import load_image, prepare, resize_bilinear, to_channels

__all__ = [
    "ExportJob",
    "KNOWN_TYPES",
    "TYPE_TAGS",
    "discover_images",
    "export_logits",
    "load_model",
    "load_image",
    "prepare",
    "resize_bilinear",
    "to_channels",
]
