"""Keras HDF5 -> JWB1 checkpoint exporter for the segmentation engine."""

from .detect import Detection, UnrecognizedArchitecture, detect
from .export import ExportManifest, canonical_records, export
from .hdf5 import SourceLayer, read_checkpoint

__version__ = "0.1.0"

__all__ = [
    "Detection",
    "ExportManifest",
    "SourceLayer",
    "UnrecognizedArchitecture",
    "canonical_records",
    "detect",
    "export",
    "read_checkpoint",
]
