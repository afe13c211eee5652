from .manifest import Dataset, ManifestError, Sample, load_manifest, write_manifest
from .matrix import load_feature_matrix, save_feature_matrix
from .pgm import read_pgm, write_pgm

__all__ = [
    "Dataset",
    "ManifestError",
    "Sample",
    "load_manifest",
    "write_manifest",
    "load_feature_matrix",
    "save_feature_matrix",
    "read_pgm",
    "write_pgm",
]
