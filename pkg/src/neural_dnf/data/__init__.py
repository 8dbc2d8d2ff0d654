from .dataset import (
    MULTICLASS,
    MULTILABEL,
    Dataset,
    DatasetFormatError,
    load_dataset_csv,
    load_splits,
    save_dataset_csv,
    save_splits,
    split,
    split_counts,
)
from .mi import attribute_mi, filter_by_mi, mutual_information
from .synthetic import SyntheticGroundTruth, gen_synthetic_multiclass, gen_synthetic_multilabel

__all__ = [
    "MULTICLASS",
    "MULTILABEL",
    "Dataset",
    "DatasetFormatError",
    "SyntheticGroundTruth",
    "attribute_mi",
    "filter_by_mi",
    "gen_synthetic_multiclass",
    "gen_synthetic_multilabel",
    "load_dataset_csv",
    "load_splits",
    "mutual_information",
    "save_dataset_csv",
    "save_splits",
    "split",
    "split_counts",
]
