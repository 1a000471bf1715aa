from ppgssl.data.records import (
    DALIA_CODES,
    STUDIED_CLASSES,
    ActivityCodeTable,
    Dataset,
    SubjectRecord,
    make_record,
)
from ppgssl.data.io import load_dataset, read_subject, subject_filename, write_subject
from ppgssl.data.synthetic import (
    DEFAULT_SCHEDULE,
    SyntheticConfig,
    synthesize_dataset,
    synthesize_subject,
)

__all__ = [
    "ActivityCodeTable",
    "DALIA_CODES",
    "Dataset",
    "DEFAULT_SCHEDULE",
    "STUDIED_CLASSES",
    "SubjectRecord",
    "SyntheticConfig",
    "load_dataset",
    "make_record",
    "read_subject",
    "subject_filename",
    "synthesize_dataset",
    "synthesize_subject",
    "write_subject",
]
