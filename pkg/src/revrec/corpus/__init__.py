from .io import IngestReport, load_records, read_reviews, write_reviews, write_split
from .records import ReviewRecord, Sentence, normalize_rating, records_by, segment_sentences, tokenize
from .splits import DatasetSplit, select_subset, split_dataset
from .vocab import (
    AUTOENCODER_DICTIONARY,
    RAW_DICTIONARY,
    Dictionary,
    DictionaryConfig,
    SparseBinaryVector,
    build_dictionary,
    load_stopwords,
    stack_dense,
    union_all,
    vectorize,
)

__all__ = [
    "AUTOENCODER_DICTIONARY",
    "DatasetSplit",
    "Dictionary",
    "DictionaryConfig",
    "IngestReport",
    "RAW_DICTIONARY",
    "ReviewRecord",
    "Sentence",
    "SparseBinaryVector",
    "build_dictionary",
    "load_records",
    "load_stopwords",
    "normalize_rating",
    "read_reviews",
    "records_by",
    "segment_sentences",
    "select_subset",
    "split_dataset",
    "stack_dense",
    "tokenize",
    "union_all",
    "vectorize",
    "write_reviews",
    "write_split",
]
