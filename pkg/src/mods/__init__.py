"""Writer-invariant similarity scoring for handwritten document images."""

from .ann import VectorIndex, build, query_knn
from .assignment import solve, total_cost
from .descriptor import (
    DescriptorConfig,
    baseline_descriptor,
    default_lexicon,
    is_stopword,
    load_lexicon,
    synth_embed,
)
from .docmodel import (
    Box,
    CorpusManifest,
    DocumentRecord,
    EmbeddingRecord,
    EmbeddingStore,
    WordBox,
    read_embeddings,
    read_manifest,
    validate_embeddings,
    write_embeddings,
    write_manifest,
)
from .errors import FormatError, InvariantError, ModsError
from .fixtures import FixtureSpec, docsim_spec, gen_fixtures, reflow_line_breaks
from .matcher import (
    MatchConfig,
    PairScore,
    Region,
    RegionMatch,
    content_words,
    mods_score,
    rank_corpus,
    region_score,
    score_corpus,
    swm_score,
    tile_regions,
)
from .metrics import (
    MeanAPResult,
    RankedList,
    average_precision,
    inexact_match,
    mean_ap,
    ndcg_at,
    roc_auc,
)
from .segmenter import (
    ConnectedComponent,
    LineHypothesis,
    SegmenterConfig,
    SizeClasses,
    WordHypothesisSet,
    build_lines,
    extract_components,
    group_words,
    pair_cost,
    partition_components,
    segment_page,
)
from .stemmer import porter_stem

__version__ = "0.1.0"
