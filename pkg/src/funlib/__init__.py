"""Fill-in-the-blank humorous story generation engine and evaluation toolkit."""

from .errors import FunlibError
from .templates import (
    Blank,
    FilledStory,
    HintType,
    LiteralToken,
    MASK,
    MaskedSentence,
    SentenceTemplate,
    Source,
    StoryTemplate,
    TemplateError,
    load_template,
    mask_all,
    mask_sentence,
    parse_template,
    render_partial,
    render_sentence,
    render_story,
    serialize_template,
)
from .lexicon import (
    Lexicon,
    LexiconEntry,
    LexiconError,
    NumberForm,
    PartOfSpeech,
    SemanticClass,
    TenseForm,
    load_blocklist,
    load_lexicon,
)
from .scoring import (
    CapabilityError,
    CompositeScorer,
    FeatureHumorScorer,
    HashEmbedder,
    HumorWeights,
    Locale,
    MaskScore,
    NgramMaskScorer,
    ScorerBundle,
    ScorerError,
    cosine_similarity,
    feature_humor_scorer,
    hash_embedder,
    sentence_embedding,
    train_ngram_scorer,
)
from .fill import (
    FillError,
    FillParams,
    Transformation,
    UnfillableBlankError,
    fill_sentence_beam,
    fill_sentence_mlm_baseline,
    select_candidates,
)
from .compose import (
    BaselineStory,
    CompletedStory,
    ComposeError,
    ComposeParams,
    RankMode,
    avg_word_coherence,
    compose_story,
    compose_story_mlm,
    finalize_ranking,
    story_funniness,
)
from .annotation import (
    AnnotationError,
    JudgementRecord,
    LabeledPair,
    Origin,
    Split,
    Variant,
    build_dataset,
    judgements_to_csv,
    load_variants,
    make_augmented_pair,
    mfg,
    qualify_judge,
    qualify_player,
    read_judgements,
    sample_augmentation_sentences,
    sentence_label,
    word_label,
    write_judgements,
)
from .metrics import (
    AlphaMetric,
    EvalConfig,
    MetricsError,
    ReliabilityMatrix,
    TopSelection,
    krippendorff_alpha,
    mfg_cells,
    pearson_r,
    reliability_from_judgements,
)
from .remote import (
    RemoteError,
    RemoteScorer,
    ResponseInvariantError,
    ResponseSchemaError,
    TransportError,
    remote_scorer,
)

__version__ = "0.1.0"
