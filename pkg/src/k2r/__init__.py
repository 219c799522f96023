"""Two-step knowledge-to-response dialogue pipelines and their tooling.

The pipeline predicts an intermediate knowledge sequence from the dialogue
context, then conditions a response generator on context plus that knowledge.
This package provides the composition engine, deterministic toy backends and
an HTTP wire client, training-data builders, a QA dataset forge, the metric
suite, an evaluation harness with CLI, and an HTTP service for interactive
knowledge injection.
"""

from .backends import (
    Backend,
    BackendDescriptor,
    BackendError,
    Beam,
    CorpusLookupBackend,
    EchoBackend,
    GenerationRequest,
    HttpBackend,
    TemplateBackend,
    build_backend,
    generate,
    knowledge_span,
)
from .databuild import (
    PhraseSpan,
    SkipExample,
    TrainingExample,
    build_confidence_file,
    build_supervised_file,
    build_unsupervised_file,
    corrupt_with_confidence,
    extract_phrases,
    make_supervised_pair,
    make_unsupervised_pair,
)
from .forge import ForgeRecord, ForgeResult, extract_candidates, forge_dataset, qa_filter, summarize
from .harness import DataError, EvalRunConfig, ExcessiveFailures, confidence_sweep, eval_task
from .metrics import (
    MetricReport,
    RarityTable,
    answer_present,
    bleu4,
    build_rarity_table,
    build_report,
    knowledge_f1,
    normalize,
    rare_f1,
    rouge_l,
    unigram_f1,
)
from .pipeline import (
    DialogueEpisode,
    K2RConfig,
    PipelineStepError,
    PipelineTrace,
    Turn,
    derive_seed,
    filter_select,
    load_episodes,
    predict_knowledge,
    respond,
    run_episode,
    serialize_context,
    serialize_response_input,
    write_episodes,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendDescriptor",
    "BackendError",
    "Beam",
    "CorpusLookupBackend",
    "DataError",
    "DialogueEpisode",
    "EchoBackend",
    "EvalRunConfig",
    "ExcessiveFailures",
    "ForgeRecord",
    "ForgeResult",
    "GenerationRequest",
    "HttpBackend",
    "K2RConfig",
    "MetricReport",
    "PhraseSpan",
    "PipelineStepError",
    "PipelineTrace",
    "RarityTable",
    "SkipExample",
    "TemplateBackend",
    "TrainingExample",
    "Turn",
    "answer_present",
    "bleu4",
    "build_backend",
    "build_confidence_file",
    "build_rarity_table",
    "build_report",
    "build_supervised_file",
    "build_unsupervised_file",
    "confidence_sweep",
    "corrupt_with_confidence",
    "derive_seed",
    "eval_task",
    "extract_candidates",
    "extract_phrases",
    "filter_select",
    "forge_dataset",
    "generate",
    "knowledge_f1",
    "knowledge_span",
    "load_episodes",
    "make_supervised_pair",
    "make_unsupervised_pair",
    "normalize",
    "predict_knowledge",
    "qa_filter",
    "rare_f1",
    "respond",
    "rouge_l",
    "run_episode",
    "serialize_context",
    "serialize_response_input",
    "summarize",
    "unigram_f1",
    "write_episodes",
]
