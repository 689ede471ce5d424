"""codematch: a query-code matching workbench.

Data pipeline (intent filtering, candidate curation, two-step annotation
with agreement filtering) plus a contrastively trained siamese matcher
with code-search (MRR) and code-question-answering (accuracy) evaluation.
"""

__version__ = "0.1.0"

from .agreement import (
    AgreementPolicy,
    AgreementReport,
    AgreementTable,
    DegenerateAgreementError,
    filter_by_agreement,
    krippendorff_alpha,
    majority_label,
)
from .curation import CandidatePair, CurationConfig, cosine, curate
from .data import (
    Corpus,
    CorpusError,
    CorpusStats,
    LabeledPair,
    Query,
    SplitSpec,
    load_codebase,
    load_pairs,
    make_splits,
    save_pairs,
    stats,
)
from .encoder import BagEncoder, Vocabulary, tokenize
from .evaluation import CodeBase, ablation_run, qa_accuracy, search_mrr
from .funcparse import (
    CodeFunction,
    ComponentMask,
    ParseError,
    clean_filter,
    parse_function,
    strip_components,
)
from .intent import (
    FilterVerdict,
    RuleSet,
    classify,
    default_rules,
    evaluate_filter,
    prefilter_python,
)
from .losses import (
    loss_base,
    loss_base_from_logit,
    loss_inbatch,
    loss_inbatch_from_logits,
    loss_qra,
    rewrite_query,
)
from .matcher import MatcherHead
from .model import ContrastiveMatcher
from .synth import SynthConfig, generate
from .train import TrainConfig, TrainingDiverged

__all__ = [
    "AgreementPolicy",
    "AgreementReport",
    "AgreementTable",
    "BagEncoder",
    "CandidatePair",
    "CodeBase",
    "CodeFunction",
    "ComponentMask",
    "ContrastiveMatcher",
    "Corpus",
    "CorpusError",
    "CorpusStats",
    "CurationConfig",
    "DegenerateAgreementError",
    "FilterVerdict",
    "LabeledPair",
    "MatcherHead",
    "ParseError",
    "Query",
    "RuleSet",
    "SplitSpec",
    "SynthConfig",
    "TrainConfig",
    "TrainingDiverged",
    "Vocabulary",
    "ablation_run",
    "classify",
    "clean_filter",
    "cosine",
    "curate",
    "default_rules",
    "evaluate_filter",
    "filter_by_agreement",
    "generate",
    "krippendorff_alpha",
    "load_codebase",
    "load_pairs",
    "loss_base",
    "loss_base_from_logit",
    "loss_inbatch",
    "loss_inbatch_from_logits",
    "loss_qra",
    "majority_label",
    "make_splits",
    "parse_function",
    "prefilter_python",
    "qa_accuracy",
    "rewrite_query",
    "save_pairs",
    "search_mrr",
    "stats",
    "strip_components",
    "tokenize",
]
