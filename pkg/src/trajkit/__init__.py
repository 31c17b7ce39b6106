"""Toolchain for agent trajectory data: unify, validate, filter, render, evaluate."""

from .convert import upgrade_legacy
from .critique import (
    CritiqueResult,
    EvaluatorConfig,
    Exemplar,
    HttpEvaluator,
    RubricScores,
    StubEvaluator,
    build_critique_prompt,
    compute_agreement,
    critique,
    decide,
    parse_critique_response,
)
from .errors import (
    ConversionError,
    CritiqueParseError,
    EvaluatorUnavailableError,
    InputError,
    PromptTooLongError,
    RecordSyntaxError,
    SchemaError,
    TemplateError,
    ToolCallParseError,
    TrajkitError,
)
from .render import (
    SIMPLE,
    RenderedSample,
    Span,
    TemplateSpec,
    render_alpaca,
    render_chat,
    render_sharegpt,
)
from .schema import (
    LegacyTrajectory,
    Message,
    ToolCall,
    ToolSpec,
    UnifiedTrajectory,
    classify_turns,
    parse_legacy_trajectory,
    parse_trajectory,
    serialize_trajectory,
)
from .stats import CorpusStats, compute_stats, render_report
from .tooleval import (
    EvalReport,
    MatchCounts,
    compute_metrics,
    evaluate_corpus,
    match_calls,
    parse_tool_calls,
    sanitize_output,
)
from .validation import (
    Finding,
    ValidationPolicy,
    apply_rule_filter,
    check_format,
    check_template_fit,
    check_tool_consistency,
    run_checks,
)

__all__ = [name for name in dir() if not name.startswith("_")]
