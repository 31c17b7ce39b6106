"""Exception types shared across the toolchain."""


class TrajkitError(Exception):
    """Base class for all trajkit errors."""


class RecordSyntaxError(TrajkitError):
    """The input text is not a well-formed document at all."""


class SchemaError(TrajkitError):
    """The document parsed but violates the trajectory schema.

    Carries a location path (``$.conversation[2].tool_call_id`` style) that
    points at the offending node in the input document.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.reason = message


class ConversionError(TrajkitError):
    """A legacy record cannot be upgraded mechanically."""


class TemplateError(TrajkitError):
    """A trajectory cannot be rendered under the given template."""


class PromptTooLongError(TrajkitError):
    """The critique prompt cannot fit the character budget even after truncation."""


class CritiqueParseError(TrajkitError):
    """No structured critique object is recoverable from evaluator output."""


class EvaluatorUnavailableError(TrajkitError):
    """The critique evaluator stayed unreachable after all retries."""


class ToolCallParseError(TrajkitError):
    """No tool-call object or list is recoverable from raw model output."""


class InputError(TrajkitError):
    """Evaluation input files are inconsistent (e.g. id mismatch)."""
