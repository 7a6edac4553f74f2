"""Exception hierarchy shared by all normforge modules."""


class NormforgeError(Exception):
    """Base class for all errors raised by this package."""


class FactFileError(NormforgeError):
    """Fact file cannot be parsed or violates a structural invariant.

    ``line`` and ``column`` are set when the underlying JSON is malformed;
    ``token`` names the offending identifier for duplicate-id and
    dangling-reference errors.
    """

    def __init__(self, message, line=None, column=None, token=None):
        super().__init__(message)
        self.line = line
        self.column = column
        self.token = token


class TaxonomyCycleError(NormforgeError):
    """Concept taxonomy contains a cycle; ``cycle`` lists its concept ids."""

    def __init__(self, cycle):
        super().__init__("taxonomy cycle: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class NormParseError(NormforgeError):
    """LRML-S document is malformed or violates a rulebase invariant."""

    def __init__(self, message, token=None):
        super().__init__(message)
        self.token = token


class StratificationError(NormforgeError):
    """Negation-as-failure cycles through ``cycle`` (predicate names)."""

    def __init__(self, cycle):
        super().__init__(
            "program is not stratified; naf cycle through: " + ", ".join(cycle)
        )
        self.cycle = list(cycle)


class UnknownLiteralError(NormforgeError):
    """Queried literal lies outside the grounding vocabulary."""


class NotProvableError(NormforgeError):
    """explain() was asked for a literal without a positive proof tag."""


class StoreError(NormforgeError):
    """Versioned store operation failed; the store is left unchanged."""


class PipelineError(NormforgeError):
    """A stage could not be evaluated; ``stage`` names the failing stage."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
