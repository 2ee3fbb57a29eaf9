"""Exception types shared across the pipeline."""


class RadevalError(Exception):
    """Base class for pipeline errors."""


class SchemaError(RadevalError):
    """An input file is missing required columns or keys."""


class IngestionError(RadevalError):
    """Input rows violate ingestion invariants (duplicate ids, bad values)."""


class ConfigError(RadevalError):
    """The pipeline config is missing, unreadable, or invalid."""
