"""Exception hierarchy shared by every lvsa module."""


class LvsaError(Exception):
    """Base class; the CLI maps any subclass to exit status 1."""


class ParseError(LvsaError):
    pass


class VocabularyError(LvsaError):
    pass


class BoundsError(LvsaError, IndexError):
    pass


class StructureError(LvsaError):
    pass


class CycleError(StructureError):
    pass


class UnknownVariableError(StructureError, KeyError):
    pass


class ArityError(LvsaError):
    pass


class DimensionError(LvsaError, ValueError):
    pass


class SamplingError(LvsaError):
    pass


class MetricError(LvsaError):
    pass


class DataError(LvsaError):
    pass


class ConfigError(LvsaError):
    pass


class FormatError(LvsaError):
    """Checkpoint magic/version/header is not something we can read."""


class IntegrityError(LvsaError):
    """Checkpoint is truncated or its checksum does not match."""


class StageOrderError(LvsaError):
    pass
