"""Exception hierarchy shared by every stage of the lesion pipeline."""


class CtLesionError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CtLesionError, ValueError):
    """Raster stream is not a binary P5 PGM."""


class DepthError(CtLesionError, ValueError):
    """PGM maxval other than 255."""


class SizeError(CtLesionError, ValueError):
    """Pixel payload shorter than the header announces."""


class DimensionError(CtLesionError, ValueError):
    """Two rasters that must share a shape do not."""


class EmptyRegionError(CtLesionError, ValueError):
    """A region of interest (or lung candidate set) contains no pixels."""


class DegenerateHistogramError(CtLesionError, ValueError):
    """Histogram has fewer than two occupied bins."""


class OracleScopeError(CtLesionError, ValueError):
    """Exhaustive search requested for too many cuts."""


class AmbiguousClassError(CtLesionError, ValueError):
    """Two classes share the maximal mean so the lesion class is undefined."""


class SpecError(CtLesionError, ValueError):
    """Invalid phantom geometry or intensities."""


class EmptyScopeError(CtLesionError, ValueError):
    """Confusion matrix with no scored pixels."""


class EmptyCorpusError(CtLesionError, ValueError):
    """Aggregation requested over zero results."""


class ConfigError(CtLesionError, ValueError):
    """Unknown key or malformed value in a pipeline configuration."""


class PipelineError(CtLesionError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
