"""Exception hierarchy shared by every module."""


class BBCError(Exception):
    """Base class for errors raised by this package."""


class DegenerateMetricError(BBCError, ValueError):
    """A metric cannot be computed on the given rows (e.g. single-class AUC)."""


class ResamplingError(BBCError, ValueError):
    """Invalid fold plan or bootstrap request, or the redraw bound was exhausted."""


class SelectionError(BBCError):
    """No configuration has enough predictions to be selected."""


class GridError(BBCError, ValueError):
    """Malformed configuration grid."""


class LearnerError(BBCError):
    """A learner failed to train or predict."""


class ParseError(BBCError, ValueError):
    """Malformed prediction-matrix, dataset or grid file."""
