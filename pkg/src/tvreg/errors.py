"""Exception types shared across the package."""


class TvregError(Exception):
    """Base class for every error raised by tvreg."""


class ParseError(TvregError):
    """A CSV cell could not be parsed; carries the 1-based position."""

    def __init__(self, line, column, message="unparseable field"):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class EmptyFile(TvregError):
    """The input file contains no usable rows."""


class DegenerateWindow(TvregError):
    """A temporal kernel window holds too little mass to form weights."""


class DegenerateDensity(TvregError):
    """The kernel density estimate vanished at a required point."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class SingularGram(TvregError):
    """A weighted Gram matrix stayed ill-conditioned after ridging."""

    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message)


class ZeroIQR(TvregError):
    """A predictor coordinate is constant across its quartile range."""

    def __init__(self, message, coordinate=None):
        self.coordinate = coordinate
        super().__init__(message)


class FoldTooSmall(TvregError):
    """Cross-validation folds leave too few points to fit on."""


class ZeroNoise(TvregError):
    """Residuals are identically zero, so a noise ratio is undefined."""


class DivergentRecursion(TvregError):
    """An autoregressive recursion left the stable range."""


class CellFailure(TvregError):
    """Too many replications of one study cell errored out."""
