"""Exception types shared across the pipeline."""

from __future__ import annotations


class SourceError(Exception):
    """Error tied to a position in a source file."""

    def __init__(self, message: str, line: int | None = None,
                 col: int | None = None, filename: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename

    def format(self) -> str:
        parts = [self.filename or "<input>"]
        if self.line is not None:
            parts.append(str(self.line))
            if self.col is not None:
                parts.append(str(self.col))
        return "%s: %s" % (":".join(parts), self.message)

    def __str__(self) -> str:
        return self.format()


class CParseError(SourceError):
    pass


class UnsupportedConstructError(CParseError):
    """Input uses a C construct outside the supported subset."""

    def __init__(self, construct: str, line=None, col=None, filename=None):
        super().__init__("unsupported construct: %s" % construct, line, col, filename)
        self.construct = construct


class PragmaError(CParseError):
    pass


class TransformError(SourceError):
    pass


class AnalysisError(SourceError):
    pass


class PlanError(Exception):
    pass


class ExploreError(Exception):
    pass


class ReportError(Exception):
    pass
