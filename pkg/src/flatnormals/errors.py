"""Exception hierarchy shared by the library and the CLI.

Each class carries a ``kind`` string that the CLI prints on the diagnostic
stream and maps to an exit status.
"""


class FlatNormalsError(Exception):
    kind = "internal error"
    exit_status = 1

    def __init__(self, detail=""):
        self.detail = detail
        super().__init__(f"{self.kind}: {detail}" if detail else self.kind)


class FormatError(FlatNormalsError, ValueError):
    kind = "format error"
    exit_status = 2


class InputIOError(FlatNormalsError, OSError):
    kind = "io error"
    exit_status = 2


class ShapeError(FlatNormalsError, ValueError):
    kind = "shape error"
    exit_status = 2


class ConfigError(FlatNormalsError, ValueError):
    kind = "config error"
    exit_status = 2


class InvalidDepthError(FlatNormalsError, ValueError):
    kind = "invalid depth"
    exit_status = 2


class DegenerateVectorError(FlatNormalsError, ValueError):
    kind = "degenerate vector"


class NonFiniteVectorError(FlatNormalsError, ValueError):
    kind = "non-finite vector"


class LabelError(FlatNormalsError, ValueError):
    kind = "label error"
    exit_status = 2


class EmptyEvaluationError(FlatNormalsError, ValueError):
    kind = "empty evaluation"
    exit_status = 3


class EmptyLossError(FlatNormalsError, ValueError):
    kind = "empty loss"
