"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model or run configuration."""


class ShapeError(ValueError):
    """Operands with inconsistent dimensions."""


class NumericError(ArithmeticError):
    """Non-finite values where finite numbers are required."""


class DivergenceError(ArithmeticError):
    """A sweep produced an exploding or non-finite intermediate.

    Carries the (1-based) sweep and branch indices where the blow-up
    was detected.
    """

    def __init__(self, sweep: int, branch: int, detail: str = ""):
        self.sweep = sweep
        self.branch = branch
        msg = f"divergence at sweep {sweep}, branch {branch}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ParseError(ValueError):
    """Malformed input file. Carries the byte offset of the problem."""

    def __init__(self, offset: int, detail: str):
        self.offset = offset
        super().__init__(f"parse error at byte {offset}: {detail}")


class LoadError(ValueError):
    """Malformed serialized model/dataset. Carries the offending field path."""

    def __init__(self, path: str, detail: str):
        self.path = path
        super().__init__(f"load error at {path}: {detail}")
