"""
Exception hierarchy shared by every package.

Each error subclasses the closest builtin as well, so callers that only know
about ValueError / TypeError keep working.
"""


class IBPToolkitError(Exception):
    """Base class for all toolkit errors"""


class DimensionError(IBPToolkitError, ValueError):
    """Shapes do not line up, an axis is invalid, or a reduction is empty"""


class ArgumentError(IBPToolkitError, ValueError):
    """A numeric argument is outside its allowed range"""


class ContractError(IBPToolkitError, ValueError):
    """A pre-condition of an operation does not hold"""


class UnsupportedOpError(IBPToolkitError, TypeError):
    """A primitive without a backward rule was used inside a recorded computation"""


class BuildError(IBPToolkitError, ValueError):
    """The architecture description does not chain"""


class ConfigError(IBPToolkitError, ValueError):
    """Invalid configuration document, override or path"""


class CheckpointError(IBPToolkitError, ValueError):
    """Checkpoint container is corrupt, truncated or from another format version"""


class ParseError(IBPToolkitError, ValueError):
    """Binary dataset file could not be parsed"""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class NumericError(IBPToolkitError, ArithmeticError):
    """NaN or Inf showed up in a forward/backward pass"""

    def __init__(self, message: str, layer: str | None = None, step: int | None = None):
        self.layer = layer
        self.step = step
        context = []
        if layer is not None:
            context.append(f"layer={layer}")
        if step is not None:
            context.append(f"step={step}")
        if context:
            message = f"{message} [{', '.join(context)}]"
        super().__init__(message)
