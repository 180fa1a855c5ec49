from services.errors import RoboPainterError


class ParamsError(RoboPainterError):
    """Base class for parameter file problems"""


class MissingKey(ParamsError):
    """A required parameter symbol is absent from the document"""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"missing parameter key: {name}")


class UnitViolation(ParamsError):
    """A section declares units the loader does not convert"""

    def __init__(self, key: str, detail: str = "") -> None:
        self.key = key
        message = f"unsupported unit for {key}"
        super().__init__(f"{message}: {detail}" if detail else message)


class InvariantViolation(ParamsError):
    """A loaded value breaks a model invariant"""

    def __init__(self, description: str) -> None:
        self.description = description
        super().__init__(description)
