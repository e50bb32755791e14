"""Exception types shared across the RoadTagger packages."""

from __future__ import annotations


class RoadTaggerError(ValueError):
    """Base class for every error raised on purpose by this project."""


class ShapeError(RoadTaggerError):
    def __init__(self, op: str, *shapes: tuple[int, ...]) -> None:
        rendered = " and ".join(str(tuple(shape)) for shape in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")
        self.op = op
        self.shapes = shapes


class NonFiniteError(RoadTaggerError):
    def __init__(self, op: str) -> None:
        super().__init__(f"{op}: produced NaN or Inf values")
        self.op = op


class TapeError(RoadTaggerError):
    pass


class ParseError(RoadTaggerError):
    def __init__(self, message: str, *, line: int | None = None, column: int | None = None, context: str | None = None) -> None:
        location = ""
        if line is not None:
            location = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        text = location + message
        if context:
            text += f"\n    {context.strip()}"
        super().__init__(text)
        self.line = line
        self.column = column


class MissingNodeError(ParseError):
    def __init__(self, way_id: str, node_id: str) -> None:
        super().__init__(f"way {way_id} references missing node {node_id}")
        self.way_id = way_id
        self.node_id = node_id


class ConfigError(RoadTaggerError):
    pass


class EmptyLossError(RoadTaggerError):
    def __init__(self) -> None:
        super().__init__("empty loss set")


class TrainingDivergedError(RoadTaggerError):
    def __init__(self, iteration: int, detail: str) -> None:
        super().__init__(f"training diverged at iteration {iteration}: {detail}")
        self.iteration = iteration


class DisruptionError(RoadTaggerError):
    pass


class EmptyMaskError(RoadTaggerError):
    def __init__(self, what: str) -> None:
        super().__init__(f"{what}: no unmasked vertices")


class CoverageError(RoadTaggerError):
    pass
