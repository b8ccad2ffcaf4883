"""JSON input files: strict pydantic models and loaders."""

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Literal, TypeVar

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, RootModel, ValidationError

from .errors import InputError
from .graphs import OrientedEdge, StableGraph, Tail
from .groupoid import Fusing, HalfTwist, Move, Simple
from .models import BlockSeries

_RATIONAL = re.compile(r"^\s*[+-]?\d+(\s*/\s*[+-]?\d+)?\s*$")


def parse_rational(text) -> Fraction:
    """Parse ``P`` or ``P/Q`` (integers, Q != 0) exactly."""
    if isinstance(text, (int, Fraction)) and not isinstance(text, bool):
        return Fraction(text)
    text = str(text)
    if not _RATIONAL.match(text):
        raise InputError(f"{text!r} is not a rational of the form P/Q", value=text)
    num, _, den = text.replace(" ", "").partition("/")
    if den and int(den) == 0:
        raise InputError(f"{text!r} has a zero denominator", value=text)
    return Fraction(int(num), int(den) if den else 1)


def _check_rational(value: str) -> str:
    try:
        parse_rational(value)
    except InputError as exc:
        raise ValueError(exc.message) from None
    return value


def _check_alpha(value: str) -> str:
    return value if value == "inf" else _check_rational(value)


RationalStr = Annotated[str, AfterValidator(_check_rational)]
AlphaStr = Annotated[str, AfterValidator(_check_alpha)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TailSpec(_Strict):
    vertex: str
    number: int


class GraphSpec(_Strict):
    vertices: list[str]
    edges: list[tuple[str, str]] = Field(default_factory=list)
    tails: list[TailSpec] = Field(default_factory=list)

    def to_graph(self) -> StableGraph:
        return StableGraph(
            tuple(self.vertices),
            tuple(self.edges),
            tuple(Tail(t.vertex, t.number) for t in self.tails),
        )


class AlphaTable(RootModel[dict[str, AlphaStr]]):
    """{branch id: rational or "inf"} with branch ids like "0+" and "0-"."""

    def to_alpha(self, graph: StableGraph) -> dict[OrientedEdge, Fraction | None]:
        alpha = {}
        for label, value in self.root.items():
            h = OrientedEdge.parse(label)
            if h.edge >= len(graph.edges):
                raise InputError(f"alpha table names unknown branch {label!r}", key=label)
            alpha[h] = None if value == "inf" else parse_rational(value)
        return alpha


class MoveSpec(_Strict):
    kind: Literal["fusing", "simple", "half_twist"]
    edge: int = Field(ge=0)
    selector: Literal["left", "right"] | None = None


class WordSpec(_Strict):
    moves: list[MoveSpec]
    start: GraphSpec | None = None

    def to_word(self) -> list[Move]:
        word: list[Move] = []
        for move in self.moves:
            if move.kind == "fusing":
                word.append(Fusing(move.edge, move.selector or "left"))
            elif move.kind == "simple":
                word.append(Simple(move.edge))
            else:
                word.append(HalfTwist(move.edge))
        return word


class BetaTable(RootModel[dict[str, RationalStr]]):
    """{edge id: conformal dimension}."""

    def to_beta(self) -> dict[int, Fraction]:
        beta = {}
        for key, value in self.root.items():
            if not key.isdigit():
                raise InputError(f"beta table key {key!r} is not an edge id", key=key)
            beta[int(key)] = parse_rational(value)
        return beta


class ExternalTable(RootModel[dict[str, RationalStr]]):
    """{tail number: conformal dimension}."""

    def to_weights(self) -> dict[int, Fraction]:
        weights = {}
        for key, value in self.root.items():
            if not key.isdigit():
                raise InputError(f"external weight key {key!r} is not a tail number", key=key)
            weights[int(key)] = parse_rational(value)
        return weights


class BlockSeriesSpec(_Strict):
    delta_beta: RationalStr
    coefficients: list[RationalStr] = Field(min_length=1)
    half_twists: int = 0
    order: int | None = None

    def to_series(self) -> BlockSeries:
        series = BlockSeries.from_dict(self.model_dump())
        if self.order is not None and self.order != series.order:
            raise InputError(f"order {self.order} does not match {len(self.coefficients)} coefficients", key="order")
        return series


Model = TypeVar("Model", bound=BaseModel)


def _location(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def parse_payload(data, model: type[Model], source: str = "<input>") -> Model:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = _location(first)
        raise InputError(f"{source}: {key}: {first['msg']}", key=key, source=source) from None


def read_json(path: str | Path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file", source=str(path)) from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})", source=str(path)) from None


def load(path: str | Path, model: type[Model]) -> Model:
    return parse_payload(read_json(path), model, str(path))


def load_graph(path: str | Path) -> StableGraph:
    return load(path, GraphSpec).to_graph()


def load_series(path: str | Path) -> BlockSeries:
    """A bare series object, or a report whose ``result`` is one."""
    data = read_json(path)
    if isinstance(data, dict) and "result" in data and "command" in data:
        data = data["result"]
    return parse_payload(data, BlockSeriesSpec, str(path)).to_series()
