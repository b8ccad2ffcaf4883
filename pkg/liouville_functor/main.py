"""Orchestration: RunConfig -> module operations -> report."""

import json
import logging
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import mpmath

from . import blocks, formats, graphs, groupoid, schottky, virasoro
from .errors import FunctorError, GraphError, InputError
from .models import RunConfig

logger = logging.getLogger(__name__)


@dataclass
class Report:
    command: str
    inputs: dict[str, Any]
    result: Any = None
    meta: dict[str, Any] | None = None
    timing_ms: float | None = None
    error: dict | None = None
    status: int = 0

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "result": self.result,
            "timing_ms": self.timing_ms,
        }
        if self.meta is not None:
            out["meta"] = self.meta
        if self.error is not None:
            out["error"] = self.error
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _echo(value: Any) -> Any:
    if isinstance(value, (Fraction, Path)):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_echo(v) for v in value]
    return value


def _num(x, precision: int) -> str:
    return mpmath.nstr(x, precision)


def _complex(z, precision: int) -> dict:
    z = mpmath.mpc(z)
    return {"re": _num(z.real, precision), "im": _num(z.imag, precision)}


def _matrix(rows) -> list[list[str]]:
    return [[str(x) for x in row] for row in rows]


def _label(lam: tuple[int, ...]) -> str:
    return "e" if not lam else " ".join(f"L_-{p}" for p in lam)


# -- handlers ------------------------------------------------------------------------------
# Each returns (result, meta).

def _graphs_enumerate(config: RunConfig):
    g, n = config.params["genus"], config.params["tails"]
    found = graphs.enumerate_trivalent(g, n)
    return {"count": len(found), "graphs": [x.to_dict() for x in found]}, None


def _graphs_validate(config: RunConfig):
    graph = formats.load_graph(config.params["graph"])
    report = graphs.validate(graph)
    if not report.ok:
        raise GraphError(report.message, invariant=report.invariant, subject=report.subject)
    rigid = graphs.find_rigidification(graph)
    curve = graphs.degenerate_curve_description(graph, rigid)
    return {
        "genus": graphs.genus(graph),
        "tails": graph.n_tails,
        "trivalent": graphs.is_trivalent(graph),
        "rigidification": rigid.to_dict(),
        "curve": curve.to_dict(),
        "coordinates": graphs.coordinate_system(graph, rigid),
    }, None


def _schottky_verify(config: RunConfig):
    p = config.params
    graph = formats.load_graph(p["graph"])
    extended = bool(graph.tails)
    if extended:
        graph = graphs.extend_without_tails(graph)
    rng = random.Random(config.seed)
    report = schottky.SchottkyReport(cutoff=p["cutoff"])
    if p.get("alpha"):
        table = formats.load(p["alpha"], formats.AlphaTable).to_alpha(graph)
        data = schottky.SchottkyData(graph, table, p["cutoff"])
        schottky.verify(data, p["samples"], rng, report)
    else:
        for _ in range(p["samples"]):
            data = schottky.SchottkyData(graph, schottky.random_alpha(graph, rng), p["cutoff"])
            schottky.verify(data, 1, rng, report)
    result = report.to_dict()
    result["extended"] = extended
    result["generators"] = len(schottky.generator_loops(graph))
    return result, None


def _gram(config: RunConfig):
    p = config.params
    params = virasoro.LiouvilleParams(p["b"])
    level = p["level"]
    matrix = virasoro.gram_matrix(params, p["delta"], level)
    meta = {"basis": [_label(lam) for lam in virasoro.partitions(level)], "central_charge": str(params.c)}
    return _matrix(matrix), meta


def _char(config: RunConfig):
    return virasoro.character(config.params["delta"], config.params["order"]).to_dict(), None


def _weight(config: RunConfig):
    p = config.params
    params = virasoro.LiouvilleParams(p["b"])
    out = {"b": str(params.b), "Q": str(params.Q), "c": str(params.c)}
    if p.get("length") is not None:
        weight = virasoro.weight_from_length(params, p["length"], config.precision)
        out.update(weight.to_dict())
    elif p.get("alpha") is not None:
        out.update(virasoro.weight_from_alpha(params, p["alpha"]).to_dict())
    else:
        out.update(virasoro.weight_from_momentum(params, p.get("momentum") or Fraction(0)).to_dict())
    return out, None


def _block4(config: RunConfig):
    p = config.params
    params = virasoro.LiouvilleParams(p["b"])
    externals = (p["d1"], p["d2"], p["d3"], p["d4"])
    series = blocks.glue_four_point_grid(params, externals, p["dbeta"], p["order"], config.threads, p["family"])
    results = [s.to_dict() for s in series]
    return (results[0] if len(results) == 1 else results), None


def _torus1(config: RunConfig):
    p = config.params
    params = virasoro.LiouvilleParams(p["b"])
    series = blocks.torus_one_point_block(
        params, p["dext"], p["dbeta"], p["order"], diagnostic=p.get("diagnostic", False), family=p["family"]
    )
    return series.to_dict(), None


def _wave(config: RunConfig):
    p = config.params
    series = formats.load_series(p["coeffs"])
    if p.get("half_twist"):
        series = blocks.half_dehn_twist(series)
    with mpmath.workdps(config.precision + 5):
        q = mpmath.mpc(*p["q"])
        value = blocks.wave_function_eval(series, q, p["winding"], config.precision)
        modulus = abs(value)
    return {
        "value": _complex(value, config.precision),
        "abs": _num(modulus, config.precision),
        "initial_value": str(series.constant_term),
        "half_twists": series.half_twists,
    }, None


def _pants(config: RunConfig):
    p = config.params
    params = virasoro.LiouvilleParams(p["b"])
    decomp = groupoid.PantsDecomposition(formats.load_graph(p["graph"]))
    beta = formats.load(p["beta"], formats.BetaTable).to_beta()
    externals = formats.load(p["externals"], formats.ExternalTable).to_weights()
    block = blocks.glue_pants(params, decomp, beta, externals, p["order"], family=p["family"])
    return block.to_dict(), {"genus": graphs.genus(decomp.graph), "tails": decomp.graph.n_tails}


def _moves(config: RunConfig):
    return groupoid.move_graph(config.params["genus"], config.params["tails"]).to_dict(), None


def _phase(config: RunConfig):
    p = config.params
    spec = formats.load(p["word"], formats.WordSpec)
    word = spec.to_word()
    beta = formats.load(p["beta"], formats.BetaTable).to_beta()
    stages = None
    if spec.start is not None:
        stages = len(groupoid.apply_word(groupoid.PantsDecomposition(spec.start.to_graph()), word)) - 1
    turns = groupoid.word_turns(word, beta)
    return {
        "turns": str(turns),
        "phase": _complex(groupoid.word_phase(word, beta, config.precision), config.precision),
        "letters": len(word),
        "applied": stages,
    }, None


HANDLERS: dict[str, Callable[[RunConfig], tuple[Any, dict | None]]] = {
    "graphs enumerate": _graphs_enumerate,
    "graphs validate": _graphs_validate,
    "schottky verify": _schottky_verify,
    "gram": _gram,
    "char": _char,
    "weight": _weight,
    "block4": _block4,
    "torus1": _torus1,
    "pants": _pants,
    "wave": _wave,
    "moves": _moves,
    "phase": _phase,
}


def run(config: RunConfig, on_progress: Callable[[str], None] | None = None) -> Report:
    """
    Run one command and capture its outcome in a report.

    Steps:
        1. Validate the run configuration
        2. Look up the handler for the command
        3. Call it and record result, meta and timing

    Args:
        config: Command name, parsed parameters and global options
        on_progress: Optional callback(step: str) for progress updates

    Returns:
        Report with status 0, or with the error payload and status 2 for bad
        input and 1 for any other domain error. Errors are never raised.
    """
    report = Report(config.command, {k: _echo(v) for k, v in sorted(config.params.items())})
    start = time.perf_counter()
    try:
        config.validate()
        handler = HANDLERS.get(config.command)
        if handler is None:
            raise InputError(f"unknown command {config.command!r}", commands=sorted(HANDLERS))
        if on_progress:
            on_progress(f"Running {config.command}...")
        report.result, report.meta = handler(config)
    except InputError as exc:
        logger.debug("input error: %s", exc.message)
        report.error, report.status = exc.payload(), 2
    except FunctorError as exc:
        logger.debug("domain error: %s", exc.message)
        report.error, report.status = exc.payload(), 1
    if config.timing:
        report.timing_ms = round((time.perf_counter() - start) * 1000, 3)
    return report
