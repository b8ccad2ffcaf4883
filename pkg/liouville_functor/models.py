"""Shared dataclasses: run configuration, block series and glued pants blocks."""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import mpmath

from .config import DEFAULT_PRECISION, DEFAULT_SEED, DEFAULT_THREADS, MIN_PRECISION
from .errors import BlockError, InputError
from .series import TruncatedSeries

OUTPUT_MODES = ("human", "json")


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    output: str = "human"  # one of OUTPUT_MODES
    precision: int = DEFAULT_PRECISION  # significant digits for numeric results
    threads: int = DEFAULT_THREADS
    seed: int = DEFAULT_SEED
    timing: bool = True

    @property
    def is_json(self) -> bool:
        return self.output == "json"

    def validate(self) -> None:
        if self.output not in OUTPUT_MODES:
            raise InputError(f"output mode must be one of {OUTPUT_MODES}, got {self.output!r}")
        if self.precision < MIN_PRECISION:
            raise InputError(f"precision must be >= {MIN_PRECISION}, got {self.precision}", precision=self.precision)
        if self.threads < 1:
            raise InputError(f"threads must be >= 1, got {self.threads}", threads=self.threads)
        for key, value in self.params.items():
            if isinstance(value, Fraction) and value.denominator == 0:
                raise InputError(f"parameter {key} has a zero denominator", parameter=key)


@dataclass(frozen=True)
class BlockSeries:
    """q^delta_beta * sum_n coefficients[n] q^n, plus the number of half twists applied."""

    delta_beta: Fraction
    coefficients: tuple[Fraction, ...]
    half_twists: int = 0

    def __post_init__(self):
        object.__setattr__(self, "delta_beta", Fraction(self.delta_beta))
        object.__setattr__(self, "coefficients", tuple(Fraction(c) for c in self.coefficients))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def constant_term(self) -> Fraction:
        return self.coefficients[0]

    def scaled(self, factor: Fraction) -> "BlockSeries":
        return replace(self, coefficients=tuple(c * factor for c in self.coefficients))

    def evaluate_exact(self, q: Fraction) -> Fraction:
        """The series part at a rational q (the q^delta prefactor is not included)."""
        total = Fraction(0)
        for c in reversed(self.coefficients):
            total = total * q + c
        return total

    def evaluate(self, q, precision: int) -> mpmath.mpc:
        with mpmath.workdps(precision + 5):
            q = mpmath.mpmathify(q)
            total = mpmath.mpc(0)
            for c in reversed(self.coefficients):
                total = total * q + mpmath.mpf(c.numerator) / c.denominator
            return +total

    def to_dict(self) -> dict:
        return {
            "delta_beta": str(self.delta_beta),
            "coefficients": [str(c) for c in self.coefficients],
            "half_twists": self.half_twists,
            "order": self.order,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BlockSeries":
        return cls(
            delta_beta=Fraction(data["delta_beta"]),
            coefficients=tuple(Fraction(c) for c in data["coefficients"]),
            half_twists=int(data.get("half_twists", 0)),
        )


@dataclass(frozen=True)
class PantsBlock:
    """prod_e q_e^betas[e] * series(q_0, ..., q_{E-1}) for a glued pants decomposition.

    ``half_twists[e]`` counts the half Dehn twists applied along edge e.
    """

    betas: tuple[Fraction, ...]
    series: TruncatedSeries
    half_twists: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(Fraction(b) for b in self.betas))
        if len(self.series.variables) != len(self.betas):
            raise BlockError(
                f"{len(self.betas)} edge weights for a series in {len(self.series.variables)} variables"
            )
        if not self.half_twists:
            object.__setattr__(self, "half_twists", (0,) * len(self.betas))

    @property
    def order(self) -> int:
        return self.series.cutoff

    @property
    def constant_term(self) -> Fraction:
        return self.series.constant_term()

    def coefficient(self, levels: tuple[int, ...]) -> Fraction:
        return self.series.coefficient(tuple(levels))

    def evaluate(self, qs, precision: int) -> mpmath.mpc:
        """The series part at numeric q_e, without the prod q_e^beta prefactor."""
        if len(qs) != len(self.betas):
            raise BlockError(f"expected {len(self.betas)} values of q, got {len(qs)}")
        with mpmath.workdps(precision + 5):
            qs = [mpmath.mpmathify(q) for q in qs]
            total = mpmath.mpc(0)
            for monom, c in self.series.terms().items():
                term = mpmath.mpf(c.numerator) / c.denominator
                for q, k in zip(qs, monom):
                    term *= q**k
                total += term
            return +total

    def to_dict(self) -> dict:
        return {
            "betas": [str(b) for b in self.betas],
            "half_twists": list(self.half_twists),
            "order": self.order,
            "series": self.series.to_dict(),
        }
