"""Bootstrap multiplier generators.

All schemes draw iid multipliers with population mean 0 and variance 1:

* ``"gaussian"``: standard normal,
* ``"uniform"``: sqrt(12) * U(-0.5, 0.5),
* ``"t3"``: Student t with 3 degrees of freedom, divided by sqrt(3).

Randomness is counter-based: an :class:`RngState` is a (seed, stream,
substream) triple and always yields the same draws, independent of thread
scheduling or how many generators exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np
from numpy.random import Generator, Philox

SCHEMES = ("gaussian", "uniform", "t3")

_U64 = 2**64


@dataclass(frozen=True)
class RngState:
    """Counter-based RNG address: (seed, stream, substream) -> unique stream.

    ``stream`` is conventionally a Monte Carlo replication index and
    ``substream`` a bootstrap replicate index; both default to 0.
    """

    seed: int
    stream: int = 0
    substream: int = 0

    def __post_init__(self) -> None:
        for name in ("seed", "stream", "substream"):
            v = getattr(self, name)
            if not (0 <= int(v) < _U64):
                raise ValueError(f"{name} must be in [0, 2**64): got {v}")

    def generator(self) -> Generator:
        """Fresh generator for this (seed, stream, substream) triple."""
        bg = Philox(key=self.seed, counter=[0, 0, self.stream, self.substream])
        return Generator(bg)

    def with_stream(self, stream: int) -> "RngState":
        return replace(self, stream=stream)

    def with_substream(self, substream: int) -> "RngState":
        return replace(self, substream=substream)


class Moments(NamedTuple):
    mean: float
    variance: float
    third: float
    fourth: float


def _check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown weight scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme


def _fill(gen: Generator, scheme: str, n: int) -> np.ndarray:
    if scheme == "gaussian":
        return gen.standard_normal(n)
    if scheme == "uniform":
        return math.sqrt(12.0) * (gen.random(n) - 0.5)
    # t3, scaled to unit variance (Var(t_3) = 3)
    return gen.standard_t(3, size=n) / math.sqrt(3.0)


def draw_weights(scheme: str, n: int, rng: RngState) -> np.ndarray:
    """Draw n iid multipliers for the given scheme.

    Identical ``rng`` triples produce bitwise-identical arrays.
    """
    _check_scheme(scheme)
    if n < 1:
        raise ValueError(f"n must be >= 1: got {n}")
    return _fill(rng.generator(), scheme, n)


def weight_stream(scheme: str, n: int, base: RngState, b_max: int) -> Iterator[np.ndarray]:
    """Yield the weight vectors for substreams 1..b_max of ``base``.

    Bitwise-equal to calling :func:`draw_weights` with
    ``base.with_substream(b)`` for each b; a single Philox instance is reused
    with counter resets, which is considerably faster in hot loops.
    """
    _check_scheme(scheme)
    if n < 1:
        raise ValueError(f"n must be >= 1: got {n}")
    bg = Philox(key=base.seed)
    gen = Generator(bg)
    for b in range(1, b_max + 1):
        state = bg.state
        state["state"]["counter"][:] = (0, 0, base.stream, b)
        state["buffer_pos"] = 4  # discard buffered words from the previous counter
        state["has_uint32"] = 0
        bg.state = state
        yield _fill(gen, scheme, n)


def scheme_moments(scheme: str) -> Moments:
    """Analytic (mean, variance, third, fourth) moments of a scheme.

    The t3 scheme has no finite fourth moment; it is reported as ``inf``
    rather than raised, so callers can record the violation.
    """
    _check_scheme(scheme)
    if scheme == "gaussian":
        return Moments(0.0, 1.0, 0.0, 3.0)
    if scheme == "uniform":
        # E[(sqrt(12) U)^4] = 144 E[U^4] = 144/80
        return Moments(0.0, 1.0, 0.0, 1.8)
    return Moments(0.0, 1.0, 0.0, math.inf)
