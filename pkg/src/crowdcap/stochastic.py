"""Seeded sampling of the arrival and availability processes.

Every random draw in a run comes from a Philox4x64 counter-based generator.
The 128-bit key is ``(seed, stream)`` and the 256-bit counter starts at
``(0, 0, epoch, substream)``, so the draws of one epoch depend only on
``(seed, epoch, stream, substream)`` and never on evaluation order.

Streams:
    0  arrivals A(t)
    1  availability U(t)
    2  policy contention (substream = pool index)
    3  admission coin flips

Poisson variates use numpy's ``Generator.poisson``: the multiplication
(inversion-by-products) method for mean < 10 and Hoermann's PTRS
transformed rejection for mean >= 10.  Moments match any other correct
sampler; bit streams are only reproducible within this implementation.

Poisson and binomial kinds are both Gaussian- and Poisson-dominated in the
moment generating function sense.  Constant laws are trivially dominated.
Categorical laws are not in general; that property is analytic and is not
checked here.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from .model import Scenario

STREAM_ARRIVALS = 0
STREAM_AVAILABILITY = 1
STREAM_POLICY = 2
STREAM_ADMISSION = 3

KINDS = ("constant", "poisson", "binomial", "categorical")

Number = Union[int, float, str, Fraction]


def to_fraction(x: Number) -> Fraction:
    """Exact rational from an int, decimal float, ``"p/q"`` string or Fraction."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational number")


@dataclass(frozen=True)
class DistributionSpec:
    """A law for one count (or one vector of counts for ``categorical``).

    Only the fields of the chosen ``kind`` are meaningful:
    ``constant(value)``, ``poisson(mean)``, ``binomial(n, p)`` and
    ``categorical(support, weights)``.  Categorical support entries are
    either integers or equal-length tuples of integers.
    """

    kind: str
    value: int = 0
    mean: Fraction = Fraction(0)
    n: int = 0
    p: Fraction = Fraction(0)
    support: tuple = ()
    weights: tuple = ()

    @classmethod
    def constant(cls, value: int) -> "DistributionSpec":
        return cls("constant", value=int(value))

    @classmethod
    def poisson(cls, mean: Number) -> "DistributionSpec":
        return cls("poisson", mean=to_fraction(mean))

    @classmethod
    def binomial(cls, n: int, p: Number) -> "DistributionSpec":
        return cls("binomial", n=int(n), p=to_fraction(p))

    @classmethod
    def categorical(cls, support: Sequence, weights: Sequence[Number]) -> "DistributionSpec":
        sup = tuple(tuple(int(v) for v in s) if isinstance(s, (list, tuple)) else int(s) for s in support)
        return cls("categorical", support=sup, weights=tuple(to_fraction(w) for w in weights))

    @property
    def width(self) -> int:
        """1 for scalar laws, vector length for vector-valued categorical laws."""
        if self.kind == "categorical" and self.support and isinstance(self.support[0], tuple):
            return len(self.support[0])
        return 1

    @property
    def is_vector(self) -> bool:
        return self.kind == "categorical" and bool(self.support) and isinstance(self.support[0], tuple)

    def violations(self, path: str = "") -> list[str]:
        out = []
        if self.kind not in KINDS:
            return [f"{path}: unknown distribution kind {self.kind!r}"]
        if self.kind == "constant" and self.value < 0:
            out.append(f"{path}: constant value must be >= 0")
        elif self.kind == "poisson" and self.mean < 0:
            out.append(f"{path}: poisson mean must be >= 0")
        elif self.kind == "binomial":
            if self.n < 0:
                out.append(f"{path}: binomial n must be >= 0")
            if not 0 <= self.p <= 1:
                out.append(f"{path}: binomial p must lie in [0, 1]")
        elif self.kind == "categorical":
            if not self.support:
                out.append(f"{path}: categorical support is empty")
            if len(self.weights) != len(self.support):
                out.append(f"{path}: categorical weights and support differ in length")
            if any(w < 0 for w in self.weights):
                out.append(f"{path}: categorical weights must be >= 0")
            if abs(float(sum(self.weights, Fraction(0))) - 1.0) > 1e-9:
                out.append(f"{path}: categorical weights must sum to 1")
            widths = {len(s) if isinstance(s, tuple) else 0 for s in self.support}
            if len(widths) > 1:
                out.append(f"{path}: categorical support mixes scalars and vectors of different lengths")
            flat = [v for s in self.support for v in (s if isinstance(s, tuple) else (s,))]
            if any(v < 0 for v in flat):
                out.append(f"{path}: categorical support values must be >= 0")
        return out

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "poisson":
            return {"kind": "poisson", "mean": _num_out(self.mean)}
        if self.kind == "binomial":
            return {"kind": "binomial", "n": self.n, "p": _num_out(self.p)}
        return {
            "kind": "categorical",
            "support": [list(s) if isinstance(s, tuple) else s for s in self.support],
            "weights": [_num_out(w) for w in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        kind = d.get("kind")
        if kind == "constant":
            return cls.constant(_int_in(d["value"]))
        if kind == "poisson":
            return cls.poisson(d["mean"])
        if kind == "binomial":
            return cls.binomial(_int_in(d["n"]), d["p"])
        if kind == "categorical":
            return cls.categorical(d["support"], d["weights"])
        raise ValueError(f"unknown distribution kind {kind!r}")


def _num_out(x: Fraction):
    if x.denominator == 1:
        return int(x)
    f = float(x)
    return f if Fraction(repr(f)) == x else f"{x.numerator}/{x.denominator}"


def _int_in(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        if isinstance(x, float) and x.is_integer():
            return int(x)
        raise ValueError(f"expected an integer, got {x!r}")
    return x


def mean_of(d: DistributionSpec) -> Union[Fraction, tuple[Fraction, ...]]:
    """Analytic mean; a tuple of component means for vector categorical laws."""
    if d.kind == "constant":
        return Fraction(d.value)
    if d.kind == "poisson":
        return d.mean
    if d.kind == "binomial":
        return d.n * d.p
    if d.kind == "categorical":
        if d.is_vector:
            return tuple(
                sum((w * s[k] for s, w in zip(d.support, d.weights)), Fraction(0)) for k in range(d.width)
            )
        return sum((w * s for s, w in zip(d.support, d.weights)), Fraction(0))
    raise ValueError(f"unknown distribution kind {d.kind!r}")


def scale_distribution(d: DistributionSpec, factor: Number) -> DistributionSpec:
    """Multiply the mean of an arrival law by ``factor``.

    Poisson means and binomial success probabilities scale directly; constant
    and categorical laws scale their values, which must stay integral.
    """
    f = to_fraction(factor)
    if d.kind == "poisson":
        return DistributionSpec.poisson(d.mean * f)
    if d.kind == "binomial":
        p = d.p * f
        if p > 1:
            raise ValueError(f"binomial p={p} exceeds 1 after scaling by {f}")
        return DistributionSpec.binomial(d.n, p)
    if d.kind == "constant":
        v = d.value * f
        if v.denominator != 1:
            raise ValueError(f"constant {d.value} scaled by {f} is not an integer")
        return DistributionSpec.constant(int(v))
    if d.kind == "categorical":
        def sc(v):
            w = v * f
            if w.denominator != 1:
                raise ValueError(f"categorical value {v} scaled by {f} is not an integer")
            return int(w)

        sup = [tuple(sc(v) for v in s) if isinstance(s, tuple) else sc(s) for s in d.support]
        return DistributionSpec.categorical(sup, d.weights)
    raise ValueError(f"unknown distribution kind {d.kind!r}")


_GENERATORS: dict[tuple[int, int], np.random.Generator] = {}


def epoch_rng(seed: int, epoch: int, stream: int, substream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream) at counter (0, 0, epoch, substream).

    One generator object per (stream, substream) is reseeded in place, which
    is cheaper than building a new one.  A returned generator is therefore
    only valid until the next call with the same stream and substream.
    """
    g = _GENERATORS.get((stream, substream))
    if g is None:
        g = _GENERATORS[(stream, substream)] = np.random.Generator(np.random.Philox(key=0))
    g.bit_generator.state = {
        "bit_generator": "Philox",
        "state": {"counter": np.array([0, 0, epoch, substream], dtype=np.uint64),
                  "key": np.array([seed & 0xFFFFFFFFFFFFFFFF, stream], dtype=np.uint64)},
        "buffer": np.zeros(4, dtype=np.uint64), "buffer_pos": 4, "has_uint32": 0, "uinteger": 0,
    }
    return g


def draw(d: DistributionSpec, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` independent draws; shape ``(size,)`` or ``(size, width)``."""
    if d.kind == "constant":
        return np.full(size, d.value, dtype=np.int64)
    if d.kind == "poisson":
        return rng.poisson(float(d.mean), size).astype(np.int64)
    if d.kind == "binomial":
        return rng.binomial(d.n, float(d.p), size).astype(np.int64)
    if d.kind == "categorical":
        probs = np.array([float(w) for w in d.weights])
        idx = rng.choice(len(d.support), size=size, p=probs / probs.sum())
        table = np.array(d.support, dtype=np.int64)
        return table[idx]
    raise ValueError(f"unknown distribution kind {d.kind!r}")


@dataclass(frozen=True)
class EpochDraw:
    arrivals: np.ndarray  # (N,) jobs per type
    availability: np.ndarray  # (number of agent types,) agents present per type


def _draw_scalars(dists: Sequence[DistributionSpec], rng: np.random.Generator) -> np.ndarray:
    """One draw per scalar law; homogeneous poisson or binomial lists use one vector call."""
    kind, a, b = _params(dists)
    if kind == "poisson":
        return rng.poisson(a).astype(np.int64)
    if kind == "binomial":
        return rng.binomial(a, b).astype(np.int64)
    if kind == "constant":
        return a.copy()
    return np.array([draw(d, rng, 1)[0] for d in dists], dtype=np.int64)


_PARAMS: dict = {}


def _params(dists: Sequence[DistributionSpec]) -> tuple[str, np.ndarray, np.ndarray]:
    """(shared kind or "mixed", parameter arrays), memoized by object identity (hashing Fractions is slow)."""
    hit = _PARAMS.get(id(dists))
    if hit is not None and hit[0] is dists:
        return hit[1]
    kinds = {d.kind for d in dists}
    kind = kinds.pop() if len(kinds) == 1 else "mixed"
    none = np.zeros(0)
    if kind == "poisson":
        out = (kind, np.array([float(d.mean) for d in dists]), none)
    elif kind == "binomial":
        out = (kind, np.array([d.n for d in dists], dtype=np.int64), np.array([float(d.p) for d in dists]))
    elif kind == "constant":
        out = (kind, np.array([d.value for d in dists], dtype=np.int64), none)
    else:
        out = ("mixed", none, none)
    if len(_PARAMS) > 256:
        _PARAMS.clear()
    _PARAMS[id(dists)] = (dists, out)
    return out


_BLOCKS: dict = {}


def _scalar_blocks(blocks) -> tuple | None:
    """(agent indices, laws) when every block is one agent type with a scalar law."""
    hit = _BLOCKS.get(id(blocks))
    if hit is not None and hit[0] is blocks:
        return hit[1]
    plan = None
    if all(len(b.agents) == 1 and not b.dist.is_vector for b in blocks):
        plan = (np.array([b.agents[0] for b in blocks], dtype=np.int64), tuple(b.dist for b in blocks))
    if len(_BLOCKS) > 256:
        _BLOCKS.clear()
    _BLOCKS[id(blocks)] = (blocks, plan)
    return plan


def sample_arrivals(s: "Scenario", epoch: int, seed: int | None = None) -> np.ndarray:
    rng = epoch_rng(s.seed if seed is None else seed, epoch, STREAM_ARRIVALS)
    return _draw_scalars(s.arrival_dists, rng)


def sample_availability(s: "Scenario", epoch: int, seed: int | None = None) -> np.ndarray:
    rng = epoch_rng(s.seed if seed is None else seed, epoch, STREAM_AVAILABILITY)
    blocks = s.availability_dists
    plan = _scalar_blocks(blocks)
    if plan is not None:
        out = np.zeros(len(s.agent_types), dtype=np.int64)
        out[plan[0]] = _draw_scalars(plan[1], rng)
        return out
    out = np.zeros(len(s.agent_types), dtype=np.int64)
    for block in blocks:
        idx = list(block.agents)
        if block.dist.is_vector:
            out[idx] = draw(block.dist, rng, 1)[0]
        else:
            out[idx] = draw(block.dist, rng, len(idx))
    return out


def sample_epoch(s: "Scenario", epoch: int, seed: int | None = None) -> EpochDraw:
    """A(t) and U(t) for one epoch; a pure function of (scenario, seed, epoch)."""
    return EpochDraw(sample_arrivals(s, epoch, seed), sample_availability(s, epoch, seed))


def contention_order(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random permutation of ``n`` contenders."""
    return rng.permutation(n)
