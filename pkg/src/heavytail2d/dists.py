"""Univariate marginal catalog.

Each family carries an exact tail, quantile and inverse tail, a sampler built
on the counter-based streams in :mod:`heavytail2d.rng`, and analytic class
membership flags.  Specs serialize to ``{"family": ..., "params": {...}}`` with
an optional ``"shift"`` key (location shift, ``X = base + shift``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np
from scipy.special import ndtr, ndtri

from . import rng


class SpecError(ValueError):
    """Invalid distribution parameters."""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class UnsupportedModelError(ValueError):
    """Model outside the scope an operation supports."""


@dataclass(frozen=True)
class TailClassFlags:
    in_K: bool
    in_L: bool
    in_S: bool
    in_D: bool
    in_C: bool
    rv_index: float | None = None

    def __post_init__(self):
        # inclusion chain R ⊂ C ⊂ D∩L ⊂ S ⊂ L ⊂ K
        chain = [
            self.rv_index is None or self.in_C,
            not self.in_C or (self.in_D and self.in_L),
            not (self.in_D and self.in_L) or self.in_S,
            not self.in_S or self.in_L,
            not self.in_L or self.in_K,
        ]
        if not all(chain):
            raise SpecError(f"inconsistent class flags {self}")

    @property
    def heavy(self) -> bool:
        return self.in_K


_LIGHT = TailClassFlags(False, False, False, False, False)
_SUBEXP_NOT_D = TailClassFlags(True, True, True, False, False)


@dataclass(frozen=True)
class UnivariateSpec:
    """Base class; concrete families implement the ``_*0`` hooks on the unshifted law."""

    family: ClassVar[str] = ""
    shift: float = field(default=0.0, kw_only=True)

    # -- hooks -----------------------------------------------------------
    def _tail0(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _isf0(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _quantile0(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def _lo0(self) -> float:
        raise NotImplementedError

    @property
    def _hi0(self) -> float:
        raise NotImplementedError

    def _flags0(self) -> TailClassFlags:
        raise NotImplementedError

    def _scaled0(self, c: float) -> "UnivariateSpec":
        raise NotImplementedError

    @property
    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    # -- public surface --------------------------------------------------
    @property
    def support_lo(self) -> float:
        return self._lo0 + self.shift

    @property
    def support_hi(self) -> float:
        return self._hi0 + self.shift

    @property
    def continuous(self) -> bool:
        return True

    def tail(self, x):
        """P[X > x]."""
        xa = np.asarray(x, dtype=float) - self.shift
        out = np.clip(self._tail0(xa), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def quantile(self, p):
        """Smallest x with P[X <= x] >= p, for p in (0, 1)."""
        pa = np.asarray(p, dtype=float)
        if np.any(~((pa > 0.0) & (pa < 1.0))):
            raise DomainError("quantile requires p in (0, 1)")
        out = self._quantile0(pa) + self.shift
        return float(out) if out.ndim == 0 else out

    def isf(self, p):
        """Inverse tail: inf{x : P[X > x] <= p}.  Same law as ``quantile(1 - U)``."""
        pa = np.asarray(p, dtype=float)
        if np.any(~((pa > 0.0) & (pa < 1.0))):
            raise DomainError("isf requires p in (0, 1)")
        out = self._isf0(pa) + self.shift
        return float(out) if out.ndim == 0 else out

    def sample(self, seed: int, m: int, stream: int = rng.STREAM_CLAIMS) -> np.ndarray:
        if m < 1:
            raise DomainError("m must be >= 1")
        u = rng.uniform_block(seed, stream, m, 1)[:, 0]
        return self.isf(u)

    def flags(self) -> TailClassFlags:
        return self._flags0()

    def scaled(self, c: float) -> "UnivariateSpec":
        """Law of ``c * X`` for c > 0."""
        if not c > 0:
            raise SpecError("scale factor must be positive")
        base = self._scaled0(float(c))
        return _with_shift(base, self.shift * c)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"family": self.family, "params": dict(self.params)}
        if self.shift:
            d["shift"] = self.shift
        return d


def _with_shift(spec: UnivariateSpec, shift: float) -> UnivariateSpec:
    kwargs = dict(spec.params)
    cls = type(spec)
    if cls is TwoPoint:
        kwargs = {"atoms": tuple(kwargs["atoms"]), "probs": tuple(kwargs["probs"])}
    return cls(**kwargs, shift=shift)


def _positive(name: str, v: float) -> None:
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise SpecError(f"{name} must be a positive finite number, got {v!r}")


@dataclass(frozen=True)
class Pareto(UnivariateSpec):
    """Pareto type I: P[X > x] = (x / xm)^(-alpha) for x >= xm."""

    family: ClassVar[str] = "Pareto"
    alpha: float = 2.0
    xm: float = 1.0

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("xm", self.xm)

    def _tail0(self, x):
        with np.errstate(divide="ignore"):
            return np.where(x < self.xm, 1.0, np.power(np.maximum(x, self.xm) / self.xm, -self.alpha))

    def _isf0(self, p):
        return self.xm * np.power(p, -1.0 / self.alpha)

    def _quantile0(self, p):
        return self.xm * np.power(1.0 - p, -1.0 / self.alpha)

    @property
    def _lo0(self):
        return self.xm

    @property
    def _hi0(self):
        return math.inf

    def _flags0(self):
        return TailClassFlags(True, True, True, True, True, rv_index=float(self.alpha))

    def _scaled0(self, c):
        return Pareto(self.alpha, self.xm * c)

    @property
    def params(self):
        return {"alpha": self.alpha, "xm": self.xm}


@dataclass(frozen=True)
class Lognormal(UnivariateSpec):
    family: ClassVar[str] = "Lognormal"
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise SpecError("mu must be finite")
        _positive("sigma", self.sigma)

    def _tail0(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(np.where(x > 0, x, 1.0)) - self.mu) / self.sigma
        return np.where(x > 0, ndtr(-z), 1.0)

    def _isf0(self, p):
        return np.exp(self.mu - self.sigma * ndtri(p))

    def _quantile0(self, p):
        return np.exp(self.mu + self.sigma * ndtri(p))

    @property
    def _lo0(self):
        return 0.0

    @property
    def _hi0(self):
        return math.inf

    def _flags0(self):
        return _SUBEXP_NOT_D

    def _scaled0(self, c):
        return Lognormal(self.mu + math.log(c), self.sigma)

    @property
    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class WeibullHeavy(UnivariateSpec):
    """P[X > x] = exp(-(x / scale)^tau), restricted to tau in (0, 1)."""

    family: ClassVar[str] = "WeibullHeavy"
    tau: float = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise SpecError("WeibullHeavy needs tau in (0, 1); tau >= 1 is not long-tailed")
        _positive("scale", self.scale)

    def _tail0(self, x):
        return np.where(x > 0, np.exp(-np.power(np.maximum(x, 0.0) / self.scale, self.tau)), 1.0)

    def _isf0(self, p):
        return self.scale * np.power(-np.log(p), 1.0 / self.tau)

    def _quantile0(self, p):
        return self.scale * np.power(-np.log1p(-p), 1.0 / self.tau)

    @property
    def _lo0(self):
        return 0.0

    @property
    def _hi0(self):
        return math.inf

    def _flags0(self):
        return _SUBEXP_NOT_D

    def _scaled0(self, c):
        return WeibullHeavy(self.tau, self.scale * c)

    @property
    def params(self):
        return {"tau": self.tau, "scale": self.scale}


@dataclass(frozen=True)
class Exponential(UnivariateSpec):
    family: ClassVar[str] = "Exponential"
    rate: float = 1.0

    def __post_init__(self):
        _positive("rate", self.rate)

    def _tail0(self, x):
        return np.where(x > 0, np.exp(-self.rate * np.maximum(x, 0.0)), 1.0)

    def _isf0(self, p):
        return -np.log(p) / self.rate

    def _quantile0(self, p):
        return -np.log1p(-p) / self.rate

    @property
    def _lo0(self):
        return 0.0

    @property
    def _hi0(self):
        return math.inf

    def _flags0(self):
        return _LIGHT

    def _scaled0(self, c):
        return Exponential(self.rate / c)

    @property
    def params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class Uniform(UnivariateSpec):
    family: ClassVar[str] = "Uniform"
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and 0.0 <= self.lo < self.hi):
            raise SpecError("Uniform needs 0 <= lo < hi")

    def _tail0(self, x):
        return np.clip((self.hi - x) / (self.hi - self.lo), 0.0, 1.0)

    def _isf0(self, p):
        return self.hi - p * (self.hi - self.lo)

    def _quantile0(self, p):
        return self.lo + p * (self.hi - self.lo)

    @property
    def _lo0(self):
        return self.lo

    @property
    def _hi0(self):
        return self.hi

    def _flags0(self):
        return _LIGHT

    def _scaled0(self, c):
        return Uniform(self.lo * c, self.hi * c)

    @property
    def params(self):
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class TwoPoint(UnivariateSpec):
    """Atoms ``a < b`` with P[X = a] = probs[0], P[X = b] = probs[1]."""

    family: ClassVar[str] = "TwoPoint"
    atoms: tuple[float, float] = (0.0, 1.0)
    probs: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if len(self.atoms) != 2 or len(self.probs) != 2:
            raise SpecError("TwoPoint needs exactly two atoms and two probabilities")
        a, b = (float(v) for v in self.atoms)
        pa, pb = (float(v) for v in self.probs)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise SpecError("TwoPoint atoms must be finite and strictly increasing")
        if not (0.0 < pa < 1.0 and 0.0 < pb < 1.0 and abs(pa + pb - 1.0) < 1e-12):
            raise SpecError("TwoPoint probabilities must be in (0, 1) and sum to 1")
        object.__setattr__(self, "atoms", (a, b))
        object.__setattr__(self, "probs", (pa, pb))

    @property
    def continuous(self):
        return False

    def _tail0(self, x):
        a, b = self.atoms
        return np.where(x < a, 1.0, np.where(x < b, self.probs[1], 0.0))

    def _isf0(self, p):
        a, b = self.atoms
        return np.where(p < self.probs[1], b, a)

    def _quantile0(self, p):
        a, b = self.atoms
        return np.where(p <= self.probs[0], a, b)

    @property
    def _lo0(self):
        return self.atoms[0]

    @property
    def _hi0(self):
        return self.atoms[1]

    def _flags0(self):
        return _LIGHT

    def _scaled0(self, c):
        return TwoPoint((self.atoms[0] * c, self.atoms[1] * c), self.probs)

    @property
    def params(self):
        return {"atoms": list(self.atoms), "probs": list(self.probs)}

    def support_points(self) -> list[tuple[float, float]]:
        return [(a + self.shift, p) for a, p in zip(self.atoms, self.probs)]


@dataclass(frozen=True)
class DegenerateAtConstant(UnivariateSpec):
    family: ClassVar[str] = "DegenerateAtConstant"
    c: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise SpecError("constant must be finite")

    @property
    def continuous(self):
        return False

    def _tail0(self, x):
        return np.where(x < self.c, 1.0, 0.0)

    def _isf0(self, p):
        return np.full_like(p, self.c, dtype=float)

    def _quantile0(self, p):
        return np.full_like(p, self.c, dtype=float)

    @property
    def _lo0(self):
        return self.c

    @property
    def _hi0(self):
        return self.c

    def _flags0(self):
        return _LIGHT

    def _scaled0(self, c):
        return DegenerateAtConstant(self.c * c)

    @property
    def params(self):
        return {"c": self.c}

    def support_points(self) -> list[tuple[float, float]]:
        return [(self.c + self.shift, 1.0)]


FAMILIES: dict[str, type[UnivariateSpec]] = {
    cls.family: cls
    for cls in (Pareto, Lognormal, WeibullHeavy, Exponential, Uniform, TwoPoint, DegenerateAtConstant)
}


def spec_from_dict(d: dict[str, Any]) -> UnivariateSpec:
    if not isinstance(d, dict):
        raise SpecError("distribution spec must be a JSON object")
    extra = set(d) - {"family", "params", "shift"}
    if extra:
        raise SpecError(f"unknown keys in distribution spec: {sorted(extra)}")
    fam = d.get("family")
    if fam not in FAMILIES:
        raise SpecError(f"unknown family {fam!r}; expected one of {sorted(FAMILIES)}")
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params must be an object")
    cls = FAMILIES[fam]
    allowed = {f for f in cls.__dataclass_fields__ if f != "shift"}
    unknown = set(params) - allowed
    if unknown:
        raise SpecError(f"unknown params for {fam}: {sorted(unknown)}")
    kwargs = dict(params)
    if cls is TwoPoint:
        kwargs = {k: tuple(v) for k, v in kwargs.items()}
    try:
        return cls(**kwargs, shift=float(d.get("shift", 0.0)))
    except TypeError as exc:
        raise SpecError(str(exc)) from exc


def atoms_of(spec: UnivariateSpec) -> list[tuple[float, float]] | None:
    """(value, probability) pairs for purely atomic laws, else None."""
    if isinstance(spec, (TwoPoint, DegenerateAtConstant)):
        return spec.support_points()
    return None


# -- op surface ------------------------------------------------------------

def tail(spec: UnivariateSpec, x):
    return spec.tail(x)


def quantile(spec: UnivariateSpec, p):
    return spec.quantile(p)


def sample(spec: UnivariateSpec, seed: int, m: int) -> np.ndarray:
    return spec.sample(seed, m)


def class_flags(spec: UnivariateSpec) -> TailClassFlags:
    return spec.flags()


@dataclass(frozen=True)
class ConvTail:
    """P[A + B > x] with a rigorous discretization bracket."""

    value: float
    lower: float
    upper: float
    cells: int
    grid_top: float

    @property
    def error_bound(self) -> float:
        return 0.5 * (self.upper - self.lower)


def conv_tail(
    spec_a: UnivariateSpec,
    spec_b: UnivariateSpec,
    x: float,
    grid: int = 20_000,
    tail_cut: float = 1e-8,
) -> ConvTail:
    """Tail of the sum of independent A and B at ``x``.

    A is discretized on ``grid`` equal cells; within a cell the exact tail of B
    is evaluated at both cell edges, which brackets the true value because the
    tail of B is monotone.  The grid stops at ``x - lo_b`` or at the quantile of
    A leaving mass ``tail_cut * P[A > x - lo_b]``, whichever comes first, and the
    leftover mass is bracketed by its two extreme contributions.
    Purely atomic A is enumerated exactly.
    """
    if grid < 1:
        raise DomainError("grid resolution must be positive")
    for s in (spec_a, spec_b):
        if not math.isfinite(s.support_lo):
            raise UnsupportedModelError("conv_tail needs supports bounded below")
    x = float(x)
    atoms = atoms_of(spec_a)
    if atoms is not None:
        v = sum(p * spec_b.tail(x - a) for a, p in atoms)
        return ConvTail(v, v, v, 0, spec_a.support_hi)

    lo_a, lo_b = spec_a.support_lo, spec_b.support_lo
    cut = x - lo_b  # A > cut forces A + B > x
    if cut <= lo_a:
        # at x = lo_a + lo_b only the joint atom at the lower corner misses
        v = 1.0 if cut < lo_a else 1.0 - (1.0 - spec_a.tail(lo_a)) * (1.0 - spec_b.tail(lo_b))
        return ConvTail(v, v, v, 0, lo_a)

    # the neglected mass is relative to P[A > cut] so light tails keep their accuracy
    rel_cut = tail_cut * max(float(spec_a.tail(cut)), 1e-300)
    far = float(spec_a.isf(min(rel_cut, 0.5))) if math.isinf(spec_a.support_hi) else spec_a.support_hi
    top = min(cut, far)
    g = np.linspace(lo_a, top, grid + 1)
    ta = spec_a.tail(g)
    mass = ta[:-1] - ta[1:]
    tb = spec_b.tail(x - g)
    lower = float(np.dot(mass, tb[:-1]))
    upper = float(np.dot(mass, tb[1:]))
    # atom at the lower support point
    base = (1.0 - float(ta[0])) * float(tb[0])
    lower += base
    upper += base
    rest = float(ta[-1])
    if top >= cut:
        lower += rest
        upper += rest
    else:
        lower += rest * float(spec_b.tail(x - top))
        upper += rest
    return ConvTail(0.5 * (lower + upper), lower, upper, grid, top)
