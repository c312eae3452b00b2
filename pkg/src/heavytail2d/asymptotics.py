"""Right-hand-side approximants for the joint tail equivalences, with assumption checks.

Weight laws enter through expectations ``E[g(W)]``: atoms are summed exactly and
continuous laws are integrated in quantile space, ``∫_0^1 g(F̄⁻¹(p)) dp``, so
unbounded supports need no truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .curves import SUPPORTS, RatioCurve, verdict
from .dependence import BivariatePair, DependenceSpec, SequenceModel
from .dists import (
    DegenerateAtConstant,
    SpecError,
    UnivariateSpec,
    UnsupportedModelError,
    atoms_of,
    spec_from_dict,
)

QUAD_RTOL = 1e-10


class AssumptionCError(SpecError):
    """Per-index weights outside their declared almost-sure bounds."""


@dataclass(frozen=True)
class Expectation:
    value: float
    abserr: float


def expect(
    spec: UnivariateSpec, g: Callable[[float], float], breaks: Iterable[float] = (), rtol: float = QUAD_RTOL
) -> Expectation:
    """``E[g(W)]`` for ``W ~ spec``; ``breaks`` are points in W-space where g may jump."""
    atoms = atoms_of(spec)
    if atoms is not None:
        return Expectation(math.fsum(p * g(a) for a, p in atoms), 0.0)
    pts = sorted(
        {float(spec.tail(b)) for b in breaks if spec.support_lo < b < spec.support_hi} - {0.0, 1.0}
    )
    # one quad call per piece; pieces away from p = 0 are integrated in log p
    edges = [0.0] + pts + [1.0]
    f = lambda p: g(float(spec.isf(p)))  # noqa: E731
    flog = lambda u: f(math.exp(u)) * math.exp(u)  # noqa: E731

    def piece(a, b, epsabs, epsrel, limit):
        if a > 0:
            return integrate.quad(flog, math.log(a), math.log(b), epsabs=epsabs, epsrel=epsrel, limit=limit)
        return integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)

    pieces = list(zip(edges[:-1], edges[1:]))
    # a rough pass sets the absolute floor so negligible pieces do not force full refinement
    rough = [piece(a, b, 0.0, 1e-3, 50)[0] for a, b in pieces]
    floor = rtol * abs(math.fsum(rough)) / len(pieces)
    val = err = 0.0
    for a, b in pieces:
        v, e = piece(a, b, floor, rtol, 200)
        val += v
        err += e
    return Expectation(float(val), float(err))


def _scaled_level(spec: UnivariateSpec, x: float, s: float) -> float:
    """P[s X > x] for a constant s >= 0."""
    if s > 0:
        return float(spec.tail(x / s))
    return 1.0 if x < 0 else 0.0


def _weighted_joint(pair: BivariatePair, x: float, y: float, s: float, r: float) -> float:
    """P[s X > x, r Y > y] for constants s, r >= 0."""
    u = _scaled_level(pair.marginal_x, x, s)
    v = _scaled_level(pair.marginal_y, y, r)
    return float(pair.dep.copula(u, v))


def _kinks(pair: BivariatePair, x: float, y: float) -> list[float]:
    out = []
    for spec, z in ((pair.marginal_x, x), (pair.marginal_y, y)):
        lo, hi = spec.support_lo, spec.support_hi
        for edge in (lo, hi):
            if math.isfinite(edge) and edge > 0 and z > 0:
                out.append(z / edge)
    return out


# -- weight and product models ------------------------------------------------------

@dataclass(frozen=True)
class WeightModel:
    """Discount factors.  Empty model means weights identically 1.

    ``common_theta`` multiplies every claim of both lines.  ``theta``/``delta``
    give per-index factors ``Θ_k`` (for ``X_k``) and ``Δ_l`` (for ``Y_l``),
    mutually independent and independent of the claims, with declared bounds
    ``theta_bounds[k] = (ξ_k, δ_k)`` and ``delta_bounds[l] = (γ_l, ζ_l)``.
    """

    common_theta: UnivariateSpec | None = None
    theta: tuple[UnivariateSpec, ...] | None = None
    delta: tuple[UnivariateSpec, ...] | None = None
    theta_bounds: tuple[tuple[float, float], ...] | None = None
    delta_bounds: tuple[tuple[float, float], ...] | None = None
    independent_of_claims: bool = True

    def __post_init__(self):
        if not self.independent_of_claims:
            raise UnsupportedModelError("weights must be independent of the claims")
        if self.common_theta is not None and (self.theta is not None or self.delta is not None):
            raise SpecError("give either a common factor or per-index factors, not both")
        if (self.theta is None) != (self.delta is None):
            raise SpecError("per-index factors need both theta and delta lists")
        if self.common_theta is not None:
            c = self.common_theta
            if c.support_lo < 0:
                raise SpecError("discount factor must be non-negative")
            if c.tail(0.0) <= 0:
                raise SpecError("discount factor is almost surely 0")
        if self.theta is not None:
            object.__setattr__(self, "theta", tuple(self.theta))
            object.__setattr__(self, "delta", tuple(self.delta))
            if len(self.theta) != len(self.delta):
                raise SpecError("theta and delta lists must have equal length")
            tb = self._bounds(self.theta, self.theta_bounds)
            db = self._bounds(self.delta, self.delta_bounds)
            object.__setattr__(self, "theta_bounds", tb)
            object.__setattr__(self, "delta_bounds", db)
            self.check_assumption_c()

    @staticmethod
    def _bounds(specs, declared):
        if declared is None:
            return tuple((s.support_lo, s.support_hi) for s in specs)
        declared = tuple(tuple(float(v) for v in b) for b in declared)
        if len(declared) != len(specs):
            raise SpecError("one (lower, upper) bound pair is needed per factor")
        return declared

    def check_assumption_c(self) -> None:
        """Raise :class:`AssumptionCError` unless every factor lives in its declared bounds with 0 < lower <= upper."""
        for name, specs, bounds in (("theta", self.theta, self.theta_bounds), ("delta", self.delta, self.delta_bounds)):
            for k, (s, (lo, hi)) in enumerate(zip(specs, bounds)):
                if not math.isfinite(s.support_hi):
                    raise AssumptionCError(f"{name}[{k}]: unbounded weight support ({s.family})")
                if not (0 < lo <= hi and math.isfinite(hi)):
                    raise AssumptionCError(f"{name}[{k}]: bounds must satisfy 0 < lower <= upper < inf, got ({lo}, {hi})")
                if s.support_lo < lo or s.support_hi > hi:
                    raise AssumptionCError(
                        f"{name}[{k}]: support [{s.support_lo}, {s.support_hi}] leaves declared bounds [{lo}, {hi}]"
                    )

    @property
    def trivial(self) -> bool:
        return self.common_theta is None and self.theta is None

    @property
    def per_index(self) -> bool:
        return self.theta is not None

    @property
    def bounded(self) -> bool:
        if self.common_theta is not None:
            return math.isfinite(self.common_theta.support_hi)
        return True

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {}
        if self.common_theta is not None:
            d["common_theta"] = self.common_theta.to_dict()
        if self.theta is not None:
            d["theta"] = [s.to_dict() for s in self.theta]
            d["delta"] = [s.to_dict() for s in self.delta]
            d["theta_bounds"] = [list(b) for b in self.theta_bounds]
            d["delta_bounds"] = [list(b) for b in self.delta_bounds]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> "WeightModel":
        if not d:
            return cls()
        if not isinstance(d, dict):
            raise SpecError("weights must be an object")
        unknown = set(d) - {"common_theta", "theta", "delta", "theta_bounds", "delta_bounds"}
        if unknown:
            raise SpecError(f"unknown keys in weights: {sorted(unknown)}")
        ct = spec_from_dict(d["common_theta"]) if "common_theta" in d else None
        th = tuple(spec_from_dict(s) for s in d["theta"]) if "theta" in d else None
        de = tuple(spec_from_dict(s) for s in d["delta"]) if "delta" in d else None
        tb = tuple(tuple(b) for b in d["theta_bounds"]) if "theta_bounds" in d else None
        db = tuple(tuple(b) for b in d["delta_bounds"]) if "delta_bounds" in d else None
        return cls(ct, th, de, tb, db)


@dataclass(frozen=True)
class ScalarProductModel:
    """``(Θ X, Θ Y)`` with Θ independent of the pair."""

    pair: BivariatePair
    theta: UnivariateSpec

    def __post_init__(self):
        if self.theta.support_lo < 0:
            raise SpecError("Θ must be non-negative")
        if self.theta.tail(0.0) <= 0:
            raise SpecError("Θ must not be almost surely 0")

    def to_dict(self) -> dict[str, Any]:
        return {"pair": self.pair.to_dict(), "theta": self.theta.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScalarProductModel":
        unknown = set(d) - {"pair", "theta"}
        if unknown:
            raise SpecError(f"unknown keys in scalar product model: {sorted(unknown)}")
        return cls(BivariatePair.from_dict(d["pair"]), spec_from_dict(d["theta"]))


# -- approximants ----------------------------------------------------------------------

def sum_tail_rhs(model: SequenceModel, x: float, y: float) -> float:
    """``Σ_k Σ_l P[X_k > x, Y_l > y]`` summed in index order."""
    terms = [float(model.pair_tail(k, l, x, y)) for k in range(model.n) for l in range(model.n)]
    return math.fsum(terms)


def sum_tail_terms(model: SequenceModel, x: float, y: float) -> np.ndarray:
    return np.array([[float(model.pair_tail(k, l, x, y)) for l in range(model.n)] for k in range(model.n)])


def ruin_and_rhs(model: SequenceModel, weights: WeightModel, x: float, y: float) -> float:
    """``Σ_k Σ_l P[Θ_k X_k > x, Δ_l Y_l > y]`` by quadrature over the weight laws."""
    if weights.trivial:
        return sum_tail_rhs(model, x, y)
    n = model.n
    if weights.common_theta is not None:
        pairs = [model.pair(k, l) for k in range(n) for l in range(n)]
        kinks = sorted({b for p in pairs for b in _kinks(p, x, y)})
        g = lambda s: math.fsum(_weighted_joint(p, x, y, s, s) for p in pairs)  # noqa: E731
        return expect(weights.common_theta, g, kinks).value
    if len(weights.theta) != n:
        raise SpecError("per-index weights must match the horizon n")
    total = []
    for k in range(n):
        for l in range(n):
            p = model.pair(k, l)
            th, de = weights.theta[k], weights.delta[l]
            xk = [x / e for e in (p.marginal_x.support_lo, p.marginal_x.support_hi) if math.isfinite(e) and e > 0]
            yk = [y / e for e in (p.marginal_y.support_lo, p.marginal_y.support_hi) if math.isfinite(e) and e > 0]

            def inner(s, p=p, de=de, yk=yk):
                return expect(de, lambda r: _weighted_joint(p, x, y, s, r), yk).value

            total.append(expect(th, inner, xk).value)
    return math.fsum(total)


def ruin_max_upper(model: SequenceModel, weights: WeightModel, x: float, y: float) -> float:
    """Upper-bound approximant for the simultaneous-ruin probability; equals :func:`ruin_and_rhs`."""
    return ruin_and_rhs(model, weights, x, y)


def scalar_product_tail(
    model: ScalarProductModel, x: float, y: float, rtol: float = QUAD_RTOL, full_output: bool = False
):
    """``H̄(x, y) = ∫ P[X > x/s, Y > y/s] B(ds)``."""
    pair = model.pair
    e = expect(model.theta, lambda s: _weighted_joint(pair, x, y, s, s), _kinks(pair, x, y), rtol)
    return (e.value, e.abserr) if full_output else e.value


def weighted_pair_tail(
    pair: BivariatePair, theta: UnivariateSpec, delta: UnivariateSpec | None = None
) -> Callable[[float, float], float]:
    """``(x, y) -> P[Θ X > x, Δ Y > y]``; a missing ``delta`` means the common factor ``Δ = Θ``."""
    if delta is None:
        model = ScalarProductModel(pair, theta)
        return lambda x, y: scalar_product_tail(model, x, y)

    def tail2(x, y):
        yk = [b for b in _kinks(pair, x, y)]
        return expect(theta, lambda s: expect(delta, lambda r: _weighted_joint(pair, x, y, s, r), yk).value, yk).value

    return tail2


# -- assumption diagnostics -------------------------------------------------------------

def check_assumption_A(
    model: ScalarProductModel,
    c_list: Sequence[float],
    t_grid: Sequence[float],
    c0: float = 1.0,
) -> dict[float, RatioCurve]:
    """Curves ``B̄(c t) / H̄(t, c0 t)`` per ``c``; the assumption asks each to vanish."""
    t = np.asarray(t_grid, dtype=float)
    hbar = np.array([scalar_product_tail(model, tt, c0 * tt) for tt in t])
    out = {}
    for c in c_list:
        num = np.asarray(model.theta.tail(c * t * min(1.0, c0)), dtype=float)
        flags = tuple("" if h > 0 else "zero-denominator" for h in hbar)
        vals = np.where(hbar > 0, num / np.where(hbar > 0, hbar, 1.0), np.nan)
        out[float(c)] = RatioCurve(t, vals, None, flags, {"c": float(c), "c0": c0, "quantity": "assumption-A"})
    return out


def assumption_a_supported(curves: dict[float, RatioCurve], tolerance: float = 1e-3) -> bool:
    """Evidence rule: every curve ends within ``tolerance`` of 0 without rising."""
    for cv in curves.values():
        v = verdict(cv, 0.0, tolerance)
        if v.status != SUPPORTS or v.trend > 0:
            return False
    return True


@dataclass(frozen=True)
class AuxiliaryFn:
    """``b(t) = sup_{k <= t} z(k)`` with ``z(t) = t / n`` on ``[λ_n, λ_{n+1})``."""

    lambdas: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __call__(self, t):
        lam = self.lambdas
        ta = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(ta.shape, np.nan)
        # running maximum of the segment end values t/n at t -> λ_{n+1}
        ends = lam[1:] / np.arange(1, lam.size)
        prev = np.concatenate([[0.0], np.maximum.accumulate(ends)])
        for i, tt in enumerate(ta):
            if tt < lam[0]:
                continue
            n = int(np.searchsorted(lam, tt, side="right"))  # λ_n <= t < λ_{n+1}
            out[i] = max(tt / n, prev[n - 1])
        return float(out[0]) if np.ndim(t) == 0 else out

    @property
    def levels(self) -> np.ndarray:
        return np.arange(1, self.lambdas.size + 1, dtype=float)


def build_auxiliary_b(
    theta_tail: Callable[[float], float],
    hbar: Callable[[float, float], float],
    n_max: int,
    t_grid: Sequence[float] | None = None,
    evidence: dict[float, RatioCurve] | None = None,
    evidence_tolerance: float = 1e-3,
) -> AuxiliaryFn:
    """Auxiliary function via the ``λ_n`` construction on the diagonal.

    ``λ_n`` is the first grid point beyond ``n λ_{n-1}`` (strictly) from which
    ``B̄(t/n) <= H̄(t, t)/n`` holds at every later grid point.
    """
    if evidence is None or not assumption_a_supported(evidence, evidence_tolerance):
        raise UnsupportedModelError("auxiliary function needs Assumption A evidence from check_assumption_A")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    t = np.asarray(t_grid if t_grid is not None else np.geomspace(1.0, 1e8, 800), dtype=float)
    h = np.array([hbar(tt, tt) for tt in t])
    lams: list[float] = []
    truncated = False
    for n in range(1, n_max + 1):
        ok = np.array([theta_tail(tt / n) <= hh / n for tt, hh in zip(t, h)]) & (h > 0)
        if not ok[-1]:
            truncated = True
            break
        bad = np.nonzero(~ok)[0]
        i = int(bad[-1] + 1) if bad.size else 0
        if lams:
            i = max(i, int(np.searchsorted(t, n * lams[-1], side="right")))
        if i >= t.size:
            truncated = True
            break
        lams.append(float(t[i]))
    if not lams:
        raise UnsupportedModelError("no λ_1 found on the grid")
    return AuxiliaryFn(np.array(lams), {"truncated": truncated, "n_max": n_max, "grid_top": float(t[-1])})


def verify_auxiliary_b(
    b: AuxiliaryFn, theta_tail: Callable[[float], float], hbar: Callable[[float, float], float], t_grid: Sequence[float]
) -> dict[str, bool]:
    """Re-check the three properties on the produced range ``[λ_1, λ_N]``."""
    t = np.asarray(t_grid, dtype=float)
    t = t[(t >= b.lambdas[0]) & (t <= b.lambdas[-1])]
    bv = b(t)
    nondecreasing = bool(np.all(np.diff(bv) >= 0))
    ratio = bv / t
    small_at_top = bool(ratio[-1] < 0.5) if b.lambdas.size > 1 else bool(ratio[-1] <= 1.0)
    pts = np.union1d(t, b.lambdas)
    levels = np.searchsorted(b.lambdas, pts, side="right")
    tail_ok = all(
        theta_tail(float(b(tt))) <= hbar(tt, tt) / n * (1 + 1e-12) for tt, n in zip(pts, levels)
    )
    return {"nondecreasing": nondecreasing, "little_o": small_at_top, "tail_bound": tail_ok}


def check_eq_6_8(
    theta: UnivariateSpec,
    delta: UnivariateSpec,
    product_tail: Callable[[float, float], float],
    c1: float,
    c2: float,
    t_grid: Sequence[float],
) -> tuple[RatioCurve, RatioCurve]:
    """Curves ``P[Θ > t] / P[ΘX > c1 t, ΔY > c2 t]`` and the same for Δ."""
    t = np.asarray(t_grid, dtype=float)
    den = np.array([product_tail(c1 * tt, c2 * tt) for tt in t])
    flags = tuple("" if d > 0 else "zero-denominator" for d in den)
    safe = np.where(den > 0, den, 1.0)
    a = np.where(den > 0, np.asarray(theta.tail(t), dtype=float) / safe, np.nan)
    b = np.where(den > 0, np.asarray(delta.tail(t), dtype=float) / safe, np.nan)
    meta = {"c1": c1, "c2": c2}
    return (
        RatioCurve(t, a, None, flags, dict(meta, factor="theta")),
        RatioCurve(t, b, None, flags, dict(meta, factor="delta")),
    )


def degenerate_weights(n: int, value: float = 1.0) -> WeightModel:
    d = DegenerateAtConstant(value)
    return WeightModel(theta=(d,) * n, delta=(d,) * n)
