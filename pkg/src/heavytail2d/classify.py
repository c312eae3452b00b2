"""Ratio curves for the tail-class limits, univariate and bivariate.

Bivariate limits are two-dimensional; every probe follows a ray ``(t, c t)``.
Exact tails give exact curves (no stderr); the Monte Carlo probe for the
bivariate subexponential ratio carries binomial errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence, Union

import numpy as np

from . import rng
from .curves import INCONCLUSIVE, SUPPORTS, ClassVerdict, RatioCurve, verdict
from .dependence import (
    FGM,
    BivariatePair,
    Comonotone,
    Countermonotone,
    GaussianCopula,
    Independent,
    SequenceModel,
    SurvivalClayton,
)
from .dists import (
    Exponential,
    Lognormal,
    Pareto,
    UnivariateSpec,
    UnsupportedModelError,
    WeibullHeavy,
)

Tail2 = Callable[[float, float], float]
Tail2Like = Union[Tail2, BivariatePair]

DEFAULT_RAYS = (0.5, 1.0, 2.0)
DEFAULT_TOLERANCE = 0.05


def _as_tail2(tail2: Tail2Like) -> Tail2:
    if isinstance(tail2, BivariatePair):
        return lambda x, y: float(tail2.joint_tail(x, y))
    return tail2


@dataclass(frozen=True)
class RatioProbe:
    """One probe family along the ray ``(t, c t)``.

    ``kind`` is ``"L"`` (shift), ``"D"`` (scale) or ``"C"`` (scale schedule ``z`` tending to 1).
    """

    kind: str
    shift: tuple[float, float] = (1.0, 1.0)
    scale: tuple[float, float] = (0.5, 0.5)
    z: tuple[tuple[float, float], ...] = ()
    ray: float = 1.0

    def __post_init__(self):
        if self.kind not in ("L", "D", "C"):
            raise ValueError("probe kind must be one of 'L', 'D', 'C'")
        if not self.ray > 0:
            raise ValueError("ray slope must be positive")
        if self.kind == "L" and min(self.shift) < 0:
            raise ValueError("shifts must be non-negative")
        if self.kind == "D" and not all(0 < b < 1 for b in self.scale):
            raise ValueError("scales must lie in (0, 1)")
        if self.kind == "C":
            if not self.z:
                raise ValueError("C probe needs a z schedule")
            zs = [tuple(float(v) for v in (p if np.ndim(p) else (p, p))) for p in self.z]
            if any(not (0 < a <= 1 and 0 < b <= 1) for a, b in zs):
                raise ValueError("z values must lie in (0, 1]")
            object.__setattr__(self, "z", tuple(zs))


def _ratio_curve(num_fn, tail2: Tail2, t_grid, c: float, **meta) -> RatioCurve:
    t = np.asarray(t_grid, dtype=float)
    vals, flags = np.full(t.shape, np.nan), []
    stopped = False
    for i, tt in enumerate(t):
        if stopped:
            flags.append("truncated")
            continue
        den = tail2(tt, c * tt)
        if not den > 0:
            flags.append("zero-denominator")
            stopped = True
            continue
        vals[i] = num_fn(tt) / den
        flags.append("")
    return RatioCurve(t, vals, None, tuple(flags), meta)


def l2_ratio(tail2: Tail2Like, probe: RatioProbe, t_grid: Sequence[float]) -> RatioCurve:
    """``tail2(t - a1, c t - a2) / tail2(t, c t)``; bivariate long tails push it to 1."""
    f = _as_tail2(tail2)
    a1, a2 = probe.shift
    c = probe.ray
    return _ratio_curve(lambda t: f(t - a1, c * t - a2), f, t_grid, c, probe="L", shift=[a1, a2], ray=c)


def d2_ratio(tail2: Tail2Like, probe: RatioProbe, t_grid: Sequence[float]) -> RatioCurve:
    """``tail2(b1 t, b2 c t) / tail2(t, c t)``; dominated variation keeps it bounded."""
    f = _as_tail2(tail2)
    b1, b2 = probe.scale
    c = probe.ray
    return _ratio_curve(lambda t: f(b1 * t, b2 * c * t), f, t_grid, c, probe="D", scale=[b1, b2], ray=c)


@dataclass(frozen=True)
class C2Profile:
    curves: tuple[RatioCurve, ...]
    sup_curve: RatioCurve  # indexed by z1, the sup over t of each curve

    def verdict(self, tolerance: float = DEFAULT_TOLERANCE) -> ClassVerdict:
        # the inner limit runs over t, so a curve cut short by a vanishing tail decides nothing
        if any(not cv.usable.all() for cv in self.curves):
            v = verdict(self.sup_curve, 1.0, tolerance)
            return ClassVerdict(INCONCLUSIVE, 1.0, tolerance, v.trend, v.window, "t grid truncated")
        return verdict(self.sup_curve, 1.0, tolerance)


def c2_profile(tail2: Tail2Like, z_schedule: Sequence, t_grid: Sequence[float], ray: float = 1.0) -> C2Profile:
    """One scale curve per ``z``; consistent variation sends ``sup_t`` of each curve to 1."""
    f = _as_tail2(tail2)
    probe = RatioProbe("C", z=tuple(z_schedule), ray=ray)
    curves, sups, flags = [], [], []
    for z1, z2 in probe.z:
        cv = _ratio_curve(lambda t: f(z1 * t, z2 * ray * t), f, t_grid, ray, probe="C", z=[z1, z2], ray=ray)
        curves.append(cv)
        ok = cv.usable
        sups.append(float(np.max(cv.values[ok])) if ok.any() else math.nan)
        flags.append("" if ok.any() else "zero-denominator")
    zs = np.array([z[0] for z in probe.z])
    order = np.argsort(zs, kind="stable")
    sup = RatioCurve(
        zs[order],
        np.array(sups)[order],
        None,
        tuple(flags[i] for i in order),
        {"axis": "z", "ray": ray},
    )
    return C2Profile(tuple(curves[i] for i in order), sup)


def _pair_block_margins(model: SequenceModel) -> tuple[UnivariateSpec, UnivariateSpec]:
    return model.x_block[0], model.y_block[0]


def s2_ratio(
    model: SequenceModel,
    t_grid: Sequence[float],
    m: int,
    seed: int,
    ray: float = 1.0,
    workers: int | None = None,
) -> RatioCurve:
    """Monte Carlo ``P[X1+X2 > t, Y1+Y2 > c t] / P[X > t, Y > c t]`` for two i.i.d. pairs.

    Bivariate subexponentiality sends the ratio to 4.  Grid points whose
    denominator is below ``10 / m`` are flagged unreliable.
    """
    if model.n != 2 or not model.is_iid_pairs():
        raise UnsupportedModelError("s2_ratio needs two i.i.d. pairs")
    fx, fy = _pair_block_margins(model)
    for s in (fx, fy):
        if not s.flags().in_S:
            raise UnsupportedModelError(f"{s.family} marginal is not subexponential")
    t = np.asarray(t_grid, dtype=float)
    pair = model.pair(0, 0)

    def work(chunk: int, rows: int) -> np.ndarray:
        w = rng.uniforms(seed, rng.STREAM_CLAIMS, chunk, rows, 4)
        z = model.from_latent(model.latent(w))
        sx, sy = z[:, 0] + z[:, 1], z[:, 2] + z[:, 3]
        return np.array([np.sum((sx > tt) & (sy > ray * tt)) for tt in t], dtype=np.int64)

    counts = sum(rng.map_chunks(work, m, workers))
    p_hat = counts / m
    den = np.array([pair.joint_tail(tt, ray * tt) for tt in t])
    vals = np.where(den > 0, p_hat / np.where(den > 0, den, 1.0), np.nan)
    se = np.sqrt(p_hat * (1 - p_hat) / m) / np.where(den > 0, den, 1.0)
    flags = tuple("zero-denominator" if d <= 0 else ("unreliable" if d < 10.0 / m else "") for d in den)
    return RatioCurve(t, vals, se, flags, {"probe": "S", "target": 4.0, "m": m, "seed": seed, "ray": ray})


def univariate_ratio(spec: UnivariateSpec, kind: str, grid: Sequence[float], param: Any = None) -> RatioCurve:
    """Univariate analogues: ``"L-shift"`` (param a), ``"D-scale"`` (param b), ``"C-profile"``.

    For ``"C-profile"`` the returned curve is indexed by the ``z`` schedule in
    ``param`` and holds the sup over ``grid`` of ``tail(z x) / tail(x)``.
    """
    x = np.asarray(grid, dtype=float)
    tail = spec.tail
    if kind == "L-shift":
        a = 1.0 if param is None else float(param)
        return _ratio_curve(lambda t: tail(t - a), lambda t, _: tail(t), x, 1.0, probe="L", shift=a)
    if kind == "D-scale":
        b = 0.5 if param is None else float(param)
        return _ratio_curve(lambda t: tail(b * t), lambda t, _: tail(t), x, 1.0, probe="D", scale=b)
    if kind == "C-profile":
        zs = np.asarray(param if param is not None else [1 - 10.0 ** -k for k in range(1, 5)], dtype=float)
        sups, flags = [], []
        for z in zs:
            cv = _ratio_curve(lambda t: tail(z * t), lambda t, _: tail(t), x, 1.0)
            ok = cv.usable
            sups.append(float(np.max(cv.values[ok])) if ok.any() else math.nan)
            flags.append("" if ok.any() else "zero-denominator")
        return RatioCurve(zs, np.array(sups), None, tuple(flags), {"axis": "z", "probe": "C"})
    raise ValueError(f"unknown univariate probe {kind!r}")


# -- constructive insensitivity function -------------------------------------------

@dataclass(frozen=True)
class InsensitivityFn:
    """Piecewise-constant ``a(x) = n`` on ``(u_n, u_{n+1}]`` along the ray ``(t, c t)``."""

    breakpoints: np.ndarray
    levels: np.ndarray
    truncated: bool
    ray: float = 1.0
    meta: dict[str, Any] = field(default_factory=dict)

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, xa, side="left") - 1
        out = np.where(idx >= 0, self.levels[np.clip(idx, 0, None)], 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def top(self) -> float:
        return float(self.breakpoints[-1]) if self.breakpoints.size else math.nan

    def little_o_ratio(self) -> float:
        """``a(u_N) / u_N`` at the top breakpoint, small when ``a(x) = o(x)`` is plausible."""
        if not self.breakpoints.size:
            return math.nan
        return float(self.levels[-1] / self.breakpoints[-1])


def _shift_deviation(f: Tail2, t: float, c: float, a: float) -> float:
    base = f(t, c * t)
    if not base > 0:
        return math.inf
    up = f(t - a, c * t - a) / base - 1.0
    down = 1.0 - f(t + a, c * t + a) / base
    return max(up, down)


def build_insensitivity(
    tail2: Tail2Like,
    n_max: int,
    t_grid: Sequence[float] | None = None,
    ray: float = 1.0,
) -> InsensitivityFn:
    """Breakpoints ``u_n`` on a threshold grid so that shifts of size ``n`` move the joint
    tail by at most a ``1/n`` fraction for every grid threshold beyond ``u_n``.

    Shift monotonicity makes the extreme shifts ``(-n, -n)`` and ``(n, n)`` sufficient.
    When the grid runs out before ``n_max`` the function is returned truncated.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    f = _as_tail2(tail2)
    t = np.asarray(t_grid if t_grid is not None else np.geomspace(10.0, 1e6, 400), dtype=float)
    bps, lv = [], []
    truncated = False
    for n in range(1, n_max + 1):
        dev = np.array([_shift_deviation(f, tt, ray, float(n)) for tt in t])
        bad = dev > 1.0 / n
        if bad[-1]:
            truncated = True
            break
        # first grid index after which every point satisfies the inequality
        last_bad = np.nonzero(bad)[0]
        i = int(last_bad[-1] + 1) if last_bad.size else 0
        if bps:
            prev = int(np.searchsorted(t, bps[-1], side="right"))
            i = max(i, prev)
        if i >= t.size:
            truncated = True
            break
        bps.append(float(t[i]))
        lv.append(float(n))
    return InsensitivityFn(np.array(bps), np.array(lv), truncated, ray, {"grid_top": float(t[-1]), "n_max": n_max})


def check_insensitivity(fn: InsensitivityFn, tail2: Tail2Like, t_grid: Sequence[float]) -> np.ndarray:
    """Re-evaluate ``tail2(x - a(x), c x - a(x)) / tail2(x, c x) - (1 + 1/a(x))`` on a grid
    inside the produced range (non-positive entries satisfy the inequality)."""
    f = _as_tail2(tail2)
    t = np.asarray(t_grid, dtype=float)
    t = t[(t > fn.breakpoints[0]) & (t <= fn.top)] if fn.breakpoints.size else t[:0]
    out = []
    for tt in t:
        a = fn(tt)
        out.append(f(tt - a, fn.ray * tt - a) / f(tt, fn.ray * tt) - (1.0 + 1.0 / a))
    return np.array(out)


# -- catalog cross-check -----------------------------------------------------------

def catalog_models() -> dict[str, BivariatePair]:
    p2, p15 = Pareto(2.0, 1.0), Pareto(1.5, 2.0)
    ln, wb, ex = Lognormal(0.0, 1.0), WeibullHeavy(0.5, 1.0), Exponential(1.0)
    return {
        "independent-pareto": BivariatePair(p2, p2, Independent()),
        "fgm-pareto": BivariatePair(p2, p15, FGM(0.5)),
        "clayton-pareto": BivariatePair(p2, p2, SurvivalClayton(1.0)),
        "comonotone-pareto": BivariatePair(p2, p2, Comonotone()),
        "countermonotone-pareto": BivariatePair(p2, p2, Countermonotone()),
        "gaussian-pareto": BivariatePair(p2, p2, GaussianCopula(0.5)),
        "independent-lognormal": BivariatePair(ln, ln, Independent()),
        "fgm-weibull": BivariatePair(wb, wb, FGM(0.5)),
        "independent-exponential": BivariatePair(ex, ex, Independent()),
        "mixed-pareto-exponential": BivariatePair(p2, ex, Independent()),
    }


@dataclass(frozen=True)
class InclusionCheck:
    name: str
    ray: float
    c2_status: str
    l2_status: str

    @property
    def consistent(self) -> bool:
        return self.c2_status != SUPPORTS or self.l2_status == SUPPORTS


def inclusion_cross_check(
    models: dict[str, Tail2Like] | None = None,
    t_grid: Sequence[float] | None = None,
    rays: Sequence[float] = DEFAULT_RAYS,
    tolerance: float = DEFAULT_TOLERANCE,
) -> list[InclusionCheck]:
    """Consistent variation must imply long tails: a ``supports`` C-profile verdict
    has to come with a ``supports`` L verdict on the same grid and ray."""
    models = models if models is not None else catalog_models()
    t = np.asarray(t_grid if t_grid is not None else np.geomspace(10.0, 1e6, 25), dtype=float)
    zs = [1.0 - 10.0 ** -k for k in range(1, 6)]
    out = []
    for name, tail2 in models.items():
        for c in rays:
            c2 = c2_profile(tail2, zs, t, ray=c).verdict(tolerance)
            l2 = verdict(l2_ratio(tail2, RatioProbe("L", shift=(1.0, 1.0), ray=c), t), 1.0, tolerance)
            out.append(InclusionCheck(name, c, c2.status, l2.status))
    return out
