"""Seeded Monte Carlo estimators for joint tails of sums, maxima and ruin events.

All estimators share one path kernel: chunk ``c`` of claims comes from stream
``STREAM_CLAIMS`` and chunk ``c`` of weights from ``STREAM_WEIGHTS``, so every
event below is evaluated on the same paths for a given ``(seed, m)``.  Counts
are integers summed in chunk order, hence independent of the worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import rng
from .asymptotics import WeightModel
from .dependence import BLOCKS_INDEPENDENT, COMMON_PAIR_IID, SequenceModel
from .dists import SpecError

PLAIN = "plain"
CONDITIONAL = "conditional"
MIN_SAMPLES = 1000

# Events counted by the shared kernel.
EV_SUM = "sum"  # Σ ΘX > x and Σ ΔY > y
EV_RUNMAX = "runmax"  # max_k S_k > x and max_k T_k > y (ψ_and)
EV_MAX = "max"  # max ΘX > x and max ΔY > y
EV_POSSUM = "possum"  # Σ (ΘX)+ > x and Σ (ΔY)+ > y
EV_PSIMAX = "psimax"  # some k with S_k > x and T_k > y
EVENTS = (EV_SUM, EV_RUNMAX, EV_MAX, EV_POSSUM, EV_PSIMAX)

# Marginal tail level above which the conditional estimator declines (no rare event).
RARE_LEVEL = 0.1


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    m: int
    seed: int
    method: str = PLAIN

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"probability estimate outside [0, 1]: {self.value}")

    @classmethod
    def from_count(cls, hits: int, m: int, seed: int) -> "Estimate":
        p = hits / m
        return cls(p, math.sqrt(p * (1.0 - p) / m), m, seed, PLAIN)

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "stderr": self.stderr, "m": self.m, "seed": self.seed, "method": self.method}


@dataclass(frozen=True)
class RiskModelConfig:
    """Two lines of business over ``n`` periods with initial capitals ``x`` and ``y``."""

    claims: SequenceModel
    weights: WeightModel
    x: float
    y: float
    horizon: int | None = None

    def __post_init__(self):
        if self.horizon is None:
            object.__setattr__(self, "horizon", self.claims.n)
        if self.horizon < 1 or self.horizon != self.claims.n:
            raise SpecError(f"horizon {self.horizon} must equal the claim sequence length {self.claims.n}")
        if not (self.x > 0 and self.y > 0):
            raise SpecError("initial capitals must be positive")
        _check_weights(self.claims, self.weights)

    @property
    def n(self) -> int:
        return self.horizon

    def to_dict(self) -> dict[str, Any]:
        return {
            "claims": self.claims.to_dict(),
            "weights": self.weights.to_dict(),
            "x": self.x,
            "y": self.y,
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RiskModelConfig":
        if not isinstance(d, dict):
            raise SpecError("risk model config must be an object")
        unknown = set(d) - {"claims", "weights", "x", "y", "horizon"}
        if unknown:
            raise SpecError(f"unknown keys in risk model config: {sorted(unknown)}")
        try:
            claims = SequenceModel.from_dict(d["claims"])
            x, y = float(d["x"]), float(d["y"])
        except KeyError as exc:
            raise SpecError(f"risk model config missing key {exc}") from exc
        return cls(claims, WeightModel.from_dict(d.get("weights")), x, y, d.get("horizon"))


def _check_weights(model: SequenceModel, weights: WeightModel) -> None:
    if weights.per_index and len(weights.theta) != model.n:
        raise SpecError(f"{len(weights.theta)} per-index weights for horizon {model.n}")


def _check_m(m: int) -> None:
    if m < MIN_SAMPLES:
        raise ValueError(f"m must be >= {MIN_SAMPLES}")


# -- path generation -------------------------------------------------------------------

def _weight_columns(weights: WeightModel, n: int, seed: int, chunk: int, rows: int) -> tuple[np.ndarray, np.ndarray]:
    if weights.trivial:
        one = np.ones((rows, n))
        return one, one
    if weights.common_theta is not None:
        u = rng.uniforms(seed, rng.STREAM_WEIGHTS, chunk, rows, 1)
        th = np.repeat(weights.common_theta.isf(u[:, 0])[:, None], n, axis=1)
        return th, th
    u = rng.uniforms(seed, rng.STREAM_WEIGHTS, chunk, rows, 2 * n)
    th = np.column_stack([s.isf(u[:, k]) for k, s in enumerate(weights.theta)])
    de = np.column_stack([s.isf(u[:, n + k]) for k, s in enumerate(weights.delta)])
    return th, de


def _paths(model: SequenceModel, weights: WeightModel, seed: int, chunk: int, rows: int):
    """Latent levels and weighted claims ``(lat, wx, wy)`` for one chunk."""
    n = model.n
    w = rng.uniforms(seed, rng.STREAM_CLAIMS, chunk, rows, 2 * n)
    lat = model.latent(w)
    z = model.from_latent(lat)
    th, de = _weight_columns(weights, n, seed, chunk, rows)
    return lat, z[:, :n] * th, z[:, n:] * de


def simulate_paths(model: SequenceModel, weights: WeightModel, m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Weighted claims ``(ΘX, ΔY)``, each of shape (m, n), in path order."""
    parts = [_paths(model, weights, seed, c, r)[1:] for c, r in enumerate(rng.chunk_sizes(m))]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def path_events(wx: np.ndarray, wy: np.ndarray, x: float, y: float) -> dict[str, np.ndarray]:
    """Boolean indicator per path for every kernel event."""
    sx = np.cumsum(wx, axis=1)
    sy = np.cumsum(wy, axis=1)
    over_x = sx > x
    over_y = sy > y
    return {
        EV_SUM: over_x[:, -1] & over_y[:, -1],
        EV_RUNMAX: over_x.any(axis=1) & over_y.any(axis=1),
        EV_MAX: (wx.max(axis=1) > x) & (wy.max(axis=1) > y),
        EV_POSSUM: (np.maximum(wx, 0).sum(axis=1) > x) & (np.maximum(wy, 0).sum(axis=1) > y),
        EV_PSIMAX: (over_x & over_y).any(axis=1),
    }


def event_counts(
    model: SequenceModel, weights: WeightModel, x: float, y: float, m: int, seed: int, workers: int | None = None
) -> dict[str, int]:
    """Integer hit counts of every kernel event over ``m`` shared paths."""
    _check_m(m)
    _check_weights(model, weights)

    def one(chunk: int, rows: int) -> np.ndarray:
        _, wx, wy = _paths(model, weights, seed, chunk, rows)
        ev = path_events(wx, wy, x, y)
        return np.array([int(ev[k].sum()) for k in EVENTS], dtype=np.int64)

    total = np.zeros(len(EVENTS), dtype=np.int64)
    for part in rng.map_chunks(one, m, workers):
        total += part
    return {k: int(v) for k, v in zip(EVENTS, total)}


def estimate_events(
    model: SequenceModel, weights: WeightModel | None, x: float, y: float, m: int, seed: int, workers: int | None = None
) -> dict[str, Estimate]:
    counts = event_counts(model, weights or WeightModel(), x, y, m, seed, workers)
    return {k: Estimate.from_count(c, m, seed) for k, c in counts.items()}


def estimate_joint_sum_tail(model, weights, x, y, m, seed, workers=None) -> Estimate:
    """``P[Σ Θ_k X_k > x, Σ Δ_l Y_l > y]`` by indicator means."""
    return estimate_events(model, weights, x, y, m, seed, workers)[EV_SUM]


def estimate_joint_max_tail(model, weights, x, y, m, seed, workers=None) -> Estimate:
    """``P[max Θ_k X_k > x, max Δ_l Y_l > y]``."""
    return estimate_events(model, weights, x, y, m, seed, workers)[EV_MAX]


def estimate_running_max_tail(model, weights, x, y, m, seed, workers=None) -> Estimate:
    """``P[max_k S_k > x, max_k T_k > y]`` on the same paths as the sum tail."""
    return estimate_events(model, weights, x, y, m, seed, workers)[EV_RUNMAX]


def estimate_ruin(config: RiskModelConfig, which: str, m: int, seed: int, workers: int | None = None) -> Estimate:
    """``which="and"``: both surpluses go negative within the horizon, not necessarily together.
    ``which="max"``: some single period has both surpluses negative."""
    key = {"and": EV_RUNMAX, "max": EV_PSIMAX}.get(which)
    if key is None:
        raise ValueError(f"which must be 'and' or 'max', got {which!r}")
    return estimate_events(config.claims, config.weights, config.x, config.y, m, seed, workers)[key]


def ruin_times(config: RiskModelConfig, m: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """First periods ``T_1``, ``T_2`` (1-based) with negative surplus per line; ``n + 1`` means no ruin."""
    _check_m(m)
    wx, wy = simulate_paths(config.claims, config.weights, m, seed)
    n = config.n

    def first(over):
        return np.where(over.any(axis=1), over.argmax(axis=1) + 1, n + 1)

    return first(np.cumsum(wx, axis=1) > config.x), first(np.cumsum(wy, axis=1) > config.y)


# -- conditional Monte Carlo ---------------------------------------------------------

def conditional_supported(model: SequenceModel, weights: WeightModel | None, x: float, y: float) -> bool:
    """Whether the one-big-jump estimator applies; otherwise the plain estimator is used."""
    weights = weights or WeightModel()
    if not weights.trivial or not model.nonnegative:
        return False
    if model.structure not in (BLOCKS_INDEPENDENT, COMMON_PAIR_IID):
        return False
    if not all(s.continuous for s in model.margins):
        return False
    worst = max([float(s.tail(x)) for s in model.x_block] + [float(s.tail(y)) for s in model.y_block])
    return worst <= RARE_LEVEL


def _conditional_terms(model: SequenceModel, lat: np.ndarray, z: np.ndarray, x: float, y: float) -> np.ndarray:
    """Per-path sum over (k, l) of P[S > x, T > y, argmax X = k, argmax Y = l | rest]."""
    n = model.n
    xs, ys = z[:, :n], z[:, n:]
    sx, sy = xs.sum(axis=1), ys.sum(axis=1)
    total = np.zeros(z.shape[0])
    for k in range(n):
        others = np.delete(xs, k, axis=1)
        ax = np.maximum(others.max(axis=1, initial=-np.inf), x - (sx - xs[:, k]))
        ux = np.asarray(model.x_block[k].tail(ax), dtype=float)
        for l in range(n):
            others_y = np.delete(ys, l, axis=1)
            ay = np.maximum(others_y.max(axis=1, initial=-np.inf), y - (sy - ys[:, l]))
            vy = np.asarray(model.y_block[l].tail(ay), dtype=float)
            if model.structure == BLOCKS_INDEPENDENT:
                total += ux * vy
            elif k == l:
                total += model.pair_dep.copula(ux, vy)
            else:
                # X_k is linked only to Y_k and Y_l only to X_l, both held fixed
                px = model.pair_dep.conditional(ux, lat[:, n + k])
                py = model.pair_dep.conditional(vy, lat[:, l])
                total += px * py
    return np.clip(total, 0.0, 1.0)


def conditional_estimator(
    model: SequenceModel,
    weights: WeightModel | None,
    x: float,
    y: float,
    m: int,
    seed: int,
    workers: int | None = None,
) -> Estimate:
    """One-big-jump conditional Monte Carlo for ``P[Σ X_k > x, Σ Y_l > y]``.

    The event splits over the indices ``(k, l)`` of the largest claim in each
    line.  Given every variable except ``X_k`` and ``Y_l``, the split event is
    ``{X_k > a_k, Y_l > b_l}`` with ``a_k = max(max_{i≠k} X_i, x - Σ_{i≠k} X_i)``,
    whose conditional probability is closed form for the supported structures.
    Falls back to the plain estimator (tag ``plain``) otherwise.
    """
    if not conditional_supported(model, weights, x, y):
        return estimate_joint_sum_tail(model, weights, x, y, max(m, MIN_SAMPLES), seed, workers)
    _check_m(m)

    def one(chunk: int, rows: int) -> tuple[float, float]:
        w = rng.uniforms(seed, rng.STREAM_CLAIMS, chunk, rows, 2 * model.n)
        lat = model.latent(w)
        vals = _conditional_terms(model, lat, model.from_latent(lat), x, y)
        return math.fsum(vals), math.fsum(vals * vals)

    s1 = s2 = 0.0
    for a, b in rng.map_chunks(one, m, workers):
        s1 += a
        s2 += b
    mean = s1 / m
    var = max(s2 / m - mean * mean, 0.0) * m / (m - 1)
    return Estimate(min(max(mean, 0.0), 1.0), math.sqrt(var / m), m, seed, CONDITIONAL)
