"""Threshold-indexed ratio curves and the deterministic verdict rule."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SUPPORTS = "supports"
CONTRADICTS = "contradicts"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ClassVerdict:
    status: str
    target: float | str
    tolerance: float
    trend: float
    window: int
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "target": self.target,
            "tolerance": self.tolerance,
            "trend": self.trend,
            "window": self.window,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class RatioCurve:
    """Values of a ratio along increasing thresholds.

    ``flags`` holds an empty string for a usable point, otherwise a short reason
    (``"zero-denominator"``, ``"unreliable"``, ``"censored"``, ...).  Flagged
    points are ignored by :func:`verdict`.
    """

    thresholds: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    flags: tuple[str, ...] = ()
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("thresholds and values must be 1-D with equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            se = np.asarray(self.stderr, dtype=float)
            if se.shape != v.shape:
                raise ValueError("stderr length must match values")
            object.__setattr__(self, "stderr", se)
        flags = tuple(self.flags) if self.flags else ("",) * v.size
        if len(flags) != v.size:
            raise ValueError("flags length must match values")
        object.__setattr__(self, "flags", flags)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def usable(self) -> np.ndarray:
        ok = np.array([f == "" for f in self.flags], dtype=bool)
        return ok & np.isfinite(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "value", "stderr", "flag"])
        se = self.stderr if self.stderr is not None else np.zeros_like(self.values)
        for t, v, s, f in zip(self.thresholds, self.values, se, self.flags):
            w.writerow([repr(float(t)), repr(float(v)), repr(float(s)), f])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "thresholds": self.thresholds.tolist(),
            "values": self.values.tolist(),
            "stderr": None if self.stderr is None else self.stderr.tolist(),
            "flags": list(self.flags),
            "meta": self.meta,
        }


def _trend(x: np.ndarray) -> float:
    """Net fraction of successive increases, in [-1, 1]."""
    if x.size < 2:
        return 0.0
    d = np.diff(x)
    return float((np.sum(d > 0) - np.sum(d < 0)) / d.size)


def verdict(
    curve: RatioCurve,
    target: float | str = 1.0,
    tolerance: float = 0.05,
    cap: float | None = None,
) -> ClassVerdict:
    """Deterministic window rule.

    The window is the last quarter of usable points (at least two).  With a
    numeric target the curve *supports* it when every window value lies within
    ``tolerance``; it *contradicts* it when every window value lies outside and
    the deviation from target is not shrinking over the whole curve.  A window
    point whose 3-sigma band is wider than ``tolerance`` makes the result
    inconclusive.  With ``target="bounded"`` the test is against ``cap``: every
    window value at most ``cap`` supports, and a last value above ``cap`` with a
    non-decreasing curve contradicts.
    """
    if len(curve) == 0:
        raise ValueError("verdict needs a non-empty curve")
    ok = curve.usable
    v = curve.values[ok]
    se = curve.stderr[ok] if curve.stderr is not None else np.zeros_like(v)
    if v.size == 0:
        return ClassVerdict(INCONCLUSIVE, target, tolerance, 0.0, 0, "no usable points")
    win = min(v.size, max(2, math.ceil(v.size / 4)))
    vw, sw = v[-win:], se[-win:]

    if target == "bounded":
        if cap is None:
            raise ValueError("bounded verdict needs a cap")
        trend = _trend(v)
        if np.all(vw <= cap):
            return ClassVerdict(SUPPORTS, target, tolerance, trend, win, f"window max {vw.max():.6g} <= {cap:g}")
        if vw[-1] > cap and trend >= 0:
            return ClassVerdict(CONTRADICTS, target, tolerance, trend, win, f"last value {vw[-1]:.6g} > {cap:g}")
        return ClassVerdict(INCONCLUSIVE, target, tolerance, trend, win, "")

    tgt = float(target)
    dev = np.abs(v - tgt)
    trend = _trend(dev)
    if np.any(3.0 * sw > tolerance):
        return ClassVerdict(INCONCLUSIVE, tgt, tolerance, trend, win, "noise exceeds tolerance")
    dw = dev[-win:]
    if np.all(dw <= tolerance):
        return ClassVerdict(SUPPORTS, tgt, tolerance, trend, win, f"max window deviation {dw.max():.4g}")
    if np.all(dw > tolerance) and trend >= 0:
        return ClassVerdict(CONTRADICTS, tgt, tolerance, trend, win, f"min window deviation {dw.min():.4g}")
    return ClassVerdict(INCONCLUSIVE, tgt, tolerance, trend, win, "")


def monotone_toward(curve: RatioCurve, target: float, last_fraction: float = 0.25) -> bool:
    """True when deviations from ``target`` are non-increasing in the final part of the curve."""
    v = curve.values[curve.usable]
    if v.size < 2:
        return True
    k = min(v.size, max(2, math.ceil(v.size * last_fraction)))
    dev = np.abs(v[-k:] - target)
    return bool(np.all(np.diff(dev) <= 1e-15))


def curve_from_points(
    thresholds: Sequence[float],
    values: Sequence[float],
    stderr: Sequence[float] | None = None,
    flags: Sequence[str] | None = None,
    **meta: Any,
) -> RatioCurve:
    return RatioCurve(
        np.asarray(thresholds, dtype=float),
        np.asarray(values, dtype=float),
        None if stderr is None else np.asarray(stderr, dtype=float),
        tuple(flags) if flags is not None else (),
        dict(meta),
    )


def verdict_json(v: ClassVerdict) -> str:
    return json.dumps(v.to_dict(), sort_keys=True)
