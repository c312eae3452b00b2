"""Bivariate dependence structures, 2n-variable sequence models and tail diagnostics.

Every structure is expressed through *latent levels*: a claim ``X`` with tail
``F̄`` is produced as ``X = F̄⁻¹(U)`` with ``U`` uniform, so ``X > x`` exactly
when ``U < F̄(x)``.  A copula ``C`` of the latent levels is therefore the
survival copula of the claims, ``P[X > x, Y > y] = C(F̄(x), Ḡ(y))``, and this
identity stays exact for laws with atoms.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, ClassVar, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from . import rng
from .curves import RatioCurve
from .dists import SpecError, UnivariateSpec, spec_from_dict

_TINY = 1e-300
_ONE_MINUS = 1.0 - 2.0 ** -53


def _clip_level(u: np.ndarray) -> np.ndarray:
    return np.clip(u, _TINY, _ONE_MINUS)


def _fgm_conditional_inverse(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Root in [0, 1] of ``v + a v (1 - v) = w`` (stable form, valid for |a| <= 1)."""
    disc = np.maximum((1.0 + a) ** 2 - 4.0 * a * w, 0.0)
    return 2.0 * w / (1.0 + a + np.sqrt(disc))


# -- bivariate copulas ---------------------------------------------------------

@dataclass(frozen=True)
class DependenceSpec:
    kind: ClassVar[str] = ""
    closed_form: ClassVar[bool] = True

    def copula(self, u, v):
        """Survival copula ``Ĉ(u, v)`` (joint probability of both latent levels below)."""
        raise NotImplementedError

    def conditional(self, s, o):
        """``P[S < s | O = o]`` for the exchangeable pair (S, O) of latent levels."""
        raise NotImplementedError

    def partner(self, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Latent level of the second coordinate from the first and a fresh uniform."""
        raise NotImplementedError

    def scaling(self, t1: float, t2: float) -> tuple[float, float] | None:
        """Analytic ``(gamma, h)`` with ``Ĉ(t1 x, t2 x) ~ x^gamma h`` as x -> 0, if known."""
        return None

    @property
    def params(self) -> dict[str, float]:
        return {}

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        d.update(self.params)
        return d


@dataclass(frozen=True)
class Independent(DependenceSpec):
    kind: ClassVar[str] = "Independent"

    def copula(self, u, v):
        return np.asarray(u, dtype=float) * np.asarray(v, dtype=float)

    def conditional(self, s, o):
        return np.broadcast_to(np.asarray(s, dtype=float), np.broadcast(s, o).shape).copy()

    def partner(self, u, w):
        return w

    def scaling(self, t1, t2):
        return 2.0, t1 * t2


@dataclass(frozen=True)
class FGM(DependenceSpec):
    kind: ClassVar[str] = "FGM"
    theta: float = 0.0

    def __post_init__(self):
        if not (-1.0 <= self.theta <= 1.0):
            raise SpecError(f"FGM theta must lie in [-1, 1], got {self.theta}")

    def copula(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return u * v * (1.0 + self.theta * (1.0 - u) * (1.0 - v))

    def conditional(self, s, o):
        s = np.asarray(s, dtype=float)
        o = np.asarray(o, dtype=float)
        return s * (1.0 + self.theta * (1.0 - s) * (1.0 - 2.0 * o))

    def partner(self, u, w):
        return _fgm_conditional_inverse(w, self.theta * (1.0 - 2.0 * u))

    def scaling(self, t1, t2):
        return 2.0, (1.0 + self.theta) * t1 * t2

    @property
    def params(self):
        return {"theta": self.theta}


@dataclass(frozen=True)
class SurvivalClayton(DependenceSpec):
    """Clayton copula placed on the latent levels, i.e. lower-tail dependence of F̄(X)."""

    kind: ClassVar[str] = "SurvivalClayton"
    delta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise SpecError(f"SurvivalClayton delta must be > 0, got {self.delta}")

    def copula(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        d = self.delta
        with np.errstate(divide="ignore", over="ignore"):
            s = np.power(u, -d) + np.power(v, -d) - 1.0
            out = np.power(s, -1.0 / d)
        return np.where((u <= 0) | (v <= 0), 0.0, out)

    def conditional(self, s, o):
        s = np.asarray(s, dtype=float)
        o = np.asarray(o, dtype=float)
        d = self.delta
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            base = 1.0 + np.power(o, d) * (np.power(s, -d) - 1.0)
            out = np.power(base, -1.0 / d - 1.0)
        return np.where(s <= 0, 0.0, np.where(s >= 1, 1.0, out))

    def partner(self, u, w):
        d = self.delta
        return np.power(1.0 + np.power(u, -d) * np.expm1(-d / (1.0 + d) * np.log(w)), -1.0 / d)

    def scaling(self, t1, t2):
        return 1.0, (t1 ** -self.delta + t2 ** -self.delta) ** (-1.0 / self.delta)

    @property
    def params(self):
        return {"delta": self.delta}


@dataclass(frozen=True)
class Comonotone(DependenceSpec):
    kind: ClassVar[str] = "Comonotone"

    def copula(self, u, v):
        return np.minimum(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def conditional(self, s, o):
        return (np.asarray(o, dtype=float) < np.asarray(s, dtype=float)).astype(float)

    def partner(self, u, w):
        return u.copy()

    def scaling(self, t1, t2):
        return 1.0, min(t1, t2)


@dataclass(frozen=True)
class Countermonotone(DependenceSpec):
    kind: ClassVar[str] = "Countermonotone"

    def copula(self, u, v):
        return np.maximum(np.asarray(u, dtype=float) + np.asarray(v, dtype=float) - 1.0, 0.0)

    def conditional(self, s, o):
        return (1.0 - np.asarray(o, dtype=float) < np.asarray(s, dtype=float)).astype(float)

    def partner(self, u, w):
        return 1.0 - u


@dataclass(frozen=True)
class GaussianCopula(DependenceSpec):
    """Normal copula; values under ``CENSOR`` are reported as censored by diagnostics."""

    kind: ClassVar[str] = "GaussianCopula"
    closed_form: ClassVar[bool] = False
    CENSOR: ClassVar[float] = 1e-10
    rho: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.rho < 1.0):
            raise SpecError(f"GaussianCopula rho must lie in (-1, 1), got {self.rho}")

    def _phi2(self, h: float, k: float) -> float:
        # Plackett's identity: d/dr Phi2(h, k; r) is the bivariate normal density at (h, k)
        rho = self.rho
        if rho == 0.0 or not (math.isfinite(h) and math.isfinite(k)):
            return float(ndtr(h) * ndtr(k))

        def dens(r):
            q = 1.0 - r * r
            return math.exp(-(h * h - 2.0 * h * k * r + k * k) / (2.0 * q)) / math.sqrt(q)

        val, _ = integrate.quad(dens, 0.0, rho, epsabs=1e-13, epsrel=1e-12, limit=200)
        return float(min(max(ndtr(h) * ndtr(k) + val / (2.0 * math.pi), 0.0), 1.0))

    def copula(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        ub, vb = np.broadcast_arrays(u, v)
        out = np.empty(ub.shape)
        for i in np.ndindex(ub.shape):
            a, b = ub[i], vb[i]
            if a <= 0 or b <= 0:
                out[i] = 0.0
            elif a >= 1 or b >= 1:
                out[i] = min(a, b)
            else:
                out[i] = self._phi2(float(ndtri(a)), float(ndtri(b)))
        return out if out.ndim else float(out)

    def conditional(self, s, o):
        s = np.asarray(s, dtype=float)
        o = np.asarray(o, dtype=float)
        r = self.rho
        return ndtr((ndtri(s) - r * ndtri(o)) / math.sqrt(1.0 - r * r))

    def partner(self, u, w):
        r = self.rho
        return ndtr(r * ndtri(u) + math.sqrt(1.0 - r * r) * ndtri(w))

    @property
    def params(self):
        return {"rho": self.rho}


DEPENDENCE_KINDS: dict[str, type[DependenceSpec]] = {
    c.kind: c for c in (Independent, FGM, SurvivalClayton, Comonotone, Countermonotone, GaussianCopula)
}


def dependence_from_dict(d: dict[str, Any]) -> DependenceSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise SpecError("dependence spec must be an object with a 'kind' key")
    kind = d["kind"]
    if kind not in DEPENDENCE_KINDS:
        raise SpecError(f"unknown dependence kind {kind!r}; expected one of {sorted(DEPENDENCE_KINDS)}")
    cls = DEPENDENCE_KINDS[kind]
    params = {k: v for k, v in d.items() if k != "kind"}
    allowed = set(cls.__dataclass_fields__)
    unknown = set(params) - allowed
    if unknown:
        raise SpecError(f"unknown parameters for {kind}: {sorted(unknown)}")
    return cls(**{k: float(v) for k, v in params.items()})


# -- pairs -----------------------------------------------------------------------

@dataclass(frozen=True)
class BivariatePair:
    marginal_x: UnivariateSpec
    marginal_y: UnivariateSpec
    dep: DependenceSpec = field(default_factory=Independent)

    def joint_tail(self, x, y):
        """P[X > x, Y > y]."""
        out = self.dep.copula(self.marginal_x.tail(x), self.marginal_y.tail(y))
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def latent(self, w: np.ndarray) -> np.ndarray:
        """Map uniforms of shape (rows, 2) to latent levels of the pair."""
        u = w[:, 0]
        v = _clip_level(self.dep.partner(u, w[:, 1]))
        return np.column_stack([u, v])

    def from_latent(self, lat: np.ndarray) -> np.ndarray:
        return np.column_stack([self.marginal_x.isf(lat[:, 0]), self.marginal_y.isf(lat[:, 1])])

    def sample(self, seed: int, m: int) -> np.ndarray:
        w = rng.uniform_block(seed, rng.STREAM_CLAIMS, m, 2)
        return self.from_latent(self.latent(w))

    def to_dict(self) -> dict[str, Any]:
        return {
            "marginals": [self.marginal_x.to_dict(), self.marginal_y.to_dict()],
            "dep": self.dep.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BivariatePair":
        if not isinstance(d, dict):
            raise SpecError("pair must be an object")
        unknown = set(d) - {"marginals", "dep"}
        if unknown:
            raise SpecError(f"unknown keys in pair: {sorted(unknown)}")
        margs = d.get("marginals")
        if not isinstance(margs, list) or len(margs) != 2:
            raise SpecError("pair.marginals must be a list of two distribution specs")
        dep = dependence_from_dict(d.get("dep", {"kind": "Independent"}))
        return cls(spec_from_dict(margs[0]), spec_from_dict(margs[1]), dep)


def joint_tail(pair: BivariatePair, x, y):
    return pair.joint_tail(x, y)


def sample_pair(pair: BivariatePair, seed: int, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be >= 1")
    return pair.sample(seed, m)


# -- sequence models -------------------------------------------------------------

BLOCKS_INDEPENDENT = "BlocksIndependent"
COMMON_PAIR_IID = "CommonPairIID"
PAIRWISE_FGM = "PairwiseFGM"
STRUCTURES = (BLOCKS_INDEPENDENT, COMMON_PAIR_IID, PAIRWISE_FGM)


def fgm_matrix_valid(theta: np.ndarray) -> bool:
    """Multivariate FGM density ``1 + sum_{i<j} theta_ij a_i a_j`` is non-negative on the cube.

    The density is multilinear in ``a``, so checking the 2^d sign vertices suffices.
    """
    d = theta.shape[0]
    iu = np.triu_indices(d, 1)
    for signs in itertools.product((-1.0, 1.0), repeat=d - 1):
        e = np.array((1.0,) + signs)
        if 1.0 + float(np.sum(theta[iu] * e[iu[0]] * e[iu[1]])) < -1e-12:
            return False
    return True


@dataclass(frozen=True)
class SequenceModel:
    """Joint law of ``(X_1..X_n, Y_1..Y_n)``.

    Structures:
      * ``BlocksIndependent``: all 2n variables independent.
      * ``CommonPairIID``: pairs ``(X_k, Y_k)`` share ``pair_dep`` and are mutually independent.
      * ``PairwiseFGM``: one multivariate FGM copula on all 2n latent levels with pairwise
        parameters ``fgm_theta`` (scalar for every pair, or a symmetric 2n x 2n matrix in
        variable order x_1..x_n, y_1..y_n).  Sampled by sequential conditional inversion in
        that same order.
    """

    x_block: tuple[UnivariateSpec, ...]
    y_block: tuple[UnivariateSpec, ...]
    structure: str = BLOCKS_INDEPENDENT
    pair_dep: DependenceSpec | None = None
    fgm_theta: Any = None

    def __post_init__(self):
        object.__setattr__(self, "x_block", tuple(self.x_block))
        object.__setattr__(self, "y_block", tuple(self.y_block))
        if len(self.x_block) != len(self.y_block) or not self.x_block:
            raise SpecError("x_block and y_block must have the same positive length")
        if self.structure not in STRUCTURES:
            raise SpecError(f"unknown structure {self.structure!r}; expected one of {list(STRUCTURES)}")
        if self.structure == COMMON_PAIR_IID:
            if self.pair_dep is None:
                raise SpecError("CommonPairIID needs pair_dep")
        elif self.pair_dep is not None:
            raise SpecError(f"pair_dep only applies to {COMMON_PAIR_IID}")
        if self.structure == PAIRWISE_FGM:
            th = self.theta_matrix
            if not fgm_matrix_valid(th):
                raise SpecError("PairwiseFGM parameters do not define a valid copula")
        elif self.fgm_theta is not None:
            raise SpecError(f"fgm_theta only applies to {PAIRWISE_FGM}")

    @property
    def n(self) -> int:
        return len(self.x_block)

    @property
    def margins(self) -> tuple[UnivariateSpec, ...]:
        return self.x_block + self.y_block

    @cached_property
    def theta_matrix(self) -> np.ndarray:
        d = 2 * self.n
        if self.structure != PAIRWISE_FGM:
            return np.zeros((d, d))
        th = self.fgm_theta
        if th is None:
            raise SpecError("PairwiseFGM needs fgm_theta")
        if np.isscalar(th):
            if not -1.0 <= float(th) <= 1.0:
                raise SpecError("FGM theta must lie in [-1, 1]")
            mat = np.full((d, d), float(th))
        else:
            mat = np.array(th, dtype=float)
            if mat.shape != (d, d) or not np.allclose(mat, mat.T):
                raise SpecError(f"fgm_theta matrix must be symmetric {d}x{d}")
            if np.any(np.abs(mat) > 1.0):
                raise SpecError("FGM theta entries must lie in [-1, 1]")
        np.fill_diagonal(mat, 0.0)
        return mat

    @property
    def nonnegative(self) -> bool:
        return all(s.support_lo >= 0 for s in self.margins)

    def pair(self, k: int, l: int) -> BivariatePair:
        """Bivariate law of ``(X_k, Y_l)`` (0-based indices)."""
        if self.structure == COMMON_PAIR_IID and k == l:
            dep: DependenceSpec = self.pair_dep
        elif self.structure == PAIRWISE_FGM:
            dep = FGM(float(self.theta_matrix[k, self.n + l]))
        else:
            dep = Independent()
        return BivariatePair(self.x_block[k], self.y_block[l], dep)

    def pair_tail(self, k: int, l: int, x, y):
        return self.pair(k, l).joint_tail(x, y)

    def subset_copula(self, idx: Sequence[int], levels: Sequence[float]) -> float:
        """P[all U_i < levels_i, i in idx] for variable indices in x_1..x_n, y_1..y_n order."""
        idx = list(idx)
        lv = np.asarray(levels, dtype=float)
        if len(set(idx)) != len(idx):
            raise ValueError("subset indices must be distinct")
        if self.structure == BLOCKS_INDEPENDENT:
            return float(np.prod(lv))
        if self.structure == PAIRWISE_FGM:
            th = self.theta_matrix
            corr = 1.0
            for a in range(len(idx)):
                for b in range(a + 1, len(idx)):
                    corr += th[idx[a], idx[b]] * (1.0 - lv[a]) * (1.0 - lv[b])
            return float(np.prod(lv) * corr)
        n = self.n
        by_pair: dict[int, dict[str, float]] = {}
        for i, u in zip(idx, lv):
            by_pair.setdefault(i % n, {})["x" if i < n else "y"] = float(u)
        out = 1.0
        for d in by_pair.values():
            if len(d) == 2:
                out *= float(self.pair_dep.copula(d["x"], d["y"]))
            else:
                out *= next(iter(d.values()))
        return out

    def joint_tail_subset(self, idx: Sequence[int], thresholds: Sequence[float]) -> float:
        """P[Z_i > z_i for i in idx] with Z = (X_1..X_n, Y_1..Y_n)."""
        m = self.margins
        levels = [float(m[i].tail(z)) for i, z in zip(idx, thresholds)]
        return self.subset_copula(idx, levels)

    # sampling
    def latent(self, w: np.ndarray) -> np.ndarray:
        """Map uniforms (rows, 2n) to latent levels with the declared joint law."""
        n = self.n
        if w.shape[1] != 2 * n:
            raise ValueError("latent map needs 2n uniform columns")
        if self.structure == BLOCKS_INDEPENDENT:
            return w
        if self.structure == COMMON_PAIR_IID:
            out = w.copy()
            for k in range(n):
                out[:, n + k] = _clip_level(self.pair_dep.partner(w[:, k], w[:, n + k]))
            return out
        th = self.theta_matrix
        d = 2 * n
        lat = np.empty_like(w)
        a = np.empty_like(w)  # a_i = 1 - 2 u_i
        denom = np.ones(w.shape[0])
        for k in range(d):
            if k == 0:
                lat[:, 0] = w[:, 0]
                a[:, 0] = 1.0 - 2.0 * lat[:, 0]
                continue
            # conditional density of u_k given earlier levels is 1 + beta (1 - 2 u_k)
            num = a[:, :k] @ th[:k, k]
            with np.errstate(divide="ignore", invalid="ignore"):
                beta = np.where(denom > 1e-300, num / denom, 0.0)
            beta = np.clip(beta, -1.0, 1.0)
            lat[:, k] = _clip_level(_fgm_conditional_inverse(w[:, k], beta))
            a[:, k] = 1.0 - 2.0 * lat[:, k]
            denom = denom + a[:, k] * num
        return lat

    def from_latent(self, lat: np.ndarray) -> np.ndarray:
        return np.column_stack([s.isf(lat[:, i]) for i, s in enumerate(self.margins)])

    def sample(self, seed: int, m: int) -> np.ndarray:
        w = rng.uniform_block(seed, rng.STREAM_CLAIMS, m, 2 * self.n)
        return self.from_latent(self.latent(w))

    def is_iid_pairs(self) -> bool:
        if self.structure == PAIRWISE_FGM:
            return False
        return len(set(self.x_block)) == 1 and len(set(self.y_block)) == 1

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "structure": self.structure,
            "x_block": [s.to_dict() for s in self.x_block],
            "y_block": [s.to_dict() for s in self.y_block],
        }
        if self.pair_dep is not None:
            d["pair_dep"] = self.pair_dep.to_dict()
        if self.fgm_theta is not None:
            d["fgm_theta"] = self.fgm_theta if np.isscalar(self.fgm_theta) else np.asarray(self.fgm_theta).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SequenceModel":
        if not isinstance(d, dict):
            raise SpecError("sequence model must be an object")
        unknown = set(d) - {"structure", "x_block", "y_block", "pair_dep", "fgm_theta", "n", "x", "y"}
        if unknown:
            raise SpecError(f"unknown keys in sequence model: {sorted(unknown)}")
        if "x_block" in d:
            xs = [spec_from_dict(s) for s in d["x_block"]]
            ys = [spec_from_dict(s) for s in d["y_block"]]
        else:
            # shorthand: {"n": 2, "x": spec, "y": spec}
            try:
                n = int(d["n"])
                xs = [spec_from_dict(d["x"])] * n
                ys = [spec_from_dict(d["y"])] * n
            except KeyError as exc:
                raise SpecError(f"sequence model missing key {exc}") from exc
        dep = dependence_from_dict(d["pair_dep"]) if "pair_dep" in d else None
        th = d.get("fgm_theta")
        if isinstance(th, list):
            th = tuple(tuple(float(v) for v in row) for row in th)
        return cls(tuple(xs), tuple(ys), d.get("structure", BLOCKS_INDEPENDENT), dep, th)


def sample_sequence(model: SequenceModel, seed: int, m: int) -> np.ndarray:
    """``m`` draws as an (m, 2n) array with columns x_1..x_n, y_1..y_n."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return model.sample(seed, m)


def samples_csv(samples: np.ndarray, n: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)])
    for row in samples:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# -- diagnostics -----------------------------------------------------------------

def sai_profile(pair: BivariatePair, t_grid: Sequence[float]) -> RatioCurve:
    """Joint tail over the product of marginal tails along the diagonal."""
    t = np.asarray(t_grid, dtype=float)
    num = np.asarray(pair.joint_tail(t, t), dtype=float).reshape(t.shape)
    den = np.asarray(pair.marginal_x.tail(t) * pair.marginal_y.tail(t), dtype=float).reshape(t.shape)
    flags = []
    vals = np.full(t.shape, np.nan)
    censor = getattr(pair.dep, "CENSOR", 0.0)
    for i in range(t.size):
        if den[i] <= 0:
            flags.append("zero-denominator")
        elif num[i] < censor:
            flags.append("censored")
        else:
            flags.append("")
            vals[i] = num[i] / den[i]
    return RatioCurve(
        t, vals, None, tuple(flags),
        {"quantity": "sai", "limit_cases": "finite positive: SAI; divergent: dependent; zero: SAI with C=0"},
    )


@dataclass(frozen=True)
class ScalingEstimate:
    gamma: float
    h: float
    gamma_exact: float | None
    h_exact: float | None
    points: int


def scaling_h(dep: DependenceSpec, t1: float, t2: float, x_schedule: Sequence[float]) -> ScalingEstimate:
    """Log-log fit of ``Ĉ(t1 x, t2 x)`` against ``x`` over the smallest half of the schedule."""
    if not (t1 > 0 and t2 > 0):
        raise ValueError("t1 and t2 must be positive")
    xs = np.asarray(x_schedule, dtype=float)
    keep = []
    for x in xs:
        if t1 * x >= 1.0 or t2 * x >= 1.0:
            continue
        c = float(dep.copula(t1 * x, t2 * x))
        if c <= 0:
            break
        keep.append((x, c))
    exact = dep.scaling(t1, t2)
    if len(keep) < 2:
        return ScalingEstimate(math.nan, math.nan, *(exact or (None, None)), len(keep))
    arr = np.array(keep)
    order = np.argsort(arr[:, 0])
    arr = arr[order][: max(2, (len(arr) + 1) // 2)]
    lx, lc = np.log(arr[:, 0]), np.log(arr[:, 1])
    gamma, _ = np.polyfit(lx, lc, 1)
    # level read at the deepest point, using the fitted exponent
    h = float(np.exp(lc[0] - gamma * lx[0]))
    return ScalingEstimate(float(gamma), h, *(exact or (None, None)), len(arr))


def _grid_thresholds(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    return t


def diagnose_tai(samples: np.ndarray, t_grid: Sequence[float]) -> RatioCurve:
    """Max over ordered pairs ``i != j`` of the empirical ``P[|X_i| > t | X_j > t]``."""
    z = np.asarray(samples, dtype=float)
    if z.ndim != 2 or z.shape[1] < 2:
        raise ValueError("TAI diagnostic needs at least two variables")
    t = _grid_thresholds(t_grid)
    vals, ses, flags = [], [], []
    absz = np.abs(z)
    for tt in t:
        cond = z > tt
        hit = absz > tt
        best, best_se, empty = -1.0, 0.0, False
        for j in range(z.shape[1]):
            nj = int(cond[:, j].sum())
            if nj == 0:
                empty = True
                continue
            for i in range(z.shape[1]):
                if i == j:
                    continue
                p = float(np.sum(hit[:, i] & cond[:, j])) / nj
                if p > best:
                    best, best_se = p, math.sqrt(p * (1 - p) / nj)
        if best < 0:
            vals.append(math.nan)
            ses.append(math.nan)
            flags.append("empty-conditioning")
        else:
            vals.append(best)
            ses.append(best_se)
            flags.append("unreliable" if empty else "")
    return RatioCurve(t, np.array(vals), np.array(ses), tuple(flags), {"quantity": "tai"})


def diagnose_gtai(samples: np.ndarray, n: int, t_grid: Sequence[float]) -> RatioCurve:
    """Max of the two trio conditional families on the diagonal threshold ``t``.

    Family one: ``P[|X_i| > t | X_k > t, Y_j > t]`` for ``i != k``; family two:
    ``P[|Y_j| > t | X_i > t, Y_k > t]`` for ``j != k``.
    """
    z = np.asarray(samples, dtype=float)
    if n < 2:
        raise ValueError("GTAI diagnostic needs n >= 2")
    if z.ndim != 2 or z.shape[1] != 2 * n:
        raise ValueError("samples must have 2n columns")
    t = _grid_thresholds(t_grid)
    vals, ses, flags = [], [], []
    for tt in t:
        exc = z > tt
        hit = np.abs(z) > tt
        best, best_se, empty = -1.0, 0.0, False
        for a in range(n):
            for b in range(n):
                cond = exc[:, a] & exc[:, n + b]  # X_a > t, Y_b > t
                nc = int(cond.sum())
                if nc == 0:
                    empty = True
                    continue
                others = [i for i in range(n) if i != a] + [n + j for j in range(n) if j != b]
                for o in others:
                    p = float(np.sum(hit[:, o] & cond)) / nc
                    if p > best:
                        best, best_se = p, math.sqrt(p * (1 - p) / nc)
        if best < 0:
            vals.append(math.nan)
            ses.append(math.nan)
            flags.append("empty-conditioning")
        else:
            vals.append(best)
            ses.append(best_se)
            flags.append("unreliable" if empty else "")
    return RatioCurve(t, np.array(vals), np.array(ses), tuple(flags), {"quantity": "gtai"})
