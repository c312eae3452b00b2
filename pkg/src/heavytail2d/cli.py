"""Command-line front end.

Every subcommand reads one JSON plan file.  ``verify`` takes an experiment
plan; the other subcommands take a command plan ``{"model": ..., options}``
or, where no options are needed, a bare model document.  Parsing is strict:
unknown keys are errors, reported with the file line and the offending field.

Exit codes: 0 success (or ``supports``), 1 a failed verdict, 2 an error,
3 weights outside their declared bounds.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .asymptotics import (
    AssumptionCError,
    ScalarProductModel,
    WeightModel,
    ruin_and_rhs,
    scalar_product_tail,
    sum_tail_rhs,
)
from .classify import (
    DEFAULT_TOLERANCE,
    RatioProbe,
    c2_profile,
    d2_ratio,
    l2_ratio,
    s2_ratio,
    univariate_ratio,
)
from .curves import CONTRADICTS, SUPPORTS, RatioCurve, verdict
from .dependence import (
    BLOCKS_INDEPENDENT,
    COMMON_PAIR_IID,
    BivariatePair,
    Independent,
    SequenceModel,
    dependence_from_dict,
    samples_csv,
)
from .dists import DomainError, SpecError, UnivariateSpec, UnsupportedModelError, spec_from_dict
from .mcengine import (
    CONDITIONAL,
    EV_MAX,
    EV_RUNMAX,
    EV_SUM,
    RiskModelConfig,
    conditional_estimator,
    estimate_events,
    estimate_ruin,
)
from .verify import ExperimentPlan, Schedule, plan_model_from_dict, run_plan

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2
EXIT_ASSUMPTION_C = 3

SUBCOMMANDS = ("sample", "tail", "classify", "ruin", "tailsum", "verify")
FORMATS = ("csv", "json")

DEFAULT_GRID = tuple(np.geomspace(10.0, 1e6, 25).tolist())
DEFAULT_D_CAP = 100.0
DEFAULT_M = 100_000

_COMMAND_KEYS = {
    "sample": {"model", "m", "seed"},
    "tail": {"model", "x", "y"},
    "classify": {"model", "probe", "param", "ray", "grid", "cap", "tolerance", "m", "seed"},
    "ruin": {"model", "which", "m", "seed"},
    "tailsum": {"model", "weights", "x", "y", "lhs", "estimator", "m", "seed"},
}
_TAILSUM_EVENTS = {"sum": EV_SUM, "runmax": EV_RUNMAX, "max": EV_MAX}


class PlanError(SpecError):
    """A plan file that does not parse; the message carries file, line and field."""

    def __init__(self, message: str, assumption_c: bool = False):
        super().__init__(message)
        self.assumption_c = assumption_c


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    plan_path: Path
    out_path: Path | None = None
    seed: int | None = None
    m: int | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise SpecError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in FORMATS:
            raise SpecError(f"format must be one of {list(FORMATS)}")
        if self.seed is not None and self.seed < 0:
            raise SpecError("--seed must be non-negative")
        if self.m is not None and self.m < 1:
            raise SpecError("--samples must be positive")


@dataclass(frozen=True)
class CommandPlan:
    """A model plus the options of one non-verify subcommand."""

    subcommand: str
    model: Any
    options: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {"model": model_to_dict(self.model)}
        for k, v in self.options.items():
            out[k] = v.to_dict() if isinstance(v, WeightModel) else v
        return out

    @property
    def plan_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def seed(self) -> int:
        return int(self.options.get("seed", 0))

    @property
    def m(self) -> int:
        return int(self.options.get("m", DEFAULT_M))


# -- model documents ---------------------------------------------------------------

def model_from_dict(d: Any) -> Any:
    """Recognise a bare model document by its keys."""
    if not isinstance(d, dict):
        raise SpecError("model must be a JSON object")
    if "family" in d:
        return spec_from_dict(d)
    if "marginals" in d:
        return BivariatePair.from_dict(d)
    if "claims" in d:
        return RiskModelConfig.from_dict(d)
    if "pair" in d and "theta" in d:
        return ScalarProductModel.from_dict(d)
    if {"structure", "x_block", "n"} & set(d):
        return SequenceModel.from_dict(d)
    raise SpecError(f"cannot tell which model this is from keys {sorted(d)}")


def model_to_dict(model: Any) -> dict[str, Any]:
    return model.to_dict()


def _field_parsers(doc: dict[str, Any]) -> dict[str, Callable[[Any], Any]]:
    """Sub-parsers used to pin a failure on one top-level field."""

    def specs(v):
        return [spec_from_dict(s) for s in v]

    return {
        "model": (lambda v: plan_model_from_dict(doc["kind"], v)) if "kind" in doc else model_from_dict,
        "weights": WeightModel.from_dict,
        "schedule": Schedule.from_dict,
        "claims": SequenceModel.from_dict,
        "marginals": specs,
        "dep": dependence_from_dict,
        "pair_dep": dependence_from_dict,
        "pair": BivariatePair.from_dict,
        "theta": spec_from_dict,
        "x_block": specs,
        "y_block": specs,
        "specs": specs,
        "pairs": lambda v: [BivariatePair.from_dict(p) for p in v],
    }


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _diagnose(path: Path, text: str, doc: dict[str, Any], exc: Exception) -> PlanError:
    msg = str(exc)
    where = None
    unknown = re.search(r"unknown (?:keys|params|parameters)[^\[]*\['([^']+)'", msg)
    if unknown:
        where = unknown.group(1)
    else:
        parsers = _field_parsers(doc)
        for key, value in doc.items():
            if key not in parsers:
                continue
            try:
                parsers[key](value)
            except (SpecError, ValueError, TypeError, KeyError):
                where = key
                break
        if where is None:
            quoted = re.search(r"'([A-Za-z_]+)'", msg)
            if quoted and quoted.group(1) in doc:
                where = quoted.group(1)
    line = _line_of(text, where) if where else 1
    label = f"field '{where}'" if where else "plan"
    return PlanError(f"{path}:{line}: {label}: {msg}", isinstance(exc, AssumptionCError))


def _load_json(path: Path) -> tuple[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise PlanError(f"{path}: cannot read plan: {exc.strerror or exc}") from exc
    try:
        return text, json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def _command_options(sub: str, doc: dict[str, Any]) -> dict[str, Any]:
    allowed = _COMMAND_KEYS[sub]
    unknown = set(doc) - allowed
    if unknown:
        raise SpecError(f"unknown keys in {sub} plan: {sorted(unknown)}")
    opts = {k: v for k, v in doc.items() if k != "model"}
    if "weights" in opts:
        opts["weights"] = WeightModel.from_dict(opts["weights"])
    for key in ("m", "seed"):
        if key in opts:
            if not isinstance(opts[key], int) or isinstance(opts[key], bool) or opts[key] < 0:
                raise SpecError(f"'{key}' must be a non-negative integer")
    if sub == "classify" and opts.get("probe", "D") not in ("L", "D", "C", "S"):
        raise SpecError("'probe' must be one of 'L', 'D', 'C', 'S'")
    if sub == "ruin" and opts.get("which", "and") not in ("and", "max"):
        raise SpecError("'which' must be 'and' or 'max'")
    if sub == "tailsum":
        if opts.get("lhs", "sum") not in _TAILSUM_EVENTS:
            raise SpecError(f"'lhs' must be one of {sorted(_TAILSUM_EVENTS)}")
        if opts.get("estimator", "plain") not in ("plain", CONDITIONAL):
            raise SpecError("'estimator' must be 'plain' or 'conditional'")
    if "grid" in opts:
        _grid(opts["grid"])
    return opts


def parse_plan(path: str | Path, subcommand: str | None = None) -> Any:
    """Parse and validate a plan file.

    Returns an :class:`ExperimentPlan` for experiment documents (those with
    ``kind``), a :class:`CommandPlan` when ``subcommand`` is given for a
    non-verify subcommand, and otherwise the bare model object.

    Raises:
        PlanError: with ``file:line: field '...': reason``; ``assumption_c`` is
            set when weights leave their declared bounds.
    """
    path = Path(path)
    text, doc = _load_json(path)
    if not isinstance(doc, dict):
        raise PlanError(f"{path}:1: plan must be a JSON object")
    try:
        if subcommand == "verify" or (subcommand is None and "kind" in doc):
            return ExperimentPlan.from_dict(doc)
        if subcommand is not None:
            if "model" in doc:
                model = model_from_dict(doc["model"])
                opts = _command_options(subcommand, doc)
            else:
                model, opts = model_from_dict(doc), {}
            return CommandPlan(subcommand, model, opts)
        return model_from_dict(doc)
    except PlanError:
        raise
    except (SpecError, DomainError, UnsupportedModelError, ValueError, TypeError, KeyError) as exc:
        raise _diagnose(path, text, doc, exc) from exc


# -- output helpers ------------------------------------------------------------------

def _provenance(plan_hash: str, seed: int | None, m: int | None, command: str) -> dict[str, Any]:
    return {"command": command, "plan_sha256": plan_hash, "seed": seed, "m": m, "version": __version__}


def _with_header(prov: dict[str, Any], body: str) -> str:
    return "".join(f"# {k}={v}\n" for k, v in prov.items()) + body


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", text.replace("@", "_at_"))


def _grid(spec: Any) -> np.ndarray:
    if isinstance(spec, dict):
        if set(spec) != {"geom"} or len(spec["geom"]) != 3:
            raise SpecError("'grid' object must be {\"geom\": [lo, hi, points]}")
        lo, hi, pts = spec["geom"]
        if not (0 < lo < hi) or int(pts) < 2:
            raise SpecError("'grid' geom needs 0 < lo < hi and at least 2 points")
        return np.geomspace(float(lo), float(hi), int(pts))
    arr = np.asarray(spec, dtype=float)
    if arr.ndim != 1 or arr.size < 1 or np.any(np.diff(arr) <= 0):
        raise SpecError("'grid' must be a strictly increasing list of thresholds")
    return arr


def _as_list(v: Any) -> list[float]:
    return [float(t) for t in (v if isinstance(v, (list, tuple)) else [v])]


# -- subcommands -------------------------------------------------------------------

def _apply_overrides(plan: CommandPlan, cfg: CliConfig) -> CommandPlan:
    opts = dict(plan.options)
    if cfg.seed is not None:
        opts["seed"] = cfg.seed
    if cfg.m is not None:
        opts["m"] = cfg.m
    return replace(plan, options=opts)


def _json_result(plan: CommandPlan, payload: dict[str, Any], seed, m) -> str:
    body = dict(payload)
    body["provenance"] = _provenance(plan.plan_hash, seed, m, plan.subcommand)
    body["plan"] = plan.to_dict()
    return json.dumps(_json_safe(body), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _json_safe(obj: Any) -> Any:
    """Non-finite floats become null so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _cmd_sample(plan: CommandPlan, cfg: CliConfig) -> tuple[int, str, str]:
    model, m, seed = plan.model, plan.m, plan.seed
    if isinstance(model, SequenceModel):
        draws = model.sample(seed, m)
        names = [f"x{i + 1}" for i in range(model.n)] + [f"y{i + 1}" for i in range(model.n)]
    elif isinstance(model, BivariatePair):
        draws, names = model.sample(seed, m), ["x", "y"]
    elif isinstance(model, UnivariateSpec):
        draws, names = model.sample(seed, m)[:, None], ["x"]
    else:
        raise UnsupportedModelError(f"sample does not handle {type(model).__name__}")
    prov = _provenance(plan.plan_hash, seed, m, "sample")
    if cfg.format == "json":
        text = _json_result(plan, {"columns": names, "values": draws.tolist()}, seed, m)
    elif isinstance(model, SequenceModel):
        text = _with_header(prov, samples_csv(draws, model.n))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        w.writerows([[repr(float(v)) for v in row] for row in draws])
        text = _with_header(prov, buf.getvalue())
    return EXIT_OK, text, f"sample: {m} draws of {len(names)} columns (seed {seed})"


def _cmd_tail(plan: CommandPlan, cfg: CliConfig) -> tuple[int, str, str]:
    model = plan.model
    if "x" not in plan.options:
        raise SpecError("tail plans need 'x'")
    xs = _as_list(plan.options["x"])
    if isinstance(model, UnivariateSpec):
        ys = None
        values = [float(model.tail(x)) for x in xs]
    else:
        raw_y = plan.options.get("y", plan.options["x"])
        ys = _as_list(raw_y)
        if len(ys) == 1 and len(xs) > 1:
            ys = ys * len(xs)
        if len(ys) != len(xs):
            raise SpecError("'x' and 'y' must have equal length")
        if isinstance(model, BivariatePair):
            values = [float(model.joint_tail(x, y)) for x, y in zip(xs, ys)]
        elif isinstance(model, ScalarProductModel):
            values = [scalar_product_tail(model, x, y) for x, y in zip(xs, ys)]
        else:
            raise UnsupportedModelError(f"tail does not handle {type(model).__name__}")
    prov = _provenance(plan.plan_hash, None, None, "tail")
    if cfg.format == "json":
        text = _json_result(plan, {"x": xs, "y": ys, "tail": values}, None, None)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "tail"] if ys is None else ["x", "y", "tail"])
        for i, x in enumerate(xs):
            row = [x] if ys is None else [x, ys[i]]
            w.writerow([repr(v) for v in row + [values[i]]])
        text = _with_header(prov, buf.getvalue())
    return EXIT_OK, text, f"tail: {len(xs)} points"


def _pair_param(param: Any, default: float) -> tuple[float, float]:
    vals = _as_list(default if param is None else param)
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise SpecError("'param' must be a number or a pair of numbers")
    return vals[0], vals[1]


def _classify_curve(plan: CommandPlan) -> tuple[RatioCurve, Any]:
    opts, model = plan.options, plan.model
    probe = opts.get("probe", "D")
    grid = _grid(opts.get("grid", list(DEFAULT_GRID)))
    ray = float(opts.get("ray", 1.0))
    param = opts.get("param")
    if isinstance(model, UnivariateSpec):
        kind = {"L": "L-shift", "D": "D-scale", "C": "C-profile"}.get(probe)
        if kind is None:
            raise UnsupportedModelError("the S probe needs a bivariate model")
        return univariate_ratio(model, kind, grid, param), probe
    if not isinstance(model, BivariatePair):
        raise UnsupportedModelError(f"classify does not handle {type(model).__name__}")
    if probe == "L":
        shift = _pair_param(param, 1.0)
        return l2_ratio(model, RatioProbe("L", shift=shift, ray=ray), grid), probe
    if probe == "D":
        scale = _pair_param(param, 0.5)
        return d2_ratio(model, RatioProbe("D", scale=scale, ray=ray), grid), probe
    if probe == "C":
        zs = param if param is not None else [1 - 10.0 ** -k for k in range(1, 6)]
        return c2_profile(model, zs, grid, ray=ray), probe
    if isinstance(model.dep, Independent):
        seq = SequenceModel((model.marginal_x,) * 2, (model.marginal_y,) * 2, BLOCKS_INDEPENDENT)
    else:
        seq = SequenceModel((model.marginal_x,) * 2, (model.marginal_y,) * 2, COMMON_PAIR_IID, model.dep)
    return s2_ratio(seq, grid, plan.m, plan.seed, ray=ray), probe


def _cmd_classify(plan: CommandPlan, cfg: CliConfig) -> tuple[int, str, str]:
    result, probe = _classify_curve(plan)
    tol = float(plan.options.get("tolerance", DEFAULT_TOLERANCE))
    if probe == "C" and not isinstance(result, RatioCurve):
        v = result.verdict(tol)
        curve = result.sup_curve
    else:
        curve = result
        if probe == "D":
            v = verdict(curve, "bounded", tol, cap=float(plan.options.get("cap", DEFAULT_D_CAP)))
        else:
            v = verdict(curve, 4.0 if probe == "S" else 1.0, tol)
    seed, m = (plan.seed, plan.m) if probe == "S" else (None, None)
    if cfg.format == "json":
        text = _json_result(plan, {"curve": curve.to_dict(), "verdict": v.to_dict()}, seed, m)
    else:
        prov = dict(_provenance(plan.plan_hash, seed, m, "classify"), probe=probe, verdict=v.status)
        text = _with_header(prov, curve.to_csv())
    code = EXIT_FAILED if v.status == CONTRADICTS else EXIT_OK
    return code, text, f"classify {probe}: {v.status} (trend {v.trend:+.3g})"


def _estimate_text(plan: CommandPlan, cfg: CliConfig, est, rhs: float) -> str:
    payload = dict(est.to_dict(), rhs=rhs)
    if cfg.format == "json":
        return _json_result(plan, payload, est.seed, est.m)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(payload))
    w.writerow([repr(v) if isinstance(v, float) else v for v in payload.values()])
    return _with_header(_provenance(plan.plan_hash, est.seed, est.m, plan.subcommand), buf.getvalue())


def _cmd_ruin(plan: CommandPlan, cfg: CliConfig) -> tuple[int, str, str]:
    if not isinstance(plan.model, RiskModelConfig):
        raise SpecError("ruin plans need a risk model with 'claims', 'x' and 'y'")
    which = plan.options.get("which", "and")
    cfg_model = plan.model
    est = estimate_ruin(cfg_model, which, plan.m, plan.seed)
    rhs = ruin_and_rhs(cfg_model.claims, cfg_model.weights, cfg_model.x, cfg_model.y)
    text = _estimate_text(plan, cfg, est, rhs)
    return EXIT_OK, text, f"ruin {which}: {est.value:.6g} +/- {est.stderr:.2g} (m={est.m}, seed={est.seed})"


def _cmd_tailsum(plan: CommandPlan, cfg: CliConfig) -> tuple[int, str, str]:
    model, opts = plan.model, plan.options
    if not isinstance(model, SequenceModel):
        raise SpecError("tailsum plans need a claim sequence model")
    for key in ("x", "y"):
        if key not in opts:
            raise SpecError(f"tailsum plans need '{key}'")
    x, y = float(opts["x"]), float(opts["y"])
    weights = opts.get("weights") or WeightModel()
    lhs = opts.get("lhs", "sum")
    if opts.get("estimator", "plain") == CONDITIONAL:
        if lhs != "sum":
            raise UnsupportedModelError("the conditional estimator targets the sum tail only")
        est = conditional_estimator(model, weights, x, y, plan.m, plan.seed)
    else:
        est = estimate_events(model, weights, x, y, plan.m, plan.seed)[_TAILSUM_EVENTS[lhs]]
    rhs = sum_tail_rhs(model, x, y) if weights.trivial else ruin_and_rhs(model, weights, x, y)
    text = _estimate_text(plan, cfg, est, rhs)
    return EXIT_OK, text, f"tailsum {lhs}: {est.value:.6g} +/- {est.stderr:.2g} ({est.method}, m={est.m})"


def _cmd_verify(plan: ExperimentPlan, cfg: CliConfig) -> tuple[int, str, str]:
    if cfg.seed is not None:
        plan = replace(plan, seed=cfg.seed)
    if cfg.m is not None:
        plan = replace(plan, m=cfg.m)
    result = run_plan(plan)
    out_dir = cfg.out_path if cfg.out_path is not None else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = _safe_name(plan.name)
    written = []
    for name in result.curves:
        p = out_dir / f"{stem}_{_safe_name(name)}.csv"
        p.write_text(result.to_csv(name))
        written.append(p)
    body = result.to_dict()
    body["plan"] = plan.to_dict()
    verdict_path = out_dir / f"{stem}_verdicts.json"
    verdict_path.write_text(json.dumps(_json_safe(body), indent=2, sort_keys=True, allow_nan=False) + "\n")
    statuses = [v.status for v in result.verdicts.values()]
    code = EXIT_OK if result.passed else EXIT_FAILED
    summary = (
        f"{plan.name}: {'PASS' if result.passed else 'FAIL'}"
        f" ({statuses.count(SUPPORTS)}/{len(statuses)} supports,"
        f" {sum(result.checks.values())}/{len(result.checks)} checks"
        f"{', negative control' if plan.negative_control else ''}) -> {verdict_path}"
    )
    return code, "", summary


_COMMANDS = {
    "sample": _cmd_sample,
    "tail": _cmd_tail,
    "classify": _cmd_classify,
    "ruin": _cmd_ruin,
    "tailsum": _cmd_tailsum,
}


def dispatch(cfg: CliConfig) -> int:
    """Run one subcommand; writes its artifacts and prints a one-line summary to stderr."""
    try:
        plan = parse_plan(cfg.plan_path, cfg.subcommand)
    except PlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION_C if exc.assumption_c else EXIT_ERROR
    try:
        if cfg.subcommand == "verify":
            code, text, summary = _cmd_verify(plan, cfg)
        else:
            code, text, summary = _COMMANDS[cfg.subcommand](_apply_overrides(plan, cfg), cfg)
            _emit(text, cfg.out_path)
    except AssumptionCError as exc:
        print(f"error: {cfg.plan_path}: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION_C
    except (SpecError, DomainError, UnsupportedModelError, ValueError) as exc:
        print(f"error: {cfg.plan_path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(summary, file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heavytail2d", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = subs.add_parser(name)
        sp.add_argument("plan_file", nargs="?", type=Path, help="plan JSON (same as --plan)")
        sp.add_argument("--plan", type=Path, dest="plan_flag")
        sp.add_argument("--out", type=Path, help="output file, or output directory for verify")
        sp.add_argument("--seed", type=int, help="overrides the plan seed")
        sp.add_argument("--samples", type=int, help="overrides the plan sample count m")
        sp.add_argument("--format", choices=FORMATS, default="json" if name in ("ruin", "tailsum") else "csv")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    plan_path = args.plan_flag or args.plan_file
    if plan_path is None:
        parser.error("a plan file is required (positional or --plan)")
    try:
        cfg = CliConfig(args.subcommand, plan_path, args.out, args.seed, args.samples, args.format)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
