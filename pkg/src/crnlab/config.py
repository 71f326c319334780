"""Experiment configs: JSON documents driving the harness from the CLI.

A config names a network file, an experiment kind, the scaling-spec fields,
a reference selector, a seed, and optional acceptance thresholds (checked
by the CLI for its exit code).  Validation errors carry the offending field
path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import CRNError
from .experiments import (
    ComparisonResult,
    ScalingSpec,
    Timescale,
    run_classical_scaling,
    run_drift_survey,
    run_occupation_experiment,
    run_scaling_experiment,
)
from .limits import (
    LimitCurve,
    LimitJumpProcess,
    autocatalytic_curves,
    conditioned_poisson_pmf,
    limit_jump_parameters,
    slow_fast_horizontal_curves,
    triangle_regime_curves,
)
from .parser import load_network
from .simulate import (
    Displacement,
    Downcross,
    FixedTime,
    HitSet,
    JumpExcluding,
    JumpOfType,
    NthJump,
    RuleSequence,
    linear_energy,
    entropy_energy,
    polynomial_energy,
)


class ConfigError(CRNError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config field {path!r}: {message}")
        self.path = path


_EVAL_NAMES = {
    "floor": math.floor,
    "ceil": math.ceil,
    "sqrt": math.sqrt,
    "min": min,
    "max": max,
    "int": int,
}


def _initial_state_fn(templates: list, path: str):
    """Compile per-coordinate expressions in N, e.g. ["floor(0.5*N)", "3"]."""
    if not isinstance(templates, list) or not templates:
        raise ConfigError(path, "must be a non-empty list of expressions in N")
    codes = []
    for i, expr in enumerate(templates):
        try:
            codes.append(compile(str(expr), f"{path}[{i}]", "eval"))
        except SyntaxError as exc:
            raise ConfigError(f"{path}[{i}]", f"bad expression: {exc}") from exc

    def fn(n: int):
        env = dict(_EVAL_NAMES, N=n)
        return tuple(int(eval(code, {"__builtins__": {}}, env)) for code in codes)

    try:
        fn(2)
    except Exception as exc:
        raise ConfigError(path, f"expression failed at N=2: {exc}") from exc
    return fn


def _need(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise ConfigError(f"{path}.{key}" if path else key, "missing")
    val = doc[key]
    if kind is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, kind):
        raise ConfigError(f"{path}.{key}" if path else key, f"expected {kind.__name__}")
    return val


def build_reference(doc: dict, path: str = "reference"):
    kind = _need(doc, "type", str, path)
    if kind == "triangle-regime":
        return triangle_regime_curves(
            _need(doc, "regime", str, path),
            k2=doc.get("k2", 1.0),
            k12=doc.get("k12", 1.0),
            k1=doc.get("k1", 1.0),
            alpha1=doc.get("alpha1", 0.5),
            beta=doc.get("beta", 0.0),
            t_end=doc.get("t_end", 20.0),
        )
    if kind == "power-decay":
        return autocatalytic_curves(
            int(_need(doc, "p", int, path)),
            int(_need(doc, "q", int, path)),
            k3=doc.get("k3", 1.0),
            k4=doc.get("k4", 1.0),
            delta=doc.get("delta", 1.0),
        ).y1
    if kind == "linear-decay":
        return slow_fast_horizontal_curves(
            k0=doc.get("k0", 1.0),
            k1=doc.get("k1", 1.0),
            k2=doc.get("k2", 1.0),
            k3=doc.get("k3", 1.0),
            alpha1=doc.get("alpha1", 1.0),
        ).linear
    if kind == "conditioned-poisson":
        return conditioned_poisson_pmf(
            float(_need(doc, "rate_ratio", (int, float), path)),
            int(doc.get("support", 40)),
        )
    if kind == "limit-jump":
        p = int(_need(doc, "p", int, path))
        r1, d1 = limit_jump_parameters(
            p, doc.get("k0", 1.0), doc.get("k1", 1.0), doc.get("k3", 1.0)
        )
        return LimitJumpProcess(r1=r1, delta1=d1, p=p, alpha=doc.get("alpha", 1.0))
    raise ConfigError(f"{path}.type", f"unknown reference type {kind!r}")


def build_rule(doc: dict, path: str = "rule"):
    kind = _need(doc, "type", str, path)
    if kind == "first-jump":
        return NthJump(1)
    if kind == "nth-jump":
        return NthJump(int(_need(doc, "n", int, path)))
    if kind == "fixed-time":
        return FixedTime(float(_need(doc, "eta", (int, float), path)))
    if kind == "hit":
        return HitSet(
            coord=int(_need(doc, "coord", int, path)),
            op=_need(doc, "op", str, path),
            value=int(_need(doc, "value", int, path)),
        )
    if kind == "jump-of-type":
        return JumpOfType(tuple(_need(doc, "reactions", list, path)), int(doc.get("count", 1)))
    if kind == "jump-excluding":
        return JumpExcluding(tuple(_need(doc, "reactions", list, path)), int(doc.get("count", 1)))
    if kind == "displacement":
        return Displacement(tuple(_need(doc, "delta", list, path)), int(doc.get("count", 1)))
    if kind == "downcross":
        return Downcross(
            coord=int(_need(doc, "coord", int, path)),
            level=int(_need(doc, "level", int, path)),
            count=int(doc.get("count", 1)),
        )
    if kind == "sequence":
        rules = _need(doc, "rules", list, path)
        return RuleSequence(tuple(build_rule(r, f"{path}.rules[{i}]") for i, r in enumerate(rules)))
    raise ConfigError(f"{path}.type", f"unknown rule type {kind!r}")


def build_energy(doc: dict, path: str = "energy"):
    kind = _need(doc, "type", str, path)
    if kind == "norm":
        return linear_energy()
    if kind == "linear":
        return linear_energy(_need(doc, "weights", list, path))
    if kind == "entropy":
        return entropy_energy()
    if kind == "polynomial":
        return polynomial_energy(
            _need(doc, "exponents", list, path), doc.get("weights")
        )
    raise ConfigError(f"{path}.type", f"unknown energy type {kind!r}")


def _build_spec(doc: dict) -> ScalingSpec:
    ts_doc = doc.get("timescale", {"direction": "speed-up", "exponent": 0.0})
    ts = Timescale(
        direction=ts_doc.get("direction", "speed-up"),
        exponent=float(ts_doc.get("exponent", 0.0)),
    )
    return ScalingSpec(
        initial_state=_initial_state_fn(_need(doc, "initial", list, ""), "initial"),
        n_values=tuple(int(n) for n in _need(doc, "n_values", list, "")),
        replicas=int(_need(doc, "replicas", int, "")),
        space_exponents=tuple(float(a) for a in _need(doc, "space_exponents", list, "")),
        timescale=ts,
        horizon=float(_need(doc, "horizon", (int, float), "")),
        grid_points=int(doc.get("grid_points", 200)),
        compare_components=(
            tuple(doc["compare_components"]) if "compare_components" in doc else None
        ),
        max_events=int(doc.get("max_events", 10**8)),
    )


@dataclass
class ExperimentOutcome:
    result: Any
    thresholds_ok: bool
    threshold_report: list[str]


def _check_comparison_thresholds(res: ComparisonResult, th: dict) -> tuple[bool, list[str]]:
    ok = True
    report = []
    if "final_error_max" in th:
        bound = float(th["final_error_max"])
        good = res.final_mean < bound
        ok &= good
        report.append(
            f"final mean {res.metric} {res.final_mean:.5f} "
            f"{'<' if good else '>='} {bound} [{'ok' if good else 'FAIL'}]"
        )
    if th.get("require_decreasing"):
        good = res.monotone == "decreasing"
        ok &= good
        report.append(f"monotone verdict: {res.monotone} [{'ok' if good else 'FAIL'}]")
    if "tv_max" in th:
        bound = float(th["tv_max"])
        worst = max(p.mean for p in res.per_n)
        good = worst < bound
        ok &= good
        report.append(f"worst TV {worst:.5f} {'<' if good else '>='} {bound} [{'ok' if good else 'FAIL'}]")
    if "ks_alpha" in th:
        alpha = float(th["ks_alpha"])
        pvals = res.details.get("ks_pvalue", {})
        good = all(p > alpha for p in pvals.values())
        ok &= good
        report.append(f"KS p-values {pvals} vs alpha={alpha} [{'ok' if good else 'FAIL'}]")
    if "duration_rel_err_max" in th:
        bound = float(th["duration_rel_err_max"])
        expected = res.details.get("expected_duration")
        good = all(
            abs(v - expected) / expected <= bound
            for v in res.details.get("mean_scaled_duration", {}).values()
        )
        ok &= good
        report.append(f"scaled excursion durations within {bound:.0%} of {expected} [{'ok' if good else 'FAIL'}]")
    return ok, report


def run_experiment_config(doc: dict, base_dir: Path, jobs: int = 1) -> ExperimentOutcome:
    """Execute a validated config document; returns results + threshold verdict."""
    kind = _need(doc, "kind", str, "")
    if kind not in ("scaling", "classical", "occupation", "drift"):
        raise ConfigError("kind", f"unknown experiment kind {kind!r}")
    net_path = Path(_need(doc, "network", str, ""))
    if not net_path.is_absolute():
        net_path = base_dir / net_path
    if not net_path.exists():
        raise ConfigError("network", f"file not found: {net_path}")
    net = load_network(net_path)
    seed = int(_need(doc, "seed", int, ""))
    th = doc.get("thresholds", {})

    if kind == "scaling":
        spec = _build_spec(doc)
        ref = build_reference(_need(doc, "reference", dict, ""))
        if not isinstance(ref, LimitCurve):
            raise ConfigError("reference", "scaling experiments need a curve reference")
        res = run_scaling_experiment(net, spec, ref, seed=seed, jobs=jobs)
        ok, report = _check_comparison_thresholds(res, th)
        return ExperimentOutcome(res, ok, report)

    if kind == "classical":
        spec = _build_spec(doc)
        res = run_classical_scaling(net, spec, seed=seed, jobs=jobs)
        ok, report = _check_comparison_thresholds(res, th)
        return ExperimentOutcome(res, ok, report)

    if kind == "occupation":
        spec = _build_spec(doc)
        ref = build_reference(_need(doc, "reference", dict, ""))
        if isinstance(ref, LimitCurve):
            raise ConfigError("reference", "occupation experiments need a pmf or limit-jump reference")
        res = run_occupation_experiment(
            net,
            spec,
            ref,
            projection=int(_need(doc, "projection", int, "")),
            seed=seed,
            condition_min=int(doc.get("condition_min", 0)),
            state_cap=doc.get("state_cap"),
            jobs=jobs,
        )
        ok, report = _check_comparison_thresholds(res, th)
        return ExperimentOutcome(res, ok, report)

    # drift survey
    states_doc = _need(doc, "states", list, "")
    n_values = doc.get("n_values")
    states = []
    if n_values:
        fn = _initial_state_fn(states_doc, "states")
        states = [fn(int(n)) for n in n_values]
    else:
        for i, s in enumerate(states_doc):
            if not isinstance(s, list):
                raise ConfigError(f"states[{i}]", "expected a list of integers")
            states.append(tuple(int(v) for v in s))
    rows = run_drift_survey(
        net,
        states,
        build_energy(_need(doc, "energy", dict, "")),
        build_rule(_need(doc, "rule", dict, "")),
        replicas=int(_need(doc, "replicas", int, "")),
        seed=seed,
        max_time=float(doc.get("max_time", 1e9)),
    )
    ok = True
    report = []
    if "drift_ratio_max" in th:
        bound = float(th["drift_ratio_max"])
        worst = max(r.estimate.drift_ratio for r in rows)
        good = worst <= bound
        ok &= good
        report.append(f"worst drift ratio {worst:.4f} <= {bound} [{'ok' if good else 'FAIL'}]")
    if "change_per_energy_max" in th:
        bound = float(th["change_per_energy_max"])
        worst = max(r.estimate.mean_change / r.estimate.energy_x0 for r in rows)
        good = worst <= bound
        ok &= good
        report.append(
            f"worst mean change / initial energy {worst:.4f} <= {bound} [{'ok' if good else 'FAIL'}]"
        )
    return ExperimentOutcome(rows, ok, report)


def load_config(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from exc
