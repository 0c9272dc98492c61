"""Run reports: JSON records that make every published number auditable.

A report embeds the command echo, the scenario, the seed, the headline
threshold, and either the full witness/certificate (threshold runs) or the
best parameters and per-restart log (optimization runs). verify_report
re-derives the threshold from the echoed inputs and replays the embedded
certificates, so tampering with any numeric field is detectable from the
file alone.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .probabilities import correlation_tensor, noisy_tensor
from .scenario import PhaseSettings, PureState, Scenario
from .scenario_io import (
    ScenarioFile,
    _resolve_settings,
    _resolve_state,
    explicit_settings_spec,
)
from .search import OptimizationConfig, OptimizationResult
from .simplex import SolverOptions, certified_lower_bound
from .threshold import (
    CERTIFICATE_GAP_TOL,
    WITNESS_MARGINAL_TOL,
    ThresholdResult,
    assignment_marginal_matrix,
    build_threshold_lp,
    feasible_at,
    threshold,
)

REPORT_VERSION = 1
RECOMPUTE_TOL = 1e-6


class ReportError(ValueError):
    """Report file is unreadable or does not match the schema."""


def _report_schema() -> dict:
    text = resources.files("lrthresh.schemas").joinpath("report.schema.json").read_text()
    return json.loads(text)


def _scenario_block(sf: ScenarioFile) -> dict:
    block = {
        "parties": sf.scenario.parties,
        "dim": sf.scenario.dim,
        "settings_per_party": sf.scenario.settings_per_party,
        "state": sf.state_spec,
        "settings": sf.settings_spec,
    }
    if sf.noise is not None:
        block["noise"] = sf.noise
    return block


def _tolerance_block(options: SolverOptions) -> dict:
    return {
        "tol_feas": options.tol_feas,
        "tol_opt": options.tol_opt,
        "pivot_tol": options.pivot_tol,
    }


def build_threshold_report(
    sf: ScenarioFile,
    result: ThresholdResult,
    command: list[str],
    wall_clock_s: float,
    options: SolverOptions | None = None,
    local_at_noise: bool | None = None,
) -> dict:
    report = {
        "report_version": REPORT_VERSION,
        "tool_version": __version__,
        "kind": "threshold",
        "command": list(command),
        "rng_seed": None,
        "wall_clock_s": wall_clock_s,
        "tolerances": _tolerance_block(options or SolverOptions()),
        "scenario": _scenario_block(sf),
        "f_thr": result.f_thr,
        "witness": {
            "weights": [float(w) for w in result.witness.weights],
            "noise_weight": result.f_thr,
        },
        "certificate": {
            "dual": [float(y) for y in result.certificate["dual"]],
            "lower_bound": float(result.certificate["lower_bound"]),
            "gap": float(result.certificate["gap"]),
            "marginal_residual": float(result.certificate["marginal_residual"]),
        },
        "solver": dict(result.solver_stats),
    }
    if local_at_noise is not None:
        report["local_at_noise"] = local_at_noise
    return report


def build_optimize_report(
    sf: ScenarioFile,
    result: OptimizationResult,
    config: OptimizationConfig,
    command: list[str],
    wall_clock_s: float,
    options: SolverOptions | None = None,
) -> dict:
    return {
        "report_version": REPORT_VERSION,
        "tool_version": __version__,
        "kind": "optimize",
        "command": list(command),
        "rng_seed": config.rng_seed,
        "wall_clock_s": wall_clock_s,
        "tolerances": _tolerance_block(options or SolverOptions()),
        "scenario": _scenario_block(sf),
        "f_thr": result.best_f_thr,
        "optimizer": {
            "config": asdict(config),
            "best_f_thr": result.best_f_thr,
            "best_settings": [
                [[float(a) for a in row] for row in party]
                for party in result.best_settings.table
            ],
            "best_settings_pretty": explicit_settings_spec(result.best_settings),
            "best_state": [float(c) for c in result.best_state.coeffs],
            "evals": result.evals,
            "per_restart_log": [[int(i), float(v)] for i, v in result.per_restart_log],
        },
    }


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")


def load_report(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as err:
        raise ReportError(f"cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ReportError(f"not valid JSON: {err}") from None
    try:
        jsonschema.validate(raw, _report_schema())
    except jsonschema.ValidationError as err:
        where = ".".join(str(p) for p in err.absolute_path) or "<top level>"
        raise ReportError(f"field {where}: {err.message}") from None
    return raw


def _rebuild_scenario(block: dict) -> tuple[Scenario, PureState, PhaseSettings]:
    sc = Scenario(
        parties=int(block["parties"]),
        dim=int(block["dim"]),
        settings_per_party=int(block.get("settings_per_party", 2)),
    )
    state = _resolve_state(sc, block["state"])
    settings = _resolve_settings(sc, block["settings"])
    return sc, state, settings


def _verify_threshold(report: dict, problems: list[str]) -> None:
    sc, state, settings = _rebuild_scenario(report["scenario"])
    f_rep = float(report["f_thr"])

    weights = np.asarray(report["witness"]["weights"], dtype=float)
    if weights.size != sc.joint_size:
        problems.append(
            f"witness has {weights.size} weights, scenario needs {sc.joint_size}"
        )
        return
    neg = np.flatnonzero(weights < -1e-9)
    if neg.size:
        i = int(neg[0])
        problems.append(
            f"witness weight {i} violates nonnegativity: {weights[i]:.6g}"
        )
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-8:
        problems.append(f"witness weights sum to {total:.12f}, expected 1")

    tensor = correlation_tensor(state, settings)
    recomputed = threshold(state, settings)
    if abs(recomputed.f_thr - f_rep) > RECOMPUTE_TOL:
        problems.append(
            f"f_thr mismatch: report says {f_rep:.9f}, "
            f"recomputation gives {recomputed.f_thr:.9f}"
        )

    # the witness must reproduce the marginals of the noisy correlations at F
    if 0.0 <= f_rep <= 1.0:
        target = noisy_tensor(tensor, f_rep).flat
        marg = assignment_marginal_matrix(sc) @ np.clip(weights, 0.0, None)
        resid = float(np.max(np.abs(marg - target)))
        if resid > WITNESS_MARGINAL_TOL:
            problems.append(
                f"witness marginal residual {resid:.3e} exceeds {WITNESS_MARGINAL_TOL:.0e}"
            )
    else:
        problems.append(f"reported f_thr {f_rep} outside [0, 1]")

    dual = np.asarray(report["certificate"]["dual"], dtype=float)
    lp = build_threshold_lp(tensor)
    if dual.size != lp.num_rows:
        problems.append(f"dual has {dual.size} entries, LP has {lp.num_rows} rows")
    else:
        bound = certified_lower_bound(lp, dual)
        if f_rep - bound > CERTIFICATE_GAP_TOL + RECOMPUTE_TOL:
            problems.append(
                f"certificate bound {bound:.9f} leaves gap {f_rep - bound:.3e} "
                f"below the reported threshold"
            )

    noise = report["scenario"].get("noise")
    if noise is not None and "local_at_noise" in report:
        actual = feasible_at(tensor, float(noise))
        if bool(report["local_at_noise"]) != actual:
            problems.append(
                f"local_at_noise says {report['local_at_noise']}, "
                f"recomputation at F={noise} gives {actual}"
            )


def _verify_optimize(report: dict, problems: list[str]) -> None:
    sc, _, _ = _rebuild_scenario(report["scenario"])
    opt = report["optimizer"]
    f_rep = float(opt["best_f_thr"])
    if abs(float(report["f_thr"]) - f_rep) > 1e-12:
        problems.append("headline f_thr differs from optimizer best_f_thr")

    table = np.asarray(opt["best_settings"], dtype=float)
    coeffs = np.asarray(opt["best_state"], dtype=float)
    try:
        settings = PhaseSettings(sc, table)
        state = PureState(sc, coeffs)
    except ValueError as err:
        problems.append(f"best parameters do not fit the scenario: {err}")
        return
    recomputed = threshold(state, settings)
    if abs(recomputed.f_thr - f_rep) > RECOMPUTE_TOL:
        problems.append(
            f"best_f_thr mismatch: report says {f_rep:.9f}, "
            f"recomputation at the reported parameters gives {recomputed.f_thr:.9f}"
        )

    log = opt["per_restart_log"]
    if log:
        log_best = max(float(v) for _, v in log)
        if abs(log_best - f_rep) > RECOMPUTE_TOL:
            problems.append(
                f"per-restart log peaks at {log_best:.9f} but best_f_thr is {f_rep:.9f}"
            )


def verify_report(report: dict) -> list[str]:
    """Replay a report's claims; returns the list of discrepancies (empty = clean)."""
    problems: list[str] = []
    kind = report.get("kind")
    if kind == "threshold":
        _verify_threshold(report, problems)
    elif kind == "optimize":
        _verify_optimize(report, problems)
    else:
        problems.append(f"unknown report kind {kind!r}")
    return problems
