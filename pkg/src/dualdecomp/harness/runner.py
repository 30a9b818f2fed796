"""Execute a :class:`RunConfig` and write its artifacts."""

import os
from dataclasses import dataclass, field

from ..algorithms import run_algorithm
from ..analysis import Violation, check_run, compute_bounds, compute_metrics
from ..exceptions import ConstantUnavailableError
from ..problem import dual_strong_convexity_constant
from ..subsolver import reference_solution
from . import output


@dataclass
class ScenarioRun:
    label: str
    config: object
    run: object
    reference: object
    metrics: object
    bounds: object
    violations: list

    def summary(self):
        first = self.violations[0] if self.violations else None
        by_check = {}
        for v in self.violations:
            by_check[v.check] = by_check.get(v.check, 0) + 1
        c = self.bounds.constants
        finals = self.metrics.final()
        finals["k"] = int(self.metrics.k[-1])
        return {
            "label": self.label,
            "problem_hash": output.problem_hash(self.run.problem),
            "algorithm": self.run.algorithm,
            "rule": self.run.rule.to_dict(),
            "distortion": None if self.run.model is None else self.run.model.to_dict(),
            "stop_reason": self.run.stop_reason,
            "constants": {k: c[k] for k in ("mu", "L", "L_h", "mu_h", "epsilon", "D", "S",
                                            "D_tilde", "lambda_star_norm", "gap0")},
            "finals": finals,
            "levels": self.bounds.levels,
            "reference": {"method": self.reference.method,
                          "primal_value": self.reference.primal_value,
                          "dual_value": self.reference.dual_value},
            "violations": {
                "count": len(self.violations),
                "first": None if first is None else {"check": first.check, "k": first.k,
                                                     "metric": first.metric, "bound": first.bound},
                "by_check": by_check,
            },
        }


@dataclass
class ScenarioResult:
    runs: list
    files: list = field(default_factory=list)
    summary: dict = None

    @property
    def violation_count(self):
        return sum(len(r.violations) for r in self.runs)

    @property
    def first_violation(self):
        found = [(v.k, r.label, v) for r in self.runs for v in r.violations]
        if not found:
            return None
        k, label, v = min(found, key=lambda t: (t[0], t[1]))
        return label, v

    @property
    def exit_code(self):
        return 0 if self.violation_count == 0 else 1


def execute(config):
    """Run one (non-sweep) configuration and verify it; no files are written."""
    problem = config.build_problem()
    try:
        mu_h = dual_strong_convexity_constant(problem)
    except ConstantUnavailableError:
        mu_h = None
    rule = config.build_rule(mu_h)
    model = config.build_model()
    run = run_algorithm(config.algorithm, problem, rule, model, config.iterations,
                        tol=config.tol, stride=config.stride)
    ref = reference_solution(problem)
    metrics = compute_metrics(run, ref)
    bounds = compute_bounds(run, ref, metrics)
    violations = check_run(run, ref, metrics, bounds)
    if run.segment_mismatches:
        violations.append(Violation("segment_consistency", run.final_iteration,
                                    float(run.segment_mismatches), 0.0))
    return run, ref, metrics, bounds, violations


def run_scenario(config, write=True):
    """Run every sweep value of ``config`` in order and emit files to ``config.out``."""
    runs = []
    for label, cfg in config.expand():
        run, ref, metrics, bounds, violations = execute(cfg)
        runs.append(ScenarioRun(label, cfg, run, ref, metrics, bounds, violations))
    result = ScenarioResult(runs)
    first = result.first_violation
    result.summary = {
        "config": config.to_dict(),
        "runs": [r.summary() for r in runs],
        "violations": result.violation_count,
        "first_violation": None if first is None else {
            "run": first[0], "check": first[1].check, "k": first[1].k},
    }
    if write:
        result.files = write_outputs(config.out, result)
    return result


def write_outputs(out_dir, result):
    output.ensure_dir(out_dir)
    files = []
    for r in result.runs:
        stem = os.path.join(out_dir, r.label)
        files.append(output.emit_trace_csv(stem + "_trace.csv", r.run, r.metrics, r.bounds))
        files.append(output.emit_metrics_csv(stem + "_metrics.csv", r.metrics))
        files.append(output.emit_bounds_csv(stem + "_bounds.csv", r.bounds))
    files.append(output.emit_summary(os.path.join(out_dir, "summary.json"), result.summary))
    figures = [("running_min_grad", "running minimum of ||grad h||", "running_min_grad"),
               ("dual_gap", "dual gap h - h*", "dual_gap"),
               ("running_min_primal_dist", "running minimum of ||y - y*||", "running_min_primal_dist"),
               ("feas_dist", "feasible point distance ||y~ - y*||", "feas_dist")]
    for name, title, attr in figures:
        curves = [(r.label, r.metrics.k, getattr(r.metrics, attr)) for r in result.runs]
        files.append(output.emit_svg(os.path.join(out_dir, name + ".svg"), curves,
                                     title=title, ylabel=attr))
    return files
