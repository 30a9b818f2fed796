"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (collected in the terminal summary) and
then asserts. Shared runs are cached so one pytest session computes each
scenario once. Run standalone with ``python3 tests/test_acceptance.py``.
"""

import functools
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conftest import random_problem, record_criterion  # noqa: E402
from dualdecomp import (  # noqa: E402
    BoundedNoise,
    Constant,
    LogOverK,
    PowerDecay,
    ScaledPowerDecay,
    UniformQuantizer,
    build_coupling_matrix,
    build_general_coupling,
    compute_bounds,
    compute_metrics,
    descent_violations,
    dual_gradient_exact,
    dual_lipschitz_constant,
    dual_strong_convexity_constant,
    dual_value,
    reference_solution,
    run_algorithm,
    run_exact,
)
from dualdecomp.analysis import BOUND_RTOL, exceeds, fit_slope, pre_floor_window  # noqa: E402
from dualdecomp.harness import cli, make_preset  # noqa: E402

pytestmark = pytest.mark.acceptance

SEED = 0
ITERATIONS = 10_000
CASE1 = "case1-quantizer"
CASE2 = "case2-noise"
GENERAL = "general-nets-demo"
SCALED_C = 0.004
POWERS = (0.0, 0.5, 1.0)
BITS = tuple(range(3, 9))
SIGMAS = (0.4, 0.2, 0.1, 0.05)


@functools.lru_cache(maxsize=None)
def problem_of(preset):
    return make_preset(preset, SEED).problem


@functools.lru_cache(maxsize=None)
def reference_of(preset):
    return reference_solution(problem_of(preset))


def mu_h_of(preset):
    return dual_strong_convexity_constant(problem_of(preset))


def model_of(spec):
    if spec is None:
        return None
    kind, value = spec
    if kind == "quantizer":
        return UniformQuantizer(3.0, value)
    return BoundedNoise(value, SEED)


def scaled(preset, p):
    # the p = 0 member of the scaled family is the constant step c / mu_h
    if p == 0.0:
        return Constant(SCALED_C / mu_h_of(preset))
    return ScaledPowerDecay(SCALED_C, p)


@functools.lru_cache(maxsize=None)
def scenario(preset, algorithm, rule, model=None, iterations=ITERATIONS):
    """Cached ``(run, ref, metrics, bounds)`` for one scenario."""
    problem = problem_of(preset)
    ref = reference_of(preset)
    run = run_algorithm(algorithm, problem, rule, model_of(model), iterations)
    metrics = compute_metrics(run, ref)
    return run, ref, metrics, compute_bounds(run, ref, metrics)


def case1(algorithm="full", rule=Constant(), bits=5, iterations=ITERATIONS):
    return scenario(CASE1, algorithm, rule, ("quantizer", bits), iterations)


def case2(algorithm="partial", rule=Constant(), sigma=0.2, iterations=ITERATIONS):
    return scenario(CASE2, algorithm, rule, ("noise", sigma), iterations)


def all_scenarios():
    """Every preset, algorithm and admissible step rule at the full budget."""
    out = []
    for alg in ("exact", "partial", "full"):
        for p in POWERS:
            out.append(case1(alg, PowerDecay(None, p)))
            out.append(case2(alg, PowerDecay(None, p)))
            out.append(case2(alg, scaled(CASE2, p)))
        out.append(case2(alg, LogOverK(SCALED_C)))
    out.append(scenario(GENERAL, "exact", Constant()))
    return out


def finish(number, title, passed, detail):
    record_criterion(number, title, bool(passed), detail)
    assert passed, detail


# -- constants and oracles ----------------------------------------------------

def test_c01_constants_vs_eigensolve():
    rng = np.random.default_rng(101)
    worst_max = worst_min = 0.0
    for m in range(2, 21):
        problem = random_problem(rng, m=m)
        eig = np.linalg.eigvalsh(build_coupling_matrix(m, 1) @ build_coupling_matrix(m, 1).T)
        worst_max = max(worst_max, abs(dual_lipschitz_constant(problem) * problem.mu - eig[-1]))
        worst_min = max(worst_min, abs(dual_strong_convexity_constant(problem) * problem.lipschitz - eig[0]))
    finish(1, "constants vs eigensolve", worst_max <= 1e-10 and worst_min <= 1e-10,
           f"max err L_h*mu {worst_max:.2e}, mu_h*L {worst_min:.2e}")


def test_c02_gradient_oracle():
    rng = np.random.default_rng(202)
    step = 1e-5
    worst = 0.0
    for _ in range(10):
        problem = random_problem(rng)
        for _ in range(10):
            lam = rng.uniform(-5, 5, size=problem.num_dual)
            grad = dual_gradient_exact(problem, lam)
            for j in range(problem.num_dual):
                e = np.zeros_like(lam)
                e[j] = step
                fd = (dual_value(problem, lam + e) - dual_value(problem, lam - e)) / (2 * step)
                worst = max(worst, abs(fd - grad[j]))
    finish(2, "gradient oracle", worst <= 1e-6, f"max coordinate error {worst:.2e}")


def test_c03_strong_duality():
    rng = np.random.default_rng(303)
    worst_gap = worst_res = 0.0
    for _ in range(20):
        problem = random_problem(rng)
        ref = reference_solution(problem)
        worst_gap = max(worst_gap, abs(ref.primal_value - ref.dual_value) / (1 + abs(ref.primal_value)))
        worst_res = max(worst_res, float(np.max(np.abs(problem.coupling_residual(ref.primal)))))
    finish(3, "strong duality self-check", worst_gap <= 1e-8 and worst_res <= 1e-10,
           f"max rel gap {worst_gap:.2e}, max ||A y*||inf {worst_res:.2e}")


# -- envelopes ------------------------------------------------------------------

def test_c04_descent_inequality():
    runs = all_scenarios()
    bad = sum(len(descent_violations(run, rtol=1e-9)) for run, *_ in runs)
    finish(4, "descent inequality", bad == 0, f"{bad} violations over {len(runs)} runs")


def test_c05_running_min_gradient_envelope():
    run, ref, metrics, bounds = case1()
    over = int(np.sum(exceeds(metrics.running_min_grad, bounds.c1_envelope)))
    final = metrics.running_min_grad[-1]
    ok = over == 0 and run.epsilon == 0.375 and final <= 0.375
    finish(5, "running-min gradient envelope", ok,
           f"{over} envelope violations, eps {run.epsilon}, final running-min grad {final:.4g}")


def test_c06_dual_gap_envelope():
    run, ref, metrics, bounds = case2()
    problem = problem_of(CASE2)
    eps = 2 * math.sqrt(problem.n * (problem.m - 1)) * 0.2
    floor = eps**2 / (2 * run.mu_h)
    over = int(np.sum(exceeds(metrics.dual_gap, bounds.c2_envelope, scale=1 + abs(ref.dual_value))))
    final = metrics.dual_gap[-1]
    ok = over == 0 and math.isclose(run.epsilon, eps, rel_tol=1e-12) and final <= floor + 1e-12
    finish(6, "dual-gap envelope", ok,
           f"{over} envelope violations, final dual gap {final:.4g} vs floor {floor:.4g}")


# -- rates and shapes -------------------------------------------------------------

def exact_rate_fit():
    run, ref, metrics, _ = scenario(CASE2, "exact", Constant())
    floor = 1e-12 * max(1.0, abs(ref.dual_value))
    window = pre_floor_window(metrics.dual_gap, floor)
    slope, _, r2 = fit_slope(metrics.k[window], metrics.dual_gap[window])
    return run, slope, r2, len(window)


def test_c07_geometric_rate():
    run, slope, r2, width = exact_rate_fit()
    target = math.log(1 - run.gamma[0] * run.mu_h)
    rel = abs(slope - target) / abs(target)
    finish(7, "geometric rate fit", rel <= 0.10,
           f"slope {slope:.4g} vs log(1-gamma mu_h) {target:.4g}, rel err {rel:.2f}, window {width}")


def test_exact_rate_follows_dual_hessian():
    # The measured rate is set by the smallest eigenvalue of the dual Hessian,
    # which the closed-form mu_h only bounds from below.
    run, slope, _, _ = exact_rate_fit()
    problem = problem_of(CASE2)
    A = build_coupling_matrix(problem.m, problem.n)
    inv = np.linalg.inv(np.diag([c.matrix[0, 0] for c in problem.costs]))
    lam_min = np.linalg.eigvalsh(0.5 * A @ inv @ A.T)[0]
    assert lam_min >= run.mu_h
    assert slope == pytest.approx(2 * math.log(1 - run.gamma[0] * lam_min), rel=0.10)


def test_c08_power_rate_ordering():
    quant = [case1(rule=PowerDecay(None, p))[2].running_min_grad[-1] for p in POWERS]
    noise = [case2(rule=scaled(CASE2, p))[2].running_min_dual_gap[-1] for p in POWERS]
    ok = bool(np.all(np.diff(quant) > 0) and np.all(np.diff(noise) > 0))
    finish(8, "power-rate ordering", ok,
           "case1 grad " + ", ".join(f"{v:.3g}" for v in quant)
           + "; case2 gap " + ", ".join(f"{v:.3g}" for v in noise))


def tail_mean(values, fraction=0.1):
    return float(np.mean(values[-max(1, int(len(values) * fraction)):]))


def noise_floors():
    return np.array([tail_mean(case2(rule=Constant(), sigma=s)[2].dual_gap) for s in SIGMAS])


def test_c09_neighborhood_scaling():
    grads = np.array([case1(bits=b)[2].running_min_grad[-1] for b in BITS])
    q_slope = np.polyfit(BITS, np.log2(grads), 1)[0]
    q_ok = abs(q_slope + 1) <= 0.25 and bool(np.all(grads <= 12.0 / 2.0 ** np.array(BITS)))
    floors = noise_floors()
    n_slope = np.polyfit(np.log2(SIGMAS), np.log2(floors), 1)[0]
    n_ok = abs(n_slope - 1) <= 0.25
    finish(9, "neighborhood scaling", q_ok and n_ok,
           f"quantizer log2-slope {q_slope:.3f} (ok={q_ok}); noise floor log2-slope {n_slope:.3f} (ok={n_ok})")


def test_noise_floor_is_quadratic_in_sigma():
    # Both the guaranteed floor eps^2/(2 mu_h) and the observed one scale with sigma^2.
    slope = np.polyfit(np.log2(SIGMAS), np.log2(noise_floors()), 1)[0]
    assert slope == pytest.approx(2.0, rel=0.25)


# -- algorithms and feasible points ---------------------------------------------

def test_c10_algorithm_equivalence():
    results = []
    for run_case in (case1, case2):
        partial = run_case("partial", iterations=1000)[0]
        full = run_case("full", iterations=1000)[0]
        results.append(np.array_equal(partial.lam, full.lam) and full.segment_mismatches == 0)
    finish(10, "partial/full equivalence", all(results), f"identical traces: {results}")


def test_c11_feasible_points():
    worst = 0.0
    outside = farther = 0
    runs = all_scenarios()
    for _, _, metrics, _ in runs:
        worst = max(worst, float(metrics.feas_violation.max()))
        outside += int(np.sum(~metrics.feas_in_set))
        farther += int(np.sum(exceeds(metrics.feas_dist, metrics.primal_dist)))
    ok = worst <= 1e-12 and outside == 0 and farther == 0
    finish(11, "feasible points", ok,
           f"max ||A y~||inf {worst:.2e}, {outside} outside set, {farther} farther than y, {len(runs)} runs")


def test_c12_strong_convexity_primal_levels():
    run, ref, metrics, bounds = case2()
    level = run.epsilon * math.sqrt(1 / (problem_of(CASE2).mu * run.mu_h))
    dist = metrics.running_min_primal_dist[-1]
    feas = metrics.running_min_feas_dist[-1]
    ok = dist <= 1.05 * level and feas <= 1.05 * level
    finish(12, "strongly convex primal levels", ok, f"primal {dist:.4g}, feasible {feas:.4g}, level {level:.4g}")


def test_c13_logk_geometric_tail():
    run, ref, metrics, bounds = case2(rule=LogOverK(SCALED_C))
    rec = bounds.recursion_envelope
    floor = run.epsilon**2 / (2 * run.mu_h)
    # gap_0 already sits below the floor, so the envelope rises towards it;
    # the geometric regime shows in its distance to the floor.
    dist = np.abs(rec - floor)
    window = pre_floor_window(dist, 1e-9 * floor / 3.0)
    tail = window[len(window) // 2:]
    slope, _, r2 = fit_slope(metrics.k[tail], dist[tail])
    finish(13, "log-k schedule geometric tail", slope < 0 and r2 >= 0.99,
           f"slope {slope:.4g}, R^2 {r2:.6f}, tail length {len(tail)}")


def test_c14_general_formulation():
    problem = problem_of(GENERAL)
    ref = reference_of(GENERAL)
    oracle = max(2 + 2 * math.cos(math.pi / len(mem)) for mem in problem.memberships)
    const_err = abs(dual_lipschitz_constant(problem) * problem.mu - oracle)
    run = run_exact(problem, Constant(), ITERATIONS)
    y = run.y[-1]
    _, blocks = build_general_coupling(problem)
    residual = max(float(np.max(np.abs(B @ y[problem.net_slice(j)]))) for j, B in enumerate(blocks))
    dist = float(np.max(np.abs(y - ref.primal)))
    ok = const_err <= 1e-10 and residual <= 1e-8 and dist <= 1e-8
    finish(14, "general formulation", ok,
           f"constant err {const_err:.2e}, per-net residual {residual:.2e}, ||y - y*||inf {dist:.2e}")


def test_c15_determinism(tmp_path):
    cases = [(CASE1, ["--sweep", "p=0,0.5,1"]), (CASE2, ["--sweep", "sigma=0.1,0.2"]), (GENERAL, [])]
    same = True
    for preset, extra in cases:
        dirs = [tmp_path / f"{preset}-{i}" for i in range(2)]
        for d in dirs:
            cli.main(["--preset", preset, "--steps", "2000", "--out", str(d), "--quiet", *extra])
        names = sorted(os.listdir(dirs[0]))
        same &= names == sorted(os.listdir(dirs[1])) and len(names) > 0
        same &= all((dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names)
    finish(15, "determinism", same, "byte-identical outputs for all presets" if same else "outputs differ")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
