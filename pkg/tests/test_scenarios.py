import numpy as np
import pytest

from greenbound import (GridFn, Interval, InvalidScenarioError, Kernel,
                        ScenarioSpec, WindowTooSmallError, build_scenario,
                        ex1_functions, ex4_functions, fit_boundary_rate,
                        make_grid, potential, sample, sharpness_report_ex4,
                        thm1_bound, verify_cancellation_ex1)
from greenbound._oscillate import green_apply_oscillatory
from greenbound.bvp import laplacian_1d


def test_ex1_exact_solution_formula():
    grid = make_grid(Interval(0.0, 1.0), 101)
    spec = ScenarioSpec("ex1", grid, q=1.0, alpha=0.5)
    problem, exact = build_scenario(spec)
    x = grid.nodes[1:-1]
    expect = x * (1 - x) * (1 + x * np.sin(np.pi / np.sqrt(x)))
    assert np.allclose(exact.values[1:-1], expect, rtol=1e-13)
    assert exact.values[0] == 0.0 and exact.values[-1] == 0.0
    assert np.all(exact.values[1:-1] > 0)


def test_ex1_V_consistent_with_solution():
    # V must close the equation -u'' + V u = 1 at interior nodes, which the
    # FD residual verifies at second order on a window clear of aliasing
    errs = []
    for n in (401, 801, 1601):
        grid = make_grid(Interval(0.0, 1.0), n)
        _, exact = build_scenario(ScenarioSpec("ex1", grid, q=1.0, alpha=0.5))
        fns = ex1_functions(0.5)
        x = grid.nodes
        res = (-laplacian_1d(exact.values, grid.spacing)
               + fns["V"](x[1:-1]) * exact.values[1:-1] - 1.0)
        window = (x[1:-1] >= 0.3) & (x[1:-1] <= 0.7)
        errs.append(np.max(np.abs(res[window])))
    assert errs[0] / errs[2] >= 10.0  # ~second order over two halvings


def test_ex4_V_closed_form_gamma1():
    grid = make_grid(Interval(-1.0, 1.0), 101)
    lam, q = 0.25, -1.0
    problem, exact = build_scenario(ScenarioSpec("ex4", grid, q=q, lam=lam, gamma=1.0))
    x = grid.nodes[1:-1]
    expect = lam ** (-q) * (1 - 2 * lam) * (1 - x * x) ** (-q)
    assert np.allclose(problem.V.values[1:-1], expect, rtol=1e-13)
    assert np.all(problem.V.values[1:-1] > 0)


def test_ex4_exact_solution_solves_equation():
    grid = make_grid(Interval(-1.0, 1.0), 801)
    for lam, gamma, q in [(0.25, 1.0, -1.0), (1.0, 0.9, -1.0), (0.3, 1.5, -1.0)]:
        problem, exact = build_scenario(
            ScenarioSpec("ex4", grid, q=q, lam=lam, gamma=gamma))
        inner = slice(1, -1)
        res = (-laplacian_1d(exact.values, grid.spacing)
               + problem.V.values[inner] * exact.values[inner] ** q - 1.0)
        x = grid.nodes[inner]
        window = np.abs(x) <= 0.9   # second-order window clear of the boundary
        assert np.max(np.abs(res[window])) <= 50 * grid.spacing ** 2


def test_ex1_alpha1_potential_undefined_but_improper_converges():
    # at alpha = 1 both signed parts of G(hV) diverge, so the node-level
    # potential is undefined, while the exhaustion evaluation converges
    grid = make_grid(Interval(0.0, 1.0), 801)
    fns = ex1_functions(1.0)
    hV = sample(lambda x: fns["hV"](x) if 0 < x < 1 else np.inf, grid)
    res = potential(Kernel.closed_form(grid.interval), hV)
    assert res.plus_infinite and res.minus_infinite
    assert not res.well_defined[1:-1].any()
    rep = verify_cancellation_ex1(1.0, grid, probes=np.array([1e-3, 1e-2]),
                                  levels=(12, 16), max_periods=100_000)
    assert np.all(np.isfinite(rep.improper_values))


def test_ex1_alpha_half_potential_defined():
    grid = make_grid(Interval(0.0, 1.0), 801)
    fns = ex1_functions(0.5)
    hV = sample(lambda x: fns["hV"](x) if 0 < x < 1 else np.inf, grid)
    res = potential(Kernel.closed_form(grid.interval), hV)
    assert not res.plus_infinite and not res.minus_infinite


def test_ex3_mild_absorption_bound_scales_like_distance():
    # q=-0.5, beta=0.25 < 1+q: the upper bound is comparable to d near the
    # boundary, fitted slope 1 within 0.05
    grid = make_grid(Interval(0.0, 1.0), 2001)
    prob, _ = build_scenario(ScenarioSpec("ex3", grid, q=-0.5, beta=0.25))
    rep = thm1_bound(prob)
    one = GridFn(grid, np.ones(grid.n))
    fit = fit_boundary_rate(rep.bound, one)
    assert abs(fit.slope - 1.0) <= 0.05


def test_ex2_weight_not_integrable_at_threshold():
    grid = make_grid(Interval(0.0, 1.0), 801)
    q = -0.5
    spec = ScenarioSpec("ex2", grid, q=q, lam=1.0, beta=2.0 + q)
    problem, _ = build_scenario(spec)
    rep = thm1_bound(problem)
    assert rep.ghqv.plus_infinite


def test_scenario_validation():
    grid = make_grid(Interval(0.0, 1.0), 11)
    with pytest.raises(InvalidScenarioError):
        ScenarioSpec("ex9", grid)
    with pytest.raises(InvalidScenarioError):
        build_scenario(ScenarioSpec("ex1", grid, q=1.0, alpha=-0.5))
    with pytest.raises(InvalidScenarioError):
        build_scenario(ScenarioSpec("ex2", grid, q=0.5, lam=1.0, beta=1.0))
    with pytest.raises(InvalidScenarioError):
        build_scenario(ScenarioSpec("ex4", grid, q=-1.0, lam=1.0, gamma=1.0))


def test_scenario_determinism():
    grid = make_grid(Interval(0.0, 1.0), 101)
    p1, _ = build_scenario(ScenarioSpec("ex2", grid, q=-0.5, lam=1.0, beta=1.0))
    p2, _ = build_scenario(ScenarioSpec("ex2", grid, q=-0.5, lam=1.0, beta=1.0))
    assert np.array_equal(p1.V.values, p2.V.values)


def test_fit_power_law_synthetic():
    grid = make_grid(Interval(0.0, 1.0), 2001)
    d = grid.boundary_distance()
    ref = GridFn(grid, np.ones(grid.n))
    with np.errstate(divide="ignore"):
        g = GridFn(grid, d ** (-0.5))
    fit = fit_boundary_rate(g, ref)
    assert fit.model == "power"
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.n_nodes >= 8


def test_fit_log_profile_synthetic():
    grid = make_grid(Interval(0.0, 1.0), 2001)
    d = grid.boundary_distance()
    ref = GridFn(grid, np.ones(grid.n))
    with np.errstate(divide="ignore"):
        g = GridFn(grid, 3.0 * np.log(2.0 / np.maximum(d, 1e-300)))
    fit = fit_boundary_rate(g, ref)
    assert fit.model == "power_log"


def test_fit_bounded_synthetic():
    grid = make_grid(Interval(0.0, 1.0), 2001)
    ref = GridFn(grid, np.ones(grid.n))
    g = GridFn(grid, 2.0 + 0.01 * grid.boundary_distance())
    fit = fit_boundary_rate(g, ref)
    assert fit.model == "bounded"
    assert abs(fit.slope) < 0.1


def test_fit_window_too_small():
    grid = make_grid(Interval(0.0, 1.0), 51)
    ref = GridFn(grid, np.ones(grid.n))
    with pytest.raises(WindowTooSmallError):
        fit_boundary_rate(ref, ref)  # default window holds no nodes at n=51


def test_oscillatory_engine_against_smooth_oracle():
    # a smooth integrand exercises the panel plumbing without oscillation;
    # compare with a dense trapezoid of the full Green potential.  The
    # non-alternating head below the resolved depth (~1e-8 here) limits the
    # attainable agreement; the alternating certificate targets signed w.
    w_fn = lambda y: np.sin(3.0 * y) + 0.5
    xs = np.array([0.2, 0.5, 0.8])
    res = green_apply_oscillatory(w_fn, 1.0, xs, head_budget=1e-9)
    y = np.linspace(1e-9, 1.0, 2_000_001)
    for x, got in zip(xs, res.values):
        gk = np.minimum(x * (1 - y), y * (1 - x))
        oracle = np.trapezoid(gk * w_fn(y), y)
        assert got == pytest.approx(oracle, rel=2e-6)


def test_cancellation_alpha_half_quick():
    grid = make_grid(Interval(0.0, 1.0), 501)
    rep = verify_cancellation_ex1(0.5, grid)
    assert rep.positivity_min > 0.5
    assert rep.sup_ratio is not None and np.isfinite(rep.sup_ratio)
    assert rep.stability <= 0.02
    assert rep.bound_violations == 0
    assert rep.bound_margin_min >= -1e-6


def test_cancellation_absolute_value_diverges():
    # with |V| in place of V the window sup grows under refinement near
    # alpha = 1 (the rectified integrand loses the cancellation)
    alpha = 0.9
    fns = ex1_functions(alpha)
    habs = lambda y: np.abs(fns["hV"](y))
    sups = []
    for n in (501, 1001, 2001):
        grid = make_grid(Interval(0.0, 1.0), n)
        xs = grid.nodes[1:-1]
        res = green_apply_oscillatory(habs, alpha, xs, y_floor=grid.spacing / 64,
                                      max_periods=400_000)
        ratio = res.values / (0.5 * xs * (1 - xs))
        sups.append(np.max(ratio[xs <= 0.5]))
    assert sups[1] >= 1.2 * sups[0]
    assert sups[2] >= 1.2 * sups[1]


def test_sharpness_gamma1_ratio():
    grid = make_grid(Interval(-1.0, 1.0), 801)
    rep = sharpness_report_ex4(1.0, 1.0, -1.0, grid)
    assert rep.classification == "sharp"
    assert rep.sup_ratio == pytest.approx(2.0 / np.sqrt(5.0), rel=1e-10)


def test_sharpness_gamma_between():
    grid = make_grid(Interval(-1.0, 1.0), 2001)
    rep = sharpness_report_ex4(1.0, 0.9, -1.0, grid)
    assert rep.classification == "sharp"
    assert abs(rep.bound_exponent - rep.exact_exponent) <= 0.05


def test_sharpness_trivialized():
    grid = make_grid(Interval(-1.0, 1.0), 801)
    rep = sharpness_report_ex4(1.0, 0.4, -1.0, grid)
    assert rep.classification == "trivialized"


def test_sharpness_fast_decay_not_sharp():
    grid = make_grid(Interval(-1.0, 1.0), 2001)
    rep = sharpness_report_ex4(0.3, 1.5, -1.0, grid)
    assert rep.classification == "not-sharp"
    assert rep.exact_exponent > rep.bound_exponent + 0.3


def test_reports_serialize(tmp_path):
    grid = make_grid(Interval(-1.0, 1.0), 801)
    rep = sharpness_report_ex4(1.0, 1.0, -1.0, grid)
    path = tmp_path / "ex4.json"
    rep.to_json(path)
    import json
    data = json.loads(path.read_text())
    assert data["schema"] == "greenbound/1"
    assert data["classification"] == "sharp"
