"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s`.  Default grid size for the
quadrature-based criteria is n = 2001.
"""

import functools
import time

import numpy as np
import pytest

import greenbound as gb

N_DEFAULT = 2001


def criterion(label):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\n[{label}] FAIL")
                raise
            print(f"\n[{label}] PASS")
        return wrapper
    return deco


@pytest.fixture(scope="module")
def unit_setup():
    grid = gb.make_grid(gb.Interval(0.0, 1.0), N_DEFAULT)
    kernel = gb.Kernel.closed_form(grid.interval)
    one = gb.sample(lambda x: 1.0, grid)
    h = gb.potential(kernel, one).value
    return grid, kernel, one, h


@criterion("criterion 01: closed-form potentials")
def test_criterion_01_closed_form_potential():
    for interval, h_exact in [
            (gb.Interval(0.0, 1.0), lambda x: 0.5 * x * (1 - x)),
            (gb.Interval(-1.0, 1.0), lambda x: 0.5 * (1 - x * x))]:
        grid = gb.make_grid(interval, N_DEFAULT)
        res = gb.potential(gb.Kernel.closed_form(interval),
                           gb.sample(lambda x: 1.0, grid))
        he = h_exact(grid.nodes)
        rel = np.abs(res.value.values[1:-1] - he[1:-1]) / he[1:-1]
        assert np.max(rel) <= 1e-12


@criterion("criterion 02: substitution family identities")
def test_criterion_02_phi_family():
    for q in (-2.0, -1.0, -0.5, 0.5, 0.9, 1.0, 1.1, 2.0, 3.0):
        fam = gb.PhiFamily(q)
        lo, hi = fam.domain
        s = np.linspace(max(lo, -20.0) + 1e-3, min(hi, 20.0) - 1e-3, 100)
        d1, _ = gb.phi_derivs(fam, s)
        pq = gb.phi_eval(fam, s) ** q
        assert np.all(np.abs(d1 - pq) <= 1e-12 * np.maximum(1.0, pq))
        back = gb.phi_inverse(fam, gb.phi_eval(fam, s))
        assert np.all(np.abs(back - s) <= 1e-10 * np.maximum(1.0, np.abs(s)))


@criterion("criterion 03: constant weight ratio")
def test_criterion_03_ex4_constant_ratio():
    grid = gb.make_grid(gb.Interval(-1.0, 1.0), N_DEFAULT)
    for lam, q in [(0.25, -1.0), (0.5, -1.0), (1.0, -1.0), (0.5, -2.0)]:
        prob, _ = gb.build_scenario(
            gb.ScenarioSpec("ex4", grid, q=q, lam=lam, gamma=1.0))
        rep = gb.thm1_bound(prob)
        target = (2.0 * lam) ** (-q) * (1.0 - 2.0 * lam)
        dev = np.abs(rep.ratio[1:-1] - target)
        assert np.max(dev) <= 1e-8
        assert np.max(rep.ratio[1:-1]) - np.min(rep.ratio[1:-1]) <= 1e-8


@criterion("criterion 04: sharp constant-profile bound")
def test_criterion_04_sharpness_gamma1():
    grid = gb.make_grid(gb.Interval(-1.0, 1.0), N_DEFAULT)
    prob, exact = gb.build_scenario(
        gb.ScenarioSpec("ex4", grid, q=-1.0, lam=1.0, gamma=1.0))
    rep = gb.thm1_bound(prob)
    inner = slice(1, -1)
    h = rep.h.values[inner]
    assert np.max(np.abs(rep.bound.values[inner] - np.sqrt(5.0) * h)) <= 1e-8
    ratio = exact.values[inner] / rep.bound.values[inner]
    assert np.max(np.abs(ratio - 2.0 / np.sqrt(5.0))) <= 1e-8


@criterion("criterion 05: scalar recurrence")
def test_criterion_05_scalar_recurrence():
    seq = gb.scalar_recurrence(-1.0, 0.225, 200)
    root = (1.0 + np.sqrt(0.1)) / 2.0
    assert abs(seq[200] - root) <= 1e-12
    assert abs(seq[200] - (1.0 - 0.225 / seq[200])) <= 1e-12

    seq = gb.scalar_recurrence(-1.0, 0.25, 1000)
    assert all(seq[k + 1] <= seq[k] for k in range(1000))
    assert all(seq[k] - 0.5 <= 1.0 / k for k in range(10, 1001))

    with pytest.raises(gb.DivergingBracketError):
        gb.scalar_recurrence(-1.0, 0.3, 100)


@criterion("criterion 06: exact integral-equation fixed point")
def test_criterion_06_tangent_fixed_point(unit_setup):
    grid, kernel, one, h = unit_setup
    a_star, _ = gb.sharp_constants(-1.0)
    V = gb.GridFn(grid, a_star * h.values)   # V = a* h^{-q} for q = -1
    trace = gb.solve_integral_equation(kernel, h, V, -1.0)
    assert trace.converged
    inner = slice(1, -1)
    assert np.max(np.abs(trace.solution.values[inner] - 0.5 * h.values[inner])) <= 1e-8
    sup_h = float(np.max(h.values))
    assert trace.residual_norm <= 1e-10 * sup_h
    its = trace.iterates
    assert not trace.iterates_truncated
    for i in range(len(its) - 1):
        assert np.all(its[i + 1].values[inner] <= its[i].values[inner] + 1e-12 * sup_h)


@criterion("criterion 07: oracle-vs-bound sandwich, q = 2")
def test_criterion_07_fd_sandwich(unit_setup):
    grid, kernel, one, h = unit_setup
    prob = gb.Problem(2.0, gb.sample(lambda x: -1.0, grid), one, kernel)
    cond = gb.thm4_conditions(prob)
    assert np.all(cond.sufficient_ok)            # sharp sufficient condition
    fd = gb.fd_solve(prob, init=h, tol=1e-8)
    assert fd.converged
    inner = slice(1, -1)
    u = fd.solution.values[inner]
    hh = h.values[inner]
    slack = 10.0 * grid.spacing ** 2 * hh
    assert np.all(u >= hh - slack)
    assert np.all(u <= 2.0 * hh + slack)
    rep = gb.thm1_bound(prob)
    assert np.all(u >= rep.bound.values[inner] - slack)


@criterion("criterion 08: oscillatory cancellation")
def test_criterion_08_ex1_cancellation():
    t0 = time.monotonic()
    grid = gb.make_grid(gb.Interval(0.0, 1.0), N_DEFAULT)
    rep = gb.verify_cancellation_ex1(0.5, grid)
    assert np.isfinite(rep.sup_ratio)
    assert rep.stability <= 0.02
    assert rep.bound_margin_min >= -1e-6
    assert rep.bound_violations == 0

    rep1 = gb.verify_cancellation_ex1(1.0, grid)
    assert rep1.growth_factor >= 2.0
    assert rep1.logratio_variation < 4.0
    assert time.monotonic() - t0 <= 60.0


@criterion("criterion 09: boundary-rate fits")
def test_criterion_09_boundary_rates():
    grid = gb.make_grid(gb.Interval(0.0, 1.0), N_DEFAULT)
    q = -0.5

    def fit_for(beta, lam):
        prob, _ = gb.build_scenario(
            gb.ScenarioSpec("ex2", grid, q=q, lam=lam, beta=beta))
        rep = gb.thm1_bound(prob)
        return rep, gb.fit_boundary_rate(rep.ghqv.value, rep.h)

    rep, fit = fit_for(1.0, 1.0)
    assert fit.model == "power"
    assert abs(fit.slope - (1.0 + q - 1.0)) <= 0.05       # slope -0.5
    d = grid.boundary_distance()[1:-1]
    assert np.any(~rep.necessary_ok[1:-1][d <= 1e-2])     # violated near boundary

    rep, fit = fit_for(0.5, 1.0)
    assert fit.model == "power_log"
    assert np.any(~rep.necessary_ok[1:-1][d <= 1e-2])

    rep, fit = fit_for(0.25, 0.05)
    assert fit.model == "bounded"
    assert np.all(rep.necessary_ok)                       # satisfiable at small lam


@criterion("criterion 10: calculus identity convergence")
def test_criterion_10_identity_convergence():
    rng = np.random.default_rng(123)
    for q in (-1.0, 0.5, 2.0):
        fam = gb.PhiFamily(q)
        amps = rng.uniform(0.05, 0.25, 4)
        discs = []
        for n in (101, 201, 401, 801):
            grid = gb.make_grid(gb.Interval(0.0, 1.0), n)
            x = grid.nodes
            h = gb.GridFn(grid, 2.0 + np.cos(2 * np.pi * x)
                          + amps[0] * np.sin(4 * np.pi * x))
            v = gb.GridFn(grid, amps[1] * np.sin(2 * np.pi * x)
                          + amps[2] * np.cos(6 * np.pi * x))
            discs.append(gb.lemma41_identity_check(h, v, fam))
        for c0, c1 in zip(discs, discs[1:]):
            assert c0 / c1 >= 3.5


@criterion("criterion 11: sufficient implies necessary")
def test_criterion_11_condition_implication():
    rng = np.random.default_rng(2026)
    grid = gb.make_grid(gb.Interval(0.0, 1.0), 41)
    kernel = gb.Kernel.closed_form(grid.interval)
    x = grid.nodes
    exceptions = 0
    for _ in range(1000):
        for regime in ("q>1", "q<0"):
            q = 1.0 + rng.uniform(0.1, 3.0) if regime == "q>1" \
                else -rng.uniform(0.1, 3.0)
            mag = rng.uniform(0.0, 30.0) * (
                0.2 + rng.uniform(0, 1.0)
                * np.sin(rng.integers(1, 6) * np.pi * x + rng.uniform(0, 6)) ** 2)
            V = gb.GridFn(grid, -mag if regime == "q>1" else mag)
            f = gb.GridFn(grid, 0.05 + rng.uniform(0, 1.0)
                          * np.cos(rng.integers(0, 4) * np.pi * x) ** 2)
            rep = gb.thm4_conditions(gb.Problem(q, V, f, kernel))
            exceptions += int(np.any(rep.sufficient_ok & ~rep.necessary_ok))
    assert exceptions == 0
