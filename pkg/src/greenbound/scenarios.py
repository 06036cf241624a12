"""Built-in model problems with known structure, and their verifiers.

Four families are provided:

* ``ex1``  on (0,1), q = 1: the rapidly oscillating potential built from the
  exact solution u = x(1-x)(1 + x sin(π/x^α)).  Near x = 0 the leading part
  of V oscillates like x^{-2α-1} sin(π/x^α); the Green potential G(hV)
  nevertheless stays O(x) for α < 1 (cancellation) and grows like
  x log(1/x) for α = 1, where it exists only as an improper integral.
* ``ex2``  on (0,1), q < 0: V = λ d(x)^{-β} with d the boundary distance.
  G(h^q V)/h is bounded for β < 1+q, grows like log(A/d) at β = 1+q
  (A = 2 diam), and like d^{1+q-β} for 1+q < β < 2+q; at β >= 2+q the
  weight is no longer integrable against the kernel.
* ``ex3``  on (0,1), q < 0: V = -d(x)^{-β}, the absorbing counterpart.
* ``ex4``  on (-1,1), q < 0: V assembled so that u = λ(1-x²)^γ solves
  -u'' + V u^q = 1 exactly; γ = 1 gives the constant weight
  h^q V = (2λ)^{-q}(1-2λ) and the upper bound √(1-(1-q)(2λ)^{-q}(1-2λ)) h
  pattern used for sharpness checks.

The oscillatory Example-1 quadrature lives in :mod:`greenbound._oscillate`;
everything here only assembles integrands and interprets results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._oscillate import green_apply_oscillatory
from .domain import Grid, GridFn, Interval, sample
from .errors import (InvalidScenarioError, ResolutionInsufficientError,
                     WindowTooSmallError)
from .estimates import Problem, thm1_bound
from .green import Kernel

__all__ = [
    "ScenarioSpec",
    "AsymptoticFit",
    "Ex1CancellationReport",
    "Ex4SharpnessReport",
    "build_scenario",
    "verify_cancellation_ex1",
    "fit_boundary_rate",
    "sharpness_report_ex4",
    "ex1_functions",
    "ex4_functions",
]

SCHEMA = "greenbound/1"


@dataclass(frozen=True)
class ScenarioSpec:
    """Identifier + parameters for one built-in scenario."""

    id: str
    grid: Grid
    q: float = 1.0
    alpha: float | None = None
    lam: float | None = None
    beta: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.id not in ("ex1", "ex2", "ex3", "ex4"):
            raise InvalidScenarioError(f"unknown scenario id {self.id!r}")


def ex1_functions(alpha: float) -> dict:
    """Vectorized callables for the oscillatory scenario.

    Keys: u, V, hV, D (the factor 1 + x sin(π/x^α)).  hV is evaluated in
    the singularity-free form (1 + u'')/(2 D).
    """
    if not alpha > 0:
        raise InvalidScenarioError("ex1 needs alpha > 0")

    def trig(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = x ** (-alpha)
            phase = np.pi * t
            s = np.sin(phase)
            c = np.cos(phase)
        return t, s, c

    def D(x):
        _, s, _ = trig(x)
        return 1.0 + np.asarray(x, dtype=float) * s

    def one_plus_upp(x):
        x = np.asarray(x, dtype=float)
        t, s, c = trig(x)
        return (-1.0 + 2.0 * (1.0 - 3.0 * x) * s
                - 2.0 * alpha * np.pi * (1.0 - 2.0 * x) * t * c
                - alpha ** 2 * np.pi ** 2 * (1.0 - x) * t * t * s
                + alpha * np.pi * (alpha - 1.0) * (1.0 - x) * t * c)

    def u(x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < 1.0)
        with np.errstate(invalid="ignore"):
            vals = np.where(inside, x * (1.0 - x) * D(np.where(inside, x, 0.5)), 0.0)
        return vals

    def V(x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < 1.0)
        xs = np.where(inside, x, 0.5)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = one_plus_upp(xs) / (xs * (1.0 - xs) * D(xs))
        return np.where(inside, vals, np.inf)

    def hV(x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < 1.0)
        xs = np.where(inside, x, 0.5)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = one_plus_upp(xs) / (2.0 * D(xs))
        return np.where(inside, vals, 0.0)

    return {"u": u, "V": V, "hV": hV, "D": D}


def ex4_functions(lam: float, gamma: float, q: float) -> dict:
    """Vectorized callables u and V for the power-profile scenario."""
    if not (q < 0 and lam > 0 and gamma > 0):
        raise InvalidScenarioError("ex4 needs q < 0, lam > 0, gamma > 0")

    def u(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid="ignore"):
            return lam * np.maximum(1.0 - x * x, 0.0) ** gamma

    def V(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            t = 1.0 - x * x
            v1 = 4.0 * lam ** (1 - q) * gamma * (gamma - 1.0) * t ** (gamma - 2.0 - gamma * q)
            v2 = -2.0 * lam ** (1 - q) * gamma * (2.0 * gamma - 1.0) * t ** (gamma - 1.0 - gamma * q)
            v3 = lam ** (-q) * t ** (-gamma * q)
            return v1 + v2 + v3

    return {"u": u, "V": V}


def _distance_power(interval: Interval, coef: float, beta: float):
    a, b = interval.left, interval.right

    def V(x):
        x = np.asarray(x, dtype=float)
        d = np.minimum(x - a, b - x)
        with np.errstate(divide="ignore", over="ignore"):
            return coef * d ** (-beta)

    return V


def build_scenario(spec: ScenarioSpec) -> tuple[Problem, GridFn | None]:
    """Assemble (Problem, exact solution when known) for a scenario."""
    grid = spec.grid
    one = sample(lambda x: 1.0, grid)
    kernel = Kernel.closed_form(grid.interval)
    if spec.id == "ex1":
        if grid.interval != Interval(0.0, 1.0):
            raise InvalidScenarioError("ex1 lives on (0,1)")
        if spec.alpha is None or not spec.alpha > 0:
            raise InvalidScenarioError("ex1 needs alpha > 0")
        if spec.q != 1.0:
            raise InvalidScenarioError("ex1 is the linear scenario (q = 1)")
        fns = ex1_functions(spec.alpha)
        problem = Problem(1.0, sample(fns["V"], grid), one, kernel)
        return problem, sample(fns["u"], grid)
    if spec.id in ("ex2", "ex3"):
        if grid.interval != Interval(0.0, 1.0):
            raise InvalidScenarioError(f"{spec.id} analogue lives on (0,1)")
        if not spec.q < 0:
            raise InvalidScenarioError(f"{spec.id} needs q < 0")
        if spec.beta is None or not spec.beta > 0:
            raise InvalidScenarioError(f"{spec.id} needs beta > 0")
        if spec.id == "ex2":
            if spec.lam is None or not spec.lam > 0:
                raise InvalidScenarioError("ex2 needs lam > 0")
            V = _distance_power(grid.interval, spec.lam, spec.beta)
        else:
            V = _distance_power(grid.interval, -1.0, spec.beta)
        return Problem(spec.q, sample(V, grid), one, kernel), None
    # ex4
    if grid.interval != Interval(-1.0, 1.0):
        raise InvalidScenarioError("ex4 lives on (-1,1)")
    if not spec.q < 0:
        raise InvalidScenarioError("ex4 needs q < 0")
    if spec.lam is None or spec.gamma is None:
        raise InvalidScenarioError("ex4 needs lam and gamma")
    fns = ex4_functions(spec.lam, spec.gamma, spec.q)
    problem = Problem(spec.q, sample(fns["V"], grid), one, kernel)
    return problem, sample(fns["u"], grid)


# ---------------------------------------------------------------------------
# boundary-rate fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares boundary rate of log(g/reference) against log d."""

    window: tuple
    slope: float
    slope_ci: float
    model: str                      # 'power' | 'power_log' | 'bounded'
    rss: dict = field(default_factory=dict)
    n_nodes: int = 0


def fit_boundary_rate(g: GridFn, reference: GridFn,
                      window: tuple | None = None, *, min_nodes: int = 8,
                      bounded_slope: float = 0.1) -> AsymptoticFit:
    """Fit the boundary behavior of g/reference over a distance window.

    The three candidate models for y = log(g/ref) against d are a power law
    (y affine in log d), a logarithmic profile (g/ref proportional to
    log(A/d) with A = 2 diam), and a bounded profile (y constant).  The
    classification is bounded when the fitted slope is small, otherwise the
    smaller-residual model of the other two.
    """
    if g.grid != reference.grid:
        raise WindowTooSmallError("g and reference must share a grid")
    grid = g.grid
    L = grid.interval.length
    if window is None:
        window = (1e-3 * L, 1e-2 * L)
    d = grid.boundary_distance()
    gv, rv = g.values, reference.values
    sel = ((d >= window[0]) & (d <= window[1])
           & np.isfinite(gv) & np.isfinite(rv) & (gv > 0) & (rv > 0))
    sel[0] = sel[-1] = False
    m = int(np.count_nonzero(sel))
    if m < min_nodes:
        raise WindowTooSmallError(
            f"only {m} usable nodes in window {window}; need >= {min_nodes}")
    y = np.log(gv[sel] / rv[sel])
    t = np.log(d[sel])

    # power model: y = a + slope * t
    T = np.column_stack([np.ones(m), t])
    coef, *_ = np.linalg.lstsq(T, y, rcond=None)
    fit = T @ coef
    rss_power = float(np.sum((y - fit) ** 2))
    slope = float(coef[1])
    dof = max(m - 2, 1)
    tvar = float(np.sum((t - t.mean()) ** 2))
    se = np.sqrt(rss_power / dof / tvar) if tvar > 0 else np.inf
    ci = 1.96 * float(se)

    # logarithmic model: g/ref = C log(A/d)  =>  y = c + log(log(A/d))
    A = 2.0 * L
    z = np.log(np.log(A / d[sel]))
    c = float(np.mean(y - z))
    rss_log = float(np.sum((y - z - c) ** 2))

    rss_bounded = float(np.sum((y - y.mean()) ** 2))

    if abs(slope) < bounded_slope:
        model = "bounded"
    else:
        model = "power" if rss_power <= rss_log else "power_log"
    return AsymptoticFit(tuple(window), slope, ci, model,
                         {"power": rss_power, "power_log": rss_log,
                          "bounded": rss_bounded}, m)


# ---------------------------------------------------------------------------
# oscillatory cancellation verification
# ---------------------------------------------------------------------------

@dataclass
class Ex1CancellationReport:
    alpha: float
    positivity_min: float
    sup_ratio: float | None = None
    sup_ratio_refined: float | None = None
    stability: float | None = None
    bound_margin_min: float | None = None
    bound_violations: int = 0
    certified_remainder: float = 0.0
    probes: np.ndarray | None = None
    improper_values: np.ndarray | None = None
    improper_sequence: list = field(default_factory=list)
    growth_factor: float | None = None
    logratio_variation: float | None = None
    curve_x: np.ndarray | None = None
    curve_ratio: np.ndarray | None = None

    def curves_to_csv(self, path) -> None:
        import csv as _csv
        with open(path, "w", newline="") as fh:
            w = _csv.writer(fh)
            if self.curve_x is not None:
                w.writerow(["x", "GhV_over_h"])
                rows = zip(self.curve_x, self.curve_ratio)
            else:
                w.writerow(["x", "GhV_improper"])
                rows = zip(self.probes, self.improper_values)
            for x, v in rows:
                w.writerow([format(float(x), ".17g"), format(float(v), ".17g")])

    def summary(self) -> dict:
        out = {
            "schema": SCHEMA,
            "scenario": "ex1",
            "parameters": {"alpha": self.alpha},
            "positivity_min": self.positivity_min,
            "certified_remainder": self.certified_remainder,
        }
        if self.sup_ratio is not None:
            out["sup_ratio"] = self.sup_ratio
            out["sup_ratio_refined"] = self.sup_ratio_refined
            out["stability"] = self.stability
            out["bound_margin_min"] = self.bound_margin_min
            out["bound_violations"] = self.bound_violations
        if self.growth_factor is not None:
            out["growth_factor"] = self.growth_factor
            out["logratio_variation"] = self.logratio_variation
            out["probes"] = [float(p) for p in self.probes]
            out["improper_values"] = [float(v) for v in self.improper_values]
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _h01(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * x * (1.0 - x)


def verify_cancellation_ex1(alpha: float, grid: Grid, *,
                            head_budget: float = 5e-11,
                            max_periods: int = 400_000,
                            probes: np.ndarray | None = None,
                            levels: tuple = (12, 20)) -> Ex1CancellationReport:
    """Measure the cancellation in G(hV) for the oscillatory scenario.

    alpha < 1: evaluates G(hV)/h at the grid nodes (and at a doubled node
    set for a stability ratio), reports the sup over the window x <= 1/2 and
    the worst margin of u against the q = 1 lower bound h e^{-G(hV)/h}.

    alpha = 1: G(hV) exists only as an improper integral; its exhaustion
    sequence over (δ_m, 1-δ_m), δ_m = 2^{-m-2}, m = levels[0]..levels[1],
    is evaluated at probe points spanning [1e-4, 1e-2], and the growth of
    G(hV)/x together with the flatness of G(hV)/(x log(1/x)) is reported.
    """
    if not 0 < alpha <= 1:
        raise InvalidScenarioError("cancellation check covers 0 < alpha <= 1")
    if grid.interval != Interval(0.0, 1.0):
        raise InvalidScenarioError("ex1 lives on (0,1)")
    fns = ex1_functions(alpha)

    scan = np.unique(np.concatenate([
        np.geomspace(1e-7, 1.0 - 1e-7, 120_000),
        np.linspace(1e-7, 1.0 - 1e-7, 80_000)]))
    positivity_min = float(np.min(fns["D"](scan)))

    report = Ex1CancellationReport(alpha=alpha, positivity_min=positivity_min)

    if alpha < 1.0:
        xs = grid.nodes[1:-1]
        res = green_apply_oscillatory(fns["hV"], alpha, xs,
                                      head_budget=head_budget,
                                      max_periods=max_periods)
        h = _h01(xs)
        ratio = res.values / h
        window = xs <= 0.5
        report.sup_ratio = float(np.max(np.abs(ratio[window])))
        report.certified_remainder = float(res.head_bound)

        fine = Grid(grid.interval, 2 * grid.n - 1)
        xs2 = fine.nodes[1:-1]
        res2 = green_apply_oscillatory(fns["hV"], alpha, xs2,
                                       head_budget=head_budget,
                                       max_periods=max_periods)
        ratio2 = res2.values / _h01(xs2)
        report.sup_ratio_refined = float(np.max(np.abs(ratio2[xs2 <= 0.5])))
        report.stability = abs(report.sup_ratio_refined - report.sup_ratio) \
            / max(report.sup_ratio, 1e-300)

        u = fns["u"](xs)
        bound = h * np.exp(-ratio)
        margin = (u - bound) / h
        report.bound_margin_min = float(np.min(margin))
        report.bound_violations = int(np.count_nonzero(margin < -1e-6))
        report.curve_x = xs
        report.curve_ratio = ratio
        return report

    # alpha == 1: improper mode over the standard exhaustion schedule
    if probes is None:
        probes = np.geomspace(1e-4, 1e-2, 7)
    probes = np.asarray(probes, dtype=float)
    seq = []
    worst_cert = 0.0
    for m in range(levels[0], levels[1] + 1):
        delta = 2.0 ** (-(m + 2))
        inside = (probes > delta * 1.5) & (probes < 1.0 - delta * 1.5)
        vals = np.full(probes.size, np.nan)
        if inside.any():
            r = green_apply_oscillatory(fns["hV"], alpha, probes[inside],
                                        a=delta, b=1.0 - delta,
                                        max_periods=max_periods)
            vals[inside] = r.values
            worst_cert = max(worst_cert, float(np.max(r.eps)))
        seq.append(vals)
    final = seq[-1]
    if not np.all(np.isfinite(final)):
        raise ResolutionInsufficientError(
            "probe points fall outside every exhaustion level; raise the "
            "level range or move probes away from the boundary")
    report.improper_sequence = seq
    report.improper_values = final
    report.probes = probes
    report.certified_remainder = worst_cert
    over_x = final / probes
    report.growth_factor = float(over_x[0] / over_x[-1])
    norm = final / (probes * np.log(1.0 / probes))
    report.logratio_variation = float(np.max(norm) / np.min(norm))
    return report


# ---------------------------------------------------------------------------
# sharpness classification for the power-profile scenario
# ---------------------------------------------------------------------------

@dataclass
class Ex4SharpnessReport:
    lam: float
    gamma: float
    q: float
    classification: str
    sup_ratio: float | None = None
    window_ratio_min: float | None = None
    bound_exponent: float | None = None
    exact_exponent: float | None = None
    condition_flags: dict = field(default_factory=dict)
    bound: GridFn | None = None
    exact: GridFn | None = None

    def curves_to_csv(self, path) -> None:
        import csv as _csv
        with open(path, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["x", "bound", "exact"])
            if self.bound is None:
                return
            for x, b, u in zip(self.bound.grid.nodes, self.bound.values,
                               self.exact.values):
                w.writerow([format(float(x), ".17g"), format(float(b), ".17g"),
                            format(float(u), ".17g")])

    def summary(self) -> dict:
        return {
            "schema": SCHEMA,
            "scenario": "ex4",
            "parameters": {"lam": self.lam, "gamma": self.gamma, "q": self.q},
            "classification": self.classification,
            "sharpness_ratio": self.sup_ratio,
            "window_ratio_min": self.window_ratio_min,
            "fitted_rates": {"bound": self.bound_exponent,
                             "exact": self.exact_exponent},
            "condition_flags": self.condition_flags,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def sharpness_report_ex4(lam: float, gamma: float, q: float,
                         grid: Grid) -> Ex4SharpnessReport:
    """Compare the exact profile λ(1-x²)^γ against its computed upper bound.

    Classification: 'trivialized' when G(h^q V) is +-inf (bound carries no
    information), 'sharp' when the bound's boundary exponent matches the
    exact one within 0.05 and the ratio exact/bound stays bounded away from
    zero on the fit window, 'not-sharp' otherwise.
    """
    spec = ScenarioSpec("ex4", grid, q=q, lam=lam, gamma=gamma)
    problem, exact = build_scenario(spec)
    rep = thm1_bound(problem)
    flags = {
        "plus_infinite": rep.ghqv.plus_infinite,
        "minus_infinite": rep.ghqv.minus_infinite,
        "necessary_ok_everywhere": bool(np.all(rep.necessary_ok)),
    }
    out = Ex4SharpnessReport(lam, gamma, q, "trivialized",
                             condition_flags=flags, bound=rep.bound,
                             exact=exact)
    if rep.ghqv.plus_infinite or rep.ghqv.minus_infinite:
        return out

    bvals = rep.bound.values
    uvals = exact.values
    inner = np.isfinite(bvals) & (bvals > 0)
    inner[0] = inner[-1] = False
    with np.errstate(invalid="ignore"):
        ratio = np.where(inner, uvals / np.where(inner, bvals, 1.0), np.nan)
    out.sup_ratio = float(np.nanmax(ratio))

    one = GridFn(grid, np.ones(grid.n))
    fit_b = fit_boundary_rate(rep.bound, one)
    fit_u = fit_boundary_rate(exact, one)
    out.bound_exponent = fit_b.slope
    out.exact_exponent = fit_u.slope

    d = grid.boundary_distance()
    L = grid.interval.length
    window = (d >= 1e-3 * L) & (d <= 1e-2 * L) & inner
    out.window_ratio_min = float(np.nanmin(ratio[window]))
    exp_match = abs(fit_b.slope - fit_u.slope) <= 0.05
    out.classification = ("sharp" if exp_match and out.window_ratio_min >= 0.05
                          else "not-sharp")
    return out
