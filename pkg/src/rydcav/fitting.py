"""Nonlinear least-squares extraction of model parameters.

Fits any of the three forward models (closed-form linear spectrum,
mean-field nonlinear spectrum, bubble-model transient) to measured data by
minimizing sum_i w_i (y_i - model(x_i; theta))^2 over a chosen subset of
the physical parameters.  The minimizer is a Levenberg-Marquardt trust
region with a central-difference Jacobian; 95% confidence intervals come
from the residual-variance-scaled inverse of J^T J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bubble, linear, meanfield
from .errors import ConfigError, IntegrationError, SingularParameterError, SolverError
from .params import PhysicalParams, get_path, set_paths
from .util import parallel_map

MODELS = ("linear_eit", "meanfield", "bubble_transient")

#: default box constraints by field name; rates that sit in denominators
#: get a small positive floor
_DEFAULT_BOUNDS = {
    "gamma_c": (1e-9, np.inf),
    "gamma_e": (0.0, np.inf),
    "gamma_r": (1e-9, np.inf),
    "gamma_s": (0.0, np.inf),
    "xi": (0.0, np.inf),
    "cooperativity": (0.0, np.inf),
    "omega_cf": (0.0, np.inf),
    "alpha": (0.0, np.inf),
    "finesse": (1e-9, np.inf),
    "length": (1e-12, np.inf),
    "cloud_volume": (1e-12, np.inf),
}
_UNFITTABLE = {"n", "series", "atom_number"}


def default_bounds(path: str) -> tuple[float, float]:
    name = path.partition(".")[2]
    return _DEFAULT_BOUNDS.get(name, (-np.inf, np.inf))


def poisson_weights(y, floor: float = 1e-6) -> np.ndarray:
    """w = 1 / max(y, floor), for photon-counting data."""
    return 1.0 / np.maximum(np.asarray(y, dtype=float), floor)


@dataclass
class FitProblem:
    """Data, model selector and free-parameter description for one fit."""

    x: np.ndarray
    y: np.ndarray
    model: str
    base_params: PhysicalParams
    free: tuple[str, ...]
    weights: np.ndarray | None = None
    initial: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    model_options: dict = field(default_factory=dict)
    #: relative finite-difference step; ODE-backed models need a step well
    #: above the integrator noise floor
    diff_step: float | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.model not in MODELS:
            raise ValueError(f"unknown model '{self.model}'")
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        self.free = tuple(self.free)
        if not self.free:
            raise ValueError("at least one free parameter required")
        for path in self.free:
            name = path.partition(".")[2]
            if name in _UNFITTABLE:
                raise ValueError(f"parameter '{path}' cannot be fitted")
            if get_path(self.base_params, path) is None:
                raise ValueError(f"parameter '{path}' has no base value")
        if self.x.size < 2 * len(self.free):
            raise ValueError("need at least 2 data points per free parameter")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.y.shape or np.any(self.weights <= 0):
                raise ValueError("weights must be positive and match the data")
        if self.initial is None:
            self.initial = np.array([float(get_path(self.base_params, p))
                                     for p in self.free])
        else:
            self.initial = np.asarray(self.initial, dtype=float)
        bounds = [default_bounds(p) for p in self.free]
        if self.lower is None:
            self.lower = np.array([b[0] for b in bounds])
        else:
            self.lower = np.asarray(self.lower, dtype=float)
        if self.upper is None:
            self.upper = np.array([b[1] for b in bounds])
        else:
            self.upper = np.asarray(self.upper, dtype=float)
        if np.any(self.initial < self.lower) or np.any(self.initial > self.upper):
            raise ValueError("bounds must contain the initial guess")
        if self.diff_step is None:
            self.diff_step = (1e-3 if self.model == "bubble_transient"
                              else float(np.finfo(float).eps ** (1 / 3)))

    def params_at(self, theta) -> PhysicalParams:
        return set_paths(self.base_params, dict(zip(self.free, theta)))

    def model_curve(self, theta) -> np.ndarray:
        p = self.params_at(theta)
        if self.model == "linear_eit":
            return np.asarray(linear.transmission_linear(p, self.x))
        if self.model == "meanfield":
            return meanfield.transmission_curve(p, self.x)
        opts = self.model_options
        series = bubble.evolve(
            p,
            t_end=float(self.x[-1]),
            nmax=opts.get("nmax", bubble.DEFAULT_NMAX),
            rtol=opts.get("rtol", 1e-6),
            atol=opts.get("atol", 1e-9),
            n_b=opts.get("n_b"),
            sample_times=self.x,
        )
        return series.transmission


@dataclass
class FitResult:
    names: tuple[str, ...]
    best_fit: np.ndarray
    residual_norm: float
    ci95: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    message: str = ""
    objective_history: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "best_fit": {n: float(v) for n, v in zip(self.names, self.best_fit)},
            "ci95": {n: (float(v) if np.isfinite(v) else None)
                     for n, v in zip(self.names, self.ci95)},
            "residual_norm": float(self.residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
        }


def jacobian(fun, theta, h=None, rel_step=None) -> np.ndarray:
    """Central-difference Jacobian of fun(theta) -> vector.

    The step adapts to each parameter's magnitude,
    h_j = rel_step * max(|theta_j|, 1e-2) (rel_step defaults to eps^(1/3));
    pass ``h`` (scalar or vector) to override, e.g. for step-halving
    accuracy checks.
    """
    theta = np.asarray(theta, dtype=float)
    if h is None:
        rel = float(np.finfo(float).eps ** (1 / 3)) if rel_step is None else rel_step
        h = rel * np.maximum(np.abs(theta), 1e-2)
    else:
        h = np.broadcast_to(np.asarray(h, dtype=float), theta.shape).copy()
    cols = []
    for j in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[j] += h[j]
        tm[j] -= h[j]
        cols.append((fun(tp) - fun(tm)) / (2.0 * h[j]))
    return np.column_stack(cols)


def _covariance(jac_w, ssr, dof):
    """(covariance, ci95) from the weighted Jacobian at the solution.

    Rank-deficient J^T J marks the affected parameters' intervals as NaN
    instead of inventing a number.
    """
    p = jac_w.shape[1]
    a = jac_w.T @ jac_w
    s2 = ssr / dof if dof > 0 else np.nan
    evals, evecs = np.linalg.eigh(a)
    tol = max(evals.max(), 0.0) * 1e-12 + 1e-300
    keep = evals > tol
    inv = np.zeros_like(evals)
    inv[keep] = 1.0 / evals[keep]
    cov = (evecs * inv) @ evecs.T * s2
    cov = 0.5 * (cov + cov.T)
    ci = 1.96 * np.sqrt(np.maximum(np.diag(cov), 0.0))
    if not keep.all():
        affected = np.any(np.abs(evecs[:, ~keep]) > 1e-8, axis=1)
        ci = np.where(affected, np.nan, ci)
    if dof <= 0:
        ci = np.full(p, np.nan)
    return cov, ci


def fit(problem: FitProblem, max_iter: int = 100, ftol: float = 1e-10,
        xtol: float = 1e-8, gtol: float = 1e-12) -> FitResult:
    """Levenberg-Marquardt trust-region minimization of the fit problem.

    The damping parameter follows Nielsen's gain-ratio update; trial steps
    are projected onto the parameter box.  The objective over accepted
    steps is recorded in ``objective_history`` (monotonically decreasing by
    construction).
    """
    w = problem.weights if problem.weights is not None else np.ones_like(problem.y)
    sqrt_w = np.sqrt(w)
    lo, hi = problem.lower, problem.upper

    def residuals(theta):
        return sqrt_w * (problem.y - problem.model_curve(theta))

    def weighted_jacobian(theta):
        return -jacobian(problem.model_curve, theta,
                         rel_step=problem.diff_step) * sqrt_w[:, None]

    theta = np.clip(problem.initial, lo, hi).astype(float)
    r = residuals(theta)
    ssr = float(r @ r)
    if not np.isfinite(ssr):
        raise ValueError("objective is not finite at the initial guess")
    history = [ssr]
    dof = problem.y.size - theta.size

    jac_r = weighted_jacobian(theta)
    a = jac_r.T @ jac_r
    g = jac_r.T @ r
    mu = 1e-3 * max(float(np.max(np.diag(a))), 1e-300)
    nu = 2.0
    converged = False
    message = "max_iter reached"
    iterations = 0

    for iterations in range(1, max_iter + 1):
        try:
            delta = np.linalg.solve(a + mu * np.eye(theta.size), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2.0
            continue
        trial = np.clip(theta + delta, lo, hi)
        step = trial - theta
        if np.linalg.norm(step) < xtol * (np.linalg.norm(theta) + xtol):
            converged, message = True, "step tolerance reached"
            break
        r_trial = residuals(trial)
        ssr_trial = float(r_trial @ r_trial)
        predicted = float(step @ (mu * step - g))
        gain = (ssr - ssr_trial) / predicted if predicted > 0 else -1.0
        if ssr_trial < ssr:
            rel_drop = (ssr - ssr_trial) / max(ssr, 1e-300)
            theta, r, ssr = trial, r_trial, ssr_trial
            history.append(ssr)
            if rel_drop < ftol:
                converged, message = True, "objective tolerance reached"
                jac_r = weighted_jacobian(theta)
                break
            jac_r = weighted_jacobian(theta)
            a = jac_r.T @ jac_r
            g = jac_r.T @ r
            if float(np.max(np.abs(g))) < gtol:
                converged, message = True, "gradient tolerance reached"
                break
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
            nu = 2.0
        else:
            mu *= nu
            nu *= 2.0
            if mu > 1e300:
                message = "damping overflow"
                break

    cov, ci = _covariance(jac_r, ssr, dof)
    return FitResult(
        names=problem.free,
        best_fit=theta,
        residual_norm=math.sqrt(ssr),
        ci95=ci,
        covariance=cov,
        converged=converged,
        iterations=iterations,
        message=message,
        objective_history=history,
    )


def fit_multi_start(problem: FitProblem, starts) -> FitResult:
    """Run the fit from several initial vectors, keep the best outcome."""
    best = None
    for start in starts:
        trial = FitProblem(
            x=problem.x, y=problem.y, model=problem.model,
            base_params=problem.base_params, free=problem.free,
            weights=problem.weights, initial=np.asarray(start, dtype=float),
            lower=problem.lower, upper=problem.upper,
            model_options=problem.model_options,
        )
        res = fit(trial)
        if best is None or res.residual_norm < best.residual_norm:
            best = res
    return best


@dataclass
class XiEstimate:
    n: int
    xi: float
    ci95: float
    converged: bool
    residual_norm: float


def fit_xi_series(entries, params_by_n, model_options: dict | None = None,
                  **fit_kwargs) -> list[XiEstimate]:
    """Independent single-parameter dark-state-rate fits, one per level.

    ``entries`` is a list of (n, TimeSeries); ``params_by_n`` maps each n to
    its parameter bundle.  Entries whose fit fails are flagged
    (converged=False, xi=NaN) without affecting the others.
    """
    opts = dict(model_options or {})

    def run(entry):
        n, series = entry
        try:
            prob = FitProblem(
                x=series.t, y=series.transmission, model="bubble_transient",
                base_params=params_by_n[n], free=("rydberg.xi",),
                model_options=opts,
            )
            res = fit(prob, **fit_kwargs)
            return XiEstimate(n, float(res.best_fit[0]), float(res.ci95[0]),
                              res.converged, res.residual_norm)
        except (SolverError, IntegrationError, SingularParameterError,
                ConfigError, ValueError):
            return XiEstimate(n, float("nan"), float("nan"), False,
                              float("nan"))

    return [est for est in parallel_map(run, list(entries))]
