"""Self-consistent mean-field steady state with Rydberg blockade.

The collective amplitudes (<a>, <b>, <c>) of cavity field, optical
coherence and Rydberg coherence obey, in steady state,

    D_c <a> = gN <b> + alpha,
    D_e <b> = gN <a> + (Omega/2) <c>,
    (D_r - kappa x) <c> = (Omega/2) <b>,      x = |<c>|^2,

with gN = g sqrt(N) = sqrt(2 gamma_e gamma_c C).  Eliminating <b> and <c>
closes the system into a scalar fixed-point problem F(x) = x, where F is
|<c>|^2 evaluated at the interaction-shifted detuning D_r - kappa x.  The
cavity transmission is T = gamma_c^2 |<a>|^2 / alpha^2, which reduces to
the linear formula for kappa = 0 or alpha -> 0.

Roots are located by a bracketing sign scan refined with Brent's method;
scans follow one branch by continuation (the previous point's x seeds the
next) and report the root multiplicity when several fixed points coexist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import interactions
from .errors import SingularParameterError, SolverError
from .linear import eit_factors
from .params import PhysicalParams, ScanSpec, params_to_dict

_DRX_FLOOR = 1e-300
_SCAN_POINTS = 256
_MAX_EXPANSIONS = 8


def photon_rate_to_alpha(rate: float, gamma_c: float) -> float:
    """Feeding amplitude for a probe photon rate R (photons/us).

    The rate axis is normalized to the empty-cavity resonant output under
    this package's conventions, R = alpha^2 / gamma_c.
    """
    return math.sqrt(gamma_c * rate)


def alpha_to_photon_rate(alpha: float, gamma_c: float) -> float:
    return alpha * alpha / gamma_c


@dataclass(frozen=True)
class _Point:
    """Scalar context for one (params, delta_p) evaluation point."""

    D_e: complex
    D_r: complex
    D_c: complex
    omega: float
    alpha: float
    gamma_c: float
    coop_term: float   # 2 gamma_c gamma_e C
    g_root_n: float
    kappa: complex


def _point(params: PhysicalParams, delta_p=None) -> _Point:
    # numpy scalars keep the kappa = 0 path bit-for-bit identical to the
    # linear module, which evaluates through numpy as well
    D_e, D_r, D_c = (np.complex128(z) for z in params.complex_detunings(delta_p))
    omega = params.drive.omega_cf
    gc = params.cavity.gamma_c
    coop = 2.0 * gc * params.ensemble.gamma_e * params.ensemble.cooperativity
    c6 = interactions.c6_coefficient(params.rydberg)
    if c6 == 0:
        kap = 0j
    else:
        v_b = interactions.blockade_volume(D_e, D_r, omega, c6)
        kap = interactions.kappa(D_e, D_r, omega, v_b, params.ensemble.cloud_volume)
    return _Point(D_e, D_r, D_c, omega, params.drive.alpha, gc, coop,
                  params.g_root_n, kap)


def _amplitudes(pt: _Point, x):
    """(a, b, c, branch, denom) at Rydberg population parameter x."""
    Drx = pt.D_r - pt.kappa * x
    branch, denom = eit_factors(pt.D_e, Drx, pt.D_c, pt.omega, pt.coop_term)
    if np.any(np.abs(denom) < _DRX_FLOOR):
        raise SingularParameterError("steady-state denominator vanished")
    a = pt.alpha * branch / denom
    b = pt.g_root_n * pt.alpha / denom
    if pt.omega == 0:
        c = np.zeros_like(b)
    else:
        if np.any(np.abs(Drx) < _DRX_FLOOR):
            raise SingularParameterError("shifted Rydberg detuning vanished")
        c = 0.5 * pt.omega * b / Drx
    return a, b, c, branch, denom


def _excitation(pt: _Point, x):
    """F(x) = |<c>(x)|^2."""
    _, _, c, _, _ = _amplitudes(pt, x)
    return np.abs(c) ** 2


def steady_residual(params: PhysicalParams, x, delta_p=None):
    """F(x) - x; its roots are the self-consistent steady states.

    Accepts a scalar or an array of x values (x >= 0).
    """
    pt = _point(params, delta_p)
    x = np.asarray(x, dtype=float)
    res = _excitation(pt, x) - x
    return float(res) if res.ndim == 0 else res


@dataclass
class MeanFieldSolution:
    a: complex
    b: complex
    c: complex
    x: float
    residual: float
    branch_id: int
    root_count: int = 1
    blockaded_fraction: float = 0.0  # x |V_b| / V diagnostic

    def __post_init__(self):
        if abs(abs(self.c) ** 2 - self.x) > 1e-9 * max(1.0, self.x):
            raise ValueError("|c|^2 and x disagree")


def _find_roots(pt: _Point) -> list[float]:
    """All fixed points of F on [0, x_max], by sign scan plus Brent refine."""
    f0 = float(_excitation(pt, 0.0))
    if f0 == 0.0:
        return [0.0]
    if pt.kappa == 0:
        return [f0]  # F is x-independent: closed-form root

    def residual(x: float) -> float:
        return float(_excitation(pt, x)) - x

    x_max = 10.0 * f0
    for _ in range(_MAX_EXPANSIONS):
        grid = np.linspace(0.0, x_max, _SCAN_POINTS + 1)
        res = _excitation(pt, grid) - grid
        sign = np.sign(res)
        brackets = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        exact = np.nonzero(sign == 0)[0]
        if brackets.size or exact.size:
            break
        if res[-1] < 0:  # residual already negative without a crossing seen
            break
        x_max *= 4.0
    else:
        raise SolverError(
            f"no steady-state root found in [0, {x_max:g}] "
            f"(residual at endpoints: {res[0]:g}, {res[-1]:g})")

    roots = [float(grid[i]) for i in exact]
    for i in brackets:
        roots.append(brentq(residual, grid[i], grid[i + 1],
                            xtol=1e-15 * max(1.0, x_max), rtol=8.9e-16))
    if not roots:
        raise SolverError(
            f"sign scan over [0, {x_max:g}] found no bracket "
            f"(residual at endpoints: {res[0]:g}, {res[-1]:g})")
    roots.sort()
    dedup = [roots[0]]
    for r in roots[1:]:
        if r - dedup[-1] > 1e-10 * max(1.0, x_max):
            dedup.append(r)
    return dedup


def solve_self_consistent(params: PhysicalParams, x_seed: float = 0.0,
                          delta_p=None) -> MeanFieldSolution:
    """Self-consistent steady state, following the branch nearest x_seed.

    When the bracketing scan finds several fixed points (bistability) the
    one closest to the seed is returned and root_count reports how many
    were seen; the choice mirrors an adiabatic experimental sweep.
    """
    pt = _point(params, delta_p)
    roots = _find_roots(pt)
    branch_id = int(np.argmin([abs(r - x_seed) for r in roots]))
    x = roots[branch_id]
    residual = abs(float(_excitation(pt, x)) - x)
    if residual > 1e-10 * max(1.0, x):
        raise SolverError(f"root refinement stalled: residual {residual:g} at x={x:g}")
    a, b, c, _, _ = _amplitudes(pt, x)
    c6 = interactions.c6_coefficient(params.rydberg)
    if c6 == 0:
        frac = 0.0
    else:
        v_b = interactions.blockade_volume(pt.D_e, pt.D_r, pt.omega, c6)
        frac = x * abs(v_b) / params.ensemble.cloud_volume
    return MeanFieldSolution(complex(a), complex(b), complex(c), x, residual,
                             branch_id, root_count=len(roots),
                             blockaded_fraction=frac)


def transmission_from_solution(params: PhysicalParams, sol: MeanFieldSolution,
                               delta_p=None) -> float:
    """T = gamma_c^2 |<a>|^2 / alpha^2, in its alpha-independent form.

    Evaluated as |gamma_c B / (B D_c - 2 gamma_c gamma_e C)|^2 at the solved
    x, which equals the ratio above for alpha > 0 and is its alpha -> 0
    limit otherwise (the linear formula at x = 0).
    """
    pt = _point(params, delta_p)
    _, _, _, branch, denom = _amplitudes(pt, sol.x)
    return float(np.abs(pt.gamma_c * branch / denom) ** 2)


def transmission_meanfield(params: PhysicalParams, delta_p=None,
                           x_seed: float = 0.0) -> float:
    sol = solve_self_consistent(params, x_seed=x_seed, delta_p=delta_p)
    return transmission_from_solution(params, sol, delta_p=delta_p)


def dynamical_residual(params: PhysicalParams, sol: MeanFieldSolution,
                       delta_p=None) -> float:
    """Norm of the three zeroed dynamical equations at a solution."""
    pt = _point(params, delta_p)
    a, b, c, x = sol.a, sol.b, sol.c, sol.x
    r1 = pt.D_c * a - pt.g_root_n * b - pt.alpha
    r2 = pt.D_e * b - pt.g_root_n * a - 0.5 * pt.omega * c
    r3 = pt.D_r * c - 0.5 * pt.omega * b - pt.kappa * (abs(c) ** 2) * c
    return math.sqrt(abs(r1) ** 2 + abs(r2) ** 2 + abs(r3) ** 2)


def transmission_curve(params: PhysicalParams, delta_ps) -> np.ndarray:
    """Mean-field transmission at each detuning of an ordered grid.

    Continuation in x along the grid, seeded at the dark (x = 0) solution;
    used by the fitting module, which needs arbitrary (non-uniform) grids.
    """
    seed = 0.0
    out = np.empty(len(delta_ps))
    for i, dp in enumerate(delta_ps):
        sol = solve_self_consistent(params, x_seed=seed, delta_p=float(dp))
        out[i] = transmission_from_solution(params, sol, delta_p=float(dp))
        seed = sol.x
    return out


@dataclass
class NonlinearSpectrum:
    """Mean-field transmission scan with per-point diagnostics."""

    axis: np.ndarray
    transmission: np.ndarray
    x: np.ndarray
    root_count: np.ndarray
    failed: np.ndarray
    axis_name: str = "delta_p_mhz"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        if np.any(self.transmission[~self.failed] < 0):
            raise ValueError("transmission must be >= 0")

    header_suffix = "transmission,x,root_count"

    @property
    def header(self) -> str:
        return f"{self.axis_name},{self.header_suffix}"

    def rows(self):
        return zip(self.axis, self.transmission, self.x, self.root_count)


def scan_meanfield(params: PhysicalParams, scan: ScanSpec | None = None,
                   variable: str = "delta_p") -> NonlinearSpectrum:
    """Sweep probe detuning or photon rate with x-continuation.

    ``variable="delta_p"`` scans the probe (kappa is re-evaluated at every
    point); ``variable="rate"`` scans the probe photon rate R at fixed
    detuning, mapping R to alpha = sqrt(gamma_c R).  Points where the
    solver fails are flagged and the scan continues.
    """
    if variable not in ("delta_p", "rate"):
        raise ValueError("variable must be 'delta_p' or 'rate'")
    scan = scan if scan is not None else params.scan
    if scan is None:
        raise ValueError("no scan specified")
    grid = scan.values()
    n = grid.size
    t = np.full(n, np.nan)
    xs = np.full(n, np.nan)
    counts = np.zeros(n, dtype=int)
    failed = np.zeros(n, dtype=bool)

    seed = 0.0
    for i, v in enumerate(grid):
        if variable == "delta_p":
            p_i, dp = params, float(v)
        else:
            if v < 0:
                raise ValueError("photon rate must be >= 0")
            alpha = photon_rate_to_alpha(float(v), params.cavity.gamma_c)
            p_i = replace(params, drive=replace(params.drive, alpha=alpha))
            dp = None
        try:
            sol = solve_self_consistent(p_i, x_seed=seed, delta_p=dp)
        except (SolverError, SingularParameterError):
            failed[i] = True
            continue
        t[i] = transmission_from_solution(p_i, sol, delta_p=dp)
        xs[i] = sol.x
        counts[i] = sol.root_count
        seed = sol.x

    axis_name = "delta_p_mhz" if variable == "delta_p" else "photon_rate_per_us"
    return NonlinearSpectrum(grid, t, xs, counts, failed, axis_name=axis_name,
                             metadata={"params": params_to_dict(params)})
