"""Semi-classical Rydberg-bubble dynamics with dark-state decay.

The cloud is split into N/n_b independent bubbles of n_b atoms sharing at
most one Rydberg excitation.  Each bubble lives on the truncated product
space {|m>, m = 0..N_max} x {|G>, |R>, |S>}: a bosonic mode for the
intermediate-state excitation (collective lowering operator beta) and the
three collective internal states (ground, bright Rydberg, dark Rydberg).
The bubble density matrix rho is driven by the classical cavity amplitude
<a>, which in turn sees the polarization of all bubbles:

    drho/dt = -i [H, rho] + D_l(rho) + D_nl(rho),
    H = -Delta_r sRR - Delta_e beta+ beta
        + {(Omega_cf/2 sRG + g sqrt(n_b) <a>*) beta + h.c.},
    D_l  = gamma_e D[beta] + gamma_r D[sGR] + gamma_s D[sGS],
    D_nl = xi <sRR> D[sSR]              (rate proportional to the
                                         instantaneous bright population),
    d<a>/dt = i (Delta_c + i gamma_c) <a>
              - i (N/n_b) g sqrt(n_b) <beta> - i alpha,

with D[L] rho = 2 L rho L+ - L+L rho - rho L+L and g sqrt(n_b) =
sqrt(2 gamma_e gamma_c C n_b / N).  All rates are converted to angular
units (rad/us) for the time integration; transmission is
T = gamma_c^2 |<a>|^2 / alpha^2.

Internally rho is propagated as its coefficient vector in a real
orthonormal basis of Hermitian matrices, which enforces the Hermitization
rho <- (rho + rho+)/2 exactly at every step (the state simply cannot leave
the Hermitian subspace) and halves the integration cost.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import interactions
from .errors import IntegrationError
from .ode import integrate
from .params import PhysicalParams, params_to_dict, to_angular

_G, _R, _S = 0, 1, 2
DEFAULT_NMAX = 4


@dataclass(frozen=True)
class BubbleOperators:
    """Collective bubble operators on the truncated boson x {G,R,S} space."""

    nmax: int
    dim: int
    beta: np.ndarray
    sigma_GR: np.ndarray
    sigma_RG: np.ndarray
    sigma_RR: np.ndarray
    sigma_GS: np.ndarray
    sigma_SG: np.ndarray
    sigma_SS: np.ndarray
    sigma_SR: np.ndarray
    sigma_RS: np.ndarray


def build_operators(nmax: int) -> BubbleOperators:
    """Operator matrices of dimension 3 (nmax + 1), basis |m> x |s>."""
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    nb = nmax + 1
    lower = np.zeros((nb, nb))
    for m in range(1, nb):
        lower[m - 1, m] = math.sqrt(m)
    eye3 = np.eye(3)
    eyeb = np.eye(nb)

    def internal(i, j):
        m = np.zeros((3, 3))
        m[i, j] = 1.0
        return np.kron(eyeb, m)

    return BubbleOperators(
        nmax=nmax,
        dim=3 * nb,
        beta=np.kron(lower, eye3),
        sigma_GR=internal(_G, _R),
        sigma_RG=internal(_R, _G),
        sigma_RR=internal(_R, _R),
        sigma_GS=internal(_G, _S),
        sigma_SG=internal(_S, _G),
        sigma_SS=internal(_S, _S),
        sigma_SR=internal(_S, _R),
        sigma_RS=internal(_R, _S),
    )


@dataclass
class BubbleState:
    """Bubble density matrix plus the classical cavity amplitude."""

    rho: np.ndarray
    a: complex
    t: float = 0.0

    @property
    def trace_error(self) -> float:
        tr = np.trace(self.rho)
        return abs(tr.real - 1.0) + abs(tr.imag)

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())

    def population(self, projector: np.ndarray) -> float:
        return float(np.trace(projector @ self.rho).real)


# --- superoperators over row-major vec(rho) --------------------------------

def _sop_commutator(h, eye):
    return np.kron(h, eye) - np.kron(eye, h.T)


def _sop_dissipator(L, eye):
    LdL = L.conj().T @ L
    return 2.0 * np.kron(L, L.conj()) - np.kron(LdL, eye) - np.kron(eye, LdL.T)


def _hermitian_basis(d: int) -> np.ndarray:
    """Columns: vec of an orthonormal Hermitian basis (diagonals first)."""
    v = np.zeros((d * d, d * d), dtype=complex)
    col = 0
    for k in range(d):
        v[k * d + k, col] = 1.0
        col += 1
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            v[i * d + j, col] = inv_sqrt2
            v[j * d + i, col] = inv_sqrt2
            col += 1
            v[i * d + j, col] = 1j * inv_sqrt2
            v[j * d + i, col] = -1j * inv_sqrt2
            col += 1
    return v


class BubbleModel:
    """Precompiled right-hand side for one parameter set.

    The Lindblad generator is assembled once as dense blocks in the real
    Hermitian basis; each evaluation is then a single stacked real
    matrix-vector product, with the cavity-coupling blocks scaled by
    Re<a>, Im<a> and the nonlinear dark-state block by xi <sigma_RR>.
    """

    def __init__(self, params: PhysicalParams, nmax: int = DEFAULT_NMAX,
                 n_b: float | None = None):
        self.params = params
        self.nmax = nmax
        self.ops = build_operators(nmax)
        d = self.ops.dim
        self.dim = d
        self.nsq = d * d

        ens, ryd, drv, cav = (params.ensemble, params.rydberg,
                              params.drive, params.cavity)
        if n_b is None:
            c6 = interactions.c6_coefficient(ryd)
            if c6 == 0:
                n_b = 1.0
            else:
                D_e, D_r, _ = params.complex_detunings()
                v_b = interactions.blockade_volume(D_e, D_r, drv.omega_cf, c6)
                n_b = interactions.atoms_per_bubble(ens.atom_number, v_b,
                                                    ens.cloud_volume)
        self.n_b = float(n_b)

        ge_a = to_angular(ens.gamma_e)
        gr_a = to_angular(ryd.gamma_r)
        gs_a = to_angular(ryd.gamma_s_eff)
        gc_a = to_angular(cav.gamma_c)
        om_a = to_angular(drv.omega_cf)
        de_a, dr_a, dc_a = (to_angular(v) for v in params.detunings())
        self.xi_a = to_angular(ryd.xi)
        self.alpha_a = to_angular(drv.alpha)
        self.gamma_c_a = gc_a
        self.dc_a = dc_a

        # collective couplings: one bubble feels g sqrt(n_b); the cavity
        # sums the polarization of all N/n_b bubbles
        self.g_nb_a = math.sqrt(2.0 * ge_a * gc_a * ens.cooperativity
                                * self.n_b / ens.atom_number)
        self.prefactor_a = (ens.atom_number / self.n_b) * self.g_nb_a

        ops = self.ops
        eye = np.eye(d)
        bd = ops.beta.conj().T
        h0 = (-dr_a * ops.sigma_RR - de_a * (bd @ ops.beta)
              + 0.5 * om_a * (ops.sigma_RG @ ops.beta + bd @ ops.sigma_GR))
        l_const = -1j * _sop_commutator(h0, eye)
        l_const = l_const + ge_a * _sop_dissipator(ops.beta, eye)
        l_const = l_const + gr_a * _sop_dissipator(ops.sigma_GR, eye)
        l_const = l_const + gs_a * _sop_dissipator(ops.sigma_GS, eye)
        # cavity-coupling Hamiltonians multiplying Re<a> and Im<a>
        h_re = self.g_nb_a * (ops.beta + bd)
        h_im = self.g_nb_a * 1j * (bd - ops.beta)
        blocks_c = [l_const,
                    -1j * _sop_commutator(h_re, eye),
                    -1j * _sop_commutator(h_im, eye)]
        if self.xi_a != 0.0:
            blocks_c.append(_sop_dissipator(ops.sigma_SR, eye))

        # project onto the real Hermitian basis (exact for generators that
        # preserve Hermiticity; asserted below)
        self._basis = _hermitian_basis(d)          # columns vec(B_m)
        u = self._basis.conj().T                   # r = Re(u @ vec(rho))
        blocks_r = []
        for blk in blocks_c:
            m = u @ blk @ self._basis
            if np.max(np.abs(m.imag)) > 1e-9 * max(np.max(np.abs(m.real)), 1.0):
                raise AssertionError("generator block is not Hermiticity-preserving")
            blocks_r.append(np.ascontiguousarray(m.real))
        self._nblocks = len(blocks_r)
        self._stacked = np.ascontiguousarray(np.vstack(blocks_r))

        # Tr(X rho) = vec(X^T) . vec(rho) = (vec(X^T) @ basis) . r
        w_beta = ops.beta.T.reshape(-1) @ self._basis
        self._w_beta_re = np.ascontiguousarray(w_beta.real)
        self._w_beta_im = np.ascontiguousarray(w_beta.imag)
        self._w_rr = np.ascontiguousarray(
            (ops.sigma_RR.T.reshape(-1) @ self._basis).real)
        self._w_ss = np.ascontiguousarray(
            (ops.sigma_SS.T.reshape(-1) @ self._basis).real)

    # --- state layout: y[:d*d] = Hermitian-basis coefficients of rho,
    #     y[d*d] = Re<a>, y[d*d+1] = Im<a> ----------------------------------

    def initial_flat(self, rho0: np.ndarray | None = None,
                     a0: complex = 0.0) -> np.ndarray:
        y = np.zeros(self.nsq + 2)
        if rho0 is None:
            y[0] = 1.0  # |G, m=0>
        else:
            coeffs = self._basis.conj().T @ np.asarray(rho0, complex).reshape(-1)
            y[: self.nsq] = coeffs.real
        y[self.nsq] = complex(a0).real
        y[self.nsq + 1] = complex(a0).imag
        return y

    def rhs_flat(self, t, y):
        r = y[: self.nsq]
        ar = y[self.nsq]
        ai = y[self.nsq + 1]
        prods = (self._stacked @ r).reshape(self._nblocks, self.nsq)
        dr = prods[0] + ar * prods[1] + ai * prods[2]
        if self.xi_a != 0.0:
            dr += (self.xi_a * (self._w_rr @ r)) * prods[3]
        beta_re = self._w_beta_re @ r
        beta_im = self._w_beta_im @ r
        out = np.empty_like(y)
        out[: self.nsq] = dr
        out[self.nsq] = (-self.gamma_c_a * ar - self.dc_a * ai
                         + self.prefactor_a * beta_im)
        out[self.nsq + 1] = (self.dc_a * ar - self.gamma_c_a * ai
                             - self.prefactor_a * beta_re - self.alpha_a)
        return out

    def cavity_amplitude(self, y) -> complex:
        return complex(y[self.nsq], y[self.nsq + 1])

    def transmission(self, y) -> float:
        if self.alpha_a == 0.0:
            return 0.0
        a = self.cavity_amplitude(y)
        return self.gamma_c_a**2 * abs(a) ** 2 / self.alpha_a**2

    def trace(self, y) -> float:
        return float(y[: self.dim].sum())  # diagonal basis elements lead

    def rho_matrix(self, y) -> np.ndarray:
        return (self._basis @ y[: self.nsq]).reshape(self.dim, self.dim)

    def state_from_flat(self, y, t: float) -> BubbleState:
        return BubbleState(rho=self.rho_matrix(y), a=self.cavity_amplitude(y),
                           t=t)


@functools.lru_cache(maxsize=16)
def _cached_model(params: PhysicalParams, nmax: int, n_b) -> BubbleModel:
    return BubbleModel(params, nmax=nmax, n_b=n_b)


def rhs(state: BubbleState, params: PhysicalParams,
        n_b: float | None = None) -> tuple[np.ndarray, complex]:
    """(drho/dt, d<a>/dt) for one bubble state; pure evaluation."""
    nmax = state.rho.shape[0] // 3 - 1
    model = _cached_model(params, nmax, n_b)
    y = model.initial_flat(rho0=state.rho, a0=state.a)
    dy = model.rhs_flat(state.t, y)
    drho = model.rho_matrix(dy)
    da = complex(dy[model.nsq], dy[model.nsq + 1])
    return drho, da


@dataclass
class TimeSeries:
    """Sampled bubble evolution: transmission plus state diagnostics."""

    t: np.ndarray
    transmission: np.ndarray
    pop_R: np.ndarray
    pop_S: np.ndarray
    trace_error: np.ndarray
    metadata: dict = field(default_factory=dict)
    states: list[BubbleState] | None = None

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")

    header = "t_us,transmission,pop_R,pop_S,trace_error"

    def rows(self):
        return zip(self.t, self.transmission, self.pop_R, self.pop_S,
                   self.trace_error)


_TRACE_ABORT = 1e-6


def evolve(params: PhysicalParams, t_end: float, dt: float = 0.5,
           nmax: int = DEFAULT_NMAX, rtol: float = 1e-8, atol: float = 1e-10,
           n_b: float | None = None, sample_times=None,
           keep_states: bool = False, initial: BubbleState | None = None,
           t0: float = 0.0) -> TimeSeries:
    """Integrate the bubble model and sample transmission and populations.

    Starts from the empty cavity with all atoms in the ground state unless
    ``initial`` is given.  The Hermitian-basis parametrization keeps rho
    exactly Hermitian; a trace drift beyond 1e-6 aborts with
    IntegrationError.
    """
    if sample_times is None:
        if t_end <= 0:
            raise ValueError("t_end must be > 0")
        nsteps = int(round(t_end / dt))
        sample_times = np.linspace(0.0, nsteps * dt, nsteps + 1)
    else:
        sample_times = np.asarray(sample_times, dtype=float)

    model = BubbleModel(params, nmax=nmax, n_b=n_b)
    if initial is None:
        y0 = model.initial_flat()
    else:
        y0 = model.initial_flat(rho0=initial.rho, a0=initial.a)

    def check_trace(t, y):
        drift = abs(y[: model.dim].sum() - 1.0)
        if drift > _TRACE_ABORT:
            raise IntegrationError(
                f"trace drift {drift:g} exceeds {_TRACE_ABORT:g} at t={t:g} us")

    samples = integrate(model.rhs_flat, t0, y0, sample_times, rtol=rtol,
                        atol=atol, sample_callback=check_trace)

    npts = sample_times.size
    trans = np.empty(npts)
    pop_r = np.empty(npts)
    pop_s = np.empty(npts)
    terr = np.empty(npts)
    states = [] if keep_states else None
    for i in range(npts):
        y = samples[i].real
        r = y[: model.nsq]
        trans[i] = model.transmission(y)
        pop_r[i] = model._w_rr @ r
        pop_s[i] = model._w_ss @ r
        terr[i] = abs(model.trace(y) - 1.0)
        if keep_states:
            states.append(model.state_from_flat(y, float(sample_times[i])))

    meta = {"params": params_to_dict(params), "nmax": nmax, "rtol": rtol,
            "n_b": model.n_b}
    return TimeSeries(sample_times, trans, pop_r, pop_s, terr,
                      metadata=meta, states=states)


@dataclass
class SteadyBubbleResult:
    transmission: float
    converged: bool
    t_final: float


def steady_transmission_bubble(params: PhysicalParams, convergence: float = 1e-3,
                               window: float = 5.0, t_max: float = 500.0,
                               nmax: int = DEFAULT_NMAX, rtol: float = 1e-8,
                               n_b: float | None = None) -> SteadyBubbleResult:
    """Evolve until the transmission change over one window is below threshold.

    Compares T(t) with T(t - window); if t_max is reached first the last
    value is returned with converged=False.
    """
    if convergence <= 0:
        raise ValueError("convergence threshold must be > 0")
    model = BubbleModel(params, nmax=nmax, n_b=n_b)
    y = model.initial_flat()
    t = 0.0
    t_prev = model.transmission(y)
    while t < t_max:
        chunk_end = min(t + window, t_max)
        samples = integrate(model.rhs_flat, t, y, [chunk_end], rtol=rtol,
                            atol=1e-10)
        y = samples[-1].real
        t = chunk_end
        t_now = model.transmission(y)
        if abs(t_now - t_prev) / max(t_now, 1e-12) < convergence:
            return SteadyBubbleResult(t_now, True, t)
        t_prev = t_now
    return SteadyBubbleResult(t_prev, False, t)
