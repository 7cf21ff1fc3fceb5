"""Exact quantum propagation across one transit window.

Two independent routes are provided on purpose.  The production route,
:func:`propagate_schrodinger` / :func:`propagate_lindblad`, hands the
right-hand side to an adaptive high-order Runge-Kutta integrator with an
embedded error estimate.  The audit route, :func:`oracle_propagate`, steps
a fixed grid and applies the exact matrix exponential of the Hamiltonian
(or Lindblad generator) frozen at each step midpoint.  The two share no
integration logic, so their agreement bounds the numerical error of
either.

The maximum step is capped (default sigma / 10) because the couplings are
dead at the window edges: an uncapped adaptive integrator would grow its
step in the flat tails and could stride over the Gaussian pulses entirely.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .hamiltonian import coupling_pair, full_parts, manifold_parts
from .model import (
    CavityPairError,
    DensityMatrix,
    FullBasis,
    ManifoldBasis,
    PureState,
    SystemParams,
)

__all__ = [
    "PropagationConfig",
    "PropagationError",
    "WrongPropagatorError",
    "TruncationWarning",
    "propagate_schrodinger",
    "propagate_lindblad",
    "oracle_propagate",
    "apply_phase_gate",
]


class PropagationError(CavityPairError):
    """The integrator failed or missed its accuracy contract."""


class WrongPropagatorError(CavityPairError):
    """The requested propagator does not cover this parameter regime."""


class TruncationWarning(UserWarning):
    """Noticeable population reached the guard photon level."""


@dataclass(frozen=True)
class PropagationConfig:
    """Adaptive-integrator settings.

    ``first_step`` and ``max_step`` default to sigma/100 and sigma/10 at
    propagation time when left as None.
    """

    rtol: float = 1e-9
    atol: float = 1e-11
    first_step: float | None = None
    max_step: float | None = None

    def __post_init__(self) -> None:
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.first_step is not None and self.first_step <= 0:
            raise ValueError("first_step must be positive")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if (self.first_step is not None and self.max_step is not None
                and self.first_step > self.max_step):
            raise ValueError("first_step cannot exceed max_step")

    def resolved(self, params: SystemParams) -> tuple[float, float, float, float]:
        mx = self.max_step if self.max_step is not None else params.sigma / 10.0
        first = self.first_step if self.first_step is not None else params.sigma / 100.0
        return self.rtol, self.atol, min(first, mx), mx


def _hamiltonian_factory(basis, params: SystemParams):
    """Return f(t) -> H(t) as a dense ndarray for either basis kind."""
    if isinstance(basis, ManifoldBasis):
        x1, x2, d = manifold_parts(basis)
    elif isinstance(basis, FullBasis):
        x1, x2, d, _ = full_parts(basis)
    else:
        raise WrongPropagatorError(f"cannot propagate on basis {basis!r}")
    det = params.detuning

    def h_of_t(t: float) -> np.ndarray:
        eta1, eta2 = coupling_pair(t, params)
        return eta1 * x1 + eta2 * x2 + det * d

    return h_of_t


def _run_ivp(rhs, t_span, y0, params, config, drive: float = 1.0):
    """Integrate with DOP853; ``drive`` < 1 pushes the solver below the
    requested tolerances so end-to-end conservation contracts hold at the
    default request level."""
    rtol, atol, first, mx = config.resolved(params)
    sol = solve_ivp(rhs, t_span, y0, method="DOP853",
                    rtol=max(drive * rtol, 1e-13), atol=drive * atol,
                    first_step=first, max_step=mx, dense_output=False)
    if not sol.success:
        raise PropagationError(f"adaptive integrator failed: {sol.message}")
    return sol.y[:, -1]


def propagate_schrodinger(state: PureState, params: SystemParams,
                          config: PropagationConfig | None = None) -> PureState:
    """Unitary propagation of a pure state across params.t_span.

    Requires gamma = 0.  The final norm must survive within 1e-9 of unity
    (an accuracy check; the result is renormalized once afterwards).
    """
    if params.gamma != 0.0:
        raise WrongPropagatorError(
            "photon decay needs the Lindblad propagator")
    config = config or PropagationConfig()
    h_of_t = _hamiltonian_factory(state.basis, params)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return -1j * (h_of_t(t) @ y)

    y0 = state.amplitudes.astype(complex)
    norm0 = np.linalg.norm(y0)
    if norm0 == 0.0:
        raise ValueError("cannot propagate the zero vector")
    y = _run_ivp(rhs, params.t_span, y0, params, config, drive=1e-3)
    drift = abs(np.linalg.norm(y) - norm0)
    if drift > 1e-9 * norm0:
        raise PropagationError(
            f"norm drifted by {drift:.2e}; tighten tolerances")
    return PureState(state.basis, y * (norm0 / np.linalg.norm(y)))


def _lindblad_rhs_factory(basis: FullBasis, params: SystemParams):
    h_of_t = _hamiltonian_factory(basis, params)
    _, _, _, a = full_parts(basis)
    n_op = a.T @ a
    gamma = params.gamma
    size = basis.size

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(size, size)
        rho = 0.5 * (rho + rho.conj().T)  # damp anti-Hermitian round-off
        h = h_of_t(t)
        d = -1j * (h @ rho - rho @ h)
        if gamma != 0.0:
            d += gamma * (a @ rho @ a.T
                          - 0.5 * (n_op @ rho + rho @ n_op))
        return d.ravel()

    return rhs


def _check_guard_level(rho_diag: np.ndarray, basis: FullBasis) -> None:
    top = slice(4 * basis.n_max, 4 * basis.n_max + 4)
    guard = float(np.sum(rho_diag[top]).real)
    if guard > 1e-6:
        warnings.warn(
            f"population {guard:.2e} reached the top photon level "
            f"m={basis.n_max}; raise n_max", TruncationWarning, stacklevel=3)


def propagate_lindblad(rho: DensityMatrix, params: SystemParams,
                       config: PropagationConfig | None = None) -> DensityMatrix:
    """Dissipative propagation of a density matrix across params.t_span.

    Cavity decay at rate gamma is the only loss channel.  The trace is
    checked (never rescaled) to 1e-8; Hermiticity is enforced by
    symmetrization.
    """
    if not isinstance(rho.basis, FullBasis):
        raise WrongPropagatorError(
            "photon decay couples excitation blocks; use a FullBasis state")
    config = config or PropagationConfig()
    rhs = _lindblad_rhs_factory(rho.basis, params)
    y0 = rho.matrix.astype(complex).ravel()
    trace0 = float(np.trace(rho.matrix).real)
    y = _run_ivp(rhs, params.t_span, y0, params, config)
    size = rho.basis.size
    out = y.reshape(size, size)
    out = 0.5 * (out + out.conj().T)
    drift = abs(np.trace(out).real - trace0)
    if drift > 1e-8 * max(1.0, abs(trace0)):
        raise PropagationError(f"trace drifted by {drift:.2e}")
    _check_guard_level(np.diag(out), rho.basis)
    return DensityMatrix(rho.basis, out)


def _liouvillian(h: np.ndarray, a: np.ndarray, n_op: np.ndarray,
                 gamma: float) -> np.ndarray:
    """Generator on row-major-flattened rho: vec(A rho B) = kron(A, B.T) vec(rho)."""
    eye = np.eye(h.shape[0])
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    if gamma != 0.0:
        gen += gamma * (np.kron(a, a.conj())
                        - 0.5 * np.kron(n_op, eye)
                        - 0.5 * np.kron(eye, n_op.T))
    return gen


def oracle_propagate(state: PureState | DensityMatrix, params: SystemParams,
                     step: float | None = None):
    """Fixed-step midpoint-exponential propagation (the audit route).

    Each step applies the exact exponential of the generator frozen at the
    step midpoint.  The step may not exceed sigma / 200.
    """
    step = params.sigma / 200.0 if step is None else step
    if step <= 0:
        raise ValueError("step must be positive")
    if step > params.sigma / 200.0:
        raise ValueError("oracle step must not exceed sigma / 200")
    t0, t1 = params.t_span
    if t1 == t0:
        return state

    n_steps = max(1, math.ceil((t1 - t0) / step))
    dt = (t1 - t0) / n_steps

    if isinstance(state, PureState):
        if params.gamma != 0.0:
            raise WrongPropagatorError(
                "photon decay needs a density matrix even on the audit route")
        h_of_t = _hamiltonian_factory(state.basis, params)
        y = state.amplitudes.astype(complex)
        for k in range(n_steps):
            mid = t0 + (k + 0.5) * dt
            y = expm(-1j * dt * h_of_t(mid)) @ y
        return PureState(state.basis, y)

    if not isinstance(state.basis, FullBasis):
        raise WrongPropagatorError(
            "photon decay couples excitation blocks; use a FullBasis state")
    h_of_t = _hamiltonian_factory(state.basis, params)
    _, _, _, a = full_parts(state.basis)
    n_op = a.T @ a
    size = state.basis.size
    y = state.matrix.astype(complex).ravel()
    for k in range(n_steps):
        mid = t0 + (k + 0.5) * dt
        gen = _liouvillian(h_of_t(mid), a, n_op, params.gamma)
        y = expm(dt * gen) @ y
    out = y.reshape(size, size)
    return DensityMatrix(state.basis, 0.5 * (out + out.conj().T))


def apply_phase_gate(state: PureState, atom: int, chi: float) -> PureState:
    """Multiply every amplitude with the given atom excited by exp(i chi)."""
    if atom not in (1, 2):
        raise ValueError("atom must be 1 or 2")
    phase = complex(math.cos(chi), math.sin(chi))
    amp = state.amplitudes.copy()
    for i, label in enumerate(state.basis.labels):
        if label[atom] == "e":
            amp[i] *= phase
    return PureState(state.basis, amp)
