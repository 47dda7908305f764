"""Two qubits coupled to a common thermal photon bath.

Basis ordering is ``|q1 q2>`` with ``|g> = 0`` and ``|e> = 1``, so index 0
is ``|gg>`` and index 3 is ``|ee>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ergokit import qmath
from ergokit.errors import StepTooLarge, ValidationError
from ergokit.states import DensityMatrix, thermal_state

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
_I2 = np.eye(2, dtype=complex)

SP = (np.kron(SIGMA_PLUS, _I2), np.kron(_I2, SIGMA_PLUS))
SM = (np.kron(SIGMA_MINUS, _I2), np.kron(_I2, SIGMA_MINUS))

_S = 1 / math.sqrt(2)
PSI_GG = np.array([1, 0, 0, 0], dtype=complex)
PSI_EE = np.array([0, 0, 0, 1], dtype=complex)
PSI_PLUS = np.array([0, _S, _S, 0], dtype=complex)
PSI_MINUS = np.array([0, _S, -_S, 0], dtype=complex)


def _proj(v):
    return np.outer(v, v.conj())


def bose_occupation(beta_e: float, omega: float) -> float:
    return 1.0 / math.expm1(beta_e * omega)


@dataclass(frozen=True)
class DissipationParams:
    """Bath and coupling parameters (hbar = k_B = 1).

    The default is the collective limit ``gamma_11 = gamma_22 = gamma_12 = 1``
    with dipole coupling ``f = 0.1``.
    """

    beta_e: float = 1.0
    omega: float = 1.0
    f: float = 0.1
    gamma: np.ndarray = field(default_factory=lambda: np.ones((2, 2)))

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.shape != (2, 2):
            raise ValidationError("gamma must be 2x2")
        if not np.allclose(g, g.T, atol=1e-14):
            raise ValidationError("gamma must be symmetric")
        if np.any(np.diag(g) < 0):
            raise ValidationError("decay rates gamma_ii must be >= 0")
        if g[0, 1] ** 2 > g[0, 0] * g[1, 1] + 1e-12:
            raise ValidationError("gamma_12^2 > gamma_11 gamma_22: not positive semidefinite")
        if not self.beta_e > 0:
            raise ValidationError("beta_e must be positive")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def collective(cls, beta_e: float, omega: float = 1.0, gamma: float = 1.0, f: float | None = None):
        f = 0.1 * gamma if f is None else f
        return cls(beta_e, omega, f, np.full((2, 2), gamma))

    @classmethod
    def independent(cls, beta_e: float, omega: float = 1.0, gamma: float = 1.0, f: float = 0.0):
        return cls(beta_e, omega, f, np.diag([gamma, gamma]))

    @property
    def nbar(self) -> float:
        return bose_occupation(self.beta_e, self.omega)

    @property
    def gamma_max(self) -> float:
        return float(np.max(np.diag(self.gamma)))

    def max_dt(self) -> float:
        return 0.05 / max(self.gamma_max * (self.nbar + 1), self.omega, abs(self.f))


def system_hamiltonian(omega: float = 1.0) -> np.ndarray:
    """``omega (s1+ s1- + s2+ s2-)``."""
    return omega * (SP[0] @ SM[0] + SP[1] @ SM[1])


def dipole_hamiltonian(f: float) -> np.ndarray:
    return f * (SP[0] @ SM[1] + SP[1] @ SM[0])


def liouvillian_apply(rho, p: DissipationParams) -> np.ndarray:
    """Right-hand side of the collective master equation at ``rho``."""
    m = qmath.as_matrix(rho)
    h = system_hamiltonian(p.omega) + dipole_hamiltonian(p.f)
    out = -1j * (h @ m - m @ h)
    nbar = p.nbar
    for i in range(2):
        for j in range(2):
            g = p.gamma[i, j]
            if g == 0.0:
                continue
            # Emission
            a = SM[j] @ m @ SP[i]
            k = SP[i] @ SM[j]
            out += g * (nbar + 1) * (a - 0.5 * (k @ m + m @ k))
            # Absorption
            a = SP[j] @ m @ SM[i]
            k = SM[i] @ SP[j]
            out += g * nbar * (a - 0.5 * (k @ m + m @ k))
    return out


def liouvillian_matrix(p: DissipationParams) -> np.ndarray:
    """16 x 16 superoperator acting on row-major vectorised density matrices."""
    cols = []
    for k in range(16):
        e = np.zeros(16, dtype=complex)
        e[k] = 1.0
        cols.append(liouvillian_apply(e.reshape(4, 4), p).reshape(-1))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: list[np.ndarray]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _rk4_step_matrix(lv: np.ndarray, dt: float) -> np.ndarray:
    # Classical RK4 applied to the linear system d/dt v = L v.
    a = dt * lv
    a2 = a @ a
    a3 = a2 @ a
    return np.eye(len(lv)) + a + a2 / 2 + a3 / 6 + a3 @ a / 24


def evolve(rho0, p: DissipationParams, t_final: float, dt: float | None = None,
           sample_dt: float = 1.0) -> Trajectory:
    """Integrate the master equation with fixed-step RK4.

    States are recorded every ``sample_dt`` (rounded to whole steps) and at
    ``t_final``. Each recorded state is checked for positivity.

    Raises:
        StepTooLarge: if ``dt`` exceeds the stability bound or a recorded
            state has an eigenvalue below ``-1e-9``.
    """
    bound = p.max_dt()
    if dt is None:
        dt = bound
    if dt > bound * (1 + 1e-12):
        raise StepTooLarge(f"dt = {dt:.3e} exceeds the stability bound", bound)
    m0 = qmath.as_matrix(rho0)
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    dt = t_final / n_steps
    per_sample = max(1, min(n_steps, round(sample_dt / dt)))
    step = _rk4_step_matrix(liouvillian_matrix(p), dt)
    block = np.linalg.matrix_power(step, per_sample)

    v = m0.reshape(-1).copy()
    times, out = [0.0], [m0.copy()]
    done = 0
    while done < n_steps:
        k = min(per_sample, n_steps - done)
        v = (block if k == per_sample else np.linalg.matrix_power(step, k)) @ v
        done += k
        m = qmath.hermitize(v.reshape(4, 4))
        wmin = float(np.linalg.eigvalsh(m)[0])
        if wmin < -1e-9:
            raise StepTooLarge(f"negative eigenvalue {wmin:.3e} at t = {done * dt:.4g}", dt / 2)
        v = m.reshape(-1)
        times.append(done * dt)
        out.append(m)
    return Trajectory(np.array(times), out)


def relax(rho0, p: DissipationParams, window: float | None = None, tol: float = 1e-10,
          max_time: float = 1e4, dt: float | None = None) -> tuple[np.ndarray, float]:
    """Evolve until two states a ``window`` apart are within ``tol`` in trace distance.

    ``window`` defaults to ``10 / gamma``. Returns the final state and time.
    """
    window = 10.0 / p.gamma_max if window is None else window
    state = qmath.as_matrix(rho0)
    t = 0.0
    while t < max_time:
        nxt = evolve(state, p, window, dt=dt, sample_dt=window).final
        t += window
        if qmath.trace_distance(state, nxt) <= tol:
            return nxt, t
        state = nxt
    return state, t


def steady_state(c: float, beta_e: float, omega: float = 1.0) -> DensityMatrix:
    """Collective-limit steady state for triplet weight ``c``.

    ``(1 - c)|psi-><psi-| + c (e^{-2x}|ee><ee| + e^{-x}|psi+><psi+| + |gg><gg|)/Z+``
    with ``x = beta_e omega``.
    """
    if not 0.0 <= c <= 1.0:
        raise ValidationError("c must lie in [0, 1]")
    x = beta_e * omega
    w = np.array([1.0, math.exp(-x), math.exp(-2 * x)])
    w /= w.sum()
    m = (1 - c) * _proj(PSI_MINUS) + c * (w[0] * _proj(PSI_GG) + w[1] * _proj(PSI_PLUS) + w[2] * _proj(PSI_EE))
    return DensityMatrix(m, (2, 2))


def c_parameter(rho0) -> float:
    """Weight of ``rho0`` on the symmetric (triplet) subspace."""
    m = qmath.as_matrix(rho0)
    c = sum(float(np.real(v.conj() @ m @ v)) for v in (PSI_GG, PSI_EE, PSI_PLUS))
    return min(max(c, 0.0), 1.0)


def thermal_c(beta_e: float, omega: float = 1.0) -> float:
    """Triplet weight of the two-qubit Gibbs state at ``beta_e``."""
    if not beta_e > 0:
        raise ValidationError("beta_e must be positive")
    q = math.exp(-beta_e * omega)
    return (1 + q + q * q) / (1 + q) ** 2


def local_beta_formula(c: float, beta_e: float, omega: float = 1.0) -> float:
    """Local inverse temperature of either qubit in the steady state."""
    x = beta_e * omega
    # Divided through by cosh x; 1 - tanh x is written out to avoid cancellation.
    q = math.exp(-2 * x)
    sech = 2 * math.exp(-x) / (1 + q)
    tanh = (1 - q) / (1 + q)
    one_minus_tanh = 2 * q / (1 + q)
    num = sech + 2 + 2 * c * tanh
    den = sech + 2 * ((1 - c) + c * one_minus_tanh)
    return math.log(num / den) / omega


def gibbs_state(beta_e: float, omega: float = 1.0) -> np.ndarray:
    return thermal_state(system_hamiltonian(omega), beta_e)


SWEEP_COLUMNS = (
    "c",
    "beta_e",
    "ergotropy",
    "bound_ergotropy",
    "total_ergotropy",
    "mutual_info_over_beta",
    "local_beta",
)


def sweep_row(c: float, beta_e: float, omega: float = 1.0) -> dict:
    """Ergotropy and correlation figures of merit for one steady state.

    ``mutual_info_over_beta`` is ``I / beta`` with beta fitted to the
    marginal. Where ``|beta| <= 1e-6`` the ratio is reported as ``0`` if the
    mutual information vanishes and ``inf`` otherwise.
    """
    from ergokit.correlations import local_beta, mutual_information
    from ergokit.ergotropy import bound_ergotropy, ergotropy
    from ergokit.states import qubit_hamiltonian, two_qubit_hamiltonian

    rho = steady_state(c, beta_e, omega)
    h = two_qubit_hamiltonian(omega).matrix
    e = ergotropy(rho, h)
    eb = bound_ergotropy(rho, h)
    beta, _ = local_beta(rho.ptrace(0).matrix, qubit_hamiltonian(omega))
    info = mutual_information(rho, (2, 2))
    if abs(beta) > 1e-6:
        ratio = info / beta
    else:
        ratio = 0.0 if info <= 1e-12 else math.inf
    return {
        "c": c,
        "beta_e": beta_e,
        "ergotropy": e,
        "bound_ergotropy": eb,
        "total_ergotropy": e + eb,
        "mutual_info_over_beta": ratio,
        "local_beta": beta,
    }
