"""Cyclic work-extraction protocols, speed limits and the power bound.

A protocol drives ``H + Gamma(t)`` with
``Gamma(t) = phi'(t) exp(-iHt) Lambda exp(iHt)``. In the interaction
picture the propagator is ``exp(-i Lambda phi(t))``, so the exact
Schrödinger propagator ``exp(-iHt) exp(-i Lambda phi(t))`` is available in
closed form. :func:`evolve_driven` ignores it and integrates numerically;
the quadrature-based functions use it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from ergokit import qmath
from ergokit.correlations import common_beta, mutual_information
from ergokit.ergotropy import ergotropy, passive_state
from ergokit.errors import (
    NegativeSpectrum,
    NotApplicable,
    PassiveInput,
    UnitarityLoss,
    ValidationError,
    ZeroVariance,
)
from ergokit.states import Hamiltonian

SCHEDULES = ("smoothstep", "sine")


def schedule_values(name: str, t, tau: float):
    """``(phi(t), phi'(t))`` for a named schedule with phi(0) = 0, phi(tau) = tau."""
    t = np.asarray(t, dtype=float)
    s = t / tau
    if name == "smoothstep":
        return tau * (3 * s**2 - 2 * s**3), 6 * s * (1 - s)
    if name == "sine":
        return tau * np.sin(0.5 * np.pi * s) ** 2, 0.5 * np.pi * np.sin(np.pi * s)
    raise ValueError(f"unknown schedule {name!r}; choose from {SCHEDULES}")


@dataclass(frozen=True)
class ExtractionProtocol:
    tau: float
    lambda_op: np.ndarray
    h_self: np.ndarray
    target_unitary: np.ndarray
    schedule: str = "smoothstep"

    def __post_init__(self):
        e = qmath.eigh(self.h_self)
        v = e.eigenvectors
        # Cached energy basis: Gamma(t) needs exp(-iHt) at every RK4 stage.
        object.__setattr__(self, "_energies", e.eigenvalues)
        object.__setattr__(self, "_vecs", v)
        object.__setattr__(self, "_lambda_eb", qmath.dag(v) @ self.lambda_op @ v)
        el = qmath.eigh(self.lambda_op)
        object.__setattr__(self, "_lambda_eig", (el.eigenvalues, el.eigenvectors))

    def phi(self, t):
        return schedule_values(self.schedule, t, self.tau)[0]

    def phidot(self, t):
        return schedule_values(self.schedule, t, self.tau)[1]

    def potential(self, t: float) -> np.ndarray:
        """``Gamma(t)``."""
        ph = np.exp(-1j * self._energies * t)
        inner = (ph[:, None] * self._lambda_eb) * ph.conj()[None, :]
        return float(self.phidot(t)) * (self._vecs @ inner @ qmath.dag(self._vecs))

    def hamiltonian(self, t: float) -> np.ndarray:
        return self.h_self + self.potential(t)

    def exact_propagator(self, t: float) -> np.ndarray:
        v, (lw, lv) = self._vecs, self._lambda_eig
        free = (v * np.exp(-1j * self._energies * t)) @ qmath.dag(v)
        drive = (lv * np.exp(-1j * lw * float(self.phi(t)))) @ qmath.dag(lv)
        return free @ drive


def build_protocol(rho, h, tau: float, schedule: str = "smoothstep") -> ExtractionProtocol:
    """Protocol that takes ``rho`` to its passive state in time ``tau``.

    ``Lambda`` solves ``exp(iH tau) U = exp(-i Lambda tau)`` on the principal
    branch, where ``U`` is the passive-state unitary. An input that is already
    passive gets ``U = exp(-iH tau)`` and hence ``Lambda = 0``.
    """
    if not tau > 0:
        raise ValidationError("tau must be positive")
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}")
    m, hm = qmath.as_matrix(rho), qmath.as_matrix(h)
    p, u = passive_state(m, hm)
    if qmath.trace_distance(m, p) <= 1e-12:
        u = qmath.expm_i(hm, tau)
        lam = np.zeros_like(hm)
    else:
        g = qmath.matrix_log_unitary(qmath.expm_i(hm, -tau) @ u)
        lam = -g / tau
    return ExtractionProtocol(tau, lam, hm, u, schedule)


@dataclass
class DrivenResult:
    final_state: np.ndarray
    work: float
    times: np.ndarray
    states: list[np.ndarray] = field(repr=False)
    max_unitarity_error: float = 0.0


def _polar_unitary(u: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(u)
    return w @ vh


def evolve_driven(rho, protocol: ExtractionProtocol, n_steps: int = 2000, n_samples: int = 100) -> DrivenResult:
    """RK4 integration of the propagator under ``H + Gamma(t)``.

    The propagator is projected back onto the unitary group after every
    step. Work is the drop in self-energy ``tr{H rho} - tr{H rho(tau)}``.

    Raises:
        UnitarityLoss: if a step departs from unitarity by more than ``1e-6``.
    """
    if n_steps < 1000:
        raise ValidationError("n_steps must be at least 1000")
    m = qmath.as_matrix(rho)
    tau = protocol.tau
    dt = tau / n_steps
    u = np.eye(len(m), dtype=complex)
    sample_every = max(1, n_steps // n_samples)
    times, states = [0.0], [m.copy()]
    worst = 0.0

    def rhs(t, x):
        return -1j * protocol.hamiltonian(t) @ x

    for k in range(n_steps):
        t = k * dt
        k1 = rhs(t, u)
        k2 = rhs(t + dt / 2, u + dt / 2 * k1)
        k3 = rhs(t + dt / 2, u + dt / 2 * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        dev = qmath.unitary_deviation(u)
        worst = max(worst, dev)
        if dev > 1e-6:
            raise UnitarityLoss(f"propagator lost unitarity ({dev:.2e}) at t = {t + dt:.4g}")
        u = _polar_unitary(u)
        if (k + 1) % sample_every == 0 or k + 1 == n_steps:
            times.append((k + 1) * dt)
            states.append(u @ m @ qmath.dag(u))
    final = qmath.hermitize(states[-1])
    hm = protocol.h_self
    work = float(np.trace(hm @ m).real - np.trace(hm @ final).real)
    return DrivenResult(final, work, np.array(times), states, worst)


def _grid(tau: float, n: int) -> np.ndarray:
    if n < 200:
        raise ValidationError("need at least 200 quadrature points")
    if n % 2 == 0:
        n += 1  # Simpson wants an even number of intervals
    return np.linspace(0.0, tau, n)


@dataclass
class _Samples:
    t: np.ndarray
    h_mean: np.ndarray
    h2_mean: np.ndarray
    gamma_mean: np.ndarray
    h_norm: np.ndarray


def _sample(rho, protocol: ExtractionProtocol, n: int, h_self: np.ndarray | None = None) -> _Samples:
    m = qmath.as_matrix(rho)
    h_self = protocol.h_self if h_self is None else h_self
    t = _grid(protocol.tau, n)
    hm, h2, gm, hn = [], [], [], []
    for tk in t:
        u = protocol.exact_propagator(tk)
        rt = u @ m @ qmath.dag(u)
        g = protocol.potential(tk)
        ht = h_self + g
        hm.append(np.trace(rt @ ht).real)
        h2.append(np.trace(rt @ ht @ ht).real)
        gm.append(np.trace(rt @ g).real)
        hn.append(math.sqrt(max(np.trace(ht @ ht).real, 0.0)))
    return _Samples(t, np.array(hm), np.array(h2), np.array(gm), np.array(hn))


def _time_avg(values: np.ndarray, t: np.ndarray) -> float:
    return float(simpson(values, x=t) / (t[-1] - t[0]))


def time_avg_variance(rho, protocol: ExtractionProtocol, quadrature_points: int = 401) -> float:
    """Time average of the energy standard deviation along the driven path."""
    s = _sample(rho, protocol, quadrature_points)
    return _time_avg(np.sqrt(np.clip(s.h2_mean - s.h_mean**2, 0.0, None)), s.t)


@dataclass(frozen=True)
class QSLResult:
    qsl_time: float
    tau: float
    margin: float
    bures: float
    delta_e: float


def qsl_check(rho, protocol: ExtractionProtocol, quadrature_points: int = 401) -> QSLResult:
    """Mandelstam-Tamm type check ``tau >= L(rho, P) / Delta E``.

    Raises:
        ZeroVariance: if the energy spread vanishes while ``L > 0``.
    """
    p, _ = passive_state(rho, protocol.h_self)
    angle = qmath.bures_angle(rho, p)
    de = time_avg_variance(rho, protocol, quadrature_points)
    if angle <= 1e-12 or qmath.trace_distance(rho, p) <= 1e-12:
        return QSLResult(0.0, protocol.tau, protocol.tau, angle, de)
    if de <= 1e-12:
        raise ZeroVariance(f"Delta E = {de:.2e} with Bures angle {angle:.3e}: speed limit unbounded")
    q = angle / de
    return QSLResult(q, protocol.tau, protocol.tau - q, angle, de)


@dataclass
class ChainReport:
    """Every quantity in the bound on the time-averaged energy spread."""

    omega_cap: float
    energy_shift: float
    trace_h: float
    delta_e: float
    sqrt_bound: float
    cauchy_schwarz_bound: float
    potential_bound: float
    gamma_time_avg: float
    lambda_expect0: float
    final_bound: float

    @property
    def links(self) -> dict[str, float]:
        """Slack of each inequality (non-negative when it holds)."""
        return {
            "variance<=sqrt": self.sqrt_bound - self.delta_e,
            "sqrt<=cauchy_schwarz": self.cauchy_schwarz_bound - self.sqrt_bound,
            "cauchy_schwarz<=potential": self.potential_bound - self.cauchy_schwarz_bound,
            "variance<=final": self.final_bound - self.delta_e,
        }

    @property
    def identity_residual(self) -> float:
        return abs(self.gamma_time_avg - self.lambda_expect0)

    @property
    def g_value(self) -> float:
        return min(self.omega_cap, self.final_bound)


def energy_spread_chain(rho, protocol: ExtractionProtocol, quadrature_points: int = 401,
                   allow_shift: bool = True, omega_cap: float | None = None) -> ChainReport:
    """Evaluate the chain of upper bounds on the time-averaged energy spread.

    The self-Hamiltonian must have a non-negative spectrum; with
    ``allow_shift`` it is shifted by its lowest eigenvalue instead, which
    leaves the spread unchanged. ``omega_cap`` may raise, but not lower, the
    bandwidth bound found on the quadrature grid.

    Raises:
        NegativeSpectrum: if the spectrum is negative and shifting is disabled.
    """
    m = qmath.as_matrix(rho)
    h = protocol.h_self
    emin = float(np.linalg.eigvalsh(h)[0])
    shift = 0.0
    if emin < 0:
        if not allow_shift:
            raise NegativeSpectrum(f"self-Hamiltonian has eigenvalue {emin:.3e} < 0")
        shift = emin
    hs = h - shift * np.eye(len(h))
    s = _sample(m, protocol, quadrature_points, h_self=hs)
    tau = s.t[-1]
    omega = float(np.max(s.h_norm))
    if omega_cap is not None:
        if omega_cap < omega - 1e-12:
            raise ValidationError(f"omega_cap {omega_cap} is below the bandwidth {omega:.6g}")
        omega = float(omega_cap)
    tr_h = float(np.trace(hs).real)
    spread = np.sqrt(np.clip(s.h2_mean - s.h_mean**2, 0.0, None))
    delta_e = _time_avg(spread, s.t)
    sqrt_bound = _time_avg(np.sqrt(np.clip(omega**2 - s.h_mean**2, 0.0, None)), s.t)
    lo = simpson(omega - s.h_mean, x=s.t)
    hi = simpson(omega + s.h_mean, x=s.t)
    cs_bound = math.sqrt(max(lo, 0.0)) * math.sqrt(max(hi, 0.0)) / tau
    g_avg = _time_avg(s.gamma_mean, s.t)
    pot_bound = math.sqrt(max(omega - g_avg, 0.0)) * math.sqrt(max(omega + g_avg + tr_h, 0.0))
    lam0 = float(np.trace(m @ protocol.lambda_op).real)
    final = math.sqrt(max((omega + lam0 + tr_h) * (omega - lam0), 0.0))
    return ChainReport(omega, shift, tr_h, delta_e, sqrt_bound, cs_bound, pot_bound, g_avg, lam0, final)


@dataclass
class PowerBoundReport:
    omega_cap: float
    lambda_expect0: float
    trace_h: float
    g_value: float
    bures: float
    delta_e_tau: float
    qsl_time: float
    avg_power: float
    power_bound: float
    tau: float
    beta: float
    mutual_information: float
    ergotropy: float
    g_value_2tau: float | None = None
    lambda_expect0_2tau: float | None = None

    @property
    def holds(self) -> bool:
        return self.avg_power <= self.power_bound + 1e-9 and self.tau >= self.qsl_time - 1e-9

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["holds"] = self.holds
        return out


def power_bound(rho, protocol: ExtractionProtocol, h: Hamiltonian, quadrature_points: int = 401,
                check_tau_dependence: bool = True, omega_cap: float | None = None) -> PowerBoundReport:
    """Average extracted power against ``I G / (beta L)``.

    ``G = min(Omega, sqrt((Omega + <Lambda>_0 + tr H)(Omega - <Lambda>_0)))``.
    With ``check_tau_dependence`` the protocol is rebuilt at ``2 tau`` and the
    resulting ``G`` and ``<Lambda>_0`` are stored for comparison.

    Raises:
        PassiveInput: if ``rho`` is (numerically) passive so ``L = 0``.
        NotApplicable: if the local inverse temperature is not positive.
    """
    m = qmath.as_matrix(rho)
    p, _ = passive_state(m, h.matrix)
    angle = qmath.bures_angle(m, p)
    # arccos amplifies rounding in F to ~1e-8 in L, so exact passivity is
    # detected on the trace distance instead.
    if angle <= 1e-10 or qmath.trace_distance(m, p) <= 1e-12:
        raise PassiveInput("state is passive: Bures angle to its passive state is zero, bound is vacuous")
    beta = common_beta(m, h)
    if not (beta > 0 and math.isfinite(beta)):
        raise NotApplicable(f"power bound needs a positive finite local beta, got {beta}")
    info = mutual_information(m, h.dims)
    chain = energy_spread_chain(m, protocol, quadrature_points, omega_cap=omega_cap)
    e = ergotropy(m, h.matrix)
    g = chain.g_value
    report = PowerBoundReport(
        omega_cap=chain.omega_cap,
        lambda_expect0=chain.lambda_expect0,
        trace_h=chain.trace_h,
        g_value=g,
        bures=angle,
        delta_e_tau=chain.delta_e,
        qsl_time=angle / chain.delta_e if chain.delta_e > 0 else math.inf,
        avg_power=e / protocol.tau,
        power_bound=info * g / (beta * angle),
        tau=protocol.tau,
        beta=beta,
        mutual_information=info,
        ergotropy=e,
    )
    if check_tau_dependence:
        other = build_protocol(m, h.matrix, 2 * protocol.tau, protocol.schedule)
        chain2 = energy_spread_chain(m, other, quadrature_points)
        report.g_value_2tau = chain2.g_value
        report.lambda_expect0_2tau = chain2.lambda_expect0
    return report
