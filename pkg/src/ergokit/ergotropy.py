"""Passive states, ergotropy, bound ergotropy and complete passivity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ergokit import qmath
from ergokit.errors import DegenerateHamiltonian, DimensionMismatch
from ergokit.states import ground_projector, thermal_state

ENTROPY_TOL = 1e-12
BETA_START = 64.0
BETA_MAX = 2.0**20
MAX_BISECT = 200


@dataclass(frozen=True)
class SpectralData:
    """Energies ascending, populations descending, with their eigenvectors."""

    energies: np.ndarray
    populations: np.ndarray
    energy_vectors: np.ndarray
    population_vectors: np.ndarray


@dataclass(frozen=True)
class ErgotropyReport:
    ergotropy: float
    bound_ergotropy: float
    passive_state: np.ndarray
    equal_entropy_beta: float
    optimal_unitary: np.ndarray

    def to_json(self) -> dict:
        return {
            "ergotropy": self.ergotropy,
            "bound_ergotropy": self.bound_ergotropy,
            "total_ergotropy": self.ergotropy + self.bound_ergotropy,
            "equal_entropy_beta": _json_float(self.equal_entropy_beta),
            "passive_state_diag": np.real(np.diag(self.passive_state)).tolist(),
        }


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def spectral_data(rho, h) -> SpectralData:
    rho, hm = qmath.as_matrix(rho), qmath.as_matrix(h)
    if rho.shape != hm.shape:
        raise DimensionMismatch(f"state is {rho.shape}, Hamiltonian is {hm.shape}")
    er, eh = qmath.eigh(rho), qmath.eigh(hm)
    # eigh is ascending; a stable sort on -r keeps the original index as tie-break.
    order = np.argsort(-er.eigenvalues, kind="stable")
    return SpectralData(
        energies=eh.eigenvalues,
        populations=np.clip(er.eigenvalues[order], 0.0, None),
        energy_vectors=eh.eigenvectors,
        population_vectors=er.eigenvectors[:, order],
    )


def passive_state(rho, h) -> tuple[np.ndarray, np.ndarray]:
    """Passive state of ``rho`` for ``h`` and the unitary that reaches it.

    Returns:
        ``(P, U)`` where ``P = sum_k r_k |e_k><e_k|`` and
        ``U = sum_k |e_k><r_k|`` so that ``U rho U^H = P``.
    """
    sd = spectral_data(rho, h)
    ve, vr = sd.energy_vectors, sd.population_vectors
    p = (ve * sd.populations) @ qmath.dag(ve)
    u = ve @ qmath.dag(vr)
    return p, u


def ergotropy(rho, h) -> float:
    """Maximum work extractable from ``rho`` by a cyclic unitary.

    Evaluated from the overlap formula
    ``sum_ij r_j e_i (|<r_j|e_i>|^2 - delta_ij)``.
    """
    sd = spectral_data(rho, h)
    overlaps = np.abs(qmath.dag(sd.population_vectors) @ sd.energy_vectors) ** 2  # [j, i]
    r, e = sd.populations, sd.energies
    value = float(r @ overlaps @ e - r @ e)
    return max(value, 0.0) if value > -1e-10 else value


def ergotropy_trace(rho, h) -> float:
    """Ergotropy as ``tr{h (rho - P)}``; used as a cross-check of :func:`ergotropy`."""
    p, _ = passive_state(rho, h)
    hm = qmath.as_matrix(h)
    return float(np.trace(hm @ (qmath.as_matrix(rho) - p)).real)


def entropy_from_populations(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > qmath.LOG_FLOOR]
    return float(-np.sum(p * np.log(p)))


def _thermal_populations(energies: np.ndarray, beta: float) -> np.ndarray:
    ref = energies[0] if beta >= 0 else energies[-1]
    p = np.exp(-beta * (energies - ref))
    return p / p.sum()


def equal_entropy_thermal(rho, h, allow_negative: bool = False) -> tuple[np.ndarray, float]:
    """Thermal state of ``h`` with the same entropy as ``rho``.

    The search runs over ``beta >= 0`` (the minimum-energy branch) unless
    ``allow_negative`` is set, in which case the maximum-energy branch
    ``beta <= 0`` is used instead. A ``beta`` of ``inf`` means the target
    entropy is at or below that of the ground eigenspace.

    Raises:
        DegenerateHamiltonian: if ``h`` is proportional to the identity.
    """
    hm = qmath.as_matrix(h)
    energies = qmath.eigh(hm).eigenvalues
    if energies[-1] - energies[0] <= 1e-12 * max(1.0, abs(energies[0])):
        raise DegenerateHamiltonian("Hamiltonian is proportional to identity; entropy does not fix beta")
    d = len(energies)
    target = entropy_from_populations(np.linalg.eigvalsh(qmath.hermitize(qmath.as_matrix(rho))))
    sign = -1.0 if allow_negative else 1.0

    if target >= math.log(d) - ENTROPY_TOL:
        return thermal_state(hm, 0.0), 0.0
    # Entropy reached in the beta -> +/-inf limit: log of the extreme eigenspace size.
    edge = energies[0] if sign > 0 else energies[-1]
    g = int(np.sum(np.abs(energies - edge) <= 1e-12))
    if target <= math.log(g) + ENTROPY_TOL:
        limit = ground_projector(hm) if sign > 0 else ground_projector(-hm)
        return limit, sign * math.inf

    def s_of(b):
        return entropy_from_populations(_thermal_populations(energies, sign * b))

    lo, hi = 0.0, BETA_START
    while s_of(hi) > target:
        lo, hi = hi, 2 * hi
        if hi > BETA_MAX:
            limit = ground_projector(hm) if sign > 0 else ground_projector(-hm)
            return limit, sign * math.inf
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if s_of(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, hi):
            break
    beta = sign * 0.5 * (lo + hi)
    return thermal_state(hm, beta), beta


def bound_ergotropy(rho, h) -> float:
    """Energy gap ``tr{(P - P_th) h}`` between the passive state and the
    equal-entropy thermal state."""
    p, _ = passive_state(rho, h)
    pth, _ = equal_entropy_thermal(rho, h)
    hm = qmath.as_matrix(h)
    value = float(np.trace(hm @ (p - pth)).real)
    return max(value, 0.0) if value > -1e-10 else value


def global_ergotropy(rho, h, n_copies: int = 1) -> float:
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    return n_copies * (ergotropy(rho, h) + bound_ergotropy(rho, h))


def ergotropy_report(rho, h) -> ErgotropyReport:
    p, u = passive_state(rho, h)
    _, beta_th = equal_entropy_thermal(rho, h)
    return ErgotropyReport(
        ergotropy=ergotropy(rho, h),
        bound_ergotropy=bound_ergotropy(rho, h),
        passive_state=p,
        equal_entropy_beta=beta_th,
        optimal_unitary=u,
    )


def is_completely_passive(rho, h, tol: float = 1e-9) -> tuple[bool, dict]:
    """Whether ``rho`` is a Gibbs state of ``h`` (possibly at infinite beta).

    The decision uses ergotropy and bound ergotropy, which both vanish
    exactly on thermal states. The diagnostic also reports the commutator
    norm and, when all populations are positive, the spread of the
    log-population gaps per unit energy.
    """
    rm, hm = qmath.as_matrix(rho), qmath.as_matrix(h)
    comm = float(np.max(np.abs(rm @ hm - hm @ rm)))
    e = ergotropy(rm, hm)
    eb = bound_ergotropy(rm, hm)
    diag = {"commutator": comm, "ergotropy": e, "bound_ergotropy": eb}
    sd = spectral_data(rm, hm)
    if np.all(sd.populations > qmath.LOG_FLOOR):
        de = np.diff(sd.energies)
        nz = de > 1e-12
        if np.any(nz):
            slopes = -np.diff(np.log(sd.populations))[nz] / de[nz]
            diag["log_population_slopes"] = slopes.tolist()
    ok = comm <= tol and e <= tol and eb <= tol
    return ok, diag
