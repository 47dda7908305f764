"""Entropic correlation measures and the ergotropy/correlation identities.

Every identity function evaluates both sides by separate routes: the
ergotropy side from the spectral overlap formula in
:mod:`ergokit.ergotropy`, the information side from entropies and relative
entropies computed with matrix logarithms. The returned residual is
therefore a genuine numerical cross-check rather than an algebraic echo.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ergokit import qmath
from ergokit.ergotropy import bound_ergotropy, equal_entropy_thermal, ergotropy, passive_state
from ergokit.errors import (
    BetaZero,
    DimensionMismatch,
    EntropyMismatch,
    NotApplicable,
    NotDiagonal,
    NotZeroErgotropy,
    SupportViolation,
)
from ergokit.states import Hamiltonian, effective_beta, thermal_state

SUPPORT_TOL = 1e-8
LOCAL_BETA_TOL = 1e-8


class TemperatureMismatchWarning(UserWarning):
    """Marginals are not thermal at one common inverse temperature."""


# -- entropies -------------------------------------------------------------


def von_neumann_entropy(rho) -> float:
    """``-tr(rho ln rho)`` in nats, dropping eigenvalues below ``1e-14``."""
    w = np.linalg.eigvalsh(qmath.hermitize(qmath.as_matrix(rho)))
    w = w[w > qmath.LOG_FLOOR]
    s = float(-np.sum(w * np.log(w)))
    return max(s, 0.0)


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy ``D(rho || sigma)`` in nats.

    Returns ``inf`` when more than ``1e-8`` of ``rho``'s weight lies outside
    the support of ``sigma``.
    """
    rho, sigma = qmath.as_matrix(rho), qmath.as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch("states have different dimensions")
    es = qmath.eigh(sigma)
    kernel = es.eigenvalues <= qmath.LOG_FLOOR
    if np.any(kernel):
        vk = es.eigenvectors[:, kernel]
        leak = float(np.trace(qmath.dag(vk) @ rho @ vk).real)
        if leak > SUPPORT_TOL:
            return math.inf
    v = es.eigenvectors
    log_sigma = (v * np.log(np.maximum(es.eigenvalues, qmath.LOG_FLOOR))) @ qmath.dag(v)
    cross = float(np.trace(rho @ log_sigma).real)
    return -von_neumann_entropy(rho) - cross


def mutual_information(rho, dims: Sequence[int] = (2, 2)) -> float:
    """``S(rho_A) + S(rho_B) - S(rho)`` for a bipartite state."""
    dims = _dims_of(rho, dims)
    if len(dims) != 2:
        raise DimensionMismatch("mutual_information needs exactly two factors")
    return multipartite_mutual_information(rho, dims)


def multipartite_mutual_information(rho, dims: Sequence[int]) -> float:
    dims = list(dims)
    if len(dims) < 2:
        raise DimensionMismatch("need at least two factors")
    m = qmath.as_matrix(rho)
    total = sum(von_neumann_entropy(qmath.partial_trace(m, dims, k)) for k in range(len(dims)))
    return total - von_neumann_entropy(m)


def marginals(rho, dims: Sequence[int] = (2, 2)) -> tuple[np.ndarray, np.ndarray]:
    m = qmath.as_matrix(rho)
    return qmath.partial_trace(m, dims, 0), qmath.partial_trace(m, dims, 1)


def product_of_marginals(rho, dims: Sequence[int] = (2, 2)) -> np.ndarray:
    a, b = marginals(rho, dims)
    return np.kron(a, b)


@dataclass(frozen=True)
class CorrelationMatrix:
    chi: np.ndarray


def correlation_matrix(rho, dims: Sequence[int] = (2, 2)) -> CorrelationMatrix:
    m = qmath.as_matrix(rho)
    return CorrelationMatrix(m - product_of_marginals(m, dims))


def _dims_of(rho, dims):
    own = getattr(rho, "dims", None)
    if own and len(own) > 1:
        return list(own)
    return list(dims)


# -- local temperatures ----------------------------------------------------


def local_beta(marginal, h_local) -> tuple[float, float]:
    """Fit an inverse temperature to a marginal state.

    Returns ``(beta, residual)``; the residual is the largest entrywise
    difference between the marginal and the Gibbs state at the fitted beta.
    Two-level marginals are fitted exactly from the population ratio;
    larger ones by least squares on the log populations.

    Raises:
        NotDiagonal: if the marginal has coherences in the energy basis.
    """
    m, hl = qmath.as_matrix(marginal), qmath.as_matrix(h_local)
    eh = qmath.eigh(hl)
    v = eh.eigenvectors
    rot = qmath.dag(v) @ m @ v
    off = np.max(np.abs(rot - np.diag(np.diag(rot))))
    if off > 1e-10:
        raise NotDiagonal(f"marginal has energy-basis coherence {off:.3e}")
    p = np.real(np.diag(rot))
    e = eh.eigenvalues
    if len(e) == 2:
        gap = e[1] - e[0]
        beta = effective_beta(np.diag(p), gap).beta
    else:
        if np.any(p <= qmath.LOG_FLOOR):
            raise NotApplicable("cannot fit beta to a qudit marginal with empty levels")
        slope, _ = np.polyfit(e - e[0], np.log(p), 1)
        beta = -float(slope)
    if math.isinf(beta):
        ref = np.zeros_like(p)
        ref[0 if beta > 0 else -1] = 1.0
    else:
        ref = np.exp(-beta * (e - (e[0] if beta >= 0 else e[-1])))
        ref /= ref.sum()
    return beta, float(np.max(np.abs(ref - p)))


def common_beta(rho, h: Hamiltonian, tol: float = LOCAL_BETA_TOL) -> float:
    """Shared local inverse temperature of a locally thermal bipartite state.

    Emits :class:`TemperatureMismatchWarning` when the two marginals fit
    different temperatures or are not Gibbs states at all, and then returns
    the mean of the two fits.
    """
    if len(h.local_parts) != 2:
        raise DimensionMismatch("Hamiltonian must carry two local parts")
    a, b = marginals(rho, h.dims)
    beta_a, res_a = local_beta(a, h.local_parts[0])
    beta_b, res_b = local_beta(b, h.local_parts[1])
    if beta_a == beta_b:
        beta = beta_a
    else:
        beta = 0.5 * (beta_a + beta_b)
    if max(res_a, res_b) > tol or not (
        beta_a == beta_b or abs(beta_a - beta_b) <= tol * max(1.0, abs(beta))
    ):
        warnings.warn(
            f"marginals are not thermal at a common beta (beta_A={beta_a:.6g}, beta_B={beta_b:.6g}, "
            f"fit residuals {res_a:.1e}, {res_b:.1e})",
            TemperatureMismatchWarning,
            stacklevel=2,
        )
    return beta


# -- identities -----------------------------------------------------------


@dataclass
class CorrelationReport:
    mutual_information: float
    relative_entropy_passive_to_product: float
    beta: float
    ergotropy: float
    beta_ergotropy: float
    residual: float
    ergotropy_via_identity: float | None
    identity_applicable: bool
    discord: float | None = None
    holevo: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if isinstance(v, float) and not math.isfinite(v):
                v = "inf" if v > 0 else ("-inf" if v < 0 else "nan")
            out[k] = v
        return out


def main_identity(rho, h: Hamiltonian, with_discord: bool = False) -> CorrelationReport:
    """Ergotropy of a locally thermal state from mutual information.

    Compares ``beta * E`` (spectral route) with ``I(A:B) - D(P || rho_A x rho_B)``
    (entropic route). At ``beta = 0`` the residual is still reported but
    ``E`` cannot be recovered from the entropic side, so
    ``ergotropy_via_identity`` is ``None``.
    """
    m = qmath.as_matrix(rho)
    beta = common_beta(m, h)
    dims = list(h.dims)
    info = mutual_information(m, dims)
    p, _ = passive_state(m, h.matrix)
    d_pass = relative_entropy(p, product_of_marginals(m, dims))
    e = ergotropy(m, h.matrix)
    notes = []
    applicable = math.isfinite(beta) and beta != 0.0
    if math.isinf(beta):
        notes.append("marginals are pure (beta = inf); the identity is not applicable")
        be, residual = math.nan, math.nan
    else:
        be = beta * e
        residual = abs(be - (info - d_pass))
    if beta == 0.0:
        notes.append("beta = 0: identity reads 0 = I - D; ergotropy taken from the direct route")
    elif beta < 0:
        notes.append("negative local temperature (population inversion)")
    report = CorrelationReport(
        mutual_information=info,
        relative_entropy_passive_to_product=d_pass,
        beta=beta,
        ergotropy=e,
        beta_ergotropy=be,
        residual=residual,
        ergotropy_via_identity=(info - d_pass) / beta if applicable else None,
        identity_applicable=applicable,
        notes=notes,
    )
    if with_discord and dims == [2, 2]:
        dres = discord(m)
        report.discord, report.holevo = dres.discord, dres.holevo
        report.notes.append("discord uses projective measurements on B and is an upper bound")
    return report


def equal_entropy_identity(rho1, rho2, h, beta: float, tol: float = 1e-8) -> float:
    """Residual of ``beta tr{(rho1 - rho2) h} = D(rho1||g) - D(rho2||g)``
    where ``g`` is the Gibbs state of ``h`` at ``beta``.

    Raises:
        EntropyMismatch: if the two states' entropies differ by more than ``tol``.
    """
    r1, r2, hm = qmath.as_matrix(rho1), qmath.as_matrix(rho2), qmath.as_matrix(h)
    ds = abs(von_neumann_entropy(r1) - von_neumann_entropy(r2))
    if ds > tol:
        raise EntropyMismatch(f"entropies differ by {ds:.3e}")
    gibbs = thermal_state(hm, beta)
    lhs = beta * float(np.trace((r1 - r2) @ hm).real)
    rhs = relative_entropy(r1, gibbs) - relative_entropy(r2, gibbs)
    return abs(lhs - rhs)


def inverse_landauer_check(rho, h: Hamiltonian) -> tuple[float, float]:
    """Slacks ``I - beta E`` and ``I - beta (E + E_b)``.

    Both are non-negative for locally thermal states. For ``beta >= 0`` the
    second is never larger than the first.
    """
    m = qmath.as_matrix(rho)
    beta = common_beta(m, h)
    info = mutual_information(m, h.dims)
    e = ergotropy(m, h.matrix)
    eb = bound_ergotropy(m, h.matrix)
    if math.isinf(beta):
        raise NotApplicable("pure marginals: beta is infinite")
    return info - beta * e, info - beta * (e + eb)


def bound_identity(rho, h: Hamiltonian) -> float:
    """Residual of ``beta (E + E_b) = I(A:B) - D(P_th || rho_A x rho_B)``.

    Raises:
        BetaZero: when the marginals are maximally mixed.
    """
    m = qmath.as_matrix(rho)
    beta = common_beta(m, h)
    if beta == 0.0 or math.isinf(beta):
        raise BetaZero(f"identity not applicable at beta = {beta}")
    info = mutual_information(m, h.dims)
    pth, _ = equal_entropy_thermal(m, h.matrix)
    d_th = relative_entropy(pth, product_of_marginals(m, h.dims))
    e = ergotropy(m, h.matrix)
    eb = bound_ergotropy(m, h.matrix)
    return abs(beta * (e + eb) - (info - d_th))


def bath_assisted_work(rho, h: Hamiltonian, beta: float) -> float:
    """``F(rho) - F(rho_A,beta x rho_B,beta)`` with ``F(s) = tr{h s} - S(s)/beta``."""
    m, hm = qmath.as_matrix(rho), h.matrix
    ref = qmath.tensor(*(thermal_state(p, beta) for p in h.local_parts))

    def free_energy(s):
        return float(np.trace(hm @ s).real) - von_neumann_entropy(s) / beta

    return free_energy(m) - free_energy(ref)


# -- discord ----------------------------------------------------------------


@dataclass(frozen=True)
class DiscordResult:
    discord: float
    holevo: float
    theta: float
    phi: float
    conditional_entropy: float


def _measurement_vectors(theta, phi):
    """Columns ``|n>`` and ``|n_perp>`` of the projective basis at Bloch angles."""
    theta, phi = np.asarray(theta, float), np.asarray(phi, float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    n = np.stack([c + 0j, e * s], axis=-1)
    n_perp = np.stack([-np.conj(e) * s + 0j, c + 0j], axis=-1)
    return n, n_perp


def _conditional_entropy(rho4: np.ndarray, theta, phi) -> np.ndarray:
    """``sum_b p_b S(rho_A|b)`` for a projective measurement on qubit B."""
    t = rho4.reshape(2, 2, 2, 2)  # [a, b, a', b']
    total = 0.0
    for vec in _measurement_vectors(theta, phi):
        # Unnormalised conditional state <n|_B rho |n>_B.
        sub = np.einsum("...b,abcd,...d->...ac", np.conj(vec), t, vec)
        tr = np.real(sub[..., 0, 0] + sub[..., 1, 1])
        det = np.real(sub[..., 0, 0] * sub[..., 1, 1] - sub[..., 0, 1] * sub[..., 1, 0])
        disc = np.sqrt(np.clip(tr**2 / 4 - det, 0.0, None))
        for lam in (tr / 2 + disc, tr / 2 - disc):
            safe_lam = np.where(lam > qmath.LOG_FLOOR, lam, 1.0)
            safe_tr = np.where(tr > qmath.LOG_FLOOR, tr, 1.0)
            total = total - np.where(lam > qmath.LOG_FLOOR, lam * np.log(safe_lam / safe_tr), 0.0)
    return total


def conditional_entropy_grid(rho, n_theta: int, n_phi: int):
    """Conditional entropy on a uniform grid over the half Bloch sphere.

    Returns ``(theta, phi, values)`` with ``values`` of shape
    ``(n_theta, n_phi)``; ``theta`` spans [0, pi/2] and ``phi`` [0, 2 pi).
    """
    m = qmath.as_matrix(rho)
    theta = np.linspace(0.0, np.pi / 2, n_theta)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    return theta, phi, _conditional_entropy(m, tt, pp)


def _swap_qubits(m: np.ndarray) -> np.ndarray:
    return m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def discord(rho, measured_side: str = "B", grid: int = 64, n_starts: int = 3) -> DiscordResult:
    """Two-qubit discord with projective measurements on one side.

    A ``grid x grid`` scan over measurement directions seeds Nelder-Mead
    refinements from the ``n_starts`` best points. Restricting to projective
    measurements means the reported discord is an upper bound.
    """
    m = qmath.as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionMismatch("discord is implemented for two qubits only")
    side = measured_side.upper()
    if side not in ("A", "B"):
        raise ValueError("measured_side must be 'A' or 'B'")
    if side == "A":
        m = _swap_qubits(m)
    theta, phi, vals = conditional_entropy_grid(m, grid, grid)
    flat = np.argsort(vals, axis=None, kind="stable")[:n_starts]
    best = (float(vals.flat[flat[0]]), float(theta[flat[0] // grid]), float(phi[flat[0] % grid]))

    def objective(x):
        return float(_conditional_entropy(m, x[0], x[1]))

    for idx in flat:
        x0 = np.array([theta[idx // grid], phi[idx % grid]])
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000})
        if res.fun < best[0]:
            best = (float(res.fun), float(res.x[0]), float(res.x[1]))
    cond, th, ph = best
    s_unmeasured = von_neumann_entropy(qmath.partial_trace(m, [2, 2], 0))
    info = mutual_information(m, [2, 2])
    holevo = s_unmeasured - cond
    return DiscordResult(discord=info - holevo, holevo=holevo, theta=th, phi=ph, conditional_entropy=cond)


def zero_ergotropy_condition(rho, h: Hamiltonian, tol: float = 1e-8) -> float:
    """Residual of ``discord + J = D(P || rho_A x rho_B)`` for a zero-ergotropy state.

    Raises:
        NotZeroErgotropy: if the ergotropy exceeds ``tol``.
    """
    m = qmath.as_matrix(rho)
    e = ergotropy(m, h.matrix)
    if abs(e) > tol:
        raise NotZeroErgotropy(f"ergotropy {e:.3e} exceeds {tol:.1e}")
    common_beta(m, h)
    dres = discord(m, "B")
    p, _ = passive_state(m, h.matrix)
    d_pass = relative_entropy(p, product_of_marginals(m, h.dims))
    return abs(dres.discord + dres.holevo - d_pass)


# -- arbitrary states ------------------------------------------------------


@dataclass(frozen=True)
class GeneralIdentityTerms:
    beta_ergotropy: float
    mutual_information: float
    relative_entropy_passive_gibbs: float
    chi_term: float
    relative_entropy_product_gibbs: float
    residual: float


def general_state_identity(rho, h, beta: float, dims: Sequence[int] = (2, 2)) -> GeneralIdentityTerms:
    """Decompose ``beta E`` for an arbitrary bipartite state against the
    global Gibbs state at reference ``beta``.

    ``beta E = I - D(P||g) + tr{chi (ln(rho_A x rho_B) - ln g)} + D(rho_A x rho_B || g)``
    with ``chi = rho - rho_A x rho_B`` and ``g = exp(-beta h)/Z``.

    Raises:
        SupportViolation: if a relative entropy diverges.
    """
    m, hm = qmath.as_matrix(rho), qmath.as_matrix(h)
    if beta == 0.0:
        raise BetaZero("reference beta must be non-zero")
    gibbs = thermal_state(hm, beta)
    prod = product_of_marginals(m, dims)
    chi = m - prod
    p, _ = passive_state(m, hm)
    info = mutual_information(m, dims)
    d_pg = relative_entropy(p, gibbs)
    d_prod = relative_entropy(prod, gibbs)
    if not (math.isfinite(d_pg) and math.isfinite(d_prod)):
        raise SupportViolation("relative entropy to the Gibbs reference diverges")
    chi_term = float(np.trace(chi @ (qmath.logm_psd(prod) - qmath.logm_psd(gibbs))).real)
    be = beta * ergotropy(m, hm)
    rhs = info - d_pg + chi_term + d_prod
    return GeneralIdentityTerms(be, info, d_pg, chi_term, d_prod, abs(be - rhs))
