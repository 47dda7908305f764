"""Dense Hermitian linear algebra for small quantum systems.

Everything here works on plain ``numpy`` arrays of complex dtype. Objects
carrying a ``.matrix`` attribute (``DensityMatrix``, ``Hamiltonian``) are
accepted wherever a matrix is expected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from ergokit.errors import DimensionMismatch, DomainError, NotHermitian, NotUnitary

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
LOG_FLOOR = 1e-14


def as_matrix(m) -> np.ndarray:
    m = getattr(m, "matrix", m)
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dag(m))


def hermitian_deviation(m) -> float:
    m = as_matrix(m)
    return float(np.max(np.abs(m - dag(m)), initial=0.0))


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(m)
    dev = hermitian_deviation(m)
    if dev > tol:
        raise NotHermitian(dev, tol)
    return m


def unitary_deviation(u) -> float:
    u = as_matrix(u)
    return float(np.max(np.abs(dag(u) @ u - np.eye(len(u)))))


@dataclass(frozen=True)
class HermitianEigen:
    """Eigenvalues in ascending order and the matching column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dag(v)


def fix_phases(v: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive.

    Ties in magnitude go to the lowest row index, which keeps the choice
    deterministic.
    """
    v = np.array(v, dtype=complex)
    mags = np.abs(v)
    # Round so that numerically equal magnitudes tie on the first index.
    idx = np.argmax(np.round(mags, 12), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(pivots) / pivots)


def eigh(m, tol: float = HERMITIAN_TOL) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back ascending. Eigenvector phases are fixed by
    :func:`fix_phases` so the output is reproducible.

    Raises:
        NotHermitian: if ``max |m - m^H|`` exceeds ``tol``.
    """
    m = check_hermitian(m, tol)
    w, v = np.linalg.eigh(hermitize(m))
    return HermitianEigen(w, fix_phases(v))


def tensor(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_matrix(op))
    return out


def partial_trace(m, dims: Sequence[int], keep: Sequence[int] | int) -> np.ndarray:
    """Trace out every factor of ``m`` not listed in ``keep``.

    Args:
        m: operator on the space ``dims[0] x dims[1] x ...``.
        dims: factor dimensions; their product must equal ``m``'s size.
        keep: factor index or indices to retain, in any order. The output
            keeps them in ascending order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not multiply to {m.shape[0]}")
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # Trace highest axes first so earlier axis numbers stay valid.
    for count, i in enumerate(sorted(traced, reverse=True)):
        nleft = n - count
        t = np.trace(t, axis1=i, axis2=i + nleft)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def matrix_fn(m, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    Raises:
        DomainError: if ``f`` yields a non-finite value on some eigenvalue.
    """
    e = eigh(m)
    with np.errstate(invalid="ignore", divide="ignore"):
        fw = np.asarray(f(e.eigenvalues))
    if not np.all(np.isfinite(fw)):
        raise DomainError("function undefined on part of the spectrum")
    v = e.eigenvectors
    return (v * fw) @ dag(v)


def logm_psd(m) -> np.ndarray:
    """Natural log of a PSD matrix with eigenvalues floored at ``LOG_FLOOR``."""
    return matrix_fn(m, lambda w: np.log(np.maximum(w, LOG_FLOOR)))


def sqrtm_psd(m) -> np.ndarray:
    return matrix_fn(m, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def expm_i(h, t: float = 1.0) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h``."""
    return matrix_fn(h, lambda w: np.exp(-1j * t * w))


def matrix_log_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    """Hermitian ``g`` with ``exp(i g) = u`` and eigenphases in (-pi, pi].

    A complex Schur form of a normal matrix is diagonal, which handles
    degenerate eigenphases without a separate block step.

    Raises:
        NotUnitary: if ``u^H u`` deviates from identity by more than ``tol``.
    """
    u = as_matrix(u)
    dev = unitary_deviation(u)
    if dev > tol:
        raise NotUnitary(dev, tol)
    t, z = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(t))
    phases = np.where(phases <= -np.pi + 1e-15, np.pi, phases)
    return hermitize((z * phases) @ dag(z))


def fidelity_root(rho, sigma) -> float:
    """Root fidelity ``tr sqrt(sqrt(rho) sigma sqrt(rho))``."""
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch("states have different dimensions")
    s = sqrtm_psd(rho)
    inner = hermitize(s @ sigma @ s)
    w = np.linalg.eigvalsh(inner)
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def bures_angle(rho, sigma) -> float:
    """Bures angle ``arccos F`` with ``F`` the root fidelity, in [0, pi/2]."""
    f = fidelity_root(rho, sigma)
    return float(np.arccos(np.clip(f, 0.0, 1.0)))


def trace_distance(rho, sigma) -> float:
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch("states have different dimensions")
    w = np.linalg.eigvalsh(hermitize(rho - sigma))
    return float(0.5 * np.sum(np.abs(w)))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
