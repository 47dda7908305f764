"""State and Hamiltonian types, thermal and X-state constructors, samplers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ergokit import qmath
from ergokit.errors import (
    DimensionMismatch,
    NotDiagonal,
    PositivityViolation,
    ValidationError,
)

STATE_TOL = 1e-10
POP_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix with its tensor-factor dimensions."""

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = qmath.as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if int(np.prod(dims)) != m.shape[0]:
            raise DimensionMismatch(f"dims {dims} do not match matrix size {m.shape[0]}")
        problems = validate_density(m)
        if problems:
            raise ValidationError("invalid density matrix: " + "; ".join(problems))
        m = qmath.hermitize(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def ptrace(self, keep) -> "DensityMatrix":
        keep_list = [keep] if isinstance(keep, int) else sorted(keep)
        sub = qmath.partial_trace(self.matrix, self.dims, keep_list)
        return DensityMatrix(sub, tuple(self.dims[k] for k in keep_list))

    def to_json(self) -> dict:
        flat = self.matrix.reshape(-1)
        return {"dims": list(self.dims), "re": flat.real.tolist(), "im": flat.imag.tolist()}


def validate_density(m: np.ndarray, tol: float = STATE_TOL) -> list[str]:
    """Return a list of human-readable violations; empty when valid."""
    problems = []
    dev = qmath.hermitian_deviation(m)
    if dev > tol:
        i, j = np.unravel_index(np.argmax(np.abs(m - qmath.dag(m))), m.shape)
        problems.append(f"not Hermitian (max deviation {dev:.3e} at entry ({i},{j}))")
        return problems
    tr = np.trace(m).real
    if abs(tr - 1.0) > tol:
        problems.append(f"trace {tr:.12g} != 1")
    wmin = float(np.linalg.eigvalsh(qmath.hermitize(m))[0])
    if wmin < -tol:
        problems.append(f"negative eigenvalue {wmin:.3e}")
    return problems


def load_state(path: str | Path) -> DensityMatrix:
    """Read a JSON state file with fields ``dims``, ``re`` and ``im``."""
    data = json.loads(Path(path).read_text())
    return state_from_json(data)


def state_from_json(data: dict) -> DensityMatrix:
    try:
        dims = [int(d) for d in data["dims"]]
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed state JSON: {exc}") from exc
    d = int(np.prod(dims))
    if re.size != d * d or im.size != d * d:
        raise ValidationError(f"expected {d * d} entries for dims {dims}, got re={re.size} im={im.size}")
    return DensityMatrix((re + 1j * im).reshape(d, d), tuple(dims))


def save_state(rho: DensityMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rho.to_json(), indent=2))


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Hermitian Hamiltonian, optionally with local parts ``hA x 1 + 1 x hB``."""

    matrix: np.ndarray
    local_parts: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        m = qmath.check_hermitian(self.matrix)
        parts = tuple(qmath.check_hermitian(p) for p in self.local_parts)
        if parts:
            composed = local_sum(parts)
            if composed.shape != m.shape or np.max(np.abs(composed - m)) > 1e-12:
                raise ValidationError("local parts do not compose to the Hamiltonian")
        m = qmath.hermitize(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "local_parts", parts)

    @classmethod
    def from_local(cls, *parts) -> "Hamiltonian":
        parts = tuple(qmath.as_matrix(p) for p in parts)
        return cls(local_sum(parts), parts)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p.shape[0] for p in self.local_parts) or (self.matrix.shape[0],)


def local_sum(parts: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_k 1 x ... x h_k x ... x 1``."""
    dims = [p.shape[0] for p in parts]
    total = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
    for k, p in enumerate(parts):
        ops = [np.eye(d) for d in dims]
        ops[k] = p
        total += qmath.tensor(*ops)
    return total


def qubit_hamiltonian(omega: float = 1.0) -> np.ndarray:
    """``omega |e><e|`` with ``|g> = (1, 0)`` and ``|e> = (0, 1)``."""
    return np.diag([0.0, omega]).astype(complex)


def two_qubit_hamiltonian(omega: float = 1.0) -> Hamiltonian:
    """``omega (n_1 + n_2)`` with its local decomposition."""
    h = qubit_hamiltonian(omega)
    return Hamiltonian.from_local(h, h)


def thermal_state(h, beta: float) -> np.ndarray:
    """Gibbs state ``exp(-beta h)/Z``; negative ``beta`` gives inverted populations."""
    if not math.isfinite(beta):
        raise ValidationError("beta must be finite; use ground_projector for beta = +inf")
    e = qmath.eigh(h)
    w = e.eigenvalues
    # Shift by the extreme eigenvalue that dominates so the exponent is <= 0.
    shifted = -beta * (w - (w[0] if beta >= 0 else w[-1]))
    p = np.exp(shifted)
    p /= p.sum()
    v = e.eigenvectors
    return (v * p) @ qmath.dag(v)


def ground_projector(h, deg_tol: float = 1e-12) -> np.ndarray:
    """Zero-temperature limit: uniform mixture over the ground eigenspace."""
    e = qmath.eigh(h)
    w = e.eigenvalues
    mask = w <= w[0] + deg_tol
    p = mask / mask.sum()
    v = e.eigenvectors
    return (v * p) @ qmath.dag(v)


@dataclass(frozen=True)
class XState:
    """Two-qubit X-state parametrized by populations and the two coherences."""

    p11: float
    p22: float
    p33: float
    p44: float
    c14: complex = 0.0
    c23: complex = 0.0

    def violations(self, tol: float = STATE_TOL) -> list[str]:
        pops = np.array([self.p11, self.p22, self.p33, self.p44])
        out = []
        if np.any(pops < -tol):
            out.append("negative population")
        if abs(pops.sum() - 1.0) > tol:
            out.append(f"populations sum to {pops.sum():.12g}")
        if abs(self.c14) ** 2 > self.p11 * self.p44 + tol:
            out.append("|rho14|^2 > rho11 rho44")
        if abs(self.c23) ** 2 > self.p22 * self.p33 + tol:
            out.append("|rho23|^2 > rho22 rho33")
        return out


def xstate_to_density(x: XState) -> DensityMatrix:
    problems = x.violations()
    if problems:
        raise PositivityViolation("invalid X-state: " + "; ".join(problems))
    m = np.zeros((4, 4), dtype=complex)
    m[np.diag_indices(4)] = [x.p11, x.p22, x.p33, x.p44]
    m[0, 3], m[3, 0] = x.c14, np.conj(x.c14)
    m[1, 2], m[2, 1] = x.c23, np.conj(x.c23)
    return DensityMatrix(m, (2, 2))


@dataclass(frozen=True)
class EffectiveTemperature:
    beta: float
    omega: float

    def state(self) -> np.ndarray:
        if math.isinf(self.beta):
            return np.diag([1.0, 0.0] if self.beta > 0 else [0.0, 1.0]).astype(complex)
        return thermal_state(qubit_hamiltonian(self.omega), self.beta)


def effective_beta(rho_qubit, omega: float = 1.0, tol: float = STATE_TOL) -> EffectiveTemperature:
    """Inverse temperature at which a diagonal qubit state is thermal.

    Returns ``beta = ln(p_g / p_e) / omega``, with ``+inf`` when the excited
    population vanishes and ``-inf`` when the ground one does.

    Raises:
        NotDiagonal: if the coherence exceeds ``tol``.
    """
    m = qmath.as_matrix(rho_qubit)
    if m.shape != (2, 2):
        raise DimensionMismatch("effective_beta needs a single-qubit state")
    if abs(m[0, 1]) > tol:
        raise NotDiagonal(f"qubit coherence {abs(m[0, 1]):.3e} exceeds {tol:.1e}")
    pg, pe = float(m[0, 0].real), float(m[1, 1].real)
    if pe < POP_FLOOR:
        return EffectiveTemperature(math.inf, omega)
    if pg < POP_FLOOR:
        return EffectiveTemperature(-math.inf, omega)
    if pg == pe:
        return EffectiveTemperature(0.0, omega)
    return EffectiveTemperature(math.log(pg / pe) / omega, omega)


def locally_thermal_xstate_sampler(seed, omega: float = 1.0, allow_negative_beta: bool = False) -> DensityMatrix:
    """Random two-qubit X-state whose marginals are thermal at a shared beta.

    Setting ``rho22 = rho33`` makes both marginals equal and diagonal; the
    coherences are drawn inside their positivity discs. By default
    ``rho11 >= rho44`` so the shared beta is non-negative. ``omega`` only
    fixes the units in which the marginals are read as thermal and does not
    change the sampled matrix.
    """
    del omega
    rng = np.random.default_rng(seed)
    p11, pmid, p44 = rng.dirichlet(np.ones(3))
    if not allow_negative_beta and p11 < p44:
        p11, p44 = p44, p11
    p22 = p33 = pmid / 2.0
    r14, r23 = rng.uniform(0.0, 1.0, size=2)
    t14, t23 = rng.uniform(0.0, 2 * np.pi, size=2)
    x = XState(
        p11, p22, p33, p44,
        c14=r14 * math.sqrt(p11 * p44) * np.exp(1j * t14),
        c23=r23 * p22 * np.exp(1j * t23),
    )
    return xstate_to_density(x)


def random_density_matrix(dim: int, rank: int | None = None, seed=None, dims=None) -> DensityMatrix:
    """Ginibre-ensemble state ``G G^H / tr(G G^H)`` with ``G`` of shape dim x rank."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValidationError(f"rank must be in [1, {dim}]")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ qmath.dag(g)
    m /= np.trace(m).real
    return DensityMatrix(m, tuple(dims) if dims else (dim,))


def pure_state(vec, dims=None) -> DensityMatrix:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), tuple(dims) if dims else (len(v),))


def bell_state(kind: str = "psi+") -> DensityMatrix:
    s = 1 / math.sqrt(2)
    vecs = {
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
    }
    return pure_state(vecs[kind], (2, 2))
