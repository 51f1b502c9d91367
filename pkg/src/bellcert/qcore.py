"""Dense linear algebra and quantum-state primitives.

Matrices are plain ``numpy`` arrays.  The small wrapper types below only
add validation and cached derived quantities; all functions accept either
the wrapper or a raw array where that makes sense.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import InvalidArgument

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, DensityOperator):
        return m.matrix
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise InvalidArgument(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = _as_matrix(m)
    return a.shape[0] == a.shape[1] and bool(np.allclose(a, a.conj().T, atol=tol, rtol=0))


def hermitize(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (M + M†)/2 after checking M is square and hermitian within ``tol``."""
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidArgument(f"matrix must be square, got shape {a.shape}")
    if not np.allclose(a, a.conj().T, atol=tol, rtol=0):
        raise InvalidArgument("matrix is not hermitian")
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Validated density matrix: hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray

    def __post_init__(self):
        a = hermitize(self.matrix)
        tr = np.trace(a).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidArgument(f"density operator must have unit trace, got {tr:.3e}")
        if np.linalg.eigvalsh(a).min() < -PSD_TOL:
            raise InvalidArgument("density operator has a negative eigenvalue")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, psi) -> "DensityOperator":
        v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
        return cls(np.outer(v, v.conj()))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector with an optional bipartition ``dims``."""

    amplitudes: np.ndarray
    dims: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-12:
            raise InvalidArgument(f"state vector must have unit norm, got {norm!r}")
        dims = tuple(int(d) for d in self.dims) if self.dims else (v.size,)
        if int(np.prod(dims)) != v.size:
            raise InvalidArgument(f"dims {dims} do not match {v.size} amplitudes")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOperator:
        return DensityOperator.from_pure(self)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Two-qubit density operator with its Bloch decomposition (a, b, T) and concurrence."""

    density: DensityOperator
    a: np.ndarray
    b: np.ndarray
    T: np.ndarray
    C: float = field(default=0.0)

    def reconstruct(self) -> np.ndarray:
        return reconstruct(self.a, self.b, self.T)


def trace_norm(m) -> float:
    """Sum of absolute eigenvalues of a hermitian matrix."""
    a = hermitize(m)
    return float(np.abs(np.linalg.eigvalsh(a)).sum())


def _ptrace_array(a: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise InvalidArgument(f"keep indices {keep} out of range for {n} subsystems")
    t = a.reshape(tuple(dims) * 2)
    # einsum subscripts: row index i_k, column index j_k; traced systems share a letter
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise InvalidArgument("too many subsystems")
    rows = [letters[k] for k in range(n)]
    cols = [letters[n + k] if k in keep else letters[k] for k in range(n)]
    out = "".join(letters[k] for k in keep) + "".join(letters[n + k] for k in keep)
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return r.reshape(d, d)


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]):
    """Trace out every subsystem not listed in ``keep``.

    Accepts a :class:`DensityOperator` (returns one) or a raw square array,
    which may be unnormalized (returns an array).
    """
    a = _as_matrix(rho)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != a.shape[0] or a.shape[0] != a.shape[1]:
        raise InvalidArgument(f"dims {dims} inconsistent with matrix of shape {a.shape}")
    r = _ptrace_array(a, dims, keep)
    if isinstance(rho, DensityOperator):
        return DensityOperator(r)
    return r


def reconstruct(a, b, T) -> np.ndarray:
    """Two-qubit density matrix from local Bloch vectors and correlation matrix."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    T = np.asarray(T, dtype=float)
    rho = np.kron(I2, I2).astype(complex)
    for j in range(3):
        rho += a[j] * np.kron(PAULIS[j], I2) + b[j] * np.kron(I2, PAULIS[j])
        for k in range(3):
            rho += T[j, k] * np.kron(PAULIS[j], PAULIS[k])
    return rho / 4


def bloch_decompose(rho) -> TwoQubitState:
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator(np.asarray(rho, dtype=complex))
    if rho.dim != 4:
        raise InvalidArgument(f"Bloch decomposition needs a two-qubit state, got dim {rho.dim}")
    m = rho.matrix
    a = np.array([np.trace(m @ np.kron(s, I2)).real for s in PAULIS])
    b = np.array([np.trace(m @ np.kron(I2, s)).real for s in PAULIS])
    T = np.array([[np.trace(m @ np.kron(s, t)).real for t in PAULIS] for s in PAULIS])
    return TwoQubitState(density=rho, a=a, b=b, T=T, C=concurrence(rho))


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state."""
    m = rho.matrix if isinstance(rho, DensityOperator) else DensityOperator(rho).matrix
    if m.shape[0] != 4:
        raise InvalidArgument("concurrence is defined here for two-qubit states only")
    # the λ_i are the singular values of √ρ (σy⊗σy) √ρ*; this avoids square
    # roots of near-zero eigenvalues of ρρ̃, which cost half the digits
    w, V = np.linalg.eigh(m)
    sq = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
    lam = np.linalg.svd(sq @ np.kron(SY, SY) @ sq.conj(), compute_uv=False)
    return float(np.clip(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0))


def pure_concurrence(psi, dims: Sequence[int]) -> float:
    """Concurrence sqrt(2(1 - tr rho_A^2)) of a bipartite pure state.

    Agrees with the Wootters concurrence on two qubits.
    """
    v = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    dA, dB = dims
    s = np.linalg.svd(v.reshape(dA, dB), compute_uv=False) ** 2
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - np.sum(s**2)))))


def _as_pure_vector(psi, dims):
    if isinstance(psi, PureState):
        v = psi.amplitudes
        dims = dims or (psi.dims if len(psi.dims) == 2 else None)
    elif isinstance(psi, DensityOperator):
        w, V = np.linalg.eigh(psi.matrix)
        if abs(w[-1] - 1.0) > 1e-8:
            raise InvalidArgument("reduced fidelity is only defined here for pure states")
        v = V[:, -1]
    else:
        v = np.asarray(psi, dtype=complex).ravel()
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise InvalidArgument("state vector must have unit norm")
    if dims is None:
        if v.size != 4:
            raise InvalidArgument("bipartition dims are required beyond two qubits")
        dims = (2, 2)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 2 or dims[0] * dims[1] != v.size:
        raise InvalidArgument(f"dims {dims} do not match state of size {v.size}")
    return v, dims


def reduced_fidelity(psi, dims: Sequence[int] | None = None) -> float:
    """Fidelity with the Bell state maximized over Bob's local unitaries.

    Equals half the squared nuclear norm of the coefficient matrix restricted
    to Alice's levels |0>, |1>.
    """
    v, (dA, dB) = _as_pure_vector(psi, dims)
    if dA < 2 or dB < 2:
        raise InvalidArgument("both parties need at least two levels")
    coeff = v.reshape(dA, dB)[:2, :]
    nuc = np.linalg.svd(coeff, compute_uv=False).sum()
    return float(min(1.0, 0.5 * nuc**2))


def ket(bits: str) -> np.ndarray:
    """Computational-basis qubit ket from a bit string, e.g. ``ket("01")``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def bell_state() -> np.ndarray:
    return (ket("00") + ket("11")) / np.sqrt(2)


def ghz_state(n: int) -> np.ndarray:
    return (ket("0" * n) + ket("1" * n)) / np.sqrt(2)


def kron_all(ops) -> np.ndarray:
    return reduce(np.kron, ops)


def bloch_projector(r, sign: int = 1) -> np.ndarray:
    """(I ± r·σ)/2 for a unit Bloch vector ``r``."""
    r = np.asarray(r, dtype=float)
    return 0.5 * (I2 + sign * (r[0] * SX + r[1] * SY + r[2] * SZ))


def bloch_ket(v) -> np.ndarray:
    """Qubit ket whose Bloch vector is the unit vector ``v``."""
    x, y, z = (float(c) for c in v)
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=complex)


def rotation_to(v) -> np.ndarray:
    """An SU(2) unitary whose adjoint action maps the +z Bloch axis onto ``v``."""
    up = bloch_ket(v)
    down = np.array([-np.conj(up[1]), np.conj(up[0])])
    return np.column_stack([up, down])


def schmidt_state(C: float) -> np.ndarray:
    """cos t|00> + sin t|11> with concurrence ``C`` (sin 2t = C)."""
    if not 0.0 <= C <= 1.0:
        raise InvalidArgument("concurrence must lie in [0, 1]")
    t = 0.5 * np.arcsin(C)
    return np.cos(t) * ket("00") + np.sin(t) * ket("11")


def pure_state_with_axis(C: float, v) -> np.ndarray:
    """Two-qubit pure state of concurrence ``C`` whose correlation-ellipsoid major axis is ``v``."""
    U = rotation_to(v)
    return np.kron(U, I2) @ schmidt_state(C)


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = G @ G.conj().T
    return m / np.trace(m).real
