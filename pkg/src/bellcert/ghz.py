"""GHZ-state verification: compatible measurements, test generation and reduction to a Bell game.

Parties are numbered ``0 .. n-1`` in this module (the command line uses
1-based numbers).  Qubit ``j`` of an n-qubit state vector belongs to party
``j``, most significant first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qcore
from . import strategy as st
from .errors import InvalidArgument, Unsupported

TWO_PI = 2.0 * math.pi
PHASE_TOL = 1e-9
AXIS_TOL = 1e-9
ORACLE_MAX_PARTIES = 5


@dataclass(frozen=True)
class PartyLayout:
    """Split of ``n`` parties into honest ones (holding the verifier) and dishonest ones."""

    n: int
    dishonest: tuple

    def __post_init__(self):
        n = int(self.n)
        if n < 2:
            raise InvalidArgument("a GHZ layout needs at least two parties")
        d = tuple(sorted({int(j) for j in self.dishonest}))
        if len(d) != len(tuple(self.dishonest)):
            raise InvalidArgument("dishonest parties listed twice")
        if not d or len(d) >= n:
            raise InvalidArgument("need at least one honest and one dishonest party")
        if d[0] < 0 or d[-1] >= n:
            raise InvalidArgument(f"party indices must lie in 0..{n - 1}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "dishonest", d)

    @property
    def honest(self) -> tuple:
        return tuple(j for j in range(self.n) if j not in self.dishonest)

    @property
    def order(self) -> tuple:
        """Honest parties first, then dishonest ones."""
        return self.honest + self.dishonest


@dataclass(frozen=True)
class GhzTest:
    """One round: ``kind`` is ``"Z"`` or ``"phase"``; phase tests carry one angle per party."""

    kind: str
    phases: tuple = ()

    def __post_init__(self):
        if self.kind not in ("Z", "phase"):
            raise InvalidArgument(f"unknown test kind {self.kind!r}")
        if self.kind == "Z":
            if self.phases:
                raise InvalidArgument("a Z test carries no phases")
            return
        ph = tuple(float(p) % TWO_PI for p in self.phases)
        if len(ph) < 2:
            raise InvalidArgument("a phase test needs at least two phases")
        if _circ_dist(sum(ph), 0.0, TWO_PI) > PHASE_TOL:
            raise InvalidArgument("phases must sum to 0 mod 2π")
        object.__setattr__(self, "phases", ph)

    def to_json(self) -> dict:
        if self.kind == "Z":
            return {"kind": "Z"}
        return {"kind": "phase", "phases": list(self.phases)}

    @classmethod
    def from_json(cls, obj: dict) -> "GhzTest":
        kind = obj.get("kind")
        if kind == "Z":
            return cls("Z")
        if kind == "phase":
            return cls("phase", tuple(obj.get("phases", ())))
        raise InvalidArgument(f"unknown test kind {kind!r}")


@dataclass(frozen=True)
class GhzStrategy:
    """Z test with probability ``pz``; otherwise phases from ``phase_law``.

    ``phase_law`` is ``"continuous"`` (uniform on [0, 2π)) or an integer
    M ≥ 3 (uniform on multiples of 2π/M).
    """

    pz: float
    phase_law: object = "continuous"

    def __post_init__(self):
        pz = float(self.pz)
        if not 0.0 <= pz <= 1.0:
            raise InvalidArgument(f"pz must lie in [0, 1], got {self.pz!r}")
        law = self.phase_law
        if isinstance(law, str):
            if law.lower() != "continuous":
                raise InvalidArgument(f"unknown phase law {law!r}")
            law = "continuous"
        else:
            law = st._check_M(law)
        object.__setattr__(self, "pz", pz)
        object.__setattr__(self, "phase_law", law)

    @property
    def discrete(self) -> bool:
        return self.phase_law != "continuous"


def _circ_dist(a: float, b: float, period: float) -> float:
    d = (a - b) % period
    return min(d, period - d)


# ---------------------------------------------------------------------------
# Compatible measurements


def _normalize_sign(r: np.ndarray) -> np.ndarray:
    """Pick the representative of ±r used for the phase-sum check."""
    x, y, z = r
    if z < -AXIS_TOL or (abs(z) <= AXIS_TOL and (x < -AXIS_TOL or (abs(x) <= AXIS_TOL and y < 0))):
        return -r
    return r


def is_compatible(vectors: Sequence) -> bool:
    """Whether the local settings leave every party's conditional GHZ states in its own eigenbasis.

    True iff all settings are ±z, or all are equatorial with phases summing
    to 0 mod π.
    """
    V = [st.check_unit(v, tol=1e-9) for v in vectors]
    if len(V) < 2:
        raise InvalidArgument("need at least two parties")
    if all(abs(abs(v[2]) - 1.0) <= AXIS_TOL for v in V):
        return True
    if all(abs(v[2]) <= AXIS_TOL for v in V):
        total = sum(math.atan2(*_normalize_sign(v)[[1, 0]]) for v in V)
        return _circ_dist(total, 0.0, math.pi) <= PHASE_TOL
    return False


def compatibility_oracle(vectors: Sequence, tol: float = 1e-9) -> bool:
    """Brute-force compatibility check on the GHZ state vector.

    For each party, project the others onto every outcome pattern and require
    the surviving conditional states to be exactly the two eigenstates of
    that party's own setting.
    """
    V = [st.check_unit(v, tol=1e-9) for v in vectors]
    n = len(V)
    if n < 2:
        raise InvalidArgument("need at least two parties")
    if n > ORACLE_MAX_PARTIES:
        raise Unsupported(f"brute-force oracle limited to {ORACLE_MAX_PARTIES} parties")
    psi = qcore.ghz_state(n).reshape((2,) * n)
    kets = [[qcore.bloch_ket(v), qcore.bloch_ket(-v)] for v in V]
    for j in range(n):
        others = [k for k in range(n) if k != j]
        seen: list[np.ndarray] = []
        for pattern in itertools.product((0, 1), repeat=n - 1):
            t = psi
            # contract the others from the highest axis down so axis numbers stay valid
            for k, o in sorted(zip(others, pattern), reverse=True):
                t = np.tensordot(t, kets[k][o].conj(), axes=([k], [0]))
            amp = np.asarray(t).ravel()
            p = float(np.vdot(amp, amp).real)
            if p < tol:
                continue
            amp = amp / math.sqrt(p)
            bloch = np.array([np.vdot(amp, s @ amp).real for s in qcore.PAULIS])
            if min(np.linalg.norm(bloch - V[j]), np.linalg.norm(bloch + V[j])) > 1e-6:
                return False
            if all(np.linalg.norm(bloch - q) > 1e-6 for q in seen):
                seen.append(bloch)
        if len(seen) != 2:
            return False
    return True


def phase_vector(phi: float) -> np.ndarray:
    """Bloch vector of the equatorial measurement X(φ)."""
    return np.array([math.cos(phi), math.sin(phi), 0.0])


# ---------------------------------------------------------------------------
# Test generation


def tests_from_uniforms(strategy: GhzStrategy, n: int, u: np.ndarray):
    """Vectorized test draw from rows of ``n + 1`` uniforms.

    Column 0 decides Z versus phase, column 1 picks the party that closes
    the phase sum, columns 2.. give the other ``n - 1`` phases.  Returns
    ``(is_z, phases)`` with ``phases`` of shape (rows, n); Z rows hold zeros.
    """
    u = np.atleast_2d(u)
    T = u.shape[0]
    is_z = u[:, 0] < strategy.pz
    closer = np.minimum((u[:, 1] * n).astype(int), n - 1)
    if strategy.discrete:
        M = strategy.phase_law
        free = np.minimum((u[:, 2 : n + 1] * M).astype(int), M - 1) * (TWO_PI / M)
    else:
        free = u[:, 2 : n + 1] * TWO_PI
    phases = np.zeros((T, n))
    cols = np.arange(n)[None, :]
    other = cols != closer[:, None]
    phases[other] = free.ravel()
    last = (-phases.sum(axis=1)) % TWO_PI
    if strategy.discrete:
        step = TWO_PI / strategy.phase_law
        last = (np.round(last / step) % strategy.phase_law) * step
    phases[np.arange(T), closer] = last
    phases[is_z] = 0.0
    return is_z, phases


def generate_test(strategy: GhzStrategy, n: int, rng: np.random.Generator) -> GhzTest:
    """Draw one test round for ``n`` parties."""
    if n < 2:
        raise InvalidArgument("need at least two parties")
    is_z, phases = tests_from_uniforms(strategy, n, rng.random((1, n + 1)))
    if is_z[0]:
        return GhzTest("Z")
    return GhzTest("phase", tuple(phases[0]))


def evaluate_test(test: GhzTest, outcomes: Sequence[int]) -> bool:
    """Z tests pass when all outcomes agree; phase tests when their product is +1."""
    out = [int(o) for o in outcomes]
    if any(o not in (1, -1) for o in out):
        raise InvalidArgument("outcomes must be +1 or -1")
    if test.kind == "phase" and len(out) != len(test.phases):
        raise InvalidArgument("one outcome per party is required")
    if test.kind == "Z":
        return all(o == out[0] for o in out)
    return math.prod(out) == 1


def effective_strategy(strategy: GhzStrategy) -> st.Strategy:
    """Bell-game distribution seen across the honest/dishonest cut."""
    pz = strategy.pz
    if strategy.discrete:
        if pz == 0.0:
            return st.make_named("Polygon", M=strategy.phase_law)
        return st.make_named("PolygonPlusZ", M=strategy.phase_law, pZ=pz)
    if pz == 0.0:
        return st.make_named("Equator")
    return st.make_named("EquatorPlusZ", pZ=pz)


# ---------------------------------------------------------------------------
# Effective honest measurement


def x_phase(phi: float) -> np.ndarray:
    """X(φ) = e^{-iφ}|0><1| + e^{iφ}|1><0|."""
    return np.array([[0, np.exp(-1j * phi)], [np.exp(1j * phi), 0]])


def logical_x(h: int, phi: float) -> np.ndarray:
    """X_H(φ) on h qubits: e^{-iφ}|0..0><1..1| + h.c., zero elsewhere."""
    d = 2**h
    m = np.zeros((d, d), dtype=complex)
    m[0, d - 1] = np.exp(-1j * phi)
    m[d - 1, 0] = np.exp(1j * phi)
    return m


def averaged_honest_observable(h: int, phi_total: float, phase_law="continuous", grid: int = 8) -> np.ndarray:
    """Average of ⊗_j X(φ_j) over honest phases with fixed sum ``phi_total``.

    Honest phases are i.i.d. uniform given their sum whenever at least one
    party is dishonest.  For the continuous law the average is taken over a
    ``grid``-point uniform lattice, which is exact for this trigonometric
    polynomial once ``grid`` ≥ 3.
    """
    if h < 1:
        raise InvalidArgument("need at least one honest party")
    if phase_law == "continuous":
        step, M = TWO_PI / grid, grid
    else:
        M = st._check_M(phase_law)
        step = TWO_PI / M
    acc = np.zeros((2**h, 2**h), dtype=complex)
    count = 0
    for ks in itertools.product(range(M), repeat=h - 1):
        phis = [k * step for k in ks]
        phis.append(phi_total - sum(phis))
        acc += qcore.kron_all([x_phase(p) for p in phis]) if h > 1 else x_phase(phis[0])
        count += 1
    return acc / count
