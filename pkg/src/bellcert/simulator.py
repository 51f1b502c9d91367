"""Monte Carlo verification games between an honest verifier and an adversary.

Each trial draws a fixed block of uniforms from a counter-based stream keyed
by ``(seed, stream, trial)``, so results do not depend on chunking or thread
count.  Per trial the adversary learns the measurement setting (the Bloch
direction, or the dishonest parties' phases), answers with the Helstrom-
optimal guess, and the honest outcomes are sampled jointly with that guess.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from . import ghz as gz
from . import guessing as gs
from . import qcore
from . import strategy as st
from .errors import InvalidArgument
from .rng import trial_uniforms

CHUNK = 20_000
CERTAIN = 1.0 - 1e-12
NEGLIGIBLE = 1e-14
ADVERSARIES = ("honest", "fixed", "product", "mixture")


@dataclass(frozen=True, eq=False)
class AdversaryModel:
    """How the adversary prepares the shared state.

    ``honest``: the target state.  ``fixed``: the given density matrix.
    ``product``: an uncorrelated state aligned with an intelligent direction
    of the strategy at C = 0.  ``mixture``: (1 − C)·product + C·target with the
    two branches flagged on orthogonal adversary levels.
    """

    kind: str
    rho: np.ndarray | None = None
    C: float = 0.0

    def __post_init__(self):
        if self.kind not in ADVERSARIES:
            raise InvalidArgument(f"unknown adversary {self.kind!r}; choose from {ADVERSARIES}")
        if self.kind == "fixed":
            if self.rho is None:
                raise InvalidArgument("a fixed adversary needs a state")
            object.__setattr__(self, "rho", qcore.DensityOperator(self.rho).matrix)
        if self.kind == "mixture":
            object.__setattr__(self, "C", gs._check_C(self.C))

    @classmethod
    def honest(cls):
        return cls("honest")

    @classmethod
    def fixed(cls, rho):
        return cls("fixed", rho=rho)

    @classmethod
    def product(cls):
        return cls("product")

    @classmethod
    def mixture(cls, C: float):
        return cls("mixture", C=C)

    def describe(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "mixture":
            out["C"] = self.C
        if self.kind == "fixed":
            out["rho_sha256"] = hashlib.sha256(np.ascontiguousarray(self.rho).tobytes()).hexdigest()[:16]
        return out


@dataclass(frozen=True)
class GameRecord:
    trials: int
    passes: int
    seed: int
    strategy_digest: str
    target: str = "bell"

    @property
    def pass_rate(self) -> float:
        return self.passes / self.trials

    @property
    def std_err(self) -> float:
        p = self.pass_rate
        return math.sqrt(p * (1.0 - p) / self.trials)

    def to_json(self) -> dict:
        return {
            "target": self.target, "trials": self.trials, "passes": self.passes,
            "pass_rate": self.pass_rate, "std_err": self.std_err,
            "seed": self.seed, "strategy_digest": self.strategy_digest,
        }


@dataclass(frozen=True)
class VerdictReport:
    pass_rate: float
    threshold: float
    entanglement_certified: bool
    confidence: float
    k_sigma: float = 4.0

    def to_json(self) -> dict:
        return {
            "pass_rate": self.pass_rate, "threshold": self.threshold,
            "entanglement_certified": self.entanglement_certified,
            "confidence": self.confidence, "k_sigma": self.k_sigma,
        }


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _check_trials(trials) -> int:
    trials = int(trials)
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    return trials


def _run_chunks(fn, trials: int, threads: int):
    bounds = [(s, min(s + CHUNK, trials)) for s in range(0, trials, CHUNK)]
    if threads <= 1 or len(bounds) == 1:
        parts = [fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda ab: fn(*ab), bounds))
    return parts


def _sample_categorical(P: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise inverse-CDF sampling after dropping negligible and clamping near-certain entries."""
    P = np.where(P < NEGLIGIBLE, 0.0, P)
    P = P / P.sum(axis=1, keepdims=True)
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = 1.0
    return np.minimum((u[:, None] >= cdf).sum(axis=1), P.shape[1] - 1)


def _helstrom_effects(delta: np.ndarray) -> np.ndarray:
    """Batched projectors onto the nonnegative eigenspace of each hermitian Δ."""
    delta = 0.5 * (delta + np.conj(np.swapaxes(delta, -1, -2)))
    w, V = np.linalg.eigh(delta)
    keep = (w >= 0.0).astype(float)
    return np.einsum("tik,tk,tjk->tij", V, keep, V.conj())


# ---------------------------------------------------------------------------
# Bell game


def intelligent_direction(mu: st.Strategy) -> np.ndarray:
    """One maximizer of the C = 0 objective, used by the product adversary."""
    rep = gs.g_value(mu, 0.0)
    if rep.directions.size == 0:
        return np.array([0.0, 0.0, 1.0])
    return rep.directions[0]


def bell_state_for(mu: st.Strategy, adversary: AdversaryModel):
    """Density matrix and (d_A, d_B) for the Bell game."""
    if adversary.kind == "honest":
        v = qcore.bell_state()
        return np.outer(v, v.conj()), (2, 2)
    if adversary.kind == "fixed":
        d = adversary.rho.shape[0]
        if d % 2:
            raise InvalidArgument("fixed Bell-game state must have a qubit first factor")
        return adversary.rho, (2, d // 2)
    a = qcore.bloch_ket(intelligent_direction(mu))
    if adversary.kind == "product":
        psi = np.kron(a, [1.0, 0.0])
        return np.outer(psi, psi.conj()), (2, 2)
    C = adversary.C
    p1 = np.kron(a, [1.0, 0.0, 0.0])
    p2 = (np.kron([1.0, 0.0], [0.0, 1.0, 0.0]) + np.kron([0.0, 1.0], [0.0, 0.0, 1.0])) / math.sqrt(2.0)
    rho = (1.0 - C) * np.outer(p1, p1.conj()) + C * np.outer(p2, p2.conj())
    return rho, (2, 3)


def _bell_chunk(mu, rho, dims, seed, stream, start, stop, sink):
    u = trial_uniforms(seed, start, stop, 3, stream)
    R = st.directions_from_uniforms(mu, u[:, :2])
    B = gs._alice_blocks(rho, dims)
    rho_p = 0.5 * (B[0][None] + np.tensordot(R, B[1:], axes=1))
    rho_m = 0.5 * (B[0][None] - np.tensordot(R, B[1:], axes=1))
    E = _helstrom_effects(rho_p - rho_m)
    I = np.eye(E.shape[-1])
    tr = lambda X, Y: np.einsum("tij,tji->t", X, Y).real  # noqa: E731
    # joint probabilities of (Alice, Bob's guess) in the order ++, +-, -+, --
    P = np.column_stack([tr(rho_p, E), tr(rho_p, I - E), tr(rho_m, E), tr(rho_m, I - E)])
    P = np.clip(P, 0.0, None)
    pass_prob = P[:, 0] + P[:, 3]
    near = pass_prob >= CERTAIN
    P[near] = P[near] * np.array([1, 0, 0, 1])
    k = _sample_categorical(P, u[:, 2])
    alice = np.where(k < 2, 1, -1)
    bob = np.where(k % 2 == 0, 1, -1)
    ok = alice == bob
    if sink is not None:
        sink.extend(
            {"trial": int(start + i), "test": {"r": [float(c) for c in R[i]]},
             "honest_outcomes": [int(alice[i])], "adversary_response": [int(bob[i])], "pass": bool(ok[i])}
            for i in range(stop - start)
        )
    return int(ok.sum())


def play_bell(mu: st.Strategy, adversary: AdversaryModel, trials: int, seed: int, *,
              stream: int = 0, threads: int = 1, transcript: list | None = None) -> GameRecord:
    """Play ``trials`` rounds of the two-party game and count passes."""
    trials = _check_trials(trials)
    rho, dims = bell_state_for(mu, adversary)

    def run(a, b):
        sink = [] if transcript is not None else None
        return _bell_chunk(mu, rho, dims, seed, stream, a, b, sink), sink

    parts = _run_chunks(run, trials, 1 if transcript is not None else threads)
    if transcript is not None:
        for _, sink in parts:
            transcript.extend(sink)
    digest = _digest({"strategy": mu.to_json(), "adversary": adversary.describe(), "target": "bell"})
    return GameRecord(trials, sum(p for p, _ in parts), int(seed), digest, "bell")


# ---------------------------------------------------------------------------
# GHZ game


def _level_states(nd: int) -> list[int]:
    """Dishonest-register basis indices used for adversary levels 0, 1, 2, ..."""
    full = 2**nd - 1
    return [0, full] + [k for k in range(1, full)]


def embed_bell_state(rho_ab: np.ndarray, dB: int, layout: gz.PartyLayout) -> np.ndarray:
    """Place a qubit⊗d_B Bell-game state onto the GHZ parties, in (honest, dishonest) qubit order.

    Alice's |0>, |1> become |0..0>, |1..1> of the honest qubits; Bob's level k
    becomes the k-th entry of :func:`_level_states` on the dishonest qubits.
    """
    h, nd = len(layout.honest), len(layout.dishonest)
    levels = _level_states(nd)
    if dB > len(levels):
        raise InvalidArgument(f"{nd} dishonest qubits cannot hold {dB} adversary levels")
    dH, dD = 2**h, 2**nd
    iso = np.zeros((dH * dD, 2 * dB))
    for a, ha in enumerate((0, dH - 1)):
        for k in range(dB):
            iso[ha * dD + levels[k], a * dB + k] = 1.0
    return iso @ rho_ab @ iso.T


def _to_hd_order(rho: np.ndarray, layout: gz.PartyLayout) -> np.ndarray:
    n = layout.n
    t = rho.reshape((2,) * (2 * n))
    perm = list(layout.order)
    return t.transpose(perm + [n + p for p in perm]).reshape(2**n, 2**n)


def _from_hd_order(rho: np.ndarray, layout: gz.PartyLayout) -> np.ndarray:
    n = layout.n
    inv = list(np.argsort(layout.order))
    t = rho.reshape((2,) * (2 * n))
    return t.transpose(inv + [n + p for p in inv]).reshape(2**n, 2**n)


def ghz_state_for(strategy: gz.GhzStrategy, layout: gz.PartyLayout, adversary: AdversaryModel) -> np.ndarray:
    """Adversary state in party order."""
    n = layout.n
    if adversary.kind == "honest":
        v = qcore.ghz_state(n)
        return np.outer(v, v.conj())
    if adversary.kind == "fixed":
        if adversary.rho.shape[0] != 2**n:
            raise InvalidArgument(f"state dimension {adversary.rho.shape[0]} does not match {n} qubits")
        return adversary.rho
    mu = gz.effective_strategy(strategy)
    rho_ab, (_, dB) = bell_state_for(mu, adversary)
    if adversary.kind == "mixture" and len(layout.dishonest) < 2:
        raise InvalidArgument("the mixture adversary needs at least two dishonest parties")
    return _from_hd_order(embed_bell_state(rho_ab, dB, layout), layout)


def _ghz_chunk(strategy, layout, rho_hd, seed, stream, start, stop, sink):
    n = layout.n
    h, nd = len(layout.honest), len(layout.dishonest)
    dH, dD = 2**h, 2**nd
    u = trial_uniforms(seed, start, stop, n + 2, stream)
    is_z, phases = gz.tests_from_uniforms(strategy, n, u[:, : n + 1])
    T = stop - start
    t4 = rho_hd.reshape(dH, dD, dH, dD)
    hon = np.array(layout.honest)
    phi_h = phases[:, hon]
    phi_H = phi_h.sum(axis=1)

    # adversary's effect for guessing +1 (honest parity even / honest all |0>)
    off = t4[dH - 1, :, 0, :]  # <1_H| rho |0_H> on D
    delta = np.exp(-1j * phi_H)[:, None, None] * off[None] + np.exp(1j * phi_H)[:, None, None] * off.conj().T[None]
    z_delta = t4[0, :, 0, :] - t4[dH - 1, :, dH - 1, :]
    delta[is_z] = z_delta
    E = _helstrom_effects(delta)
    I = np.eye(dD)

    # honest reduced operators for each guess: tr_D[(I ⊗ E_b) rho]
    rho_hp = np.einsum("adbc,tcd->tab", t4, E)
    rho_hm = np.einsum("adbc,tcd->tab", t4, I[None] - E)

    # rotate each honest qubit so its measurement basis becomes computational
    U = np.ones((T, 1, 1), dtype=complex)
    for j in range(h):
        ph = np.where(is_z, 0.0, phi_h[:, j])
        Uj = np.zeros((T, 2, 2), dtype=complex)
        s = 1.0 / math.sqrt(2.0)
        Uj[:, 0, 0], Uj[:, 0, 1] = s, s
        Uj[:, 1, 0], Uj[:, 1, 1] = s * np.exp(1j * ph), -s * np.exp(1j * ph)
        Uj[is_z] = np.eye(2)
        U = np.einsum("tab,tcd->tacbd", U, Uj).reshape(T, U.shape[1] * 2, U.shape[2] * 2)
    diag = lambda X: np.einsum("tai,tab,tbi->ti", U.conj(), X, U).real  # noqa: E731
    P = np.clip(np.concatenate([diag(rho_hp), diag(rho_hm)], axis=1), 0.0, None)

    # honest outcome pattern k: bit j set means party j saw -1
    bits = (np.arange(dH)[:, None] >> np.arange(h - 1, -1, -1)[None, :]) & 1
    hon_out = 1 - 2 * bits  # (dH, h)
    parity = hon_out.prod(axis=1)
    all_same = np.all(hon_out == hon_out[:, :1], axis=1)
    first = hon_out[:, 0]
    guess = np.concatenate([np.ones(dH, int), -np.ones(dH, int)])
    pat = np.concatenate([np.arange(dH), np.arange(dH)])
    win_phase = parity[pat] * guess == 1
    win_z = all_same[pat] & (first[pat] == guess)
    win = np.where(is_z[:, None], win_z[None], win_phase[None])
    pass_prob = (P * win).sum(axis=1) / P.sum(axis=1)
    near = pass_prob >= CERTAIN
    P[near] = P[near] * win[near]
    k = _sample_categorical(P, u[:, n + 1])
    outcomes = np.empty((T, n), dtype=int)
    outcomes[:, hon] = hon_out[pat[k]]
    b = guess[k]
    dis = np.array(layout.dishonest)
    outcomes[:, dis] = np.where(is_z[:, None], b[:, None], 1)
    outcomes[~is_z, dis[0]] = b[~is_z]
    tests = [gz.GhzTest("Z") if is_z[i] else gz.GhzTest("phase", tuple(phases[i])) for i in range(T)]
    ok = np.array([gz.evaluate_test(tests[i], outcomes[i]) for i in range(T)])
    if sink is not None:
        for i in range(T):
            sink.append({
                "trial": int(start + i), "test": tests[i].to_json(),
                "honest_outcomes": [int(x) for x in outcomes[i, hon]],
                "adversary_response": [int(x) for x in outcomes[i, dis]], "pass": bool(ok[i]),
            })
    return int(np.sum(ok))


def play_ghz(strategy: gz.GhzStrategy, layout: gz.PartyLayout, adversary: AdversaryModel, trials: int,
             seed: int, *, stream: int = 0, threads: int = 1, transcript: list | None = None) -> GameRecord:
    """Play ``trials`` GHZ test rounds with the dishonest parties controlled by the adversary."""
    trials = _check_trials(trials)
    if layout.n > 10:
        raise InvalidArgument("dense GHZ simulation is limited to 10 parties")
    rho = ghz_state_for(strategy, layout, adversary)
    rho_hd = _to_hd_order(np.asarray(rho, dtype=complex), layout)

    def run(a, b):
        sink = [] if transcript is not None else None
        return _ghz_chunk(strategy, layout, rho_hd, seed, stream, a, b, sink), sink

    parts = _run_chunks(run, trials, 1 if transcript is not None else threads)
    if transcript is not None:
        for _, sink in parts:
            transcript.extend(sink)
    payload = {
        "pz": strategy.pz, "phase_law": strategy.phase_law, "n": layout.n,
        "dishonest": list(layout.dishonest), "adversary": adversary.describe(), "target": "ghz",
    }
    return GameRecord(trials, sum(p for p, _ in parts), int(seed), _digest(payload), "ghz")


# ---------------------------------------------------------------------------
# Reporting


def verdict(record: GameRecord, mu, k_sigma: float = 4.0, threshold: float | None = None) -> VerdictReport:
    """Certify entanglement (or GME) when the pass rate clears γ* by ``k_sigma`` standard errors."""
    if isinstance(mu, gz.GhzStrategy):
        mu = gz.effective_strategy(mu)
    gstar = gs.gamma_star(mu) if threshold is None else float(threshold)
    p, se = record.pass_rate, record.std_err
    certified = p - k_sigma * se > gstar
    if se > 0.0:
        confidence = NormalDist().cdf((p - gstar) / se)
    else:
        confidence = 1.0 if p > gstar else 0.0
    return VerdictReport(p, gstar, bool(certified), float(confidence), float(k_sigma))


@dataclass(frozen=True)
class SweepRow:
    C: float
    simulated: float
    std_err: float
    analytic: float


def sweep_concurrence(mu: st.Strategy, C_grid: Iterable[float], trials: int, seed: int,
                      threads: int = 1) -> list[SweepRow]:
    """Play against the mixed extremal adversary at each C and compare with (1 − C)γ* + C."""
    gstar = gs.gamma_star(mu)
    rows = []
    for i, C in enumerate(C_grid):
        rec = play_bell(mu, AdversaryModel.mixture(C), trials, seed, stream=i, threads=threads)
        rows.append(SweepRow(float(C), rec.pass_rate, rec.std_err, gs.gamma_hat(mu, C, gstar)))
    return rows


def write_transcript(path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
