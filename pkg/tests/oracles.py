"""Independent reference computations used to freeze expected values.

Nothing here imports the package's numerical code: integrals go through
scipy.integrate.quad, maximizations through multi-start Nelder–Mead on
spherical angles, and the Helstrom value through explicit Kronecker
products and a singular-value trace norm.
"""

import math
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize, minimize_scalar


def _quad(f, a, b, **kw):
    # quad flags roundoff at 1e-14 requests; the values still agree with ellipe to 1e-16
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(f, a, b, epsabs=1e-14, epsrel=1e-14, limit=200, **kw)[0]


PAULI = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def isotropic_g(C):
    f = lambda u: math.sqrt(C * C + (1 - C * C) * u * u)  # noqa: E731
    return _quad(f, 0.0, 1.0)


def equator_mean(C, s=1.0):
    f = lambda p: math.sqrt(C * C + (1 - C * C) * (s * math.cos(p)) ** 2)  # noqa: E731
    return _quad(f, 0.0, math.pi / 2) * 2 / math.pi


def equator_plus_z_g(pz, C):
    def h(a):
        return pz * math.sqrt(C * C + (1 - C * C) * math.cos(a) ** 2) + (1 - pz) * equator_mean(C, math.sin(a))

    grid = np.linspace(0, math.pi / 2, 721)
    vals = [h(a) for a in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda a: -h(a), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(vals[i], -res.fun, vals[0], vals[-1])


def _angles_to_vec(t):
    th, ph = t
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def discrete_g(directions, weights, C, starts=24, seed=1):
    """Multi-start Nelder–Mead over (θ, φ); C = 0 kinks are handled by many restarts."""
    R = np.asarray(directions, float)
    w = np.asarray(weights, float)

    def f(t):
        x = R @ _angles_to_vec(t)
        return -float(w @ np.sqrt(C * C + (1 - C * C) * x * x))

    rng = np.random.default_rng(seed)
    inits = [(math.acos(1 - 2 * a), 2 * math.pi * b) for a, b in rng.random((starts, 2))]
    inits += [(math.acos(np.clip(r[2], -1, 1)), math.atan2(r[1], r[0])) for r in R]
    best = -np.inf
    for t0 in inits:
        res = minimize(f, t0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        best = max(best, -res.fun)
    return best


def helstrom_value(rho, r, dA=2):
    """(tr(ρ₊+ρ₋) + ‖ρ₊−ρ₋‖₁)/2 with explicit projectors on Alice's first two levels."""
    d = rho.shape[0]
    dB = d // dA
    obs = sum(c * s for c, s in zip(r, PAULI))
    Pp = np.zeros((dA, dA), complex)
    Pm = np.zeros((dA, dA), complex)
    Pp[:2, :2] = (np.eye(2) + obs) / 2
    Pm[:2, :2] = (np.eye(2) - obs) / 2

    def bob(P):
        M = np.kron(P, np.eye(dB)) @ rho
        return sum(M[a * dB:(a + 1) * dB, a * dB:(a + 1) * dB] for a in range(dA))

    rp, rm = bob(Pp), bob(Pm)
    tn = np.linalg.svd(rp - rm, compute_uv=False).sum()
    return float((np.trace(rp + rm).real + tn) / 2)


def sample_size(rate, eps, delta):
    return math.ceil(math.log(delta) / math.log(1 - rate * eps))
