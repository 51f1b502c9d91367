"""Verification strategies: probability distributions of measurement directions on the Bloch sphere.

A :class:`Strategy` is stored as a finite set of weighted atoms plus an
optional continuous part (uniform on the sphere or on the equator).  Every
named protocol fits this shape; for example the equator+Z family is a
``pZ`` atom at the north pole plus ``1 - pZ`` spread uniformly on the
equator.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgument

UNIT_TOL = 1e-12
WEIGHT_TOL = 1e-12
MERGE_ANGLE = 1e-9

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

KINDS = ("Discrete", "Isotropic", "Equator", "EquatorPlusZ", "Polygon", "PolygonPlusZ")
CONTINUOUS_PARTS = (None, "sphere", "equator")


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise InvalidArgument("zero vector has no direction")
    return v / n


def check_unit(r, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate a Bloch vector (x, y, z) and return it as a float array."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,) or not np.all(np.isfinite(r)):
        raise InvalidArgument(f"Bloch vector must be a finite 3-vector, got {r!r}")
    if abs(float(r @ r) - 1.0) > tol:
        raise InvalidArgument(f"Bloch vector must have unit length, got norm {np.linalg.norm(r)!r}")
    return r


@dataclass(frozen=True, eq=False)
class Strategy:
    """A distribution μ on the Bloch sphere.

    ``directions``/``weights`` hold the point masses.  ``continuous`` is
    ``None``, ``"sphere"`` or ``"equator"`` and carries total mass
    ``continuous_weight`` spread uniformly over that set.
    """

    kind: str
    name: str
    directions: np.ndarray
    weights: np.ndarray
    continuous: str | None = None
    continuous_weight: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown strategy kind {self.kind!r}")
        if self.continuous not in CONTINUOUS_PARTS:
            raise InvalidArgument(f"unknown continuous part {self.continuous!r}")
        d = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        w = np.asarray(self.weights, dtype=float).ravel()
        if d.shape[0] != w.size:
            raise InvalidArgument("directions and weights differ in length")
        if np.any(np.abs(np.einsum("ij,ij->i", d, d) - 1.0) > UNIT_TOL):
            raise InvalidArgument("every direction must be a unit vector")
        if np.any(w <= 0.0):
            raise InvalidArgument("atom weights must be positive")
        cw = float(self.continuous_weight)
        if self.continuous is None and cw != 0.0:
            raise InvalidArgument("continuous weight given without a continuous part")
        if cw < 0.0:
            raise InvalidArgument("continuous weight must be nonnegative")
        total = w.sum() + cw
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidArgument(f"weights must sum to 1, got {total!r}")
        if self.continuous is not None and cw == 0.0:
            object.__setattr__(self, "continuous", None)
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "continuous_weight", cw)
        object.__setattr__(self, "params", dict(self.params))

    @property
    def is_discrete(self) -> bool:
        return self.continuous is None

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={_fmt_param(v)}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"

    def isclose(self, other: "Strategy", atol: float = 1e-9) -> bool:
        """Equality as measures: same continuous part and same merged atom set."""
        if self.continuous != other.continuous:
            return False
        if abs(self.continuous_weight - other.continuous_weight) > atol:
            return False
        a, b = _merged(self.directions, self.weights), _merged(other.directions, other.weights)
        if a[1].size != b[1].size:
            return False
        used = np.zeros(b[1].size, dtype=bool)
        for r, w in zip(*a):
            dist = np.linalg.norm(b[0] - r, axis=1)
            dist[used] = np.inf
            j = int(np.argmin(dist))
            if dist[j] > atol or abs(b[1][j] - w) > atol:
                return False
            used[j] = True
        return True

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "name": self.name, "params": dict(self.params)}
        out["atoms"] = [{"r": [float(c) for c in r], "w": float(w)} for r, w in zip(self.directions, self.weights)]
        if self.continuous is not None:
            out["continuous"] = {"support": self.continuous, "w": self.continuous_weight}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _fmt_param(v) -> str:
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def _merged(directions: np.ndarray, weights: np.ndarray, angle: float = MERGE_ANGLE):
    """Merge atoms whose directions lie within ``angle`` radians of each other."""
    out_d: list[np.ndarray] = []
    out_w: list[float] = []
    for r, w in zip(directions, weights):
        for i, q in enumerate(out_d):
            if np.linalg.norm(q - r) <= angle:
                out_w[i] += w
                break
        else:
            out_d.append(np.array(r, dtype=float))
            out_w.append(float(w))
    return np.array(out_d).reshape(-1, 3), np.array(out_w)


def discrete(directions, weights=None, name: str = "Discrete", kind: str = "Discrete", params=None) -> Strategy:
    """Build a discrete strategy, normalizing directions and merging duplicates."""
    d = np.atleast_2d(np.asarray(directions, dtype=float))
    if d.shape[1] != 3 or d.shape[0] == 0:
        raise InvalidArgument("directions must be a non-empty (m, 3) array")
    norms = np.linalg.norm(d, axis=1)
    if np.any(norms == 0.0):
        raise InvalidArgument("zero direction")
    d = d / norms[:, None]
    w = np.full(d.shape[0], 1.0 / d.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (d.shape[0],):
        raise InvalidArgument("weights must match directions")
    if np.any(w < 0.0):
        raise InvalidArgument("weights must be nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise InvalidArgument(f"weights must sum to 1, got {w.sum()!r}")
    keep = w > 0.0
    d, w = _merged(d[keep], w[keep])
    return Strategy(kind=kind, name=name, directions=d, weights=w / w.sum(), params=params or {})


# ---------------------------------------------------------------------------
# Named protocols


def polygon_vertices(M: int) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(M) / M
    return np.column_stack([np.cos(theta), np.sin(theta), np.zeros(M)])


def _signs(*cols):
    return np.array(np.meshgrid(*cols, indexing="ij")).reshape(len(cols), -1).T


def tetrahedron_vertices() -> np.ndarray:
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3.0)


def cube_vertices() -> np.ndarray:
    return _signs([1.0, -1.0], [1.0, -1.0], [1.0, -1.0]) / math.sqrt(3.0)


def octahedron_vertices() -> np.ndarray:
    return np.vstack([np.eye(3), -np.eye(3)])


def _cyclic(base: np.ndarray) -> np.ndarray:
    return np.vstack([base, base[:, [2, 0, 1]], base[:, [1, 2, 0]]])


def icosahedron_vertices() -> np.ndarray:
    t = GOLDEN
    base = np.array([[0.0, s1, s2 * t] for s1 in (1, -1) for s2 in (1, -1)])
    return _cyclic(base) / math.sqrt(1.0 + t * t)


def dodecahedron_vertices() -> np.ndarray:
    t = GOLDEN
    base = np.array([[0.0, s1 * t, s2 / t] for s1 in (1, -1) for s2 in (1, -1)])
    return np.vstack([_cyclic(base), cube_vertices() * math.sqrt(3.0)]) / math.sqrt(3.0)


def optimal_pz_equator() -> float:
    """Weight on the Z test that minimizes the C = 0 threshold of equator+Z."""
    return 4.0 / (4.0 + math.pi**2)


def optimal_pz_polygon(M: int) -> float:
    """Weight on the Z test that minimizes the C = 0 threshold of polygon(M)+Z."""
    M = _check_M(M)
    if M % 2 == 0:
        return 1.0 / (1.0 + (M * math.sin(math.pi / M)) ** 2 / 4.0)
    return 1.0 / (1.0 + (M * math.sin(math.pi / (2 * M))) ** 2)


def _check_M(M) -> int:
    if isinstance(M, bool) or not isinstance(M, (int, float, np.integer, np.floating)) \
            or not float(M).is_integer() or int(M) < 3:
        raise InvalidArgument(f"polygon needs an integer M >= 3, got {M!r}")
    return int(M)


def _check_pz(pZ, optimum: float) -> float:
    if isinstance(pZ, str):
        if pZ.lower() != "opt":
            raise InvalidArgument(f"pZ must be a number in [0, 1] or 'opt', got {pZ!r}")
        return optimum
    if pZ is None:
        raise InvalidArgument("pZ is required")
    pZ = float(pZ)
    if not 0.0 <= pZ <= 1.0:
        raise InvalidArgument(f"pZ must lie in [0, 1], got {pZ!r}")
    return pZ


_Z = np.array([[0.0, 0.0, 1.0]])

NAMED = (
    "XY", "XYZ", "Isotropic", "Equator", "Polygon", "EquatorPlusZ", "PolygonPlusZ",
    "Tetrahedron", "Octahedron", "Cube", "Icosahedron", "Dodecahedron", "EquatorPlusZII", "TwoSetting",
)
_CANON = {n.lower(): n for n in NAMED}
_ALIASES = {"equator+z": "EquatorPlusZ", "polygon+z": "PolygonPlusZ", "equator+zii": "EquatorPlusZII"}


def canonical_name(name: str) -> str:
    key = str(name).strip().lower()
    key = _ALIASES.get(key, key)
    key = key.lower()
    if key not in _CANON:
        raise InvalidArgument(f"unknown protocol {name!r}; choose from {', '.join(NAMED)}")
    return _CANON[key]


def make_named(name: str, params: dict | None = None, **kw) -> Strategy:
    """Construct a named protocol.

    Parameters are passed as a dict and/or keywords: ``M`` for polygons,
    ``pZ`` (a number or ``"opt"``) for the +Z families, ``alpha`` and ``p1``
    for the two-setting family.
    """
    p = dict(params or {})
    p.update(kw)
    name = canonical_name(name)
    allowed = {
        "Polygon": {"M"}, "PolygonPlusZ": {"M", "pZ"}, "EquatorPlusZ": {"pZ"}, "TwoSetting": {"alpha", "p1"},
    }.get(name, set())
    extra = set(p) - allowed
    if extra:
        raise InvalidArgument(f"{name} does not take parameters {sorted(extra)}")

    if name == "XY":
        return discrete(np.eye(3)[:2], [0.5, 0.5], name=name)
    if name == "XYZ":
        return discrete(np.eye(3), np.full(3, 1 / 3), name=name)
    if name == "Tetrahedron":
        return discrete(tetrahedron_vertices(), name=name)
    if name == "Cube":
        return discrete(cube_vertices(), name=name)
    if name == "Octahedron":
        return discrete(octahedron_vertices(), name=name)
    if name == "Icosahedron":
        return discrete(icosahedron_vertices(), name=name)
    if name == "Dodecahedron":
        return discrete(dodecahedron_vertices(), name=name)
    if name == "Isotropic":
        return Strategy("Isotropic", name, np.empty((0, 3)), np.empty(0), "sphere", 1.0)
    if name == "Equator":
        return Strategy("Equator", name, np.empty((0, 3)), np.empty(0), "equator", 1.0)
    if name in ("EquatorPlusZ", "EquatorPlusZII"):
        pz = 1.0 / 3.0 if name == "EquatorPlusZII" else _check_pz(p.get("pZ"), optimal_pz_equator())
        atoms, w = (_Z, [pz]) if pz > 0.0 else (np.empty((0, 3)), [])
        params = {} if name == "EquatorPlusZII" else {"pZ": pz}
        return Strategy("EquatorPlusZ", name, atoms, w, "equator", 1.0 - pz, params)
    if name == "Polygon":
        M = _check_M(p.get("M"))
        return discrete(polygon_vertices(M), name=name, kind="Polygon", params={"M": M})
    if name == "PolygonPlusZ":
        M = _check_M(p.get("M"))
        pz = _check_pz(p.get("pZ"), optimal_pz_polygon(M))
        d = np.vstack([polygon_vertices(M), _Z])
        w = np.concatenate([np.full(M, (1.0 - pz) / M), [pz]])
        return discrete(d, w / w.sum(), name=name, kind="PolygonPlusZ", params={"M": M, "pZ": pz})
    if name == "TwoSetting":
        alpha = float(p.get("alpha", math.pi / 2))
        p1 = float(p.get("p1", 0.5))
        if not 0.0 <= p1 <= 1.0:
            raise InvalidArgument(f"p1 must lie in [0, 1], got {p1!r}")
        d = np.array([[1.0, 0.0, 0.0], [math.cos(alpha), math.sin(alpha), 0.0]])
        return discrete(d, [p1, 1.0 - p1], name=name, params={"alpha": alpha, "p1": p1})
    raise AssertionError(name)  # pragma: no cover


_SPEC_RE = re.compile(r"^\s*([A-Za-z+]+)\s*(?:\((.*)\))?\s*$")
_POSITIONAL = {"Polygon": ("M",), "PolygonPlusZ": ("M", "pZ"), "EquatorPlusZ": ("pZ",), "TwoSetting": ("alpha", "p1")}


def parse_protocol(text: str) -> Strategy:
    """Parse ``"Polygon(3)"``, ``"PolygonPlusZ(M=3,pZ=opt)"``, ``"xy"`` and the like."""
    m = _SPEC_RE.match(text)
    if not m:
        raise InvalidArgument(f"cannot parse protocol {text!r}")
    name = canonical_name(m.group(1))
    params: dict[str, Any] = {}
    if m.group(2):
        names = _POSITIONAL.get(name, ())
        for i, tok in enumerate(t.strip() for t in m.group(2).split(",") if t.strip()):
            if "=" in tok:
                k, v = (s.strip() for s in tok.split("=", 1))
            elif i < len(names):
                k, v = names[i], tok
            else:
                raise InvalidArgument(f"too many parameters for {name}")
            params[k] = _parse_value(v)
    return make_named(name, params)


def _parse_value(v: str):
    if v.lower() == "opt":
        return "opt"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        raise InvalidArgument(f"bad parameter value {v!r}") from None


# ---------------------------------------------------------------------------
# Derived quantities

_XI_CONT = {"sphere": np.eye(3) / 3.0, "equator": np.diag([0.5, 0.5, 0.0])}


def verification_matrix(mu: Strategy) -> np.ndarray:
    """Second moment Ξ = ∫ r rᵀ dμ(r)."""
    xi = np.einsum("i,ij,ik->jk", mu.weights, mu.directions, mu.directions)
    if mu.continuous is not None:
        xi = xi + mu.continuous_weight * _XI_CONT[mu.continuous]
    return 0.5 * (xi + xi.T)


def xi_norm(mu: Strategy) -> float:
    return float(np.linalg.eigvalsh(verification_matrix(mu))[-1])


def symmetrize(mu: Strategy) -> Strategy:
    """Center-symmetric version: each atom r becomes r and -r with half the weight."""
    if not mu.is_discrete:
        raise InvalidArgument("only discrete strategies can be symmetrized")
    d = np.vstack([mu.directions, -mu.directions])
    w = np.concatenate([mu.weights, mu.weights]) / 2.0
    return discrete(d, w, name=f"Sym{mu.name}", params=mu.params)


def is_center_symmetric(mu: Strategy, atol: float = 1e-9) -> bool:
    return mu.is_discrete and mu.isclose(
        Strategy(mu.kind, mu.name, -mu.directions, mu.weights, params=mu.params), atol
    )


def directions_from_uniforms(mu: Strategy, u: np.ndarray) -> np.ndarray:
    """Map rows of two uniforms (u0, u1) to directions distributed as μ.

    ``u0`` selects an atom or the continuous part by inverse CDF; ``u1`` and
    the fractional remainder of ``u0`` parametrize the continuous draw.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    u0, u1 = u[:, 0], u[:, 1]
    n = u0.size
    out = np.empty((n, 3))
    cdf = np.cumsum(mu.weights)
    atom_mass = cdf[-1] if cdf.size else 0.0
    idx = np.searchsorted(cdf, u0, side="right")
    on_atom = idx < mu.n_atoms
    if mu.continuous is None:
        idx = np.minimum(idx, mu.n_atoms - 1)
        on_atom[:] = True
    out[on_atom] = mu.directions[idx[on_atom]]
    rest = ~on_atom
    if np.any(rest):
        # reuse u0 within the continuous slice as an independent uniform
        v = (u0[rest] - atom_mass) / max(mu.continuous_weight, 1e-300)
        v = np.clip(v, 0.0, np.nextafter(1.0, 0.0))
        phi = 2.0 * np.pi * u1[rest]
        if mu.continuous == "sphere":
            z = 1.0 - 2.0 * v
            s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
            out[rest] = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
        else:
            out[rest] = np.column_stack([np.cos(phi), np.sin(phi), np.zeros(phi.size)])
    return out


def sample_direction(mu: Strategy, rng: np.random.Generator) -> np.ndarray:
    return directions_from_uniforms(mu, rng.random((1, 2)))[0]


def sample_directions(mu: Strategy, rng: np.random.Generator, n: int) -> np.ndarray:
    return directions_from_uniforms(mu, rng.random((n, 2)))


def from_json(obj) -> Strategy:
    """Inverse of :meth:`Strategy.to_json`; also accepts a JSON string.

    Named protocols are rebuilt from ``name`` and ``params``; anything else
    is read from its atom list.
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict):
        raise InvalidArgument("strategy JSON must be an object")
    name = obj.get("name")
    params = obj.get("params", {}) or {}
    if name is not None and name.lower() in _CANON:
        return make_named(name, params)
    atoms = obj.get("atoms")
    if not atoms:
        raise InvalidArgument("discrete strategy JSON needs a non-empty 'atoms' list")
    try:
        d = [a["r"] for a in atoms]
        w = [a["w"] for a in atoms]
    except (KeyError, TypeError) as exc:
        raise InvalidArgument(f"malformed atom entry: {exc}") from None
    for r in d:
        check_unit(r, tol=1e-9)
    return discrete(d, w, name=name or "Discrete", params=params)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` about ``axis`` (Rodrigues formula)."""
    k = unit(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def rotated(mu: Strategy, R: np.ndarray) -> Strategy:
    if not mu.is_discrete:
        raise InvalidArgument("only discrete strategies can be rotated")
    return Strategy(mu.kind, mu.name, mu.directions @ np.asarray(R).T, mu.weights, params=mu.params)
