"""Number of test rounds needed to certify fidelity 1 − ε at significance δ.

Every scenario has the form N = ⌈ln δ / ln(1 − κ ε)⌉ for a per-scenario
rate κ, except the device-independent quadratic bound, which is only known
up to a caller-supplied constant.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable

from .errors import InvalidArgument

NU_OPTIMAL = 2.0 / 3.0
MERMIN_RATE = (2.0 - math.sqrt(2.0)) / 2.0
GAMMA_BELL = 0.75
GAMMA_GHZ = 0.5 + 1.0 / math.sqrt(4.0 + math.pi**2)
FIG4_HEADER = ("epsilon", "N_standard", "N_sdi_bell", "N_sdi_ghz", "N_di_mermin")


@dataclass(frozen=True)
class PlanResult:
    N: int
    formula_tag: str
    epsilon: float
    delta: float
    inputs: dict = field(default_factory=dict)
    note: str = ""

    @property
    def asymptotic(self) -> float:
        """Leading-order count ln(1/δ)/(κ ε), or the raw quadratic bound."""
        return self.inputs.get("asymptotic", float("nan"))


def _check_eps_delta(eps, delta):
    eps, delta = float(eps), float(delta)
    if not 0.0 < eps < 1.0:
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {eps!r}")
    if not 0.0 < delta < 1.0:
        raise InvalidArgument(f"delta must lie in (0, 1), got {delta!r}")
    return eps, delta


def _log_ratio(rate: float, eps: float, delta: float) -> int:
    x = rate * eps
    if x >= 1.0:
        raise InvalidArgument(f"rate × epsilon = {x!r} must be below 1")
    return max(1, math.ceil(math.log(delta) / math.log1p(-x)))


def samples_at_rate(rate: float, eps: float, delta: float, tag: str, **inputs) -> PlanResult:
    eps, delta = _check_eps_delta(eps, delta)
    N = _log_ratio(rate, eps, delta)
    inputs.update(rate=rate, asymptotic=math.log(1.0 / delta) / (rate * eps))
    return PlanResult(N, tag, eps, delta, inputs)


def samples_sdi(gamma_star: float, eps: float, delta: float) -> PlanResult:
    """Semi-device-independent count; the per-round detection rate is 2(1 − γ*)."""
    g = float(gamma_star)
    if not 0.5 <= g < 1.0:
        raise InvalidArgument(f"gamma_star must lie in [1/2, 1), got {g!r}")
    return samples_at_rate(2.0 * (1.0 - g), eps, delta, "SDI", gamma_star=g)


def samples_standard(nu: float, eps: float, delta: float) -> PlanResult:
    """Fully trusted verification with spectral gap ν."""
    nu = float(nu)
    if not 0.0 < nu <= 1.0:
        raise InvalidArgument(f"nu must lie in (0, 1], got {nu!r}")
    return samples_at_rate(nu, eps, delta, "StandardQSV", nu=nu)


def samples_di_mermin(eps: float, delta: float) -> PlanResult:
    """Device-independent count from the Mermin-inequality pass bound."""
    return samples_at_rate(MERMIN_RATE, eps, delta, "DIMermin")


def samples_di_quadratic(c: float, eps: float, delta: float) -> PlanResult:
    """Order-of-magnitude count ⌈ln(1/δ)/(c² ε²)⌉ for robustness that is quadratic in ε."""
    c = float(c)
    if not c > 0.0:
        raise InvalidArgument(f"c must be positive, got {c!r}")
    eps, delta = _check_eps_delta(eps, delta)
    raw = math.log(1.0 / delta) / (c * c * eps * eps)
    return PlanResult(max(1, math.ceil(raw)), "DIQuadratic", eps, delta,
                      {"c": c, "asymptotic": raw}, note="order of magnitude only")


def robustness_trace_distance(eps_steering: float) -> float:
    """Trace-distance bound √ε / √(2(2 − √2)) for the XY protocol at correlation 2 − ε."""
    e = float(eps_steering)
    if e < 0.0:
        raise InvalidArgument("epsilon must be nonnegative")
    return math.sqrt(e) / math.sqrt(2.0 * (2.0 - math.sqrt(2.0)))


def asymptotic_coefficient(plan: PlanResult) -> float:
    """N·ε/ln(1/δ), which tends to 1/κ as ε → 0."""
    return plan.N * plan.epsilon / math.log(1.0 / plan.delta)


@dataclass(frozen=True)
class Fig4Row:
    epsilon: float
    N_standard: int
    N_sdi_bell: int
    N_sdi_ghz: int
    N_di_mermin: int


def fig4_table(eps_grid: Iterable[float], delta: float = 0.01) -> list[Fig4Row]:
    """Counts for standard, Bell SDI, GHZ SDI and Mermin DI verification per ε."""
    rows = []
    for eps in eps_grid:
        rows.append(Fig4Row(
            float(eps),
            samples_standard(NU_OPTIMAL, eps, delta).N,
            samples_sdi(GAMMA_BELL, eps, delta).N,
            samples_sdi(GAMMA_GHZ, eps, delta).N,
            samples_di_mermin(eps, delta).N,
        ))
    return rows


def fig4_csv(rows: Iterable[Fig4Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIG4_HEADER)
    for r in rows:
        w.writerow([format(r.epsilon, ".12g"), r.N_standard, r.N_sdi_bell, r.N_sdi_ghz, r.N_di_mermin])
    return buf.getvalue()
