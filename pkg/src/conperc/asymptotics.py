"""Closed forms for flowers with a very long arm (V -> infinity, U fixed).

Classical threshold: 1 - p_th ~ A / V with A = ln(U / (U - 1)).
Quantum threshold:   1 - c_th ~ m / (2V), where m solves

    m + ln(m)/2 - ln(V)/2 + ln K = 0,   K = 4 (sqrt(U) - 1),

so m ~ ln(V)/2.  V enters only through ln V, and every function here that
needs V accepts ``lnV`` instead so that V ~ 10^5000 is representable.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .flower import bisect_increasing, threshold_deficit
from .weights import DomainError


def _check_u(U):
    if U < 2:
        raise DomainError("asymptotic forms need U >= 2")


def _resolve_lnv(V=None, lnV=None) -> float:
    if (V is None) == (lnV is None):
        raise DomainError("give exactly one of V and lnV")
    if lnV is None:
        if V < 1:
            raise DomainError("V must be >= 1")
        return math.log(V)
    return float(lnV)


def classical_constant(U) -> float:
    _check_u(U)
    return math.log(U / (U - 1))


def quantum_constant(U) -> float:
    _check_u(U)
    return 4.0 * (math.sqrt(U) - 1.0)


# -- thresholds -------------------------------------------------------------

def pth_asymptotic(U, V) -> float:
    return 1.0 - classical_constant(U) / V


def m_equation(m, U, lnV) -> float:
    return m + 0.5 * math.log(m) - 0.5 * lnV + math.log(quantum_constant(U))


def m_solve(U, V=None, *, lnV=None, tol=1e-12) -> float:
    _check_u(U)
    lnV = _resolve_lnv(V, lnV)
    lo, hi = 1e-6, lnV
    if hi <= lo or m_equation(hi, U, lnV) < 0 or m_equation(lo, U, lnV) > 0:
        # the left end is positive once ln V < 2 ln K - 13.8 or so
        need = 2.0 * math.log(quantum_constant(U)) + math.log(1e-6) + 2e-6
        raise DomainError(f"no root for ln V = {lnV}; need ln V > {max(need, lo):.3g}")
    return bisect_increasing(lambda m: m_equation(m, U, lnV), lo, hi, tol=tol)


def cth_deficit_asymptotic(U, V=None, *, lnV=None) -> float:
    lnV = _resolve_lnv(V, lnV)
    return 0.5 * m_solve(U, lnV=lnV) * math.exp(-lnV)


def cth_asymptotic(U, V=None, *, lnV=None) -> float:
    return 1.0 - cth_deficit_asymptotic(U, V, lnV=lnV)


def cth_leading(V) -> float:
    return 1.0 - 0.25 * math.log(V) / V


def long_path_crossing(U, V) -> tuple[float, float]:
    """(p_th^V, c_th^V) from the exact thresholds."""
    out = []
    for calc in ("classical", "quantum"):
        d = threshold_deficit(calc, U, V)
        out.append(math.exp(V * math.log1p(-d)))
    return out[0], out[1]


def long_path_asymptotes(U, V) -> tuple[float, float]:
    _check_u(U)
    return (U - 1) / U, V ** -0.25


# -- exponents --------------------------------------------------------------

def nu_classical_limit(U) -> float:
    return math.log(U) / math.log1p((U - 1) * classical_constant(U))


def d_minus_df_classical_limit(U) -> float:
    a = classical_constant(U)
    return (math.log(U) - math.log((1 - U) + 2.0 / a)) / math.log(U)


def beta_classical_limit(U) -> float:
    return nu_classical_limit(U) * d_minus_df_classical_limit(U)


def classical_ratio_limit(U, V) -> float:
    """Large-V form of the critical layer ratio, (f1 + f2) / ((U + V) sqrt(p_th))."""
    a = classical_constant(U)
    f2 = -(V / a) * (2 * math.exp(-a) + a * math.exp(-a) - 2)
    p = 1.0 - threshold_deficit("classical", U, V)
    return (U + f2) / ((U + V) * math.sqrt(p))


def lambda_tiers(U, V=None, *, lnV=None) -> tuple[float, float, float]:
    """The relevant RG eigenvalue at c_th in three levels of approximation.

    1. full large-V expression in m,  2. sqrt(U) + K m / 2,  3. ln V.
    """
    _check_u(U)
    lnV = _resolve_lnv(V, lnV)
    m = m_solve(U, lnV=lnV)
    m_over_v = m * math.exp(-lnV)
    tail = math.sqrt(-math.expm1(-m))
    full = 0.5 * (1 + m_over_v) * (
        math.sqrt(U) * (1 - m * U * math.exp(-lnV)) * (1 + tail)
        + math.sqrt(m) * math.exp(0.5 * lnV - m) * (1 + math.sqrt(U * m_over_v)) / tail
    )
    mid = math.sqrt(U) + 0.5 * quantum_constant(U) * m
    return full, mid, lnV


def nu_quantum_tiers(U, V=None, *, lnV=None) -> tuple[float, float, float]:
    lam = lambda_tiers(U, V, lnV=lnV)
    return tuple(math.log(U) / math.log(x) for x in lam)


def nu_quantum_asymptotic(U, V=None, *, lnV=None) -> float:
    lnV = _resolve_lnv(V, lnV)
    return math.log(U) / math.log(lnV)


def d_minus_df_quantum(U, V=None, *, lnV=None, corrected=True) -> float:
    """ln(ln V) / ln U, optionally with the -2 ln 2 correction (ratio 4 / ln V)."""
    _check_u(U)
    lnV = _resolve_lnv(V, lnV)
    lead = math.log(lnV)
    return (lead - 2 * math.log(2) if corrected else lead) / math.log(U)


def beta_quantum_product(U, V=None, *, lnV=None) -> float:
    """nu (full eigenvalue) times the corrected d - d_f."""
    nu = nu_quantum_tiers(U, V, lnV=lnV)[0]
    return nu * d_minus_df_quantum(U, V, lnV=lnV)


@dataclass
class AsymptoticReport:
    U: int
    lnV: float
    p_th_deficit: float
    c_th_deficit: float
    m_root: float
    nu_classical_limit: float
    nu_quantum_asym: float
    nu_quantum_tiers: tuple[float, float, float]
    lambda_tiers: tuple[float, float, float]
    d_minus_df: tuple[float, float]
    beta: tuple[float, float]
    long_path_crossing: tuple[float, float]

    @property
    def p_th_asym(self) -> float:
        return 1.0 - self.p_th_deficit

    @property
    def c_th_asym(self) -> float:
        return 1.0 - self.c_th_deficit

    def as_dict(self) -> dict:
        out = asdict(self)
        out["p_th_asym"] = self.p_th_asym
        out["c_th_asym"] = self.c_th_asym
        return out


def table1_exponents(U, V=None, *, lnV=None) -> AsymptoticReport:
    _check_u(U)
    lnV = _resolve_lnv(V, lnV)
    m = m_solve(U, lnV=lnV)
    inv_v = math.exp(-lnV)
    return AsymptoticReport(
        U=U,
        lnV=lnV,
        p_th_deficit=classical_constant(U) * inv_v,
        c_th_deficit=0.5 * m * inv_v,
        m_root=m,
        nu_classical_limit=nu_classical_limit(U),
        nu_quantum_asym=nu_quantum_asymptotic(U, lnV=lnV),
        nu_quantum_tiers=nu_quantum_tiers(U, lnV=lnV),
        lambda_tiers=lambda_tiers(U, lnV=lnV),
        d_minus_df=(d_minus_df_classical_limit(U), d_minus_df_quantum(U, lnV=lnV, corrected=False)),
        beta=(beta_classical_limit(U), 1.0),
        long_path_crossing=((U - 1) / U, math.exp(-0.25 * lnV)),
    )


def resilience_theory(U, V, q) -> tuple[float, float]:
    """Predicted (A_p, A_c) for flowers whose long arms are stretched by q."""
    _check_u(U)
    if q < 1:
        raise DomainError("q must be >= 1")
    a_p = 0.5 * classical_constant(U)
    a_c = math.sqrt(V) * math.sqrt(q * math.log(q) / 8.0)
    return a_p, a_c
