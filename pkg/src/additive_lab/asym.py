"""Main terms and constants: real zeta, Abelian main terms, prime constants, index inversion."""
import enum
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError
from .regvar import E_E, SlowlyVaryingSpec

# B_2, B_4, B_6 divided by their factorials
_B2 = 1.0 / 12.0
_B4 = -1.0 / 720.0
_B6 = 1.0 / 30240.0
_ZETA_TAIL_TOL = 1e-13


def zeta_real(s: float) -> float:
    """zeta(s) for real s > 1.

    Direct sum to N-1, then the integral tail N^(1-s)/(s-1) + N^-s/2 and two
    Euler-Maclaurin corrections; N grows until the next correction is below
    1e-13.
    """
    s = float(s)
    if not s > 1.0:
        raise DomainError("zeta_real needs s > 1 (pole at s = 1)")
    n = 2
    while True:
        # size of the first omitted correction term
        nxt = abs(_B6) * s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * n ** (-s - 5)
        if nxt < _ZETA_TAIL_TOL:
            break
        n += 1
    head = math.fsum(k ** -s for k in range(1, n))
    tail = (n ** (1 - s) / (s - 1) + 0.5 * n ** -s
            + _B2 * s * n ** (-s - 1)
            + _B4 * s * (s + 1) * (s + 2) * n ** (-s - 3))
    return head + tail


def zeta_ratio(rho: float) -> float:
    """zeta(rho+1)/(rho+1), the Abelian constant for index rho > 0."""
    return zeta_real(rho + 1.0) / (rho + 1.0)


def main_term_positive_index(x: float, rho: float, L: SlowlyVaryingSpec) -> float:
    if not rho > 0:
        raise DomainError("main term needs rho > 0; rho = 0 is handled by g(x)")
    x = float(x)
    if not x > math.e:
        raise DomainError("main term needs x > e")
    return zeta_ratio(rho) * x ** (rho + 1) * L.extended(x) / math.log(x)


def log_power_integral(x: float, alpha: float) -> float:
    """int_2^x t^-1 (log t)^(alpha-1) dt, exactly."""
    x = float(x)
    if not x > 2:
        raise DomainError("log_power_integral needs x > 2")
    if alpha == 0:
        return math.log(math.log(x)) - math.log(math.log(2.0))
    return (math.log(x) ** alpha - math.log(2.0) ** alpha) / alpha


# Rosser-Schoenfeld: pi(t) < 1.25506 t / log t for t > 1
_PI_UPPER = 1.25506
MAX_PRIME_CUTOFF = 1 << 31


def _primes_upto(n: int) -> np.ndarray:
    mark = np.ones(n + 1, dtype=bool)
    mark[:2] = False
    mark[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if mark[p]:
            mark[p * p::2 * p] = False
    return np.flatnonzero(mark)


def _prime_tail(L, N):
    """(estimate, rigorous upper bound) for sum_{p > N} L(p)/(p(p-1)).

    With phi(t) = L(t)/(t(t-1)) decreasing, partial summation gives
    sum_{p>N} phi(p) <= int_N^inf pi(t) (-phi'(t)) dt, and pi(t) is bounded by
    Rosser-Schoenfeld.  The estimate uses the density 1/log t instead.
    """
    def phi(t):
        return L.extended(t) / (t * (t - 1.0))

    def dphi(t):
        # derivative by a relative central difference; phi is smooth here
        e = t * 1e-6
        return (phi(t + e) - phi(t - e)) / (2 * e)

    # integrate in w = log t; beyond w = 300 the integrands are below 1e-120
    w0, w1 = math.log(N), 300.0
    bound, _ = integrate.quad(lambda w: _PI_UPPER * math.exp(2 * w) / w * (-dphi(math.exp(w))),
                              w0, w1, epsabs=0.0, epsrel=1e-8, limit=400)
    est, _ = integrate.quad(lambda w: phi(math.exp(w)) / w * math.exp(w),
                            w0, w1, epsabs=0.0, epsrel=1e-8, limit=400)
    if dphi(N) >= 0 or dphi(4 * N) >= 0:
        raise NumericError("L(t)/(t(t-1)) is not decreasing beyond the cutoff")
    return est, bound * (1 + 1e-6)


def prime_sum_constant(L: SlowlyVaryingSpec, tol: float = 1e-8, cutoff: int = None) -> float:
    """C = sum_p L(p)/(p(p-1)).

    Primes up to a cutoff are summed exactly (math.fsum); the tail is replaced by
    its density estimate.  The cutoff doubles until the rigorous tail bound is
    below ``tol`` (both the estimate and the true tail lie in [0, bound]).
    A fixed ``cutoff`` skips the search and the tolerance check.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    N = cutoff or 1 << 16
    while True:
        est, bound = _prime_tail(L, N)
        if bound < tol or cutoff is not None:
            break
        N *= 2
        if N > MAX_PRIME_CUTOFF:
            raise NumericError("prime cutoff needed for this tolerance exceeds the resource limit")
    p = _primes_upto(N).astype(float)
    vals = L.values(p) / (p * (p - 1.0))
    return math.fsum(vals) + est


@dataclass(frozen=True)
class MercerianResult:
    rho: float
    iterations: int
    bracket: float


def mercerian_solve(C: float) -> MercerianResult:
    """The unique rho > 0 with zeta(rho+1)/(rho+1) = C, by bisection."""
    C = float(C)
    if not C > 0:
        raise DomainError("C must be positive")
    lo, hi = 1e-9, 1.0
    if zeta_ratio(lo) < C:
        raise NumericError("C too large for the bisection bracket")
    while zeta_ratio(hi) > C:
        hi *= 2.0
        if hi > 1e6:
            raise NumericError("C too small for the bisection bracket")
    it = 0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if zeta_ratio(mid) > C:
            lo = mid
        else:
            hi = mid
        it += 1
    rho = lo if abs(zeta_ratio(lo) - C) <= abs(zeta_ratio(hi) - C) else hi
    if abs(zeta_ratio(rho) - C) > 1e-12 * max(1.0, C):
        raise NumericError("Mercerian bisection did not reach the residual target")
    return MercerianResult(rho, it, hi - lo)


class Cond34(str, enum.Enum):
    CONVERGES = "Converges"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


class Cond35(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"


@dataclass
class TauberianDiagnosis:
    cond_3_4: Cond34
    cond_3_5: Cond35
    integral_trace: List[Tuple[float, float]] = field(default_factory=list)
    witness: List[Tuple[float, float]] = field(default_factory=list)


def _truncated_integrals(L, t_max=4096.0):
    """int_{log x0}^{T} L(e^t) e^{-sqrt t} dt for T = 2, 4, ..., t_max (t = log x)."""
    t0 = math.log(L.x0)
    trace = []
    acc = 0.0
    a = t0
    T = 2.0
    while T <= t_max:
        if T > a:
            def f(t):
                return math.exp(L.log_at_log(t) - math.sqrt(t))
            val, _ = integrate.quad(f, a, T, limit=400)
            acc += val
            a = T
        trace.append((T, acc))
        T *= 2.0
    return trace


def _cond_3_4_builtin(L):
    if L.kind in ("const", "logpow", "loglog"):
        return Cond34.CONVERGES
    if L.kind == "explogpow":
        return Cond34.CONVERGES if L.param < 0.5 else Cond34.DIVERGES
    return None


def _cond_3_4_heuristic(trace):
    incs = [b[1] - a[1] for a, b in zip(trace, trace[1:])]
    tail = incs[-4:]
    if all(d <= 0 for d in tail):
        return Cond34.CONVERGES
    if all(b <= 0.5 * a for a, b in zip(tail, tail[1:])):
        return Cond34.CONVERGES
    if all(b >= a for a, b in zip(tail, tail[1:])):
        return Cond34.DIVERGES
    return Cond34.INCONCLUSIVE


def tauberian_probe(L: SlowlyVaryingSpec) -> TauberianDiagnosis:
    """Diagnose the two side conditions of the rho = 0 Tauberian theorem for L.

    The integral condition is decided analytically for built-in L and by a
    doubling heuristic for Karamata specs.  log x = O(L(x)) is judged on
    x = 10^3..10^12: it holds iff log x / L(x) does not grow across the grid.
    """
    trace = _truncated_integrals(L)
    c34 = _cond_3_4_builtin(L) or _cond_3_4_heuristic(trace)
    witness = []
    for e in range(3, 13):
        x = 10.0 ** e
        witness.append((x, math.log(x) / L.extended(x)))
    c35 = Cond35.HOLDS if witness[-1][1] <= witness[0][1] * (1 + 1e-9) else Cond35.FAILS
    return TauberianDiagnosis(c34, c35, trace, witness)


@dataclass(frozen=True)
class PntEnvelope:
    c: float = 1.0

    def eps(self, x: float) -> float:
        x = float(x)
        if x < E_E:
            raise DomainError("envelope needs x >= e^e (log log x >= 1)")
        lx = math.log(x)
        return lx ** 0.6 * math.log(lx) ** -0.2

    def bound(self, x: float) -> float:
        return float(x) * math.exp(-self.c * self.eps(x))


def pnt_envelope(x: float, c: float = 1.0) -> float:
    if not c > 0:
        raise DomainError("c must be positive")
    return PntEnvelope(c).bound(x)
