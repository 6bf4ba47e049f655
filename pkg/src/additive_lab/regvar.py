"""Slowly and regularly varying functions, index estimators and integral transforms."""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError

E_E = math.exp(math.e)

# Named auxiliary functions for the Karamata form L(x) = A exp(int_{x0}^x eta(t) dt/t),
# stored as functions of s = log t so that huge t never has to be formed.
# Each must accept scalars and numpy arrays, be bounded for s >= log 2 and tend to 0.
ETA_FUNCTIONS: dict = {
    "zero": lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    "inv_log": lambda s: 1.0 / s,
    "neg_inv_log": lambda s: -1.0 / s,
    "inv_sqrt_log": lambda s: 1.0 / np.sqrt(s),
    "osc": lambda s: np.sin(s) / s,
}


def register_eta(name: str, fn: Callable) -> None:
    """Register eta as a function of s = log t."""
    ETA_FUNCTIONS[name] = fn


@dataclass(frozen=True)
class SlowlyVaryingSpec:
    """One concrete slowly varying function.

    ``kind`` is one of ``const``, ``logpow``, ``loglog``, ``explogpow``, ``karamata``.
    ``param`` carries A, alpha or theta; Karamata additionally names its ``eta``.
    """

    kind: str
    param: float = 1.0
    eta: Optional[str] = None
    x0: float = 2.0

    def __post_init__(self):
        if self.kind == "const" and not self.param > 0:
            raise DomainError("Const(A) needs A > 0")
        if self.kind == "explogpow" and not 0 < self.param < 1:
            raise DomainError("ExpLogPow(theta) needs 0 < theta < 1")
        if self.kind == "karamata":
            if not self.param > 0:
                raise DomainError("Karamata needs A > 0")
            if self.eta not in ETA_FUNCTIONS:
                raise DomainError(f"unknown eta function {self.eta!r}")
            if self.x0 < 2:
                raise DomainError("Karamata needs x0 >= 2")
        if self.kind not in ("const", "logpow", "loglog", "explogpow", "karamata"):
            raise DomainError(f"unknown slowly varying kind {self.kind!r}")

    @classmethod
    def const(cls, a=1.0):
        return cls("const", float(a))

    @classmethod
    def logpow(cls, alpha):
        return cls("logpow", float(alpha))

    @classmethod
    def loglog(cls):
        # loglog is only positive beyond e; its base point is e^e where it equals 1
        return cls("loglog", 1.0, x0=E_E)

    @classmethod
    def explogpow(cls, theta):
        return cls("explogpow", float(theta))

    @classmethod
    def karamata(cls, a, eta, x0=2.0):
        return cls("karamata", float(a), eta=eta, x0=float(x0))

    @classmethod
    def parse(cls, text: str) -> "SlowlyVaryingSpec":
        """Parse ``const:A``, ``logpow:alpha``, ``loglog``, ``explogpow:theta``
        or ``karamata:A:eta[:x0]``."""
        parts = text.strip().split(":")
        name = parts[0].lower()
        try:
            if name == "const":
                return cls.const(float(parts[1]) if len(parts) > 1 else 1.0)
            if name == "logpow":
                return cls.logpow(float(parts[1]))
            if name == "loglog" and len(parts) == 1:
                return cls.loglog()
            if name == "explogpow":
                return cls.explogpow(float(parts[1]))
            if name == "karamata":
                x0 = float(parts[3]) if len(parts) > 3 else 2.0
                return cls.karamata(float(parts[1]), parts[2], x0)
        except (IndexError, ValueError) as exc:
            raise DomainError(f"cannot parse slowly varying spec {text!r}") from exc
        raise DomainError(f"cannot parse slowly varying spec {text!r}")

    def __str__(self):
        if self.kind == "loglog":
            return "loglog"
        if self.kind == "karamata":
            return f"karamata:{self.param!r}:{self.eta}:{self.x0!r}"
        return f"{self.kind}:{self.param!r}"

    @property
    def is_integer_valued(self) -> bool:
        return self.kind == "const" and float(self.param).is_integer()

    def __call__(self, x):
        return eval_slowly_varying(self, x)

    def extended(self, x: float) -> float:
        """Scalar value with L(x) := L(x0) below the base point."""
        return eval_slowly_varying(self, max(float(x), self.x0))

    def log_at_log(self, s: float) -> float:
        """log L(e^s), extended below x0; safe for s far beyond the float range of e^s."""
        s = max(float(s), math.log(self.x0))
        if self.kind == "const":
            return math.log(self.param)
        if self.kind == "logpow":
            return self.param * math.log(s)
        if self.kind == "loglog":
            return math.log(math.log(s))
        if self.kind == "explogpow":
            return s ** self.param
        return math.log(self.param) + _karamata_exponent_log(self.eta, self.x0, s)

    def values(self, x) -> np.ndarray:
        """Vectorized evaluation, extended by L(x0) below x0."""
        x = np.maximum(np.asarray(x, dtype=float), self.x0)
        if self.kind == "const":
            return np.full_like(x, self.param)
        if self.kind == "logpow":
            return np.log(x) ** self.param
        if self.kind == "loglog":
            return np.log(np.log(x))
        if self.kind == "explogpow":
            return np.exp(np.log(x) ** self.param)
        return _karamata_values(self, x)


def eval_slowly_varying(L: SlowlyVaryingSpec, x: float) -> float:
    x = float(x)
    if not x >= L.x0:
        raise DomainError(f"x={x} below base point x0={L.x0}")
    if L.kind == "const":
        return L.param
    if L.kind == "logpow":
        return math.log(x) ** L.param
    if L.kind == "loglog":
        return math.log(math.log(x))
    if L.kind == "explogpow":
        return math.exp(math.log(x) ** L.param)
    return L.param * math.exp(_karamata_exponent(L.eta, L.x0, x))


def _karamata_exponent(eta_name, x0, x):
    return _karamata_exponent_log(eta_name, x0, math.log(x))


@lru_cache(maxsize=4096)
def _karamata_exponent_log(eta_name, x0, s):
    s0 = math.log(x0)
    if s <= s0:
        return 0.0
    eta = ETA_FUNCTIONS[eta_name]
    val, _ = integrate.quad(lambda v: float(eta(v)), s0, s, epsabs=1e-300, epsrel=1e-10, limit=5000)
    return val


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _karamata_values(L, x):
    # cumulative Gauss-Legendre over the gaps between sorted log-abscissae
    eta = ETA_FUNCTIONS[L.eta]
    flat = x.ravel()
    s = np.log(flat)
    order = np.argsort(s, kind="stable")
    s_sorted = np.concatenate(([math.log(L.x0)], s[order]))
    out = np.empty_like(s_sorted)
    out[0] = 0.0
    a, b = s_sorted[:-1], s_sorted[1:]
    # split long gaps so each Gauss-Legendre panel is at most 0.25 wide in log t
    panels = np.maximum(1, np.ceil((b - a) / 0.25)).astype(np.int64)
    gap_id = np.repeat(np.arange(a.size), panels)
    k = np.arange(gap_id.size) - np.repeat(np.cumsum(panels) - panels, panels)
    width = (b - a)[gap_id] / panels[gap_id]
    lo = a[gap_id] + k * width
    half = 0.5 * width
    nodes = lo[:, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
    panel_int = (eta(nodes) * _GL_WEIGHTS[None, :]).sum(axis=1) * half
    gap_int = np.bincount(gap_id, weights=panel_int, minlength=a.size)
    out[1:] = np.cumsum(gap_int)
    result = np.empty_like(flat)
    result[order] = L.param * np.exp(out[1:])
    return result.reshape(x.shape)


@dataclass(frozen=True)
class RegVarSpec:
    """h(x) = x**index * L(x)."""

    index: float
    L: SlowlyVaryingSpec = field(default_factory=SlowlyVaryingSpec.const)

    def __call__(self, x):
        return eval_regvar(self, x)


def eval_regvar(h: RegVarSpec, x: float) -> float:
    return float(x) ** h.index * eval_slowly_varying(h.L, x)


def estimate_rv_index(samples: Sequence) -> float:
    """Least-squares slope of log h against log x.

    Unweighted on purpose: the Theta(1/log x) bias from a non-constant L is
    left visible rather than corrected.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("samples must be (x, h(x)) pairs")
    if len(arr) < 8:
        raise DomainError("need at least 8 samples")
    x, h = arr[:, 0], arr[:, 1]
    if (x <= 0).any() or (h <= 0).any():
        raise DomainError("samples must be positive")
    lx = np.log(x)
    if lx.max() - lx.min() < 4 * math.log(10) * (1 - 1e-12):
        raise DomainError("x grid must span at least 4 decades")
    lh = np.log(h)
    dx = lx - lx.mean()
    return float((dx * (lh - lh.mean())).sum() / (dx * dx).sum())


@dataclass(frozen=True)
class DeHaanEstimate:
    c_hat: float
    samples: list
    residual_spread: float


def _as_callable(ell):
    if isinstance(ell, SlowlyVaryingSpec):
        return ell.extended
    return ell


def estimate_dehaan_index(g: Callable, ell, x_grid: Sequence, lambdas: Sequence) -> DeHaanEstimate:
    """Average of (g(lambda x) - g(x)) / (ell(x) log lambda) over the grid."""
    x_grid = [float(x) for x in x_grid]
    lambdas = [float(l) for l in lambdas]
    if not x_grid or not lambdas:
        raise DomainError("empty x grid or lambda set")
    if any(b <= a for a, b in zip(x_grid, x_grid[1:])):
        raise DomainError("x grid must be increasing")
    if any(l <= 0 or l == 1 for l in lambdas):
        raise DomainError("lambda must be positive and different from 1")
    ell = _as_callable(ell)
    samples = []
    for x in x_grid:
        gx = g(x)
        lx = ell(x)
        for lam in lambdas:
            q = (g(lam * x) - gx) / (lx * math.log(lam))
            samples.append((x, lam, q))
    qs = np.array([s[2] for s in samples])
    c_hat = float(qs.mean())
    return DeHaanEstimate(c_hat, samples, float(np.abs(qs - c_hat).max()))


def ell_tilde(L: SlowlyVaryingSpec) -> Callable:
    """x -> L(x)/log x, the normalizer of the de Haan class used for g(x)."""
    return lambda x: L.extended(x) / math.log(x)


_GL16 = np.polynomial.legendre.leggauss(16)
_GL8 = np.polynomial.legendre.leggauss(8)
_GL6 = np.polynomial.legendre.leggauss(6)
_GL4 = np.polynomial.legendre.leggauss(4)


def _gl_panels(f, a, b, rule):
    nodes, weights = rule
    half = 0.5 * (b - a)
    u = a[:, None] + half[:, None] * (nodes[None, :] + 1.0)
    return (f(u) * weights[None, :]).sum(axis=1) * half


def g_of_x(x: float, L: SlowlyVaryingSpec, cap: int = 10**6, rtol: float = 1e-8) -> float:
    """g(x) = int_1^{x/2} [u]/u^2 * L(x/u)/log(x/u) du.

    Unit panels [k, k+1] are integrated exactly as k * int u^-2 ltilde(x/u) du;
    beyond ``cap`` the floor is replaced by u - 1/2 (mean fractional part).
    """
    x = float(x)
    if x < 2:
        raise DomainError("g(x) needs x >= 2")
    top = x / 2.0
    if top <= 1.0:
        return 0.0

    def integrand(u):
        y = x / u
        return L.values(y) / np.log(y) / (u * u)

    last_int = int(min(math.floor(top), cap))
    total = 0.0
    err = 0.0
    if last_int > 1:
        k = np.arange(1, last_int, dtype=float)
        small = k < 64
        for mask, hi_rule, lo_rule in ((small, _GL16, _GL8), (~small, _GL6, _GL4)):
            if not mask.any():
                continue
            a = k[mask]
            fine = _gl_panels(integrand, a, a + 1.0, hi_rule)
            coarse = _gl_panels(integrand, a, a + 1.0, lo_rule)
            total += math.fsum(a * fine)
            err += float(np.abs(a * (fine - coarse)).sum())
    if top <= cap:
        if top > last_int:
            val, e = integrate.quad(lambda u: last_int * float(integrand(np.array(u))),
                                    last_int, top, epsabs=0.0, epsrel=rtol * 1e-2)
            total += val
            err += e
    else:
        # smooth principal part on [cap, x/2], in the variable w = log u
        def smooth(w):
            u = math.exp(w)
            y = x / u
            return L.extended(y) / math.log(y) * (1.0 - 0.5 / u)

        val, e = integrate.quad(smooth, math.log(cap), math.log(top),
                                epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
        total += val
        err += e
    if err > rtol * abs(total):
        raise NumericError(f"g(x) quadrature error {err:.3g} exceeds tolerance")
    return total


def mellin_convolve(f: Callable, k: Callable, x: float, rtol: float = 1e-8) -> float:
    """(f * k)(x) = int_0^inf k(x/t) f(t) dt/t, computed as int_0^inf k(s) f(x/s) ds/s."""
    x = float(x)

    def integrand(s):
        return k(s) * f(x / s) / s

    probe = [abs(integrand(2.0 ** j)) for j in range(6, 14)]
    if not probe[-1] < probe[0]:
        raise NumericError("Mellin integrand tail is not decreasing")
    lo, e1 = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
    hi, e2 = integrate.quad(integrand, 1.0, math.inf, epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
    val = lo + hi
    if e1 + e2 > rtol * abs(val) and e1 + e2 > 1e-300:
        raise NumericError("Mellin convolution did not converge")
    return val


def karamata_convolution_probe(L: SlowlyVaryingSpec, h: Callable, c: float, B: float, x: float,
                               x0: Optional[float] = None):
    """Both sides of int_{x0}^{Bx} L(x/u) h(u) du ~ L(x) int_{x0}^inf h(u) du.

    ``c`` is the declared decay exponent of h (h(u) << u^-c); it must exceed 1.
    L is extended by L(x0) where x/u falls below its base point.
    """
    if not c > 1:
        raise DomainError("h must decay faster than u^-1 (c > 1)")
    if not B > 0:
        raise DomainError("B must be positive")
    x0 = L.x0 if x0 is None else float(x0)
    x = float(x)
    lw0 = math.log(x0)
    lw1 = math.log(B * x)
    lx = math.log(x)

    def lhs_int(w):
        u = math.exp(w)
        return L.extended(x / u) * h(u) * u

    # the kink where x/u crosses L's base point is a breakpoint
    pts = [p for p in (lx - math.log(L.x0),) if lw0 < p < lw1]
    lhs, _ = integrate.quad(lhs_int, lw0, lw1, points=pts or None, epsabs=0.0, epsrel=1e-10, limit=500)
    mass, _ = integrate.quad(h, x0, math.inf, epsabs=0.0, epsrel=1e-10, limit=500)
    return lhs, L.extended(x) * mass
