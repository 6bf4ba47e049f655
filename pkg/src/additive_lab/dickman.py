"""Dickman-de Bruijn rho, the delta(x) integral and its asymptotic companions."""
import csv
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError

E_E = math.exp(math.e)


@dataclass(frozen=True)
class DickmanTable:
    """rho(u) on the grid 2, 2+step, ..., u_max; closed forms below 2."""

    u_max: float
    step: float
    values: np.ndarray = field(repr=False)

    @property
    def per_unit(self) -> int:
        return int(round(1.0 / self.step))

    def grid(self) -> np.ndarray:
        return 2.0 + self.step * np.arange(self.values.size)

    def __call__(self, u):
        return dickman_rho(u, self)


def _rho_closed(u):
    if u < 0:
        return 0.0
    if u <= 1:
        return 1.0
    return 1.0 - math.log(u)


def _lagrange4(seg, h, t):
    """Cubic interpolation inside one unit segment sampled at spacing h (t in units of the segment start)."""
    n = seg.size - 1
    pos = t / h
    j = min(max(int(math.floor(pos)) - 1, 0), n - 3)
    xs = pos - j
    y0, y1, y2, y3 = seg[j:j + 4]
    # Lagrange basis on nodes 0,1,2,3
    return (-y0 * (xs - 1) * (xs - 2) * (xs - 3) / 6.0
            + y1 * xs * (xs - 2) * (xs - 3) / 2.0
            - y2 * xs * (xs - 1) * (xs - 3) / 2.0
            + y3 * xs * (xs - 1) * (xs - 2) / 6.0)


def _midpoint_interp(seg):
    """Values of a unit segment at its half-grid points, by 4-point stencils kept inside the segment."""
    n = seg.size - 1
    out = np.empty(n)
    # interior: symmetric stencil j-1..j+2 at xs = 1.5
    c_in = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
    out[1:n - 1] = (c_in[0] * seg[0:n - 2] + c_in[1] * seg[1:n - 1]
                    + c_in[2] * seg[2:n] + c_in[3] * seg[3:n + 1])
    # ends: one-sided stencils at xs = 0.5 and xs = 2.5
    c_lo = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0
    out[0] = c_lo @ seg[0:4]
    out[n - 1] = c_lo[::-1] @ seg[n - 3:n + 1]
    return out


def build_dickman_table(u_max: float = 50.0, step: float = 2.0 ** -10) -> DickmanTable:
    """Solve u rho'(u) = -rho(u-1) one unit interval [k, k+1] at a time.

    The delayed term always comes from the finished segment [k-1, k], with
    half-step values from cubic interpolation.  Forward stepping from rho(k)
    subtracts almost all of rho(k) by the end of the unit and lets rounding
    excite the slowly decaying c/u solution, so each unit is instead anchored
    at its right end by

        k rho(k+1) = int_k^{k+1} (s - k) rho(s-1) / s ds

    and integrated backwards with fourth-order (Runge-Kutta/Simpson) steps.
    Every operation then adds positive terms and relative accuracy survives
    down to rho(50) ~ 7e-97.
    """
    per_unit = int(round(1.0 / step))
    if per_unit < 8 or abs(per_unit * step - 1.0) > 1e-12:
        raise DomainError("step must be 1/N for an integer N >= 8")
    if u_max < 2:
        raise DomainError("u_max must be at least 2")
    units = int(math.ceil(u_max - 2.0 - 1e-12))
    h = 1.0 / per_unit
    # delayed segment for [2,3] is rho on [1,2], known in closed form
    s_prev = 1.0 - np.log(1.0 + h * np.arange(per_unit + 1))
    mid_prev = 1.0 - np.log(1.0 + h * (np.arange(per_unit) + 0.5))
    values = [np.array([1.0 - math.log(2.0)])]
    for k in range(units):
        u0 = 2.0 + k
        t = u0 + h * np.arange(per_unit + 1)
        t_mid = u0 + h * (np.arange(per_unit) + 0.5)
        f_node = s_prev / t
        f_mid = mid_prev / t_mid
        # Simpson panels for the anchor integral, weight (s - u0) >= 0
        w_node = t - u0
        w_mid = t_mid - u0
        anchor = math.fsum(h / 6.0 * (w_node[:-1] * f_node[:-1] + 4.0 * w_mid * f_mid
                                      + w_node[1:] * f_node[1:])) / u0
        incr = h / 6.0 * (f_node[:-1] + 4.0 * f_mid + f_node[1:])
        seg = np.empty(per_unit + 1)
        seg[-1] = anchor
        seg[:-1] = anchor + np.cumsum(incr[::-1])[::-1]
        values.append(seg[1:])
        s_prev = seg
        mid_prev = _midpoint_interp(seg)
    vals = np.concatenate(values)
    return DickmanTable(2.0 + units, h, vals)


_DEFAULT = {}


def default_table() -> DickmanTable:
    if "t" not in _DEFAULT:
        _DEFAULT["t"] = build_dickman_table()
    return _DEFAULT["t"]


def dickman_rho(u: float, table: DickmanTable = None) -> float:
    u = float(u)
    if u <= 2.0:
        return _rho_closed(u)
    table = table or default_table()
    if u > table.u_max + 1e-12:
        raise DomainError(f"u={u} beyond table u_max={table.u_max}; rebuild a larger table")
    n = table.per_unit
    k = min(int(math.floor(u - 2.0)), int(round(table.u_max - 2.0)) - 1)
    # segment [2+k, 3+k] occupies indices k*n .. (k+1)*n
    seg = table.values[k * n:(k + 1) * n + 1]
    return float(_lagrange4(seg, table.step, u - (2.0 + k)))


def dickman_rho_array(u, table: DickmanTable = None) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.array([dickman_rho(v, table) for v in u])


def dickman_asymptotic(u: float) -> float:
    """Log of the order-of-magnitude form -u(log u + loglog u - 1 + (loglog u - 1)/log u)."""
    u = float(u)
    if not u > math.e:
        raise DomainError("asymptotic form needs u > e")
    lu = math.log(u)
    llu = math.log(lu)
    return -u * (lu + llu - 1.0 + (llu - 1.0) / lu)


def export_table_csv(table: DickmanTable, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# step={table.step!r} u_max={table.u_max!r}\n")
        fh.write("u,value\n")
        for u, v in zip(table.grid(), table.values):
            fh.write(f"{u:.17g},{v:.17g}\n")


def import_table_csv(path) -> DickmanTable:
    us, vs = [], []
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for row in csv.DictReader(rows):
        us.append(float(row["u"]))
        vs.append(float(row["value"]))
    if len(us) < 9:
        raise DomainError("table file too short")
    step = us[1] - us[0]
    per_unit = int(round(1.0 / step))
    return DickmanTable(us[-1], 1.0 / per_unit, np.array(vs))


@dataclass(frozen=True)
class DeltaResult:
    x: float
    value: float
    quadrature_error_estimate: float
    breakpoints: List[float]


def delta(x: float, table: DickmanTable = None, rtol: float = 1e-8) -> DeltaResult:
    """delta(x) = int_2^x rho(log x / log t) dt / t^2, integrated in v = log t.

    rho has kinks where log x / v is an integer, i.e. at v = log x / k.
    """
    x = float(x)
    if x < 2:
        raise DomainError("delta(x) needs x >= 2")
    if x == 2:
        return DeltaResult(x, 0.0, 0.0, [])
    table = table or default_table()
    lx = math.log(x)
    l2 = math.log(2.0)
    if lx / l2 > table.u_max:
        raise DomainError("log x / log 2 exceeds the Dickman table range")
    kmax = int(math.floor(lx / l2))
    bps = sorted(lx / k for k in range(1, kmax + 1) if l2 < lx / k < lx)
    edges = [l2] + bps + [lx]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(lambda v: dickman_rho(lx / v, table) * math.exp(-v), a, b,
                                epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
        total += val
        err += e
    if err > rtol * total:
        raise NumericError(f"delta({x}) quadrature error {err:.3g} above tolerance")
    return DeltaResult(x, total, err, bps)


def iterated_logs(x: float):
    x = float(x)
    if not x > E_E:
        raise DomainError("log_3 x needs x > e^e")
    l1 = math.log(x)
    l2 = math.log(l1)
    return l1, l2, math.log(l2)


def g_r(x: float, r: int) -> float:
    if r < 0 or int(r) != r:
        raise DomainError("r must be a non-negative integer")
    _, l2, l3 = iterated_logs(x)
    s = l3 + math.log(1 + r)
    return ((s - 2.0 - math.log(2.0)) / (2.0 * l2) * (1.0 + 2.0 / l2)
            - (s - math.log(2.0)) ** 2 / (8.0 * l2 * l2))


def delta_asymptotic(x: float) -> float:
    """Log-scale main term -(2 log x log_2 x)^(1/2) (1 + g_0(x))."""
    l1, l2, _ = iterated_logs(x)
    return -math.sqrt(2.0 * l1 * l2) * (1.0 + g_r(x, 0))


def recip_beta_asymptotic(x: float) -> float:
    """Log-scale main term of sum (1/beta - 1/B): log x - 2 (log x log_2 x)^(1/2) (1 + g_1(x))."""
    l1, l2, _ = iterated_logs(x)
    return l1 - 2.0 * math.sqrt(l1 * l2) * (1.0 + g_r(x, 1))


def delta_slow_variation_probe(x: float, t: float, table: DickmanTable = None) -> float:
    """delta(x/t) / delta(x) for 1 <= t <= log^12 x with x/t >= 2."""
    x, t = float(x), float(t)
    if x <= 2:
        raise DomainError("x must exceed 2")
    if not 1.0 <= t <= math.log(x) ** 12:
        raise DomainError("t outside [1, log^12 x]")
    if x / t < 2:
        raise DomainError("x/t below 2, delta vanishes there")
    if t == 1.0:
        return 1.0
    return delta(x / t, table).value / delta(x, table).value
