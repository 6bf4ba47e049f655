"""Smallest-prime-factor tables and exact evaluation of additive functions over [1, limit]."""
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError, ResourceError
from .exactsum import exact_sum_scaled, scaled_to_float
from .regvar import SlowlyVaryingSpec

DEFAULT_SEGMENT = 1 << 20
INT128_MAX = (1 << 127) - 1


@dataclass(frozen=True)
class FactorTable:
    limit: int
    spf: np.ndarray = field(repr=False)

    @cached_property
    def primes(self) -> np.ndarray:
        n = np.arange(self.limit + 1, dtype=self.spf.dtype)
        is_p = self.spf == n
        is_p[:2] = False
        return np.flatnonzero(is_p)

    @cached_property
    def prime_index(self) -> np.ndarray:
        """prime_index[p] is the position of prime p in ``primes``."""
        idx = np.zeros(self.limit + 1, dtype=np.int32)
        idx[self.primes] = np.arange(self.primes.size, dtype=np.int32)
        return idx


def _small_primes(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    mark = np.ones(n + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if mark[p]:
            mark[p * p::p] = False
    return np.flatnonzero(mark)


def _sieve_segment(spf, base, lo, hi):
    view = spf[lo:hi]
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, -(-lo // p) * p)
        sl = view[start - lo::p]
        sl[sl == 0] = p
    zero = np.flatnonzero(view == 0)
    view[zero] = zero + lo


def build_factor_table(limit: int, segment_size: int = DEFAULT_SEGMENT, threads: int = 1) -> FactorTable:
    """Segmented smallest-prime-factor sieve on [2, limit]."""
    limit = int(limit)
    if limit < 2:
        raise DomainError("factor table needs limit >= 2")
    if segment_size < 1:
        raise DomainError("segment size must be positive")
    dtype = np.uint32 if limit < 2**32 else np.uint64
    try:
        spf = np.zeros(limit + 1, dtype=dtype)
    except MemoryError as exc:
        raise ResourceError(f"cannot allocate factor table for limit={limit}") from exc
    base = _small_primes(math.isqrt(limit))
    bounds = [(lo, min(lo + segment_size, limit + 1)) for lo in range(2, limit + 1, segment_size)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(lambda b: _sieve_segment(spf, base, *b), bounds))
    else:
        for lo, hi in bounds:
            _sieve_segment(spf, base, lo, hi)
    spf[1] = 1
    spf.flags.writeable = False
    return FactorTable(limit, spf)


@dataclass(frozen=True)
class Factorization:
    n: int
    pairs: Tuple[Tuple[int, int], ...]

    def value(self) -> int:
        out = 1
        for p, a in self.pairs:
            out *= p ** a
        return out


def factorize(n: int, table: FactorTable) -> Factorization:
    n = int(n)
    if n < 2 or n > table.limit:
        raise DomainError(f"n={n} outside [2, {table.limit}]")
    pairs = []
    m = n
    while m > 1:
        p = int(table.spf[m])
        a = 0
        while m % p == 0:
            m //= p
            a += 1
        pairs.append((p, a))
    return Factorization(n, tuple(pairs))


def largest_prime_factor(n: int, table: FactorTable) -> int:
    n = int(n)
    if n < 1 or n > table.limit:
        raise DomainError(f"n={n} outside [1, {table.limit}]")
    if n == 1:
        return 1
    return factorize(n, table).pairs[-1][0]


class Mode(str, enum.Enum):
    SMALL_F = "f"
    BIG_F = "F"


class ValueKind(str, enum.Enum):
    EXACT_INTEGER = "exact"
    REAL = "real"


@dataclass(frozen=True)
class AdditiveSpec:
    """f(n) = sum_{p|n} h(p) or F(n) = sum_{p^a||n} a h(p) with h(p) = p**index * L(p)."""

    index: float = 0.0
    L: SlowlyVaryingSpec = field(default_factory=SlowlyVaryingSpec.const)
    mode: Mode = Mode.SMALL_F
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.name:
            object.__setattr__(self, "name", f"{self.mode.value}[rho={self.index!r},L={self.L}]")

    @property
    def value_kind(self) -> ValueKind:
        idx = float(self.index)
        if idx >= 0 and idx.is_integer() and self.L.is_integer_valued:
            return ValueKind.EXACT_INTEGER
        return ValueKind.REAL

    def weight(self, p: int) -> float:
        """h(p); L is extended by L(x0) below its base point."""
        return float(p) ** self.index * self.L.extended(p)

    def prime_weights(self, primes: np.ndarray) -> np.ndarray:
        if self.L.kind == "karamata":
            p = np.asarray(primes, dtype=float)
            return p ** self.index * self.L.values(p)
        # scalar path keeps the table bit-identical to per-n evaluation
        return np.array([self.weight(int(p)) for p in primes], dtype=float)


def omega():
    return AdditiveSpec(0, SlowlyVaryingSpec.const(1), Mode.SMALL_F, "omega")


def big_omega():
    return AdditiveSpec(0, SlowlyVaryingSpec.const(1), Mode.BIG_F, "Omega")


def beta():
    return AdditiveSpec(1, SlowlyVaryingSpec.const(1), Mode.SMALL_F, "beta")


def big_b():
    return AdditiveSpec(1, SlowlyVaryingSpec.const(1), Mode.BIG_F, "B")


def g_alpha(alpha: float):
    return AdditiveSpec(0, SlowlyVaryingSpec.logpow(alpha), Mode.SMALL_F, f"G_{alpha!r}")


def eval_additive(fact: Factorization, spec: AdditiveSpec):
    total = 0.0
    for p, a in fact.pairs:
        total += spec.weight(p) if spec.mode is Mode.SMALL_F else a * spec.weight(p)
    if spec.value_kind is ValueKind.EXACT_INTEGER:
        return int(total)
    return total


class Functional(str, enum.Enum):
    """Derived per-n functionals built from P(n), omega, Omega, beta, B."""

    RECIP_P = "recip_P"
    MU2_OVER_P = "mu2_over_P"
    OMEGA_OVER_P = "omega_over_P"
    OMEGA_DIFF_OVER_P = "omega_diff_over_P"
    RECIP_BETA_DIFF = "recip_beta_diff"

    @property
    def value_kind(self):
        return ValueKind.REAL


ScanItem = Union[AdditiveSpec, Functional]


@dataclass
class CheckpointStream:
    item: str
    kind: ValueKind
    checkpoints: List[int]
    partials: list

    def at(self, x: int):
        return self.partials[self.checkpoints.index(x)]


def _factor_rows(spf, lo, hi):
    """Prime-factor rows (offset, p, exponent) of every n in [lo, hi), ascending p per n."""
    m = np.arange(lo, hi, dtype=np.int64)
    idx = np.arange(hi - lo, dtype=np.int64)
    keep = m > 1
    m, idx = m[keep], idx[keep]
    rows = []
    while m.size:
        p = spf[m].astype(np.int64)
        m //= p
        a = np.ones_like(m)
        sel = np.flatnonzero(m % p == 0)
        while sel.size:
            m[sel] //= p[sel]
            a[sel] += 1
            sel = sel[m[sel] % p[sel] == 0]
        rows.append((idx, p, a))
        keep = m > 1
        m, idx = m[keep], idx[keep]
    return rows


class _Segment:
    """Per-n arithmetic data for one segment, computed lazily from factor rows."""

    def __init__(self, table, lo, hi):
        self.lo, self.hi, self.size = lo, hi, hi - lo
        self.table = table
        rows = _factor_rows(table.spf, lo, hi)
        if rows:
            self.idx = np.concatenate([r[0] for r in rows])
            self.p = np.concatenate([r[1] for r in rows])
            self.a = np.concatenate([r[2] for r in rows])
        else:
            self.idx = self.p = self.a = np.zeros(0, dtype=np.int64)
        self._rows = rows
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def omega(self):
        return self._get("omega", lambda: np.bincount(self.idx, minlength=self.size).astype(np.int64))

    @property
    def big_omega(self):
        return self._get("Omega", lambda: np.bincount(self.idx, weights=self.a.astype(float),
                                                      minlength=self.size).astype(np.int64))

    @property
    def largest(self):
        def build():
            P = np.ones(self.size, dtype=np.int64)
            for idx, p, _ in self._rows:
                P[idx] = p
            return P
        return self._get("P", build)

    @property
    def squarefree(self):
        def build():
            sq = np.ones(self.size, dtype=bool)
            sq[self.idx[self.a > 1]] = False
            return sq
        return self._get("sq", build)

    def additive(self, spec: AdditiveSpec, weights: np.ndarray):
        def build():
            w = weights[self.table.prime_index[self.p]]
            if spec.mode is Mode.BIG_F:
                w = self.a * w
            return np.bincount(self.idx, weights=w, minlength=self.size)
        return self._get(("add", spec), build)

    def functional(self, fn: Functional, weights):
        P = self.largest.astype(float)
        if fn is Functional.RECIP_P:
            return 1.0 / P
        if fn is Functional.MU2_OVER_P:
            return np.where(self.squarefree, 1.0 / P, 0.0)
        if fn is Functional.OMEGA_OVER_P:
            return self.omega.astype(float) / P
        if fn is Functional.OMEGA_DIFF_OVER_P:
            return (self.big_omega - self.omega).astype(float) / P
        b = self.additive(beta(), weights["beta"])
        bb = self.additive(big_b(), weights["B"])
        n = np.arange(self.lo, self.hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1.0 / b - 1.0 / bb
        out[n < 2] = 0.0
        return out


def _check_checkpoints(checkpoints, limit):
    cps = [int(c) for c in checkpoints]
    if not cps:
        raise DomainError("empty checkpoint list")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise DomainError("checkpoints must be strictly ascending")
    if cps[0] < 1 or cps[-1] > limit:
        raise DomainError(f"checkpoints must lie in [1, {limit}]")
    return cps


def summatory_scan(limit: int, items: Sequence[ScanItem], checkpoints: Sequence[int],
                   table: FactorTable = None, segment_size: int = DEFAULT_SEGMENT,
                   threads: int = 1) -> List[CheckpointStream]:
    """Exact running sums of every item at every checkpoint, in one pass over [1, max checkpoint].

    Integer-valued items are accumulated as Python integers (hard error past
    128 bits); real-valued items are summed exactly and rounded once.
    """
    limit = int(limit)
    cps = _check_checkpoints(checkpoints, limit)
    items = [Functional(i) if isinstance(i, str) else i for i in items]
    top = cps[-1]
    if table is None:
        table = build_factor_table(max(top, 2), segment_size, threads)
    elif table.limit < top:
        raise DomainError("factor table smaller than the last checkpoint")

    weights = {}
    for it in items:
        if isinstance(it, AdditiveSpec):
            weights[it] = it.prime_weights(table.primes)
        elif it is Functional.RECIP_BETA_DIFF:
            weights["beta"] = weights["B"] = table.primes.astype(float)
    cp_arr = np.array(cps, dtype=np.int64)

    def run(bounds):
        lo, hi = bounds
        seg = _Segment(table, lo, hi)
        cuts = np.searchsorted(np.arange(lo, hi), cp_arr, side="right")
        # a piece ends at each checkpoint inside the segment
        edges = np.concatenate(([0], cuts))
        out = []
        for it in items:
            if isinstance(it, AdditiveSpec):
                vals = seg.additive(it, weights[it])
                kind = it.value_kind
            else:
                vals = seg.functional(it, weights)
                kind = ValueKind.REAL
            out.append(_bucket_sums(vals, edges, kind))
        return out

    bounds = [(lo, min(lo + segment_size, top + 1)) for lo in range(1, top + 1, segment_size)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, bounds))
    else:
        results = [run(b) for b in bounds]

    streams = []
    for j, it in enumerate(items):
        totals = [0] * len(cps)
        for res in results:
            for k, v in enumerate(res[j]):
                totals[k] += v
        running, partials = 0, []
        kind = it.value_kind
        for v in totals:
            running += v
            if kind is ValueKind.EXACT_INTEGER:
                if running > INT128_MAX or running < -INT128_MAX - 1:
                    raise OverflowError(f"{getattr(it, 'name', it)} overflows the 128-bit accumulator")
                partials.append(running)
            else:
                partials.append(scaled_to_float(running))
        label = it.name if isinstance(it, AdditiveSpec) else it.value
        streams.append(CheckpointStream(label, kind, cps, partials))
    return streams


def _bucket_sums(vals, edges, kind):
    out = []
    if kind is ValueKind.EXACT_INTEGER:
        if vals.size and np.abs(vals).max() >= 2.0**53:
            raise OverflowError("per-n value too large for exact integer evaluation")
        iv = vals.astype(np.int64)
        for a, b in zip(edges[:-1], edges[1:]):
            out.append(int(iv[a:b].sum()) if b > a else 0)
    else:
        for a, b in zip(edges[:-1], edges[1:]):
            out.append(exact_sum_scaled(vals[a:b]) if b > a else 0)
    return out


# --- prime-power identities -------------------------------------------------

def _scaled_prime_weights(spec, primes):
    """h(p) as integers sharing one power-of-two denominator."""
    ratios = [float(v).as_integer_ratio() for v in spec.prime_weights(primes)]
    shift = max((den.bit_length() - 1 for _, den in ratios), default=0)
    return [num << (shift - (den.bit_length() - 1)) for num, den in ratios], shift


def _limbs(values, bits=31):
    values = list(values)
    width = max((abs(v).bit_length() for v in values), default=1)
    nl = max(1, -(-width // bits))
    mask = (1 << bits) - 1
    out = []
    for i in range(nl):
        out.append(np.array([(abs(v) >> (bits * i)) & mask if v >= 0 else -((abs(v) >> (bits * i)) & mask)
                             for v in values], dtype=np.int64))
    return out, bits


def _recombine(limb_vals, bits):
    return [sum(int(l[i]) << (bits * k) for k, l in enumerate(limb_vals)) for i in range(len(limb_vals[0]))]


def identity_2_11_sweep(xmax: int, spec: AdditiveSpec, table: FactorTable):
    """Exact lhs and rhs of the prime-power decomposition for every x in [1, xmax].

    lhs(x) = sum_{n<=x} g(n) from the factor table;
    rhs(x) = sum_{p^v<=x} (g(p^v) - g(p^{v-1})) floor(x/p^v).
    Values are integers in units of 2**-shift; returns (lhs, rhs, shift).
    """
    xmax = int(xmax)
    if xmax < 1 or xmax > table.limit:
        raise DomainError(f"x must lie in [1, {table.limit}]")
    primes = table.primes[table.primes <= xmax]
    H, shift = _scaled_prime_weights(spec, primes)
    Hlimbs, bits = _limbs(H)

    # lhs: per-n exact sums from factor rows, accumulated in int64 limbs
    lhs_limbs = []
    if xmax >= 2:
        seg = _Segment(table, 1, xmax + 1)
        pos = table.prime_index[seg.p]
        for hl in Hlimbs:
            w = hl[pos].astype(float)
            if spec.mode is Mode.BIG_F:
                w = w * seg.a
            per_n = np.bincount(seg.idx, weights=w, minlength=xmax).astype(np.int64)
            lhs_limbs.append(np.cumsum(per_n))
    else:
        lhs_limbs = [np.zeros(1, dtype=np.int64) for _ in Hlimbs]
    lhs = _recombine(lhs_limbs, bits)

    # rhs: floor-count matrix against prime powers
    q_list, owner = [], []
    for i, p in enumerate(int(p) for p in primes):
        q = p
        while q <= xmax:
            if spec.mode is Mode.BIG_F or q == p:
                q_list.append(q)
                owner.append(i)
            q *= p
    q_arr = np.array(q_list, dtype=np.int64)
    D = [hl[np.array(owner, dtype=np.int64)] if owner else np.zeros(0, dtype=np.int64) for hl in Hlimbs]
    rhs_limbs = [np.zeros(xmax, dtype=np.int64) for _ in Hlimbs]
    xs = np.arange(1, xmax + 1, dtype=np.int64)
    chunk = max(1, 4_000_000 // max(1, q_arr.size))
    for start in range(0, xmax, chunk):
        xc = xs[start:start + chunk]
        F = xc[:, None] // q_arr[None, :]
        for k, d in enumerate(D):
            rhs_limbs[k][start:start + chunk] = F @ d
    rhs = _recombine(rhs_limbs, bits)
    return lhs, rhs, shift


def _as_value(v, shift, kind):
    if kind is ValueKind.EXACT_INTEGER and shift == 0:
        return int(v)
    return Fraction(v, 1 << shift)


def identity_2_11_check(x: int, spec: AdditiveSpec, table: FactorTable):
    """(lhs, rhs) of the prime-power decomposition at one x, as exact numbers."""
    lhs, rhs, shift = identity_2_11_sweep(x, spec, table)
    return _as_value(lhs[-1], shift, spec.value_kind), _as_value(rhs[-1], shift, spec.value_kind)


def ff_difference(x: int, spec: AdditiveSpec, table: FactorTable):
    """sum_{n<=x} (F(n) - f(n)) = sum_{p^v<=x, v>=2} h(p) floor(x/p^v), exactly."""
    x = int(x)
    if x < 1 or x > table.limit:
        raise DomainError(f"x must lie in [1, {table.limit}]")
    primes = table.primes[table.primes <= math.isqrt(x)]
    H, shift = _scaled_prime_weights(spec, primes)
    total = 0
    for hp, p in zip(H, (int(p) for p in primes)):
        q = p * p
        cnt = 0
        while q <= x:
            cnt += x // q
            q *= p
        total += hp * cnt
    if spec.value_kind is ValueKind.EXACT_INTEGER and shift == 0:
        return total
    return total / (1 << shift)
