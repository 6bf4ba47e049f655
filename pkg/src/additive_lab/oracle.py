"""Independent brute-force evaluation by trial division.

Nothing here touches the sieve: every n is factored from scratch, every
per-n value is a plain Python loop, and prefix sums use ``math.fsum``.
The per-n floating formulas deliberately mirror the scan's order of
operations (ascending primes, left-to-right sums) so agreement is exact.
Karamata weights are the exception: here each L(p) is its own adaptive
quadrature, while the scan integrates eta cumulatively, so those agree to
roughly 1e-12 relative rather than bit for bit.
"""
import math
from typing import List, Sequence

from .errors import DomainError
from .sieve import (AdditiveSpec, CheckpointStream, Functional, Mode, ValueKind)

ORACLE_MAX = 10**5


def trial_factor(n: int):
    pairs = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            a = 0
            while n % d == 0:
                n //= d
                a += 1
            pairs.append((d, a))
        d += 1 if d == 2 else 2
    if n > 1:
        pairs.append((n, 1))
    return pairs


def _additive(pairs, spec: AdditiveSpec):
    total = 0.0
    for p, a in pairs:
        w = spec.weight(p)
        total += w if spec.mode is Mode.SMALL_F else a * w
    return total


def _functional(pairs, fn: Functional):
    P = float(pairs[-1][0]) if pairs else 1.0
    w = len(pairs)
    W = sum(a for _, a in pairs)
    if fn is Functional.RECIP_P:
        return 1.0 / P
    if fn is Functional.MU2_OVER_P:
        return 1.0 / P if W == w else 0.0
    if fn is Functional.OMEGA_OVER_P:
        return float(w) / P
    if fn is Functional.OMEGA_DIFF_OVER_P:
        return float(W - w) / P
    if not pairs:
        return 0.0
    b = bb = 0.0
    for p, a in pairs:
        b += float(p)
        bb += a * float(p)
    return 1.0 / b - 1.0 / bb


def brute_force_oracle(limit: int, items: Sequence, checkpoints: Sequence[int] = None) -> List[CheckpointStream]:
    """Running sums of each item at each checkpoint, by per-n trial division."""
    limit = int(limit)
    if limit > ORACLE_MAX:
        raise DomainError(f"oracle limit {limit} above {ORACLE_MAX}")
    if limit < 1:
        raise DomainError("oracle limit must be at least 1")
    cps = [int(c) for c in (checkpoints or [limit])]
    if any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1 or cps[-1] > limit:
        raise DomainError("checkpoints must be strictly ascending inside [1, limit]")
    items = [Functional(i) if isinstance(i, str) else i for i in items]
    facts = [trial_factor(n) for n in range(1, cps[-1] + 1)]
    out = []
    for it in items:
        if isinstance(it, AdditiveSpec):
            per_n = [_additive(f, it) for f in facts]
            kind = it.value_kind
            label = it.name
        else:
            per_n = [_functional(f, it) for f in facts]
            kind = ValueKind.REAL
            label = it.value
        if kind is ValueKind.EXACT_INTEGER:
            partials = [sum(int(v) for v in per_n[:x]) for x in cps]
        else:
            partials = [math.fsum(per_n[:x]) for x in cps]
        out.append(CheckpointStream(label, kind, cps, partials))
    return out
