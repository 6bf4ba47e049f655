"""Exact summation of float64 arrays.

Every finite double is M * 2**(e - 53) with an integer mantissa M < 2**53, so a
sum of doubles is an integer multiple of 2**-1126.  We accumulate that integer
exactly and round once on readout.  The result is therefore independent of
summation order, segment layout and thread count.
"""
import numpy as np

_SCALE_BITS = 1126
_BIN_OFFSET = 1073  # frexp exponent of the smallest subnormal is -1073
_NBINS = 1024 + _BIN_OFFSET + 1
_LIMB = 18
_LIMB_MASK = (1 << _LIMB) - 1
# limb sums stay below 2**53 as long as a chunk has fewer than 2**34 entries
_MAX_CHUNK = 1 << 30


def exact_sum_scaled(values):
    """Return the exact sum of ``values`` as an integer in units of 2**-1126."""
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return 0
    if not np.isfinite(v).all():
        raise ValueError("cannot sum non-finite values exactly")
    total = 0
    for start in range(0, v.size, _MAX_CHUNK):
        total += _chunk(v[start:start + _MAX_CHUNK])
    return total


def _chunk(v):
    mant, expo = np.frexp(v)
    m = np.ldexp(mant, 53).astype(np.int64)
    bins = expo.astype(np.int64) + _BIN_OFFSET
    sign = np.sign(m)
    mag = np.abs(m)
    total = 0
    for shift in (0, _LIMB, 2 * _LIMB):
        limb = ((mag >> shift) & _LIMB_MASK) * sign
        sums = np.bincount(bins, weights=limb.astype(np.float64), minlength=_NBINS)
        for b in np.flatnonzero(sums):
            total += int(sums[b]) << int(b + shift)
    return total


def scaled_to_float(total):
    # int / int true division is correctly rounded in CPython
    return total / (1 << _SCALE_BITS)


def float_to_scaled(x):
    num, den = float(x).as_integer_ratio()
    return num * ((1 << _SCALE_BITS) // den)


def exact_sum(values):
    """Correctly rounded sum of a float array (same result as ``math.fsum``)."""
    return scaled_to_float(exact_sum_scaled(values))
