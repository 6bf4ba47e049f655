import pytest

from additive_lab.errors import DomainError
from additive_lab.oracle import brute_force_oracle, trial_factor
from additive_lab.regvar import SlowlyVaryingSpec as S
from additive_lab.sieve import (AdditiveSpec, Functional, Mode, beta, big_b, big_omega, g_alpha, omega,
                                summatory_scan)

BUILT_IN_L = [S.const(1), S.const(2.5), S.logpow(1), S.logpow(-0.5), S.loglog(), S.explogpow(0.5)]


def all_builtin_items():
    items = [omega(), big_omega(), beta(), big_b()] + [g_alpha(a) for a in (-1, 0, 1, 2)]
    for L in BUILT_IN_L:
        for rho in (0.0, 0.5, 1.0):
            for mode in Mode:
                items.append(AdditiveSpec(rho, L, mode))
    return items + list(Functional)


def test_trial_factor():
    assert trial_factor(1) == []
    assert trial_factor(360) == [(2, 3), (3, 2), (5, 1)]
    assert trial_factor(9973) == [(9973, 1)]


def test_stated_values():
    w, b = brute_force_oracle(10, [omega(), big_b()])
    assert w.partials == [11] and b.partials == [45]


def test_limit_guard():
    with pytest.raises(DomainError):
        brute_force_oracle(10**5 + 1, [omega()])


def test_scan_equals_oracle_1e4():
    items = all_builtin_items()
    cps = [1, 2, 3, 10, 99, 100, 1000, 4321, 10**4]
    ora = brute_force_oracle(10**4, items, cps)
    scan = summatory_scan(10**4, items, cps, segment_size=1500, threads=4)
    for a, b in zip(ora, scan):
        assert a.partials == b.partials, a.item


def test_karamata_close_to_oracle():
    spec = AdditiveSpec(0.0, S.karamata(1, "inv_log"))
    (a,) = brute_force_oracle(5000, [spec])
    (b,) = summatory_scan(5000, [spec], [5000])
    assert a.partials[0] == pytest.approx(b.partials[0], rel=1e-11)
