import numpy as np
import pytest

from greenbound import DomainError, PhiFamily, phi_derivs, phi_eval, phi_inverse

Q_SET = [-2.0, -1.0, -0.5, 0.5, 0.9, 1.0, 1.1, 2.0, 3.0]


def interior_samples(fam, count=100, cap=20.0, margin=1e-3):
    lo, hi = fam.domain
    lo = max(lo, -cap) + margin
    hi = min(hi, cap) - margin
    return np.linspace(lo, hi, count)


@pytest.mark.parametrize("q", Q_SET)
def test_initial_condition(q):
    assert phi_eval(PhiFamily(q), 0.0) == pytest.approx(1.0, abs=1e-15)


def test_point_values():
    assert phi_eval(PhiFamily(2.0), 0.5) == pytest.approx(2.0, rel=1e-15)
    assert phi_eval(PhiFamily(0.5), -3.0) == 0.0              # truncated branch
    assert phi_eval(PhiFamily(1.0), 1.0) == pytest.approx(np.e, rel=1e-15)
    assert phi_eval(PhiFamily(-1.0), 2.0) == pytest.approx(np.sqrt(5.0), rel=1e-15)


def test_endpoint_limits():
    assert phi_eval(PhiFamily(2.0), 1.0) == np.inf            # right end of I_q
    assert phi_eval(PhiFamily(2.0), -np.inf) == 0.0
    assert phi_eval(PhiFamily(-1.0), -0.5) == 0.0
    assert phi_eval(PhiFamily(-1.0), np.inf) == np.inf
    with pytest.raises(DomainError):
        phi_eval(PhiFamily(2.0), 1.0 + 1e-9)
    with pytest.raises(DomainError):
        phi_eval(PhiFamily(-1.0), -0.5 - 1e-9)


def test_endpoint_snap():
    # inputs within 1e-14 of the endpoint are clamped, not rejected
    assert phi_eval(PhiFamily(2.0), 1.0 + 5e-15) == np.inf


def test_inverse_point_values():
    for q in Q_SET:
        assert phi_inverse(PhiFamily(q), 1.0) == pytest.approx(0.0, abs=1e-15)
    assert phi_inverse(PhiFamily(1.0), np.e) == pytest.approx(1.0, rel=1e-15)
    assert phi_inverse(PhiFamily(-1.0), 0.0) == pytest.approx(-0.5, abs=1e-15)


def test_inverse_domain_errors():
    with pytest.raises(DomainError):
        phi_inverse(PhiFamily(2.0), 0.0)
    with pytest.raises(DomainError):
        phi_inverse(PhiFamily(1.0), -1.0)


def test_deriv_point_values():
    d1, d2 = phi_derivs(PhiFamily(2.0), 0.0)
    assert d1 == pytest.approx(1.0) and d2 == pytest.approx(2.0)
    d1, d2 = phi_derivs(PhiFamily(-1.0), 0.0)
    assert d1 == pytest.approx(1.0) and d2 == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        phi_derivs(PhiFamily(2.0), 1.0)


@pytest.mark.parametrize("q", Q_SET)
def test_ode_identity(q):
    fam = PhiFamily(q)
    s = interior_samples(fam)
    d1, _ = phi_derivs(fam, s)
    pq = phi_eval(fam, s) ** q
    assert np.all(np.abs(d1 - pq) <= 1e-12 * np.maximum(1.0, pq))


@pytest.mark.parametrize("q", Q_SET)
def test_convexity_sign(q):
    fam = PhiFamily(q)
    _, d2 = phi_derivs(fam, interior_samples(fam))
    if q > 0:
        assert np.all(d2 >= 0)
    else:
        assert np.all(d2 <= 0)


@pytest.mark.parametrize("q", Q_SET)
def test_round_trip(q):
    fam = PhiFamily(q)
    s = interior_samples(fam)
    back = phi_inverse(fam, phi_eval(fam, s))
    assert np.all(np.abs(back - s) <= 1e-10 * np.maximum(1.0, np.abs(s)))


@pytest.mark.parametrize("q", Q_SET)
def test_range_covers_targets(q):
    # φ maps I_q onto (0, inf): hit small/unit/large targets through φ^{-1}.
    # Extreme targets sit exponentially close to a domain endpoint, where the
    # reconstruction is ill conditioned in t; the well-conditioned check is in
    # the linearizing coordinate t^{1-q} (exact for q=1 in log space).
    fam = PhiFamily(q)
    lo, hi = fam.domain
    for target in (1e-6, 1.0, 1e6):
        s = phi_inverse(fam, target)
        assert lo <= s <= hi
        if q == 1.0:
            assert np.exp(s) == pytest.approx(target, rel=1e-12)
        else:
            lin_back = (1.0 - q) * s + 1.0
            lin_target = target ** (1.0 - q)
            assert lin_back == pytest.approx(
                lin_target, abs=8 * np.finfo(float).eps * max(1.0, abs(s) * abs(1 - q)))


def test_reject_zero_q():
    with pytest.raises(DomainError):
        PhiFamily(0.0)
