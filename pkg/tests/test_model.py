import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triscale.errors import ConstraintError, InvalidInputError
from triscale.model import (
    ModelParams,
    Region,
    State5,
    as_state5,
    classify_region,
    fast_vector_field,
    jacobian,
    lambda2,
    r0,
    r0_fast,
    vector_field5,
    vector_field6,
)

P = ModelParams(beta=0.9, alpha=0.5, nu=0.7, gamma1=1 / 6, gamma2=1 / 6, delta=0.05, epsilon=0.05)

rates = st.floats(0.05, 3.0)
small = st.floats(1e-3, 0.5)


@st.composite
def params(draw):
    return ModelParams(draw(rates), draw(st.floats(0, 3)), draw(st.floats(0, 3)),
                       draw(rates), draw(rates), draw(small), draw(small))


@st.composite
def simplex5(draw):
    w = [draw(st.floats(0.0, 1.0)) for _ in range(6)]
    tot = sum(w)
    if tot == 0:
        w, tot = [1.0] * 6, 6.0
    return [x / tot for x in w[:5]]


@pytest.mark.parametrize("field,value", [
    ("beta", 0.0), ("gamma1", -1.0), ("delta", 1.0), ("epsilon", 1.5),
    ("alpha", -0.1), ("nu", math.nan), ("beta", math.inf),
])
def test_params_rejected(field, value):
    kw = P.to_dict()
    kw[field] = value
    with pytest.raises(InvalidInputError):
        ModelParams(**kw)


def test_zero_alpha_nu_allowed():
    ModelParams(beta=2, alpha=0.0, nu=0.0, gamma1=1, gamma2=1, delta=0.1, epsilon=0.1)


def test_gamma_mismatch():
    p = P.with_(gamma2=0.2)
    with pytest.raises(ConstraintError):
        p.gamma
    with pytest.raises(ConstraintError):
        lambda2(0.5, 0.1, p)


def test_state_validation():
    assert as_state5([0.5, -1e-13, 0, 0, 0])[1] == 0.0
    with pytest.raises(InvalidInputError):
        as_state5([0.5, -1e-9, 0, 0, 0])
    with pytest.raises(InvalidInputError):
        as_state5([0.5, 0.1, 0, 0])
    with pytest.raises(InvalidInputError):
        vector_field5([math.nan, 0, 0, 0, 0], P)


def test_state_roundtrip():
    s = State5(0.5, 0.1, 0.1, 0.1, 0.05)
    assert s.to_state6().to_state5() == s
    assert math.isclose(s.R, 0.15)


@given(params(), simplex5())
@settings(max_examples=100, deadline=None)
def test_six_dim_field_conserves_total(p, x):
    six = list(x) + [1.0 - sum(x)]
    f6 = vector_field6(six, p)
    assert abs(f6.sum()) < 1e-12
    # R eliminated: the first five components must agree
    np.testing.assert_allclose(vector_field5(x, p), f6[:5], atol=1e-13)


@given(params(), simplex5())
@settings(max_examples=60, deadline=None)
def test_jacobian_matches_finite_differences(p, x):
    x = np.array(x)
    J = jacobian(x, p)
    h = 1e-6
    fd = np.empty((5, 5))
    for j in range(5):
        e = np.zeros(5)
        e[j] = h
        # central difference on the raw field (no positivity clamp)
        from triscale.model import _field5
        fd[:, j] = (_field5(x + e, p, False) - _field5(x - e, p, False)) / (2 * h)
    np.testing.assert_allclose(J, fd, atol=1e-7)


def test_fast_field_drops_slow_terms():
    x = [0.4, 0.01, 0.2, 0.3, 0.02]
    f = fast_vector_field(x, P)
    S, I, T, P_, Y = x
    force = I + P.alpha * Y
    assert f[2] == pytest.approx(P.gamma1 * I)
    assert f[3] == pytest.approx(-P.nu * P.beta * P_ * force)


def test_dfe_is_fixed():
    assert np.all(vector_field5([1, 0, 0, 0, 0], P) == 0)


def test_reproduction_numbers():
    assert r0(P) == pytest.approx(5.4)
    assert r0_fast(1.0, 0.0, P) == pytest.approx(5.4)
    assert r0_fast(0.2, 0.3, P) == pytest.approx(0.9 * 6 * (0.2 + 0.35 * 0.3))
    with pytest.raises(InvalidInputError):
        r0_fast(0.8, 0.5, P)


def test_region_classifier():
    assert classify_region(0.5, 0.0, P).region is Region.PLUS
    assert classify_region(0.1, 0.0, P).region is Region.MINUS
    s0 = 1 / 6 / 0.9
    assert classify_region(s0, 0.0, P).region is Region.ZERO
    assert lambda2(s0, 0.0, P) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InvalidInputError):
        classify_region(0.7, 0.5, P)
