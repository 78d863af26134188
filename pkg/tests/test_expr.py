import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pipesurf.expr import Expr, ExpressionError


def test_evaluates_catalog_formula():
    assert Expr("3/5 + 3/40*sin(5*theta)")(math.pi / 10, 0.0) == pytest.approx(0.675, abs=1e-15)


def test_unicode_aliases_and_power():
    assert Expr("θ^2 + ω")(3.0, 1.0) == pytest.approx(10.0)
    assert Expr("2*π")() == pytest.approx(2 * math.pi)


def test_constant_and_dependence():
    e = Expr("sin(theta)*2")
    assert e.depends_on("theta") and not e.depends_on("omega")
    assert Expr(0.5).is_constant
    assert Expr("omega").d("theta").is_constant


@pytest.mark.parametrize("text", ["sin(", "foo(theta)", "x + 1", "sin(theta, omega)", "theta < 1"])
def test_rejects_bad_input(text):
    with pytest.raises(ExpressionError):
        Expr(text)


def test_bad_variable():
    with pytest.raises(ExpressionError):
        Expr("theta").d("r")


def test_broadcasts():
    t = np.linspace(0, 1, 5)
    assert Expr("1")(t, 0.0).shape == (5,)
    assert Expr("theta*omega")(t[:, None], t[None, :]).shape == (5, 5)


TEXTS = ["sin(2*theta)*cos(2*omega)", "exp(sin(theta))*(omega - 1)^3", "sqrt(2 + cos(theta)*omega)",
         "log(3 + sin(omega))/(2 + cos(theta))", "tan(0.3*theta) - omega^2*theta"]


def _fd(fn, x, h, axis):
    # sixth-order centered difference
    w = (-1, 9, -45, 0, 45, -9, 1)
    acc = 0.0
    for k, wk in enumerate(w):
        dx = [0.0, 0.0]
        dx[axis] = (k - 3) * h
        acc += wk * fn(x[0] + dx[0], x[1] + dx[1])
    return acc / (60 * h)


@pytest.mark.parametrize("text", TEXTS)
@pytest.mark.parametrize("var,axis", [("theta", 0), ("omega", 1)])
def test_symbolic_derivative_matches_fd(text, var, axis, rng):
    e = Expr(text)
    for t, w in rng.uniform(0.1, 1.5, size=(20, 2)):
        assert e.d(var)(t, w) == pytest.approx(_fd(e, (t, w), 1e-3, axis), rel=1e-8, abs=1e-9)


def test_second_mixed_derivatives_commute():
    e = Expr(TEXTS[1])
    t, w = 0.7, 1.3
    assert e.d("theta").d("omega")(t, w) == pytest.approx(e.d("omega").d("theta")(t, w), rel=1e-12)


def test_abs_derivative_uses_sign():
    e = Expr("abs(cos(theta))^3")
    t = 2.0   # cos < 0
    assert e.d("theta")(t) == pytest.approx(3 * abs(math.cos(t)) ** 2 * math.sin(t), rel=1e-12)


def test_abs_kink_takes_mean_slope():
    # one-sided slopes of |sin| are -1 and +1 at 0 and pi; |cos| likewise at pi/2
    e = Expr("abs(sin(theta)) + 2*abs(cos(theta))")
    for t in (0.0, math.pi, math.pi / 2):
        assert e.d("theta")(t) == pytest.approx(0.0, abs=1e-15)
    assert Expr("abs(theta)").d("theta")(-0.5) == -1.0


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), t=st.floats(-3, 3), w=st.floats(-3, 3))
def test_text_round_trip(a, b, t, w):
    e = Expr(f"{a!r}*sin(theta) + {b!r}*omega^2")
    again = Expr(e.d("theta").text)
    assert again(t, w) == pytest.approx(e.d("theta")(t, w), rel=1e-12, abs=1e-12)
