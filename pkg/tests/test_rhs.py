import math
import random
import string

import numpy as np
import pytest

from hadamard_delay.errors import EvalError
from hadamard_delay.rhs import ArityError, RhsIndexError, RhsSyntaxError, parse_rhs


class TestParsing:
    def test_constant_zero(self):
        expr = parse_rhs("0", 1)
        assert expr(2.0, [1.0]) == 0.0
        assert not expr.uses_state

    def test_reference_expression(self):
        expr = parse_rhs("0.1*tanh(y1)+sin(t)", 3)
        got = expr(2.0, [0.3, 0.0, 0.0])
        assert got == pytest.approx(0.1 * math.tanh(0.3) + math.sin(2.0))
        assert expr.uses_state

    def test_bare_y_scalar_only(self):
        assert parse_rhs("y", 1)(1.0, [0.25]) == 0.25
        with pytest.raises(RhsIndexError):
            parse_rhs("y", 2)

    def test_out_of_range_component(self):
        with pytest.raises(RhsIndexError):
            parse_rhs("y2", 1)
        with pytest.raises(RhsIndexError):
            parse_rhs("y0", 3)

    def test_unknown_function(self):
        with pytest.raises(ArityError):
            parse_rhs("sinh(t)", 1)

    def test_unknown_identifier(self):
        with pytest.raises(RhsSyntaxError):
            parse_rhs("3*x", 1)

    def test_positions_reported(self):
        with pytest.raises(RhsSyntaxError) as info:
            parse_rhs("1 + (2 *", 1)
        assert info.value.line == 1 and info.value.col == 9
        with pytest.raises(RhsSyntaxError) as info:
            parse_rhs("1\n+ 2 $", 1)
        assert info.value.line == 2 and info.value.col == 5

    def test_no_unary_minus(self):
        with pytest.raises(RhsSyntaxError):
            parse_rhs("-3", 1)
        assert parse_rhs("0-3", 1)(1.0) == -3.0

    def test_empty_rejected(self):
        with pytest.raises(RhsSyntaxError):
            parse_rhs("", 1)
        with pytest.raises(RhsSyntaxError):
            parse_rhs("   ", 1)


class TestSemantics:
    def test_precedence(self):
        assert parse_rhs("2+3*4", 1)(0.0) == 14.0
        assert parse_rhs("2*3^2", 1)(0.0) == 18.0
        assert parse_rhs("(2+3)*4", 1)(0.0) == 20.0

    def test_power_right_associative(self):
        assert parse_rhs("2^3^2", 1)(0.0) == 512.0

    def test_division(self):
        assert parse_rhs("7/2/2", 1)(0.0) == pytest.approx(1.75)

    def test_scientific_numbers(self):
        assert parse_rhs("1.5e-3", 1)(0.0) == pytest.approx(1.5e-3)
        assert parse_rhs(".25", 1)(0.0) == 0.25

    def test_functions(self):
        expr = parse_rhs("ln(exp(t))+cos(0)", 1)
        assert expr(1.7) == pytest.approx(2.7)
        assert parse_rhs("abs(0-4)", 1)(0.0) == 4.0

    def test_eval_errors(self):
        with pytest.raises(EvalError):
            parse_rhs("ln(0-1)", 1)(1.0)
        with pytest.raises(EvalError):
            parse_rhs("1/(t-t)", 1)(1.0)
        with pytest.raises(EvalError):
            parse_rhs("(0-2)^0.5", 1)(1.0)
        with pytest.raises(EvalError):
            parse_rhs("0^(0-1)", 1)(1.0)
        with pytest.raises(EvalError):
            parse_rhs("exp(t)", 1)(1e9)


class TestFuzz:
    def test_random_ascii_never_crashes(self):
        rnd = random.Random(99)
        alphabet = string.ascii_lowercase + string.digits + "+-*/^()., \tty"
        for _ in range(2000):
            text = "".join(rnd.choice(alphabet) for _ in range(rnd.randint(1, 30)))
            try:
                expr = parse_rhs(text, 2)
            except RhsSyntaxError as exc:
                assert exc.line >= 1 and exc.col >= 1
                continue
            try:
                expr(1.5, np.array([0.2, -0.1]))
            except EvalError:
                pass
