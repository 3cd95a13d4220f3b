from __future__ import annotations

import ipaddress
from fractions import Fraction

import pytest

from dimesim.penny import PennySyntaxError, UnassignedNameError, check_assigned, parse, to_source
from dimesim.penny.ast import (
    Assign, Binary, Call, ExprStmt, For, If, IncDec, IpLit, Num, OnTime, PrefixLit, Return, Str,
    TimeLit, Unary, Var, While,
)
from dimesim.penny.lexer import tokenize

DAY_NIGHT = """\
n = 0
nightResults = 0
onTime
startTime local 06/05/04 01:00
while(currTime < local 01:30) {
    nightResults += Ping(198.81.129.100)
    n++ }
m = 0
dayResults = 0
onTime
startTime local 06/05/04 13:00
while(currTime < local 13:30) {
    dayResults += Ping(198.81.129.100)
    n++ }
return dayResults/m - nightResults/n
"""


def kinds(text):
    return [t.kind for t in tokenize(text)]


def test_token_kinds():
    assert kinds("x = 10.1.2.3/16 + 1.2.3.4") == ["IDENT", "OP", "PREFIX", "OP", "IP", "EOF"]
    assert kinds('s = "a\\"b" // note') == ["IDENT", "OP", "STRING", "EOF"]
    assert kinds("local 06/05/04 01:00") == ["KEYWORD", "DATE", "TIME", "EOF"]


def test_date_only_after_time_base():
    # outside a time literal the slashes are division
    ops = [t.text for t in tokenize("x = 06/05/04") if t.kind == "OP"]
    assert ops == ["=", "/", "/"]


def test_time_base_case_insensitive():
    s = parse("x = GMT 01/02/05 10:00")
    assert s.statements[0].value == TimeLit("gmt", (1, 2, 5), 10, 0)


def test_string_escapes():
    s = parse('x = "tab\\there\\n"')
    assert s.statements[0].value == Str("tab\there\n")
    with pytest.raises(PennySyntaxError):
        parse('x = "\\q"')


@pytest.mark.parametrize("src", ["x = 1.2.3", "x = 300.1.1.1", "x = 1.2.3.4/40"])
def test_malformed_literals(src):
    with pytest.raises(PennySyntaxError):
        parse(src)


def test_prefix_literal_keeps_host_bits():
    s = parse("p = 10.1.2.3/16")
    assert s.statements[0].value == PrefixLit(ipaddress.IPv4Interface("10.1.2.3/16"))


def test_numbers_are_exact():
    s = parse("x = 0.1 + 0.2")
    b = s.statements[0].value
    assert b.left == Num(Fraction(1, 10)) and b.right == Num(Fraction(2, 10))


def test_precedence_and_associativity():
    e = parse("x = 1 - 2 - 3 * 4").statements[0].value
    assert e == Binary("-", Binary("-", Num(1), Num(2)), Binary("*", Num(3), Num(4)))
    e = parse("x = !a && b || c", check=False).statements[0].value
    assert e.op == "||" and e.left.op == "&&" and isinstance(e.left.left, Unary)


def test_chained_comparison_rejected():
    with pytest.raises(PennySyntaxError):
        parse("x = 1 < 2 < 3")


def test_statement_forms():
    src = """
    a = 1; b = 2
    a += b
    a++
    while (a < 10) { a++ }
    if (a == 10) { b = 1 } else if (a > 10) { b = 2 } else { b = 3 }
    for h in 10.0.0.0/30 { Ping(h) }
    onTime nonblocking
    startTime relative 00:05
    Ping(1.1.1.1)
    return a
    """
    s = parse(src)
    types = [type(x) for x in s.statements]
    assert types == [Assign, Assign, Assign, IncDec, While, If, For, OnTime, Return]
    ot = s.statements[7]
    assert not ot.blocking and ot.start == TimeLit("relative", None, 0, 5)
    assert isinstance(ot.body, ExprStmt) and ot.body.expr == Call("Ping", (IpLit(ipaddress.IPv4Address("1.1.1.1")),))
    assert s.commands() == {"Ping"}


def test_else_on_next_line_and_block_on_next_line():
    s = parse("a = 1\nif (a)\n{ a = 2 }\nelse\n{ a = 3 }")
    assert isinstance(s.statements[1], If) and s.statements[1].orelse


def test_missing_separator():
    with pytest.raises(PennySyntaxError) as exc:
        parse("a = 1 b = 2")
    assert exc.value.line == 1


def test_relative_rejects_date_and_bad_hour():
    with pytest.raises(PennySyntaxError):
        parse("x = relative 01/01/05 00:10")
    with pytest.raises(PennySyntaxError):
        parse("x = local 24:00")


def test_error_position():
    with pytest.raises(PennySyntaxError) as exc:
        parse("a = 1\nb = (2 +\n")
    assert exc.value.line in (2, 3)
    assert "line" in str(exc.value)


def test_unassigned_name():
    with pytest.raises(UnassignedNameError) as exc:
        parse("x = y + 1")
    assert (exc.value.line, exc.value.col) == (1, 5)


def test_definite_assignment_rules():
    parse("if (true) { a = 1 } else { a = 2 }\nreturn a")
    with pytest.raises(UnassignedNameError):
        parse("if (true) { a = 1 }\nreturn a")
    with pytest.raises(UnassignedNameError):
        parse("while (false) { a = 1 }\nreturn a")
    with pytest.raises(UnassignedNameError):
        parse("for i in 10.0.0.0/30 { a = i }\nreturn a")
    # the loop variable is bound inside the body
    parse("for i in 10.0.0.0/30 { Ping(i) }")
    check_assigned(parse("return q", check=False), predefined={"q"})


def test_increment_of_unassigned_name():
    with pytest.raises(UnassignedNameError):
        parse("k++")


def test_day_night_script_parses():
    s = parse(DAY_NIGHT)
    assert len(s.statements) == 7
    assert s.statements[2].start == TimeLit("local", (6, 5, 4), 1, 0)
    assert s.commands() == {"Ping"}


def test_printer_fixed_output():
    s = parse("x = (1 + 2) * 3\nif (x > 2) { x-- }")
    assert to_source(s) == "x = (1 + 2) * 3\nif (x > 2) {\n    x--\n}\n"


def test_day_night_script_round_trip():
    s = parse(DAY_NIGHT)
    assert parse(to_source(s)) == s
    assert to_source(parse(to_source(s))) == to_source(s)


def test_unary_minus_formatting():
    s = parse("x = -(1 - 2) - -3")
    assert parse(to_source(s)) == s


def test_positions_recorded():
    s = parse("a = 1\n  b = a")
    assert s.statements[1].pos == (2, 3)
    assert isinstance(s.statements[1].value, Var)
