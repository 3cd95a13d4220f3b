"""Printing then re-parsing a generated syntax tree gives the same tree."""

from __future__ import annotations

import ipaddress
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from dimesim.penny import parse, to_source
from dimesim.penny.ast import (
    Assign, Binary, BoolLit, Call, CurrTime, ExprStmt, For, If, IncDec, IpLit, Num, OnTime,
    PrefixLit, Return, Script, Str, TimeLit, Unary, Var, While,
)

VARS = ["a", "b", "hop", "n_2", "dayResults"]
CALLS = ["Ping", "Traceroute", "UdpPing", "prefix_base", "increment", "f"]
BINOPS = ["||", "&&", "<", "<=", ">", ">=", "==", "!=", "+", "-", "*", "/"]

numbers = st.builds(lambda n, k: Num(Fraction(n, 10**k)), st.integers(0, 10**6), st.integers(0, 3))
strings = st.builds(Str, st.text(alphabet='ab "\\\n\tz', max_size=6))
ips = st.builds(lambda v: IpLit(ipaddress.IPv4Address(v)), st.integers(0, 2**32 - 1))
prefixes = st.builds(
    lambda v, n: PrefixLit(ipaddress.IPv4Interface((v, n))), st.integers(0, 2**32 - 1), st.integers(0, 32)
)
dates = st.one_of(st.none(), st.tuples(st.integers(1, 12), st.integers(1, 28), st.integers(0, 99)))
absolute_times = st.builds(
    lambda b, d, h, m: TimeLit(b, d, h, m), st.sampled_from(["local", "gmt"]), dates, st.integers(0, 23), st.integers(0, 59)
)
relative_times = st.builds(lambda h, m: TimeLit("relative", None, h, m), st.integers(0, 99), st.integers(0, 59))
times = st.one_of(absolute_times, relative_times)
atoms = st.one_of(
    numbers, strings, ips, prefixes, times, st.just(BoolLit(True)), st.just(BoolLit(False)),
    st.just(CurrTime()), st.sampled_from([Var(v) for v in VARS]),
)


exprs = st.recursive(
    atoms,
    lambda inner: st.one_of(
        st.builds(Unary, st.sampled_from(["-", "!"]), inner),
        st.builds(Binary, st.sampled_from(BINOPS), inner, inner),
        st.builds(lambda n, args: Call(n, tuple(args)), st.sampled_from(CALLS), st.lists(inner, max_size=3)),
    ),
    max_leaves=8,
)


def statements(depth):
    simple = st.one_of(
        st.builds(Assign, st.sampled_from(VARS), st.sampled_from(["=", "+=", "-=", "*=", "/="]), exprs),
        st.builds(IncDec, st.sampled_from(VARS), st.sampled_from(["++", "--"])),
        st.builds(Return, exprs),
        st.builds(ExprStmt, st.builds(lambda n, a: Call(n, tuple(a)), st.sampled_from(CALLS), st.lists(exprs, max_size=2))),
    )
    if depth == 0:
        return simple
    body = st.lists(statements(depth - 1), max_size=3).map(tuple)
    return st.one_of(
        simple,
        st.builds(While, exprs, body),
        st.builds(If, exprs, body, st.one_of(st.just(()), body, st.builds(If, exprs, body, body).map(lambda s: (s,)))),
        st.builds(For, st.sampled_from(VARS), exprs, body),
        st.builds(OnTime, times, statements(depth - 1), st.booleans()),
    )


scripts = st.lists(statements(2), min_size=1, max_size=6).map(lambda xs: Script(tuple(xs)))


@settings(max_examples=200, deadline=None)
@given(scripts)
def test_round_trip_on_generated_scripts(script):
    text = to_source(script)
    back = parse(text, check=False)
    assert back == script
    assert to_source(back) == text
