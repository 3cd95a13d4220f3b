from __future__ import annotations

import ipaddress
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dimesim.penny import (
    AddressOverflowError, CapabilityError, ClockError, CommandRegistry, DivisionByZero,
    DuplicateCommandError, Instant, PennyTypeError, Scheduler, StepLimitExceeded,
    UnknownCommandError, VirtualClock, execute, increment, iter_prefix, parse,
    parse_clock_start, parse_offset, prefix_base, prefix_broadcast, random_in_prefix,
    resolve_time,
)
from dimesim.penny.clock import format_gmt
from dimesim.penny.interpreter import Interpreter, binop

from test_penny_syntax import DAY_NIGHT

IP = ipaddress.IPv4Address
T0 = parse_clock_start("GMT 06/04/04 00:00")
DAY_NIGHT_FIXED = DAY_NIGHT.replace("dayResults += Ping(198.81.129.100)\n    n++", "dayResults += Ping(198.81.129.100)\n    m++")


def run(src, registry=None, now=T0, offset=0, **kw):
    clock = VirtualClock(now, offset)
    return execute(parse(src), registry or CommandRegistry(), clock, **kw), clock


def ping_registry(value_at, cost=60, log=None):
    def ping(ctx, target):
        if log is not None:
            log.append(ctx.now)
        ctx.emit(("ping", ctx.now, target))
        return value_at(ctx)

    return CommandRegistry().register("Ping", 1, "icmp", ping, cost=cost)


def day_night(ctx):
    hour = ((ctx.now + ctx.clock.local_offset) // 3600) % 24
    return 20 if 6 <= hour < 18 else 10


# -- values and operators

def test_rational_arithmetic_is_exact():
    res, _ = run("x = 1 / 3\ny = x * 3\nreturn y == 1")
    assert res.value is True
    res, _ = run("return 7 / 2")
    assert res.value == Fraction(7, 2)


def test_division_by_zero_is_located():
    with pytest.raises(DivisionByZero) as info:
        run("x = 0\nreturn 1 / x")
    assert (info.value.line, info.value.col) == (2, 10)


def test_binop_type_rules():
    assert binop("+", IP("10.0.0.255"), Fraction(1)) == IP("10.0.1.0")
    assert binop("-", IP("10.0.1.0"), IP("10.0.0.0")) == 256
    assert binop("+", "a", "b") == "ab"
    assert binop("-", Instant(100), Instant(40)) == 60
    assert binop("==", Fraction(1), True) is False
    with pytest.raises(PennyTypeError):
        binop("<", Fraction(1), "1")
    with pytest.raises(PennyTypeError):
        binop("+", IP("1.2.3.4"), Fraction(1, 2))
    with pytest.raises(PennyTypeError):
        binop("*", "a", Fraction(2))


def test_short_circuit_skips_right_side():
    reg = CommandRegistry().register("Boom", 0, None, lambda ctx: 1 / 0)
    res, _ = run("return false && Boom() == 1", reg)
    assert res.value is False
    res, _ = run("return true || Boom() == 1", reg)
    assert res.value is True


def test_condition_must_be_bool_or_number():
    with pytest.raises(PennyTypeError):
        run('if ("yes") { x = 1 }')


def test_for_over_prefix_and_builtins():
    res, _ = run("n = 0\nfor a in 10.0.0.0/30 { n += 1 }\nreturn n")
    assert res.value == 4
    res, _ = run('return capture("rtt=([0-9]+)", "ok rtt=42 ms")')
    assert res.value == "42"
    res, _ = run('return number("3") + 1')
    assert res.value == 4


# -- IP helpers

def test_ip_helpers():
    assert increment(IP("10.0.0.255"), 1) == IP("10.0.1.0")
    assert prefix_base(ipaddress.IPv4Interface("10.1.2.3/16")) == IP("10.1.0.0")
    assert prefix_broadcast(ipaddress.IPv4Network("10.1.0.0/16")) == IP("10.1.255.255")
    with pytest.raises(AddressOverflowError):
        increment(IP("255.255.255.255"), 1)
    with pytest.raises(AddressOverflowError):
        increment(IP("0.0.0.0"), -1)
    assert list(iter_prefix(ipaddress.IPv4Network("10.0.0.0/31"))) == [IP("10.0.0.0"), IP("10.0.0.1")]


def test_prefix_literal_keeps_host_bits_for_base():
    res, _ = run("return prefix_base(10.1.2.3/16)")
    assert res.value == IP("10.1.0.0")


def test_overflow_in_script_is_a_runtime_error():
    with pytest.raises(AddressOverflowError) as info:
        run("return 255.255.255.255 + 1")
    assert info.value.line == 1


def test_random_in_prefix_coverage():
    net = ipaddress.IPv4Network("10.0.0.0/24")
    rng = random.Random(7)
    draws = [random_in_prefix(net, rng) for _ in range(10_000)]
    assert all(d in net for d in draws)
    # 256 cells, 10k draws: the chance of fewer than 250 distinct is far below 1e-6
    assert len(set(draws)) >= 250


@given(st.integers(0, 2**32 - 1), st.integers(-(2**16), 2**16))
def test_increment_matches_integer_arithmetic(n, k):
    if 0 <= n + k < 2**32:
        assert int(increment(IP(n), k)) == n + k
    else:
        with pytest.raises(AddressOverflowError):
            increment(IP(n), k)


# -- clock and time bases

def test_clock_parsing():
    assert parse_offset("+02:00") == 7200
    assert parse_offset("-0530") == -(5 * 3600 + 30 * 60)
    assert format_gmt(parse_clock_start("GMT 06/05/04 13:30")) == "06/05/04 13:30:00"
    assert parse_clock_start("local 06/05/04 01:00", 7200) == parse_clock_start("GMT 06/04/04 23:00")
    with pytest.raises(ClockError):
        parse_clock_start("06/05/04 00:00")
    with pytest.raises(ClockError):
        parse_offset("2h")


def test_clock_is_monotone():
    c = VirtualClock(10)
    c.advance_to(10)
    c.advance(5)
    assert c.now == 15
    with pytest.raises(ClockError):
        c.advance_to(14)
    with pytest.raises(ClockError):
        c.advance(-1)


def test_local_anchor_fires_at_shifted_gmt():
    # offset +2h: local 01:00 is GMT 23:00 the previous day
    reg = CommandRegistry().register("Mark", 0, None, lambda ctx: Instant(ctx.now))
    res, clock = run("onTime\nstartTime local 01:00\nx = Mark()\nreturn x", reg, offset=7200)
    assert format_gmt(res.value.seconds) == "06/04/04 23:00:00"


def test_resolve_time_bases():
    anchor = T0 + 3600
    assert resolve_time("relative", None, 0, 5, anchor, 0) == anchor + 300
    assert resolve_time("gmt", None, 0, 30, anchor, 0) == T0 + 86400 + 1800
    assert resolve_time("gmt", None, 2, 0, anchor, 0) == T0 + 7200
    # same-minute wall time is "now", not tomorrow
    assert resolve_time("gmt", None, 1, 0, anchor, 0) == anchor


@given(st.integers(0, 2**31), st.integers(-12, 14), st.integers(0, 23), st.integers(0, 59))
def test_local_and_gmt_differ_by_offset(anchor, off_h, hour, minute):
    off = off_h * 3600
    local = resolve_time("local", None, hour, minute, anchor, off)
    assert anchor <= local < anchor + 86400
    assert (local + off) % 86400 == hour * 3600 + minute * 60


# -- timed blocks and scheduling

def test_relative_window_with_one_minute_cost_gives_five_records():
    reg = ping_registry(lambda ctx: 1)
    res, clock = run(
        "onTime\nstartTime relative 00:00\nwhile(currTime < relative 00:05) { Ping(10.0.0.1) }\nreturn 0", reg
    )
    assert len(res.records) == 5
    assert clock.now == T0 + 300


def test_day_night_script_symmetric_stub_returns_zero():
    script = DAY_NIGHT_FIXED
    res, _ = run(script, ping_registry(lambda ctx: 10), offset=7200)
    assert res.value == 0


def test_day_night_difference():
    times = []
    res, clock = run(DAY_NIGHT_FIXED, ping_registry(day_night, log=times), offset=7200)
    # 30 one-minute pings in each half-hour window: 600/30 - 300/30
    assert res.value == 10
    assert len(res.records) == 60
    night, day = times[:30], times[30:]
    assert format_gmt(night[0]) == "06/04/04 23:00:00"
    assert format_gmt(day[0]) == "06/05/04 11:00:00"
    assert all(b - a == 60 for a, b in zip(night, night[1:]))


def test_day_night_script_as_written_divides_by_zero():
    with pytest.raises(DivisionByZero) as info:
        run(DAY_NIGHT, ping_registry(day_night), offset=7200)
    assert info.value.line == 15


def test_past_start_time_runs_immediately():
    reg = CommandRegistry().register("Mark", 0, None, lambda ctx: Instant(ctx.now))
    res, _ = run("onTime\nstartTime GMT 01/01/04 00:00\nx = Mark()\nreturn x", reg)
    assert res.value.seconds == T0


def test_nonblocking_tasks_join_before_return():
    seen = []
    reg = CommandRegistry().register("Note", 1, None, lambda ctx, v: seen.append((ctx.now, int(v))))
    src = (
        "onTime nonblocking\nstartTime relative 00:10\nNote(1)\n"
        "onTime nonblocking\nstartTime relative 00:05\nNote(2)\n"
        "Note(0)\nreturn currTime"
    )
    res, clock = run(src, reg)
    # main continues without waiting; the deferred bodies run in start order
    assert seen == [(T0, 0), (T0 + 300, 2), (T0 + 600, 1)]
    assert res.value == Instant(T0 + 600)


def test_scripts_share_one_timeline():
    clock = VirtualClock(T0)
    sched = Scheduler(clock)
    order = []
    reg = CommandRegistry().register("Note", 1, None, lambda ctx, v: order.append(int(v)), cost=60)
    a = Interpreter(reg, clock)
    b = Interpreter(reg, clock)
    a.start(parse("Note(1)\nNote(3)"), sched)
    b.start(parse("onTime\nstartTime relative 00:00\nNote(2)\nNote(4)"), sched)
    sched.run()
    assert order == [1, 2, 3, 4]


def test_loop_bound_terminates_when_clock_passes():
    reg = ping_registry(lambda ctx: 1, cost=45)
    res, clock = run("while(currTime < relative 00:02) { Ping(10.0.0.1) }", reg)
    # sends at 0, 45, 90; the check at 135 fails
    assert [r[1] - T0 for r in res.records] == [0, 45, 90]


# -- registry, capabilities and errors

def test_registry_rejects_duplicates_and_builtins():
    reg = CommandRegistry().register("Ping", 1, "icmp")
    with pytest.raises(DuplicateCommandError):
        reg.register("Ping", 1)
    with pytest.raises(DuplicateCommandError):
        reg.register("increment", 2)


def test_registered_command_dispatches():
    reg = CommandRegistry().register("Traceroute", 1, "icmp", lambda ctx, ip: 7)
    res, _ = run("return Traceroute(10.0.0.1)", reg)
    assert res.value == 7


def test_unknown_command_fails_only_at_execution():
    script = parse("if (false) { Missing(1) }\nreturn 1")
    assert execute(script, CommandRegistry(), VirtualClock(0)).value == 1
    with pytest.raises(UnknownCommandError) as info:
        run("x = 1\nMissing(x)")
    assert (info.value.line, info.value.col) == (2, 1)


def test_capability_gating():
    reg = CommandRegistry().register("UdpPing", 1, "udp", lambda ctx, ip: 1)
    res, _ = run("return UdpPing(10.0.0.1)", reg, capabilities={"udp", "icmp"})
    assert res.value == 1
    with pytest.raises(CapabilityError):
        run("return UdpPing(10.0.0.1)", reg, capabilities={"icmp"})


def test_arity_checked():
    reg = CommandRegistry().register("Ping", 1, None, lambda ctx, ip: 1)
    with pytest.raises(PennyTypeError):
        run("Ping(1.2.3.4, 5)", reg)


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        run("x = 0\nwhile (true) { x++ }", max_steps=1000)


def test_isolated_errors_do_not_stop_other_scripts():
    clock = VirtualClock(T0)
    sched = Scheduler(clock)
    reg = CommandRegistry()
    bad = Interpreter(reg, clock)
    good = Interpreter(reg, clock)
    bad.start(parse("return 1 / 0"), sched)
    good.start(parse("return 2"), sched)
    sched.run(isolate_errors=True)
    assert isinstance(bad.error, DivisionByZero)
    assert good.result().value == 2


def test_execution_is_deterministic():
    src = "n = 0\nx = 0\nwhile (n < 20) { x += prefix_size(10.0.0.0/30) * 0 + number(str(random_in_prefix(10.0.0.0/24) - 10.0.0.0))\n n++ }\nreturn x"
    a, _ = run(src, seed=3)
    b, _ = run(src, seed=3)
    c, _ = run(src, seed=4)
    assert a.value == b.value and a.log == b.log
    assert a.value != c.value
