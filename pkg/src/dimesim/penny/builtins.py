"""IP arithmetic and string helpers available to every script."""

from __future__ import annotations

import ipaddress
import random
import re
from fractions import Fraction
from typing import Iterator, Union

from .errors import AddressOverflowError, PennyTypeError

PrefixValue = Union[ipaddress.IPv4Network, ipaddress.IPv4Interface]
MAX_ADDR = 2**32 - 1


def _network(p: PrefixValue) -> ipaddress.IPv4Network:
    if isinstance(p, ipaddress.IPv4Interface):
        return p.network
    if isinstance(p, ipaddress.IPv4Network):
        return p
    raise PennyTypeError(f"expected a prefix, got {type_name(p)}")


def _int(k) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, Fraction)) or int(k) != k:
        raise PennyTypeError(f"expected an integer, got {type_name(k)} {k}")
    return int(k)


def type_name(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, Fraction)):
        return "number"
    if isinstance(v, str):
        return "string"
    # IPv4Interface subclasses IPv4Address, so test prefixes first
    if isinstance(v, (ipaddress.IPv4Network, ipaddress.IPv4Interface)):
        return "prefix"
    if isinstance(v, ipaddress.IPv4Address):
        return "ip"
    if v is None:
        return "null"
    return type(v).__name__


def is_ip(v) -> bool:
    return isinstance(v, ipaddress.IPv4Address) and not isinstance(v, ipaddress.IPv4Interface)


def increment(addr: ipaddress.IPv4Address, k=1) -> ipaddress.IPv4Address:
    if not is_ip(addr):
        raise PennyTypeError(f"increment expects an ip, got {type_name(addr)}")
    n = int(addr) + _int(k)
    if n > MAX_ADDR:
        raise AddressOverflowError(f"{addr} + {k} passes 255.255.255.255")
    if n < 0:
        raise AddressOverflowError(f"{addr} - {-_int(k)} falls below 0.0.0.0")
    return ipaddress.IPv4Address(n)


def prefix_base(p: PrefixValue) -> ipaddress.IPv4Address:
    return _network(p).network_address


def prefix_broadcast(p: PrefixValue) -> ipaddress.IPv4Address:
    return _network(p).broadcast_address


def random_in_prefix(p: PrefixValue, rng: random.Random) -> ipaddress.IPv4Address:
    net = _network(p)
    return ipaddress.IPv4Address(int(net.network_address) + rng.randrange(net.num_addresses))


def iter_prefix(p: PrefixValue) -> Iterator[ipaddress.IPv4Address]:
    """Every address of the prefix, base and broadcast included."""
    net = _network(p)
    base = int(net.network_address)
    for i in range(net.num_addresses):
        yield ipaddress.IPv4Address(base + i)


def prefix_size(p: PrefixValue) -> Fraction:
    return Fraction(_network(p).num_addresses)


def in_prefix(addr, p: PrefixValue) -> bool:
    if not is_ip(addr):
        raise PennyTypeError(f"in_prefix expects an ip, got {type_name(addr)}")
    return addr in _network(p)


def _str_arg(v, fn: str) -> str:
    if not isinstance(v, str):
        raise PennyTypeError(f"{fn} expects strings, got {type_name(v)}")
    return v


def match(pattern, text) -> bool:
    return re.search(_str_arg(pattern, "match"), _str_arg(text, "match")) is not None


def capture(pattern, text, group=1):
    """Text of ``group`` in the first match, or null when nothing matches."""
    m = re.search(_str_arg(pattern, "capture"), _str_arg(text, "capture"))
    if m is None:
        return None
    return m.group(_int(group))


def to_string(v) -> str:
    from .ast import format_number

    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        try:
            return format_number(v)
        except ValueError:
            return f"{v.numerator}/{v.denominator}"
    if v is None:
        return "null"
    return str(v)


def to_number(v) -> Fraction:
    try:
        return Fraction(_str_arg(v, "number"))
    except ValueError:
        raise PennyTypeError(f"cannot read {v!r} as a number") from None


def to_ip(v) -> ipaddress.IPv4Address:
    try:
        return ipaddress.IPv4Address(_str_arg(v, "ip"))
    except ValueError:
        raise PennyTypeError(f"cannot read {v!r} as an ip") from None


# name -> (arity or None for a range, minimum arity, needs the rng)
BUILTINS: dict[str, tuple[int, int, bool]] = {
    "increment": (2, 2, False),
    "prefix_base": (1, 1, False),
    "prefix_broadcast": (1, 1, False),
    "random_in_prefix": (1, 1, True),
    "prefix_size": (1, 1, False),
    "in_prefix": (2, 2, False),
    "match": (2, 2, False),
    "capture": (3, 2, False),
    "str": (1, 1, False),
    "number": (1, 1, False),
    "ip": (1, 1, False),
}
_IMPL = {
    "increment": increment,
    "prefix_base": prefix_base,
    "prefix_broadcast": prefix_broadcast,
    "random_in_prefix": random_in_prefix,
    "prefix_size": prefix_size,
    "in_prefix": in_prefix,
    "match": match,
    "capture": capture,
    "str": to_string,
    "number": to_number,
    "ip": to_ip,
}


def call_builtin(name: str, args: list, rng: random.Random):
    max_arity, min_arity, needs_rng = BUILTINS[name]
    if not min_arity <= len(args) <= max_arity:
        want = str(max_arity) if min_arity == max_arity else f"{min_arity}-{max_arity}"
        raise PennyTypeError(f"{name} takes {want} arguments, got {len(args)}")
    if needs_rng:
        args = [*args, rng]
    return _IMPL[name](*args)
