"""Exact Collatz / Syracuse iteration and the affine offset algebra.

Every quantity here is an arbitrary-precision Python integer (or a dyadic
rational built from them); nothing wraps at machine width.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence, Union


class ZeroInput(ValueError):
    """nu_p(0) is +infinity; callers have to branch on it themselves."""


def nu(p: int, m: int) -> int:
    """Largest a with p**a dividing the nonzero integer m."""
    if m == 0:
        raise ZeroInput("valuation of 0 is +infinity")
    m = abs(m)
    if p == 2:
        return (m & -m).bit_length() - 1
    a = 0
    while m % p == 0:
        m //= p
        a += 1
    return a


def _odd_part(m: int) -> int:
    return m >> ((m & -m).bit_length() - 1)


def collatz_step(n: int) -> int:
    if n < 1:
        raise ValueError("Collatz map is defined on positive integers")
    return 3 * n + 1 if n & 1 else n >> 1


def syracuse_step(n: int) -> int:
    """Largest odd divisor of 3n+1."""
    if n < 1 or not n & 1:
        raise ValueError(f"Syracuse map needs an odd positive integer, got {n}")
    return _odd_part(3 * n + 1)


class CapExceeded(Exception):
    """The iteration budget ran out before the orbit reached 1."""

    def __init__(self, minimum: int, steps: int):
        super().__init__(f"orbit did not reach 1 within {steps} steps (running minimum {minimum})")
        self.minimum = minimum
        self.steps = steps


class OrbitMin(NamedTuple):
    """Minimum of an orbit that reached 1, and the step at which it did."""

    minimum: int
    reached_one: bool
    steps: int


def collatz_min(n: int, cap: int) -> OrbitMin:
    """Minimum of the first ``cap + 1`` Collatz orbit elements of n.

    Raises :class:`CapExceeded` (carrying the running minimum) if 1 is not
    reached within the budget.
    """
    if n < 1 or cap < 0:
        raise ValueError("need n >= 1 and cap >= 0")
    best = n
    for step in range(cap + 1):
        if n == 1:
            return OrbitMin(1, True, step)
        if step == cap:
            break
        n = 3 * n + 1 if n & 1 else n >> 1
        if n < best:
            best = n
    raise CapExceeded(best, cap)


def syracuse_min(n: int, cap: int) -> OrbitMin:
    """Same as :func:`collatz_min` for the Syracuse orbit of an odd n."""
    if n < 1 or not n & 1 or cap < 0:
        raise ValueError("need odd n >= 1 and cap >= 0")
    best = n
    for step in range(cap + 1):
        if n == 1:
            return OrbitMin(1, True, step)
        if step == cap:
            break
        n = _odd_part(3 * n + 1)
        if n < best:
            best = n
    raise CapExceeded(best, cap)


class MinIdentity(NamedTuple):
    collatz: OrbitMin
    syracuse: OrbitMin

    @property
    def lhs(self) -> int:
        return self.collatz.minimum

    @property
    def rhs(self) -> int:
        return self.syracuse.minimum

    @property
    def equal(self) -> bool:
        return self.lhs == self.rhs


def collatz_syracuse_min_identity(n: int, cap: int) -> MinIdentity:
    """Compare Col_min(n) with Syr_min of the odd part of n under one budget.

    Either side running out of budget raises :class:`CapExceeded`.
    """
    return MinIdentity(collatz_min(n, cap), syracuse_min(_odd_part(n), cap))


@dataclass(frozen=True)
class DyadicRational:
    """numerator / 2**denom_exp, always stored in canonical form.

    Canonical means the numerator is odd, or the value is zero and stored
    as (0, 0).  Equality and hashing are therefore structural.
    """

    numerator: int
    denom_exp: int = 0

    def __post_init__(self):
        num, e = self.numerator, self.denom_exp
        if e < 0:
            raise ValueError("denom_exp must be non-negative")
        if num == 0:
            e = 0
        elif e > 0:
            k = min(nu(2, num), e)
            num >>= k
            e -= k
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denom_exp", e)

    @classmethod
    def coerce(cls, x: Union["DyadicRational", int, Fraction]) -> "DyadicRational":
        if isinstance(x, DyadicRational):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        if isinstance(x, Fraction):
            d = x.denominator
            if d & (d - 1):
                raise ValueError(f"{x} is not a dyadic rational")
            return cls(x.numerator, d.bit_length() - 1)
        raise TypeError(f"cannot convert {type(x).__name__} to DyadicRational")

    @classmethod
    def parse(cls, text: str) -> "DyadicRational":
        """Inverse of ``str``: accepts ``"m"`` or ``"m/2^a"``."""
        text = text.strip()
        if "/" not in text:
            return cls(int(text))
        num, den = text.split("/")
        if not den.startswith("2^"):
            raise ValueError(f"not of the form m/2^a: {text!r}")
        return cls(int(num), int(den[2:]))

    def __add__(self, other):
        other = DyadicRational.coerce(other)
        e = max(self.denom_exp, other.denom_exp)
        return DyadicRational(
            (self.numerator << (e - self.denom_exp)) + (other.numerator << (e - other.denom_exp)), e
        )

    __radd__ = __add__

    def __mul__(self, other):
        other = DyadicRational.coerce(other)
        return DyadicRational(self.numerator * other.numerator, self.denom_exp + other.denom_exp)

    __rmul__ = __mul__

    def scale(self, factor: int, shift: int) -> "DyadicRational":
        """Return factor * 2**shift * self (shift may be negative)."""
        num = self.numerator * factor
        e = self.denom_exp - shift
        if e < 0:
            return DyadicRational(num << -e, 0)
        return DyadicRational(num, e)

    def is_integer(self) -> bool:
        return self.denom_exp == 0

    def is_odd_integer(self) -> bool:
        return self.denom_exp == 0 and self.numerator & 1 == 1

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.denom_exp)

    def __float__(self) -> float:
        return float(self.to_fraction())

    def __str__(self) -> str:
        if self.denom_exp == 0:
            return str(self.numerator)
        return f"{self.numerator}/2^{self.denom_exp}"


@dataclass(frozen=True)
class ValuationTuple:
    """A tuple (a_1, ..., a_n) of positive integers with cached prefix sums."""

    entries: tuple[int, ...]
    _prefix: list = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __init__(self, entries: Iterable[int] = ()):
        entries = tuple(int(a) for a in entries)
        if any(a < 1 for a in entries):
            raise ValueError(f"valuation entries must be >= 1: {entries}")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_prefix", None)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def _prefix_sums(self) -> list[int]:
        # Idempotent: concurrent callers compute the same list.
        if self._prefix is None:
            acc, out = 0, [0]
            for a in self.entries:
                acc += a
                out.append(acc)
            object.__setattr__(self, "_prefix", out)
        return self._prefix

    def size(self) -> int:
        """|a| = a_1 + ... + a_n."""
        return self._prefix_sums()[-1]

    def partial_sum(self, j: int, k: int) -> int:
        """a_j + ... + a_k with 1-based inclusive indices (0 if j > k)."""
        if j > k:
            return 0
        if not 1 <= j <= k <= self.n:
            raise IndexError(f"partial_sum({j}, {k}) out of range for n={self.n}")
        ps = self._prefix_sums()
        return ps[k] - ps[j - 1]


def _as_tuple(a: Union[ValuationTuple, Sequence[int]]) -> ValuationTuple:
    return a if isinstance(a, ValuationTuple) else ValuationTuple(a)


def syracuse_valuation(n: int, length: int) -> ValuationTuple:
    """(nu_2(3N+1), nu_2(3 Syr(N)+1), ..., nu_2(3 Syr^{length-1}(N)+1))."""
    if n < 1 or not n & 1:
        raise ValueError("need an odd positive integer")
    out = []
    for _ in range(length):
        m = 3 * n + 1
        a = (m & -m).bit_length() - 1
        out.append(a)
        n = m >> a
    return ValuationTuple(out)


def syr_iterate(n: int, steps: int) -> int:
    if n < 1 or not n & 1:
        raise ValueError("need an odd positive integer")
    for _ in range(steps):
        n = _odd_part(3 * n + 1)
    return n


def offset(a: Union[ValuationTuple, Sequence[int]]) -> DyadicRational:
    """F_n(a) = sum_m 3^{n-m} 2^{-a_[m,n]}, built by Horner's rule."""
    a = _as_tuple(a)
    # F_k = (3 F_{k-1} + 1) / 2^{a_k}, starting from F_0 = 0.
    num, e = 0, 0
    for ak in a:
        num = 3 * num + (1 << e)
        e += ak
    return DyadicRational(num, e)


def affine_apply(a: Union[ValuationTuple, Sequence[int]], x) -> DyadicRational:
    """Aff_{a_n} o ... o Aff_{a_1} applied to x, i.e. 3^n 2^{-|a|} x + F_n(a)."""
    a = _as_tuple(a)
    x = DyadicRational.coerce(x)
    return x.scale(3 ** a.n, -a.size()) + offset(a)


@dataclass(frozen=True)
class Residue3:
    level: int
    value: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.value < 3 ** self.level:
            raise ValueError(f"bad residue {self.value} mod 3^{self.level}")

    @property
    def modulus(self) -> int:
        return 3 ** self.level


def reduce_mod_3n(x, level: int) -> Residue3:
    """Image of a dyadic rational under Z[1/2] -> Z/3^level Z."""
    if level < 0:
        raise ValueError("level must be >= 0")
    x = DyadicRational.coerce(x)
    mod = 3 ** level
    if mod == 1:
        return Residue3(0, 0)
    inv2 = (mod + 1) // 2
    return Residue3(level, x.numerator * pow(inv2, x.denom_exp, mod) % mod)
