"""Weierstrass models, invariants, reduction data and the group law."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from .arith import DomainError, factorize, is_prime, qr_table, valuation


class SingularCurveError(DomainError):
    """The discriminant of the model vanishes."""


def _check_int(*vals):
    for v in vals:
        if not isinstance(v, (int, np.integer)):
            raise TypeError(f"integer coefficient expected, got {type(v).__name__}")


@dataclass(frozen=True)
class GeneralWeierstrass:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 over Z."""

    a1: int
    a2: int
    a3: int
    a4: int
    a6: int

    def __post_init__(self):
        _check_int(self.a1, self.a2, self.a3, self.a4, self.a6)
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if self.discriminant == 0:
            raise SingularCurveError(f"singular model {self.coefficients}")

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def b2(self) -> int:
        return self.a1 * self.a1 + 4 * self.a2

    @property
    def b4(self) -> int:
        return 2 * self.a4 + self.a1 * self.a3

    @property
    def b6(self) -> int:
        return self.a3 * self.a3 + 4 * self.a6

    @property
    def b8(self) -> int:
        a1, a2, a3, a4, a6 = self.coefficients
        return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4

    @cached_property
    def c4(self) -> int:
        return self.b2 ** 2 - 24 * self.b4

    @cached_property
    def c6(self) -> int:
        b2, b4, b6 = self.b2, self.b4, self.b6
        return -(b2 ** 3) + 36 * b2 * b4 - 216 * b6

    @cached_property
    def discriminant(self) -> int:
        num = self.c4 ** 3 - self.c6 ** 2
        q, r = divmod(num, 1728)
        assert r == 0
        return q

    def contains(self, x, y) -> bool:
        a1, a2, a3, a4, a6 = self.coefficients
        return y * y + a1 * x * y + a3 * y == x ** 3 + a2 * x * x + a4 * x + a6

    def as_general(self) -> "GeneralWeierstrass":
        return self


@dataclass(frozen=True)
class ShortWeierstrass:
    """y^2 = x^3 + a x + b over Z."""

    a: int
    b: int

    def __post_init__(self):
        _check_int(self.a, self.b)
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        if 4 * self.a ** 3 + 27 * self.b ** 2 == 0:
            raise SingularCurveError(f"singular model y^2 = x^3 + {self.a}x + {self.b}")

    @property
    def discriminant(self) -> int:
        return -16 * (4 * self.a ** 3 + 27 * self.b ** 2)

    @property
    def c4(self) -> int:
        return -48 * self.a

    @property
    def c6(self) -> int:
        return -864 * self.b

    @property
    def coefficients(self) -> tuple[int, int, int, int, int]:
        return (0, 0, 0, self.a, self.b)

    def contains(self, x, y) -> bool:
        return y * y == x ** 3 + self.a * x + self.b

    @cached_property
    def _general(self) -> GeneralWeierstrass:
        return GeneralWeierstrass(0, 0, 0, self.a, self.b)

    def as_general(self) -> GeneralWeierstrass:
        return self._general


Curve = Union[GeneralWeierstrass, ShortWeierstrass]


@dataclass(frozen=True)
class ChangeOfVariables:
    """x = u^2 x' + r,  y = u^3 y' + s u^2 x' + t."""

    u: int
    r: int = 0
    s: int = 0
    t: int = 0

    def __post_init__(self):
        if self.u == 0:
            raise DomainError("change of variables needs u != 0")


class ReductionType(enum.Enum):
    GOOD = "good"
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


def invariants(E: Curve) -> tuple[int, int, int, int, int, int]:
    """(b2, b4, b6, c4, c6, discriminant) of a model."""
    G = E.as_general()
    return (G.b2, G.b4, G.b6, G.c4, G.c6, G.discriminant)


def short_form(E: Curve) -> ShortWeierstrass:
    """The model y^2 = x^3 - 27 c4 x - 54 c6 (a u = 1/6 rescaling of E)."""
    G = E.as_general()
    return ShortWeierstrass(-27 * G.c4, -54 * G.c6)


def apply_cov(E: Curve, c: ChangeOfVariables) -> GeneralWeierstrass:
    """Transform E by c; the result must again have integral coefficients."""
    a1, a2, a3, a4, a6 = E.as_general().coefficients
    u, r, s, t = c.u, c.r, c.s, c.t
    nums = (
        (a1 + 2 * s, 1),
        (a2 - s * a1 + 3 * r - s * s, 2),
        (a3 + r * a1 + 2 * t, 3),
        (a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t, 4),
        (a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1, 6),
    )
    out = []
    for num, k in nums:
        q, rem = divmod(num, u ** k)
        if rem:
            raise DomainError(f"change of variables {c} gives a non-integral model")
        out.append(q)
    return GeneralWeierstrass(*out)


def model_from_c4c6(c4: int, c6: int) -> GeneralWeierstrass | None:
    """An integral model with the given (c4, c6), or None if none exists.

    Searches b2 mod 12 and a1, a3 in {0, 1}; this covers every integral
    model up to integral (r, s, t) changes, so None means Kraus's
    conditions fail.
    """
    num = c4 ** 3 - c6 ** 2
    if num == 0 or num % 1728:
        return None
    for b2 in range(-5, 7):
        b4, r4 = divmod(b2 * b2 - c4, 24)
        if r4:
            continue
        b6, r6 = divmod(-(b2 ** 3) + 36 * b2 * b4 - c6, 216)
        if r6:
            continue
        a1 = b2 % 2
        a2, r2 = divmod(b2 - a1, 4)
        if r2:
            continue
        a3 = b6 % 2
        a6, r3 = divmod(b6 - a3, 4)
        if r3:
            continue
        a4, r5 = divmod(b4 - a1 * a3, 2)
        if r5:
            continue
        G = GeneralWeierstrass(a1, a2, a3, a4, a6)
        if G.c4 == c4 and G.c6 == c6:
            return G
    return None


def is_minimal_at(E: ShortWeierstrass, p: int) -> bool:
    """For p > 3: False iff p^4 | a and p^6 | b."""
    if p <= 3 or not is_prime(p):
        raise DomainError(f"minimality rule needs a prime p > 3, got {p}")
    return not (E.a % p ** 4 == 0 and E.b % p ** 6 == 0)


def _cubic_values(coeffs: tuple[int, int, int, int], p: int) -> np.ndarray:
    """(c3 x^3 + c2 x^2 + c1 x + c0) mod p for x = 0..p-1, overflow-free."""
    c3, c2, c1, c0 = (int(c) % p for c in coeffs)
    x = np.arange(p, dtype=np.int64)
    v = np.full(p, c3, dtype=np.int64)
    for c in (c2, c1, c0):
        v = (v * x + c) % p
    return v


def lambda_p(E: Curve, p: int) -> int:
    """-sum_x ((x^3 + a x + b)/p); for general models the completed-square cubic."""
    if p <= 3 or not is_prime(p):
        raise DomainError(f"lambda_p needs a prime p > 3, got {p}")
    if isinstance(E, ShortWeierstrass):
        coeffs = (1, 0, E.a, E.b)
    else:
        coeffs = (4, E.b2, 2 * E.b4, E.b6)
    chi = qr_table(p)
    return -int(chi[_cubic_values(coeffs, p)].sum(dtype=np.int64))


def affine_point_count(E: Curve, p: int) -> int:
    """Number of affine solutions mod p, by direct enumeration of (x, y)."""
    a1, a2, a3, a4, a6 = (c % p for c in E.as_general().coefficients)
    y = np.arange(p, dtype=np.int64)
    total = 0
    for x in range(p):
        lhs = (y * y + (a1 * x + a3) * y) % p
        rhs = (x ** 3 + a2 * x * x + a4 * x + a6) % p
        total += int(np.count_nonzero(lhs == rhs))
    return total


def reduction_type(E: ShortWeierstrass, p: int) -> ReductionType:
    """Reduction at p > 3 of a model that is minimal at p."""
    if not is_minimal_at(E, p):
        raise DomainError(f"model not minimal at {p}; minimize before classifying")
    if E.discriminant % p:
        return ReductionType.GOOD
    return ReductionType.ADDITIVE if E.c4 % p == 0 else ReductionType.MULTIPLICATIVE


@dataclass(frozen=True)
class MinimalData:
    """Invariants of a globally minimal model together with the scaling used."""

    c4: int
    c6: int
    discriminant: int
    u: int


def minimal_invariants(E: Curve, primes: Iterable[int] | None = None) -> MinimalData:
    """Divide out u^4 | c4, u^6 | c6 wherever an integral model survives.

    ``primes`` optionally lists candidate primes (those dividing the
    discriminant); otherwise the discriminant is factored.
    """
    G = E.as_general() if isinstance(E, ShortWeierstrass) else E
    c4, c6, disc = G.c4, G.c6, G.discriminant
    if primes is None:
        primes = factorize(disc).keys()
    u = 1
    for p in sorted(set(primes)):
        if p > 3:
            while disc % p ** 12 == 0 and c4 % p ** 4 == 0 and c6 % p ** 6 == 0:
                c4 //= p ** 4
                c6 //= p ** 6
                disc //= p ** 12
                u *= p
    for p in (2, 3):
        while disc % p ** 12 == 0 and c4 % p ** 4 == 0 and c6 % p ** 6 == 0:
            if model_from_c4c6(c4 // p ** 4, c6 // p ** 6) is None:
                break
            c4 //= p ** 4
            c6 //= p ** 6
            disc //= p ** 12
            u *= p
    return MinimalData(c4, c6, disc, u)


# Clamp for additive exponents at 2 and 3; the true value never exceeds it.
MAX_SMALL_PRIME_EXPONENT = 8


def _inv(a: int, p: int) -> int:
    return pow(a % p, -1, p)


def _shift(a: tuple[int, ...], r: int = 0, s: int = 0, t: int = 0) -> tuple[int, ...]:
    """Coefficients after x = x' + r, y = y' + s x' + t (u = 1)."""
    a1, a2, a3, a4, a6 = a
    return (
        a1 + 2 * s,
        a2 - s * a1 + 3 * r - s * s,
        a3 + r * a1 + 2 * t,
        a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t,
        a6 + r * a4 + r * r * a2 + r ** 3 - t * a3 - t * t - r * t * a1,
    )


def _disc(a: tuple[int, ...]) -> int:
    a1, a2, a3, a4, a6 = a
    b2, b4, b6 = a1 * a1 + 4 * a2, 2 * a4 + a1 * a3, a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    return -b2 * b2 * b8 - 8 * b4 ** 3 - 27 * b6 * b6 + 9 * b2 * b4 * b6


def _vp(n: int, p: int) -> int:
    return 10 ** 6 if n == 0 else valuation(n, p)


def tate_exponent(E: Curve, p: int) -> int:
    """Conductor exponent at p by Tate's algorithm (any prime, exact)."""
    a = E.as_general().coefficients
    while True:
        a1, a2, a3, a4, a6 = a
        b2, b4, b6 = a1 * a1 + 4 * a2, 2 * a4 + a1 * a3, a3 * a3 + 4 * a6
        c4 = b2 * b2 - 24 * b4
        c6 = -(b2 ** 3) + 36 * b2 * b4 - 216 * b6
        n = _vp(_disc(a), p)
        if n == 0:
            return 0
        if p == 2:
            if b2 % 2 == 0:
                r = a4 % 2
                t = (r * (1 + a2 + a4) + a6) % 2
            else:
                r = a3 % 2
                t = (r + a4) % 2
        elif p == 3:
            r = (-b6) % 3 if b2 % 3 == 0 else (-b2 * b4) % 3
            t = (a1 * r + a3) % 3
        else:
            if c4 % p == 0:
                r = (-_inv(12, p) * b2) % p
            else:
                r = (-_inv(12 * c4, p) * (c6 + b2 * c4)) % p
            t = (-_inv(2, p) * (a1 * r + a3)) % p
        a = _shift(a, r=r, t=t)
        a1, a2, a3, a4, a6 = a
        b2 = a1 * a1 + 4 * a2
        if b2 % p:
            return 1
        if a6 % (p * p):
            return n
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        if b8 % p ** 3:
            return n - 1
        b6 = a3 * a3 + 4 * a6
        if b6 % p ** 3:
            return n - 2
        if p == 2:
            s, t = a2 % 2, 2 * ((a6 // 4) % 2)
        else:
            s = (-a1 * _inv(2, p)) % p
            t = (-a3 * _inv(2, p)) % (p * p)
        a = _shift(a, s=s, t=t)
        a1, a2, a3, a4, a6 = a
        b, c, d = a2 // p, a4 // (p * p), a6 // p ** 3
        w = 27 * d * d - b * b * c * c + 4 * b ** 3 * d - 18 * b * c * d + 4 * c ** 3
        x = 3 * c - b * b
        if w % p:
            return n - 4
        if x % p:
            # I_m^*: one double root; peel off powers of p until it splits
            if p == 2:
                r = c
            elif p == 3:
                r = b * c
            else:
                r = (b * c - 9 * d) * _inv(2 * x, p)
            a = _shift(a, r=p * (r % p))
            ix = iy = 3
            mx = my = p * p
            while True:
                a1, a2, a3, a4, a6 = a
                xa2, xa3 = a2 // p, a3 // my
                xa4, xa6 = a4 // (p * mx), a6 // (mx * my)
                if (xa3 * xa3 + 4 * xa6) % p:
                    break
                t = my * (xa6 % 2) if p == 2 else my * ((-xa3 * _inv(2, p)) % p)
                a = _shift(a, t=t)
                my *= p
                iy += 1
                a1, a2, a3, a4, a6 = a
                xa2, xa3 = a2 // p, a3 // my
                xa4, xa6 = a4 // (p * mx), a6 // (mx * my)
                if (xa4 * xa4 - 4 * xa2 * xa6) % p:
                    break
                if p == 2:
                    r = mx * ((xa6 * xa2) % 2)
                else:
                    r = mx * ((-xa4 * _inv(2 * xa2, p)) % p)
                a = _shift(a, r=r)
                mx *= p
                ix += 1
            return n - (ix + iy - 5) - 4
        # triple root
        rr = b if p == 2 else (-d if p == 3 else -b * _inv(3, p))
        a = _shift(a, r=p * (rr % p))
        a1, a2, a3, a4, a6 = a
        x3, x6 = a3 // (p * p), a6 // p ** 4
        if (x3 * x3 + 4 * x6) % p:
            return n - 6
        t = x6 % 2 if p == 2 else (-x3 * _inv(2, p)) % p
        a = _shift(a, t=p * p * t)
        a1, a2, a3, a4, a6 = a
        if a4 % p ** 4:
            return n - 7
        if a6 % p ** 6:
            return n - 8
        a = (a1 // p, a2 // p ** 2, a3 // p ** 3, a4 // p ** 4, a6 // p ** 6)


def conductor_exponent(m: MinimalData, p: int) -> int:
    """f_p from discriminant valuations: exact for p > 3, clamped at 2 and 3."""
    v = valuation(m.discriminant, p) if m.discriminant % p == 0 else 0
    if v == 0:
        return 0
    if m.c4 % p:
        return 1
    if p > 3:
        return 2
    return max(2, min(v, MAX_SMALL_PRIME_EXPONENT))


def conductor_exponents(
    E: Curve, primes: Iterable[int] | None = None, small_primes: str = "tate"
) -> dict[int, int]:
    """Exponents f_p of the conductor.

    Primes above 3 use the discriminant/c4 rule on the minimized model.  At
    2 and 3, ``small_primes="tate"`` runs Tate's algorithm and ``"clamp"``
    uses max(2, min(v_p(disc_min), 8)) for additive reduction.
    """
    if small_primes not in ("tate", "clamp"):
        raise DomainError(f"unknown small-prime method {small_primes!r}")
    if primes is None:
        primes = factorize(E.as_general().discriminant).keys()
    primes = sorted(set(primes))
    m = minimal_invariants(E, primes)
    out = {}
    for p in primes:
        if p <= 3 and small_primes == "tate":
            f = tate_exponent(E, p)
        else:
            f = conductor_exponent(m, p)
        if f:
            out[p] = f
    return out


def log_conductor(
    E: Curve, primes: Iterable[int] | None = None, small_primes: str = "tate"
) -> float:
    """log N, summing f_p log p over the primes dividing the discriminant."""
    exps = conductor_exponents(E, primes, small_primes)
    return sum(f * math.log(p) for p, f in exps.items())


# ---------------------------------------------------------------------------
# Group law (exact rational arithmetic)


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "O"


INFINITY = _Infinity()


@dataclass(frozen=True)
class AffinePoint:
    x: Fraction
    y: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "y", Fraction(self.y))


Point = Union[AffinePoint, _Infinity]


def _require_on(E: GeneralWeierstrass, P: Point) -> None:
    if P is INFINITY:
        return
    if not E.contains(P.x, P.y):
        raise DomainError(f"{P} is not on {E}")


def negate(E: Curve, P: Point) -> Point:
    G = E.as_general()
    if P is INFINITY:
        return P
    return AffinePoint(P.x, -P.y - G.a1 * P.x - G.a3)


def point_add(E: Curve, P: Point, Q: Point) -> Point:
    G = E.as_general()
    _require_on(G, P)
    _require_on(G, Q)
    return _add(G, P, Q)


def _add(G: GeneralWeierstrass, P: Point, Q: Point) -> Point:
    if P is INFINITY:
        return Q
    if Q is INFINITY:
        return P
    a1, a2, a3, a4, _ = G.coefficients
    if P.x == Q.x:
        if P.y + Q.y + a1 * Q.x + a3 == 0:
            return INFINITY
        slope = (3 * P.x ** 2 + 2 * a2 * P.x + a4 - a1 * P.y) / (2 * P.y + a1 * P.x + a3)
    else:
        slope = (Q.y - P.y) / (Q.x - P.x)
    nu = P.y - slope * P.x
    x3 = slope * slope + a1 * slope - a2 - P.x - Q.x
    y3 = -(slope + a1) * x3 - nu - a3
    return AffinePoint(x3, y3)


def point_mul(E: Curve, P: Point, n: int) -> Point:
    """n P by double-and-add."""
    G = E.as_general()
    _require_on(G, P)
    if n < 0:
        P, n = negate(G, P), -n
    acc: Point = INFINITY
    base = P
    while n:
        if n & 1:
            acc = _add(G, acc, base)
        base = _add(G, base, base)
        n >>= 1
    return acc


# Mazur: rational torsion points have order at most 12.
MAZUR_BOUND = 12


def torsion_order(E: Curve, P: Point) -> int | None:
    """Exact order of P if it is at most 12, otherwise None (non-torsion)."""
    G = E.as_general()
    _require_on(G, P)
    Q = P
    for n in range(1, MAZUR_BOUND + 1):
        if Q is INFINITY:
            return n
        Q = _add(G, Q, P)
    return None


def lutz_nagell_allows_torsion(a: int, b: int) -> bool:
    """Whether (0, b) on y^2 = x^3 + a x + b^2 can be torsion: needs b^2 | 4a^3."""
    if b == 0:
        return True
    return (4 * a ** 3) % (b * b) == 0
