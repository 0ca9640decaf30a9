"""Modular and complex arithmetic primitives.

Complex values are plain Python ``complex`` (float64 components).  Every
public operation returns finite values; comparisons are always made with an
explicit tolerance by the caller.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Raised when an argument is outside the domain of an operation."""


@dataclass(frozen=True)
class PrimeTable:
    """Ascending list of all primes up to ``limit``."""

    limit: int
    primes: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.primes, dtype=np.int64)

    def between(self, lo: float, hi: float) -> list[int]:
        """Primes p with lo < p <= hi."""
        return [p for p in self.primes if lo < p <= hi]


def _sieve_mask(limit: int) -> np.ndarray:
    mask = np.ones(limit + 1, dtype=bool)
    mask[:2] = False
    mask[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if mask[p]:
            mask[p * p :: 2 * p] = False
    return mask


def sieve_primes(limit: int) -> PrimeTable:
    """Eratosthenes sieve; raises DomainError for limit < 2."""
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"empty prime range: limit={limit} < 2")
    primes = np.flatnonzero(_sieve_mask(limit))
    return PrimeTable(limit, tuple(int(p) for p in primes))


@lru_cache(maxsize=8)
def _cached_primes(limit: int) -> tuple[int, ...]:
    return sieve_primes(limit).primes


def primes_upto(limit: float) -> tuple[int, ...]:
    """All primes <= limit, empty when limit < 2.  Cached by power-of-two bucket."""
    limit = int(limit)
    if limit < 2:
        return ()
    bucket = 1 << max(10, limit.bit_length())
    ps = _cached_primes(bucket)
    hi = np.searchsorted(np.asarray(ps), limit, side="right")
    return ps[:hi]


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for |n| < 3.3e24, trial division below 1e4."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    if n < 1681:
        return True
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _require_odd_prime(p: int) -> None:
    if p < 3 or p % 2 == 0 or not is_prime(p):
        raise DomainError(f"{p} is not an odd prime")


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) via Euler's criterion."""
    _require_odd_prime(p)
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n, by the reciprocity ladder."""
    if n <= 0 or n % 2 == 0:
        raise DomainError(f"Jacobi symbol needs odd positive modulus, got {n}")
    a %= n
    sign = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n), extending Jacobi to all integers n."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * jacobi(a, n)


def mod_inverse(a: int, m: int) -> int:
    """Inverse of a mod m in [0, m).

    For prime m with m | a this returns 0, the convention used for the
    complete sums.  A missing inverse modulo a composite raises.
    """
    if m < 2:
        raise DomainError(f"modulus must be >= 2, got {m}")
    a %= m
    if math.gcd(a, m) == 1:
        return pow(a, -1, m)
    if a == 0 and is_prime(m):
        return 0
    raise DomainError(f"{a} has no inverse modulo {m}")


def e_frac(num: int, den: int) -> complex:
    """exp(2 pi i num/den), with num reduced mod den first."""
    if den == 0:
        raise DomainError("zero denominator")
    if den < 0:
        num, den = -num, -den
    r = num % den
    if r == 0:
        return 1.0 + 0.0j
    if 2 * r == den:
        return -1.0 + 0.0j
    if 4 * r == den:
        return 1.0j
    if 4 * r == 3 * den:
        return -1.0j
    return cmath.exp(1j * TWO_PI * r / den)


def e(x: float) -> complex:
    """exp(2 pi i x) for a real argument, reduced mod 1."""
    return cmath.exp(1j * TWO_PI * (x - math.floor(x)))


def gauss_sum_sign(p: int) -> complex:
    """Sign epsilon_p of the quadratic Gauss sum: 1 if p = 1 mod 4, else i."""
    _require_odd_prime(p)
    return 1.0 + 0.0j if p % 4 == 1 else 1.0j


def quadratic_gauss_sum(a: int, b: int, p: int) -> complex:
    """Closed form of sum_x e((a x^2 + b x)/p)."""
    _require_odd_prime(p)
    a %= p
    b %= p
    if a:
        inv4 = mod_inverse(4, p)
        phase = (-mod_inverse(a, p) * b * b * inv4) % p
        return gauss_sum_sign(p) * math.sqrt(p) * legendre(a, p) * e_frac(phase, p)
    if b == 0:
        return complex(p)
    return 0j


def roots_of_unity(p: int) -> np.ndarray:
    """Vector of exp(2 pi i j/p), j = 0..p-1."""
    return np.exp(1j * TWO_PI * np.arange(p) / p)


def kloosterman(m: int, n: int, p: int) -> float:
    """Kloosterman sum S(m, n; p) by direct summation (real up to rounding)."""
    _require_odd_prime(p)
    g = np.arange(1, p, dtype=np.int64)
    ginv = np.array([pow(int(x), -1, p) for x in g], dtype=np.int64)
    phases = (m % p * g + n % p * ginv) % p
    return float(np.cos(TWO_PI * phases / p).sum())


@lru_cache(maxsize=4096)
def _qr_table(p: int) -> tuple[int, ...]:
    chi = [-1] * p
    chi[0] = 0
    for x in range(1, (p + 1) // 2):
        chi[x * x % p] = 1
    return tuple(chi)


def qr_table(p: int) -> np.ndarray:
    """Lookup table t with t[a] = (a/p) for 0 <= a < p."""
    _require_odd_prime(p)
    return np.array(_qr_table(p), dtype=np.int8)


def qr_list(p: int) -> tuple[int, ...]:
    """Same as qr_table but as a tuple (fast for scalar inner loops)."""
    return _qr_table(p)


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise DomainError("valuation of zero")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of |n| by trial division plus Pollard rho."""
    n = abs(int(n))
    if n == 0:
        raise DomainError("cannot factor zero")
    out: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 7
    steps = (4, 2, 4, 2, 4, 6, 2, 6)
    i = 0
    while f * f <= n and f < 100_000:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += steps[i]
        i = (i + 1) % 8
    if n > 1:
        for q in _split(n):
            out[q] = out.get(q, 0) + 1
    return dict(sorted(out.items()))


def _split(n: int) -> list[int]:
    if n == 1:
        return []
    if is_prime(n):
        return [n]
    r = math.isqrt(n)
    if r * r == n:
        return _split(r) * 2
    d = _pollard_rho(n)
    return sorted(_split(d) + _split(n // d))


def _pollard_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    c = 1
    while True:
        x = y = 2
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d
        c += 1


def squarefree_part(n: int) -> int:
    out = 1
    for p, a in factorize(n).items():
        if a % 2:
            out *= p
    return out


def is_squarefree(n: int) -> bool:
    return all(a == 1 for a in factorize(n).values())
