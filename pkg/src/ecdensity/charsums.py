"""Complete character sums, their oracles, and incomplete-sum scans.

The brute-force paths evaluate the defining sums with nothing but the
Legendre table and the additive character; the closed forms are kept in
separate functions so a comparison between the two is never circular.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .arith import (
    TWO_PI,
    DomainError,
    e_frac,
    gauss_sum_sign,
    is_prime,
    is_square,
    jacobi,
    kloosterman,
    kronecker,
    mod_inverse,
    primes_upto,
    qr_table,
)
from .families import bump

BRUTE = "brute_force"
CLOSED = "closed_form"


@dataclass(frozen=True)
class CharSumValue:
    value: complex
    method: str
    p: int
    params: tuple[int, int]


def _check_p(p: int, lo: int = 3) -> None:
    if p < lo or p % 2 == 0 or not is_prime(p):
        raise DomainError(f"need an odd prime >= {lo}, got {p}")


# -- complete sums over the (alpha, beta) parameter box ---------------------

@lru_cache(maxsize=128)
def _lambda_table(p: int) -> np.ndarray:
    """lam[a, b] = -sum_x ((x^3 + a x + b)/p), by the full p^3 evaluation."""
    chi = qr_table(p).astype(np.int64)
    x = np.arange(p, dtype=np.int64)
    a = x[:, None, None]
    b = x[None, :, None]
    vals = (x[None, None, :] ** 3 + a * x[None, None, :] + b) % p
    lam = -chi[vals].sum(axis=2)
    lam.setflags(write=False)
    return lam


@lru_cache(maxsize=128)
def _dft_matrix(p: int) -> np.ndarray:
    j = np.arange(p, dtype=np.int64)
    return np.exp(1j * TWO_PI * (np.outer(j, j) % p) / p)


@lru_cache(maxsize=64)
def T_table(p: int) -> np.ndarray:
    """Brute T(h, k; p) for all (h, k), as the defining double sum F lam F^T."""
    _check_p(p)
    F = _dft_matrix(p)
    return F @ _lambda_table(p) @ F.T


@lru_cache(maxsize=64)
def Tprime_table(p: int) -> np.ndarray:
    """Brute T'(h, k; p) = sum_{alpha, beta} lam(alpha, beta^2) e((alpha h + beta k)/p)."""
    _check_p(p)
    sq = np.arange(p, dtype=np.int64) ** 2 % p
    F = _dft_matrix(p)
    return F @ _lambda_table(p)[:, sq] @ F.T


def T_brute(h: int, k: int, p: int) -> CharSumValue:
    return CharSumValue(complex(T_table(p)[h % p, k % p]), BRUTE, p, (h, k))


def T_closed(h: int, k: int, p: int) -> CharSumValue:
    """-eps_p p^{3/2} (k/p) e(-h^3 kbar^2 / p)."""
    _check_p(p)
    chi = kronecker(k, p)
    if chi == 0:
        return CharSumValue(0j, CLOSED, p, (h, k))
    kb = mod_inverse(k, p)
    val = -gauss_sum_sign(p) * p ** 1.5 * chi * e_frac(-(h ** 3) * kb * kb, p)
    return CharSumValue(val, CLOSED, p, (h, k))


def Tprime_brute(h: int, k: int, p: int) -> CharSumValue:
    return CharSumValue(complex(Tprime_table(p)[h % p, k % p]), BRUTE, p, (h, k))


def Tprime_closed(h: int, k: int, p: int) -> CharSumValue:
    """-p^2 delta(h) delta(k) - eps_p p^{3/2} (-h/p) e(k^4 hbar^3 2bar^6 / p) + p."""
    _check_p(p)
    val = complex(p)
    if h % p == 0 and k % p == 0:
        val -= p * p
    chi = kronecker(-h, p)
    if chi:
        hb = mod_inverse(h, p)
        two6 = mod_inverse(64, p)
        val -= gauss_sum_sign(p) * p ** 1.5 * chi * e_frac(k ** 4 * hb ** 3 * two6, p)
    return CharSumValue(val, CLOSED, p, (h, k))


def closed_table(fn: Callable[[int, int, int], CharSumValue], p: int) -> np.ndarray:
    out = np.empty((p, p), dtype=complex)
    for h in range(p):
        for k in range(p):
            out[h, k] = fn(h, k, p).value
    return out


# -- scan reports ------------------------------------------------------------

@dataclass
class ScanReport:
    kind: str
    params: tuple[tuple[str, float], ...]
    aggregate: complex | int
    normalizer: float
    extras: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.normalizer <= 0:
            return 0.0
        return abs(self.aggregate) / self.normalizer

    def header(self) -> list[str]:
        return ["kind"] + [k for k, _ in self.params] + ["abs_aggregate", "normalizer", "ratio"] + sorted(self.extras)

    def row(self) -> list[str]:
        vals = [self.kind] + [_fmt(v) for _, v in self.params]
        vals += [_fmt(float(abs(self.aggregate))), _fmt(float(self.normalizer)), _fmt(self.ratio)]
        return vals + [_fmt(self.extras[k]) for k in sorted(self.extras)]

    def as_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(self.params)
        d.update(abs_aggregate=float(abs(self.aggregate)), normalizer=float(self.normalizer), ratio=self.ratio)
        d.update(sorted(self.extras.items()))
        return d


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


def scans_to_csv(reports: Sequence[ScanReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    last = None
    for r in reports:
        h = r.header()
        if h != last:
            wr.writerow(h)
            last = h
        wr.writerow(r.row())
    return buf.getvalue()


def _phase_sum(phases: np.ndarray, coef: np.ndarray | None = None) -> complex:
    """sum coef * exp(2 pi i phases), phases given in turns."""
    z = np.exp(1j * TWO_PI * np.mod(phases, 1.0))
    if coef is not None:
        z = z * coef
    return complex(math.fsum(z.real.ravel()), math.fsum(z.imag.ravel()))


def _chi_vector(k: int, ps: np.ndarray) -> np.ndarray:
    return np.array([kronecker(k, int(p)) for p in ps], dtype=float)


def _inverses(vals: np.ndarray, m: int) -> np.ndarray:
    """Inverse of each entry mod m (entries assumed coprime to m); m = 1 gives 0."""
    if m == 1:
        return np.zeros(len(vals), dtype=np.int64)
    return np.array([pow(int(v), -1, m) for v in vals], dtype=np.int64)


def sum_S_three_var(H: int | tuple[int, int], K: int | tuple[int, int], P: int | tuple[int, int],
                    weights: Callable[[np.ndarray, int, np.ndarray], np.ndarray] | None = None,
                    delta: float = 1 / 48) -> ScanReport:
    """sum_k sum_h sum_p (k/p) e(h^3/(p k^2)) e(h^3 pbar/k^2).

    Each range is either an upper end (1..H) or a half-open dyadic block
    (lo, hi].  ``weights(h, k, p)`` multiplies the terms when given.
    """
    hs, ks, plo, phi = _range(H), _range(K), *_bounds(P)
    ps = np.array([p for p in primes_upto(phi) if p > plo], dtype=np.int64)
    Pn = phi
    params = (("H", float(hs[-1]) if hs.size else 0.0), ("K", float(ks[-1]) if ks.size else 0.0), ("P", float(Pn)))
    trivial = float(hs.size * ks.size * ps.size)
    extras = {"trivial_bound": trivial, "delta": float(delta)}
    if hs.size == 0 or ks.size == 0 or ps.size == 0:
        extras["empty"] = 1
        return ScanReport("three_var", params, 0j, Pn ** (1 - 1.5 * delta) if Pn > 0 else 1.0, extras)
    h3 = hs.astype(object) ** 3
    re_parts, im_parts = [], []
    for k in ks:
        k = int(k)
        chi = _chi_vector(k, ps)
        live = chi != 0
        if not live.any():
            continue
        pk = ps[live]
        m = k * k
        pinv = _inverses(pk, m)
        h3m = np.array([int(v % m) for v in h3], dtype=np.int64)
        # two phases: h^3/(p k^2) (real) and h^3 pbar/k^2 (mod 1)
        real_part = np.array([float(v) for v in h3])[:, None] / (pk[None, :] * float(m))
        modpart = (h3m[:, None] * pinv[None, :]) % m / m
        coef = np.broadcast_to(chi[live][None, :], real_part.shape)
        if weights is not None:
            coef = coef * weights(hs[:, None], k, pk[None, :])
        z = _phase_sum(real_part + modpart, coef)
        re_parts.append(z.real)
        im_parts.append(z.imag)
    total = complex(math.fsum(re_parts), math.fsum(im_parts))
    extras["trivial_ratio"] = abs(total) / trivial
    return ScanReport("three_var", params, total, Pn ** (1 - 1.5 * delta), extras)


def _range(R) -> np.ndarray:
    lo, hi = _bounds(R)
    return np.arange(lo + 1, hi + 1, dtype=np.int64)


def _bounds(R) -> tuple[int, int]:
    if isinstance(R, tuple):
        return int(R[0]), int(R[1])
    return 0, int(R)


def conjecture_prime_sum(k: int, P: int, delta: float) -> ScanReport:
    """sum_{h <= H} sum_{p <= P} (k/p) e(h^3 pbar/k^2) with H = floor(P^{2/3+delta})."""
    if k <= 0 or is_square(k):
        raise DomainError(f"k must be a positive non-square, got {k}")
    H = math.floor(P ** (2 / 3 + delta))
    ps = np.array(primes_upto(P), dtype=np.int64)
    chi = _chi_vector(k, ps)
    live = chi != 0
    m = k * k
    pinv = _inverses(ps[live], m)
    h3 = np.array([pow(h, 3, m) for h in range(1, H + 1)], dtype=np.int64)
    phases = (h3[:, None] * pinv[None, :]) % m / m
    coef = np.broadcast_to(chi[live][None, :], phases.shape)
    total = _phase_sum(phases, coef)
    extras = {"H": H, "trivial_bound": float(H * len(ps))}
    return ScanReport("conjecture71", (("k", k), ("P", P), ("delta", float(delta))), total,
                      P ** (1 - 1.5 * delta), extras)


def analogue_K(P: int, delta: float) -> float:
    H = math.floor(P ** (2 / 3 + delta))
    return H ** 1.5 / math.sqrt(P)


def admissible_ks(P: int, delta: float, count: int = 5) -> list[int]:
    """The ``count`` odd non-squares nearest K = H^{3/2} P^{-1/2}, ties to the smaller."""
    K = analogue_K(P, delta)
    cands = [k for k in range(3, int(3 * K) + 8, 2) if not is_square(k)]
    cands.sort(key=lambda k: (abs(k - K), k))
    return sorted(cands[:count])


def integer_analogue_sum(P: int, delta: float, k: int,
                         w: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None) -> ScanReport:
    """sum'_h sum_m (m/k) e(h^3 mbar/k^2) w(h/H, m/P), gcd(h, k) = 1.

    The default weight is the bump on (1, 2) in each variable.  Odd positive
    non-square k only: the Jacobi symbol is not extended to even moduli.
    """
    if k <= 0 or k % 2 == 0:
        raise DomainError(f"k must be odd and positive, got {k}")
    if is_square(k):
        raise DomainError(f"k = {k} is a square; the character is principal")
    H = math.floor(P ** (2 / 3 + delta))
    if w is None:
        w = lambda s, t: bump(s) * bump(t)  # noqa: E731
    hs = np.array([h for h in range(H + 1, 2 * H) if math.gcd(h, k) == 1], dtype=np.int64)
    ms = np.array([m for m in range(P + 1, 2 * P) if math.gcd(m, k) == 1], dtype=np.int64)
    params = (("k", k), ("P", P), ("delta", float(delta)))
    norm = P ** (5 / 6 + 6.5 * delta)
    extras = {"H": H, "K": analogue_K(P, delta)}
    if hs.size == 0 or ms.size == 0:
        return ScanReport("integer_analogue", params, 0j, norm, extras)
    m2 = k * k
    chi = np.array([jacobi(int(m), k) for m in ms], dtype=float)
    minv = _inverses(ms, m2)
    h3 = np.array([pow(int(h), 3, m2) for h in hs], dtype=np.int64)
    phases = (h3[:, None] * minv[None, :]) % m2 / m2
    wt = w(hs[:, None] / H, ms[None, :] / P) * chi[None, :]
    total = _phase_sum(phases, wt)
    return ScanReport("integer_analogue", params, total, norm, extras)


# -- the set C(Y) -------------------------------------------------------------

_INT64_SAFE_Y = 200_000


def _square_mask(n: np.ndarray) -> np.ndarray:
    r = np.rint(np.sqrt(n.astype(np.float64))).astype(np.int64)
    return r * r == n


def C_pairs(Y: int) -> list[tuple[int, int]]:
    """All (h, k) with |h| + |k| <= Y and hk(h-k) = +-square (small Y)."""
    out = []
    for h in range(-Y, Y + 1):
        for k in range(-(Y - abs(h)), Y - abs(h) + 1):
            n = abs(h * k * (h - k))
            if is_square(n):
                out.append((h, k))
    return out


def count_C(Y: int) -> tuple[int, int]:
    """(|C(Y)|, number of members with hk(h-k) != 0) by exact enumeration."""
    if Y < 0:
        raise DomainError("Y must be >= 0")
    if Y > _INT64_SAFE_Y:
        pairs = C_pairs(Y)
        nz = sum(1 for h, k in pairs if h * k * (h - k))
        return len(pairs), nz
    # pairs with a zero product: h = 0, k = 0 or h = k
    zero = (2 * Y + 1) + (2 * Y + 1) - 1 + 2 * (Y // 2)
    nonzero = 0
    # (h, k) -> (-h, -k) preserves membership, so count h > 0 and double
    for h in range(1, Y + 1):
        r = Y - h
        k = np.arange(-r, r + 1, dtype=np.int64)
        k = k[(k != 0) & (k != h)]
        n = np.abs(h * k * (h - k))
        nonzero += int(_square_mask(n).sum())
    nonzero *= 2
    return zero + nonzero, nonzero


def parametrized_C(Y: int) -> set[tuple[int, int]]:
    """Pairs with hk(h-k) != 0 produced by h = d^2 l1^2 l2 l3 x^2, k = d^2 l1 l2^2 l3 y^2,
    l1 x^2 = l2 y^2 + l3 z^2, inside |h| + |k| <= Y."""
    out: set[tuple[int, int]] = set()
    signs = (1, -1)
    d = 1
    while 2 * d * d <= Y:
        B = Y // (d * d)
        for L3 in range(1, B + 1):
            for L1 in range(1, math.isqrt(B // L3) + 1):
                for L2 in range(1, math.isqrt(B // (L1 * L3)) + 1):
                    xmax = math.isqrt(B // (L1 * L1 * L2 * L3))
                    ymax = math.isqrt(B // (L1 * L2 * L2 * L3))
                    if xmax == 0 or ymax == 0:
                        continue
                    x2 = np.arange(1, xmax + 1, dtype=np.int64) ** 2
                    y2 = np.arange(1, ymax + 1, dtype=np.int64) ** 2
                    for s1 in signs:
                        for s2 in signs:
                            for s3 in signs:
                                l1, l2, l3 = s1 * L1, s2 * L2, s3 * L3
                                num = l1 * x2[:, None] - l2 * y2[None, :]
                                ok = (num % l3 == 0)
                                z2 = np.where(ok, num // l3, -1)
                                ok &= z2 > 0
                                ok &= _square_mask(np.where(ok, z2, 0))
                                ix, iy = np.nonzero(ok)
                                for i, j in zip(ix, iy):
                                    h = d * d * l1 * l1 * l2 * l3 * int(x2[i])
                                    k = d * d * l1 * l2 * l2 * l3 * int(y2[j])
                                    if abs(h) + abs(k) <= Y:
                                        out.add((h, k))
        d += 1
    return out


# -- small identities ---------------------------------------------------------

def kloosterman_identity_lhs(h: int, k: int, p: int) -> complex:
    chi = qr_table(p).astype(float)
    a = np.arange(p, dtype=np.int64)
    kb = mod_inverse(k, p)
    vals = chi[(a * a + h * k) % p]
    return _phase_sum((2 * h * kb % p) * a % p / p, vals)


def kloosterman_identity_check(h: int, k: int, p: int) -> bool:
    """sum_alpha ((alpha^2 + hk)/p) e(2 h kbar alpha/p) == S(-h^3 kbar, 1; p)."""
    _check_p(p)
    if h % p == 0 or k % p == 0:
        raise DomainError("identity requires p not dividing h or k")
    lhs = kloosterman_identity_lhs(h, k, p)
    rhs = kloosterman(-(h ** 3) * mod_inverse(k, p), 1, p)
    return abs(lhs - rhs) < 1e-8 * math.sqrt(p)


def _inv_or_zero(u: int, v: int) -> int:
    return pow(u, -1, v) if v > 1 else 0


def reciprocity_check(u: int, v: int) -> Fraction:
    """Fractional part of ubar/v + vbar/u - 1/(uv); an integer iff the identity holds."""
    if u <= 0 or v <= 0 or math.gcd(u, v) != 1:
        raise DomainError(f"need coprime positive integers, got ({u}, {v})")
    q = Fraction(_inv_or_zero(u, v), v) + Fraction(_inv_or_zero(v, u), u) - Fraction(1, u * v)
    return q - math.floor(q)


@dataclass(frozen=True)
class GaussianPair:
    """w(x) = exp(-pi (x/s)^2) with transform s exp(-pi (s xi)^2)."""

    scale: float = 1.0

    def w(self, x):
        return np.exp(-math.pi * (np.asarray(x, dtype=float) / self.scale) ** 2)

    def w_hat(self, xi):
        s = self.scale
        return s * np.exp(-math.pi * (s * np.asarray(xi, dtype=float)) ** 2)

    def reach(self, tol: float = 1e-14) -> float:
        """|x| beyond which w < tol."""
        return self.scale * math.sqrt(math.log(1 / tol) / math.pi)

    def reach_hat(self, tol: float = 1e-14) -> float:
        """|xi| beyond which w_hat < tol (the prefactor s is at most a few)."""
        return math.sqrt(math.log(max(self.scale, 1.0) / tol) / math.pi) / self.scale


def poisson_check(pair: GaussianPair, D: float, a: int, l: int) -> float:
    """|sum_{d = a mod l} w(d/D) - (D/l) sum_h e(ha/l) w_hat(hD/l)|."""
    if l < 1 or D <= 0:
        raise DomainError("need l >= 1 and D > 0")
    a %= l
    R = pair.reach(1e-17) + 1
    jmax = int(math.ceil((R * D + l) / l))
    d = a + l * np.arange(-jmax, jmax + 1)
    lhs = math.fsum(pair.w(d / D))
    hmax = int(math.ceil((pair.reach_hat(1e-17) + 1) * l / D)) + 1
    h = np.arange(-hmax, hmax + 1)
    vals = pair.w_hat(h * D / l) * np.cos(TWO_PI * (h * a % l) / l)
    rhs = D / l * math.fsum(vals)
    return abs(lhs - rhs)


# -- cubic and quartic sums ---------------------------------------------------

def _power_exp_sum(n: int, c: int, p: int) -> complex:
    x = np.arange(p, dtype=np.int64)
    xn = np.ones(p, dtype=np.int64)
    for _ in range(n):
        xn = xn * x % p
    return _phase_sum((c % p) * xn % p / p)


def cubic_exp_sum(k: int, p: int) -> complex:
    """sum_x e(x^3 k/p)."""
    _check_p(p, 5)
    return _power_exp_sum(3, k, p)


def quartic_exp_sum(h: int, p: int) -> complex:
    """sum_x e(x^4 h/p)."""
    _check_p(p, 5)
    return _power_exp_sum(4, h, p)


def quartic_identity_residual(h: int, p: int) -> float:
    """For p = 1 mod 4: sum_x (x/p) e(-x^2 h/p) vs -eps_p sqrt(p) (-h/p) + sum_x e(-x^4 h/p)."""
    _check_p(p, 5)
    if p % 4 != 1:
        raise DomainError("identity stated for p = 1 mod 4")
    chi = qr_table(p).astype(float)
    x = np.arange(p, dtype=np.int64)
    lhs = _phase_sum((-h * x * x) % p / p, chi)
    rhs = -gauss_sum_sign(p) * math.sqrt(p) * kronecker(-h, p) + quartic_exp_sum(-h, p)
    return abs(lhs - rhs)


def cubic_scan(k: int, P: int, residue: int | None = None) -> ScanReport:
    """sum_{P < p <= 2P} (k/p) sum_x e(x^3 k/p); ``residue`` restricts to p = residue mod 3."""
    if P < 5:
        raise DomainError("P must be >= 5")
    parts_re, parts_im = [], []
    count = 0
    for p in primes_upto(2 * P):
        if p <= P or (residue is not None and p % 3 != residue):
            continue
        chi = kronecker(k, p)
        if chi == 0:
            continue
        z = chi * cubic_exp_sum(k, p)
        parts_re.append(z.real)
        parts_im.append(z.imag)
        count += 1
    total = complex(math.fsum(parts_re), math.fsum(parts_im))
    params = (("k", k), ("P", P))
    extras = {"primes": count} if residue is None else {"primes": count, "residue": residue}
    return ScanReport("cubic", params, total, P ** (4 / 3), extras)


# -- a two-parameter exponential sum bound ------------------------------------

# Frozen after calibration on APPENDIX_B_SEED_GRID (see appendix_b_calibrate).
APPENDIX_B_C = 10.0

APPENDIX_B_SEED_GRID = tuple(
    (M, N, Y) for M in (8, 32, 128) for N in (8, 32, 128) for Y in (0.0, 3.0, 1e2, 1e4)
)


def appendix_b_bound(M: int, N: int, Y: float, C: float = APPENDIX_B_C) -> tuple[float, str]:
    """C (N^{1/2} M + N M (1 + |Y|^{1/2})^{-1} log N) if M <= C|Y|,
    else C (N^{1/2} M + N M (1 + |Y|^{1/4})^{-1}); also returns the case name."""
    ay = abs(Y)
    if M <= C * ay:
        return C * (math.sqrt(N) * M + N * M / (1 + math.sqrt(ay)) * math.log(N)), "small_M"
    return C * (math.sqrt(N) * M + N * M / (1 + ay ** 0.25)), "large_M"


def appendix_b_S(M: int, N: int, Y: float, c: Sequence[complex] | np.ndarray | None = None) -> float:
    """sum_{M<=m<2M} |sum_{N<=n<2N} c_n e(Y f(n/N) g(m/M))| with f = x^3, g = 1/x."""
    if M < 1 or N < 1:
        raise DomainError("need M, N >= 1")
    n = np.arange(N, 2 * N, dtype=float)
    m = np.arange(M, 2 * M, dtype=float)
    cn = np.ones(N) if c is None else np.asarray(c)
    if cn.shape != (N,) or np.any(np.abs(cn) > 1 + 1e-12):
        raise DomainError("need N coefficients of modulus <= 1")
    if Y == 0:
        inner = np.full(M, abs(cn.sum()))
    else:
        phase = np.mod(Y * (n / N) ** 3 * (M / m)[:, None], 1.0)
        inner = np.abs((np.exp(1j * TWO_PI * phase) * cn[None, :]).sum(axis=1))
    return math.fsum(inner)


def appendix_b_sum(M: int, N: int, Y: float, c=None, C: float = APPENDIX_B_C) -> tuple[float, float]:
    """(S, bound) in whichever regime (M, Y) falls."""
    return appendix_b_S(M, N, Y, c), appendix_b_bound(M, N, Y, C)[0]


def appendix_b_calibrate(grid=APPENDIX_B_SEED_GRID, C_case: float = APPENDIX_B_C) -> float:
    """Smallest constant making S <= bound on the grid (all c_n = 1)."""
    worst = 0.0
    for M, N, Y in grid:
        S = appendix_b_S(M, N, Y)
        if M <= C_case * abs(Y):
            unit = math.sqrt(N) * M + N * M / (1 + math.sqrt(abs(Y))) * math.log(N)
        else:
            unit = math.sqrt(N) * M + N * M / (1 + abs(Y) ** 0.25)
        worst = max(worst, S / unit)
    return worst
