"""Parametrized families of elliptic curves and family-level averages.

Each family is a box of integer parameters scaled by powers of X.  Because
log N / log X only tends to 1 up to O(1/log X), every family carries a
fixed constant kappa with log kappa equal to the weighted mean of
log(R(d)/X) over the continuous weight; the explicit formula is then run
at X_eff = kappa * X, which is the scale where R(d) is typically of size
X_eff.  Both X and X_eff appear in reports.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy import fft as sfft

from .arith import (
    DomainError,
    factorize,
    is_squarefree,
    kronecker,
    legendre,
    primes_upto,
    qr_table,
)
from .curves import (
    AffinePoint,
    Curve,
    GeneralWeierstrass,
    ShortWeierstrass,
    conductor_exponents,
    lambda_p,
    log_conductor,
)
from .density import (
    DensityReport,
    SymmetryType,
    TestFunctionPair,
    predicted_average,
    prime_weights,
)


def bump(x):
    """exp(1 - 1/(1 - (2x-3)^2)) on (1, 2), zero elsewhere; peak 1 at x = 3/2."""
    x = np.asarray(x, dtype=float)
    y = 2.0 * x - 3.0
    inside = np.abs(y) < 1.0
    out = np.zeros_like(y)
    yi = y[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - yi * yi))
    return out


@dataclass(frozen=True)
class WeightFunction:
    """Product weight prod_i profile(x_i), supported in support^arity."""

    arity: int
    profile: Callable = bump
    support: tuple[float, float] = (1.0, 2.0)

    def __post_init__(self):
        if self.arity not in (1, 2):
            raise DomainError(f"weight arity must be 1 or 2, got {self.arity}")

    def __call__(self, *xs):
        if len(xs) != self.arity:
            raise DomainError(f"expected {self.arity} arguments, got {len(xs)}")
        out = np.ones(np.broadcast(*[np.asarray(x) for x in xs]).shape)
        for x in xs:
            out = out * self.profile(x)
        return out

    def nodes(self, n: int = 200) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes on the support with the profile folded in."""
        lo, hi = self.support
        t, g = np.polynomial.legendre.leggauss(n)
        x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
        return x, 0.5 * (hi - lo) * g * self.profile(x)

    def integral(self) -> float:
        _, g = self.nodes()
        return float(g.sum()) ** self.arity


def default_weight(arity: int) -> WeightFunction:
    return WeightFunction(arity)


# ---------------------------------------------------------------------------
# Family specifications


@dataclass(frozen=True)
class FamilySpec:
    """A parametrized family.

    ``params`` lists (name, exponent): the parameter runs over integers n
    with w(n / X^exponent) > 0.  ``short`` maps parameter arrays to (a, b)
    of y^2 = x^3 + a x + b; otherwise ``general`` gives a1..a6.  ``R`` is
    the conductor proxy and ``R_scaled`` its leading form in the scaled
    variables.  ``extra_rank`` counts forced central zeros in the target.
    """

    kind: str
    params: tuple[tuple[str, float], ...]
    R: Callable
    R_scaled: Callable
    short: Callable | None = None
    general: Callable | None = None
    extra_rank: int = 0
    base: ShortWeierstrass | None = None
    keep: Callable | None = None
    generators: Callable | None = None

    @property
    def arity(self) -> int:
        return len(self.params)

    def exponent(self, name: str) -> float | None:
        for n, e in self.params:
            if n == name:
                return e
        return None

    def curve(self, **kw) -> Curve:
        kw = {k: int(v) for k, v in kw.items()}
        if self.short is not None:
            a, b = self.short(**kw)
            return ShortWeierstrass(int(a), int(b))
        return GeneralWeierstrass(*(int(c) for c in self.general(**kw)))

    @property
    def label(self) -> str:
        if self.base is not None:
            return f"{self.kind}[{self.base.a},{self.base.b}]"
        return self.kind


def q_minimal(a: int, b: int) -> bool:
    """No prime q with q^4 | a and q^6 | b."""
    g = math.gcd(int(a), int(b))
    if g == 1:
        return True
    if g == 0:
        return False
    return not any(a % q ** 4 == 0 and b % q ** 6 == 0 for q in factorize(g))


def _vec_q_minimal(a, b):
    g = np.gcd(a, b)
    out = np.ones(len(a), dtype=bool)
    for i in np.flatnonzero(g > 1):
        out[i] = q_minimal(int(a[i]), int(b[i]))
    return out


def _pt(x, y):
    return AffinePoint(x, y)


_FAMILIES: dict[str, FamilySpec] = {}


def _register(spec: FamilySpec) -> FamilySpec:
    _FAMILIES[spec.kind] = spec
    return spec


_register(FamilySpec(
    "full", (("a", 1 / 3), ("b", 1 / 2)),
    R=lambda a, b: 16 * (4 * a ** 3 + 27 * b ** 2),
    R_scaled=lambda s, t: 16 * (4 * s ** 3 + 27 * t ** 2),
    short=lambda a, b: (a, b),
))
_register(FamilySpec(
    "full_minimal", (("a", 1 / 3), ("b", 1 / 2)),
    R=lambda a, b: 16 * (4 * a ** 3 + 27 * b ** 2),
    R_scaled=lambda s, t: 16 * (4 * s ** 3 + 27 * t ** 2),
    short=lambda a, b: (a, b),
    keep=_vec_q_minimal,
))
_register(FamilySpec(
    "rank_one", (("a", 1 / 3), ("b", 1 / 4)),
    R=lambda a, b: 16 * (4 * a ** 3 + 27 * b ** 4),
    R_scaled=lambda s, t: 16 * (4 * s ** 3 + 27 * t ** 4),
    short=lambda a, b: (a, b * b),
    extra_rank=1,
    generators=lambda a, b: [(_pt(0, b), None)],
))
_register(FamilySpec(
    "tors_2x2", (("a", 1 / 3), ("b", 1 / 3)),
    R=lambda a, b: a * b * (a + b),
    R_scaled=lambda s, t: s * t * (s + t),
    general=lambda a, b: (0, b - a, 0, -a * b, 0),
    generators=lambda a, b: [(_pt(0, 0), 2), (_pt(a, 0), 2), (_pt(-b, 0), 2)],
))
_register(FamilySpec(
    "tors_3", (("a", 1 / 6), ("b", 1 / 2)),
    R=lambda a, b: b * (a ** 3 + 27 * b),
    R_scaled=lambda s, t: t * (s ** 3 + 27 * t),
    general=lambda a, b: (a, 0, -b, 0, 0),
    generators=lambda a, b: [(_pt(0, 0), 3)],
))
_register(FamilySpec(
    "tors_2", (("a", 1 / 4), ("b", 1 / 2)),
    R=lambda a, b: 16 * b * (a * a + 4 * b),
    R_scaled=lambda s, t: 16 * t * (s * s + 4 * t),
    general=lambda a, b: (0, a, 0, -b, 0),
    generators=lambda a, b: [(_pt(0, 0), 2)],
))
_register(FamilySpec(
    "tors_4", (("b", 1 / 2),),
    R=lambda b: b * (1 + 16 * b),
    R_scaled=lambda t: 16 * t * t,
    general=lambda b: (1, -b, -b, 0, 0),
    generators=lambda b: [(_pt(0, 0), 4)],
))
_register(FamilySpec(
    "tors_5", (("b", 1 / 3),),
    R=lambda b: b * (b * b - 11 * b - 1),
    R_scaled=lambda t: t ** 3,
    general=lambda b: (1 - b, -b, -b, 0, 0),
    generators=lambda b: [(_pt(0, 0), 5)],
))
_register(FamilySpec(
    "cm_b", (("b", 1 / 2),),
    R=lambda b: b * b,
    R_scaled=lambda t: t * t,
    short=lambda b: (0 * b, b),
))
_register(FamilySpec(
    "cm_a", (("a", 1 / 2),),
    R=lambda a: a * a,
    R_scaled=lambda s: s * s,
    short=lambda a: (a, 0 * a),
))

FAMILY_NAMES = tuple(_FAMILIES) + ("twist_cubic",)

DEFAULT_TWIST_BASE = ShortWeierstrass(1, 1)


@lru_cache(maxsize=64)
def twist_cubic_spec(base: ShortWeierstrass = DEFAULT_TWIST_BASE) -> FamilySpec:
    """Twists of ``base`` by d = u^3 + a u + b, each carrying the point (u, 1)."""
    a0, b0 = base.a, base.b

    def d_of(u):
        return u ** 3 + a0 * u + b0

    def short(u):
        d = d_of(u)
        return (a0 * d * d, b0 * d ** 3)

    def keep(u):
        return d_of(u) != 0

    def gens(u):
        d = d_of(u)
        # (u, 1) on d y^2 = x^3 + a x + b becomes (u d, d^2) on the model
        return [(_pt(u * d, d * d), None)]

    return FamilySpec(
        "twist_cubic", (("u", 1 / 6),),
        R=lambda u: d_of(u) ** 2,
        R_scaled=lambda s: s ** 6,
        short=short,
        extra_rank=1,
        base=base,
        keep=keep,
        generators=gens,
    )


def get_family(name: str, base: ShortWeierstrass | None = None) -> FamilySpec:
    if name == "twist_cubic":
        return twist_cubic_spec(base or DEFAULT_TWIST_BASE)
    try:
        return _FAMILIES[name]
    except KeyError:
        raise DomainError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}") from None


# ---------------------------------------------------------------------------
# Enumeration


def _param_range(scale: float, w: WeightFunction) -> np.ndarray:
    lo, hi = w.support
    n = np.arange(math.floor(lo * scale) + 1, math.ceil(hi * scale), dtype=np.int64)
    return n[w.profile(n / scale) > 0]


def parameter_grid(spec: FamilySpec, X: float, w: WeightFunction | None = None):
    """Lexicographic parameter arrays and weights for the scaled box."""
    if X < 2:
        raise DomainError(f"X must be >= 2, got {X}")
    w = w or default_weight(spec.arity)
    if w.arity != spec.arity:
        raise DomainError(f"{spec.kind} needs a weight of arity {spec.arity}")
    axes = [_param_range(X ** e, w) for _, e in spec.params]
    scales = [X ** e for _, e in spec.params]
    mesh = np.meshgrid(*axes, indexing="ij")
    cols = {name: m.ravel() for (name, _), m in zip(spec.params, mesh)}
    weights = w(*[cols[name] / s for (name, _), s in zip(spec.params, scales)])
    weights = np.asarray(weights, dtype=float).ravel()
    mask = weights > 0
    if spec.keep is not None:
        mask &= np.asarray(spec.keep(**cols), dtype=bool)
    # singular parameter values
    disc_ok = np.array([_nonsingular(spec, **{k: int(v[i]) for k, v in cols.items()})
                        for i in np.flatnonzero(mask)], dtype=bool)
    idx = np.flatnonzero(mask)[disc_ok]
    return {k: v[idx] for k, v in cols.items()}, weights[idx]


def _nonsingular(spec: FamilySpec, **kw) -> bool:
    if spec.short is not None:
        a, b = spec.short(**kw)
        return 4 * int(a) ** 3 + 27 * int(b) ** 2 != 0
    a1, a2, a3, a4, a6 = (int(c) for c in spec.general(**kw))
    b2, b4, b6 = a1 * a1 + 4 * a2, 2 * a4 + a1 * a3, a3 * a3 + 4 * a6
    c4 = b2 * b2 - 24 * b4
    c6 = -(b2 ** 3) + 36 * b2 * b4 - 216 * b6
    return c4 ** 3 != c6 ** 2


def enumerate_family(spec: FamilySpec, X: float, w: WeightFunction | None = None) -> Iterator[tuple[Curve, float]]:
    """Yield (curve, weight) for every lattice point of the box with w > 0."""
    cols, weights = parameter_grid(spec, X, w)
    names = [n for n, _ in spec.params]
    for i in range(len(weights)):
        yield spec.curve(**{n: int(cols[n][i]) for n in names}), float(weights[i])


def minimal_filter(stream: Iterable[tuple[ShortWeierstrass, float]]) -> Iterator[tuple[ShortWeierstrass, float]]:
    """Drop short models with some q^4 | a and q^6 | b."""
    for E, wt in stream:
        if q_minimal(E.a, E.b):
            yield E, wt


# ---------------------------------------------------------------------------
# Batched factorization and conductors


def factor_batch(values: Sequence[int]) -> list[dict[int, int]]:
    """Factorizations of positive integers, trial division vectorized over the batch."""
    vals = [abs(int(v)) for v in values]
    if not vals:
        return []
    if max(vals) >= 2 ** 62:
        return [factorize(v) for v in vals]
    rem = np.array(vals, dtype=np.int64)
    out: list[dict[int, int]] = [dict() for _ in vals]
    bound = min(math.isqrt(int(rem.max())) + 1, 1 << 17)
    active = np.arange(len(vals))
    for j, q in enumerate(primes_upto(bound)):
        if j % 64 == 0:
            active = active[rem[active] >= q * q]
            if active.size == 0:
                break
        hit = active[rem[active] % q == 0]
        for i in hit:
            r = int(rem[i])
            e = 0
            while r % q == 0:
                r //= q
                e += 1
            rem[i] = r
            out[i][q] = e
    for i, r in enumerate(rem):
        r = int(r)
        if r > 1:
            if r < bound * bound:
                out[i][r] = out[i].get(r, 0) + 1
            else:
                for q, e in factorize(r).items():
                    out[i][q] = out[i].get(q, 0) + e
    return [dict(sorted(d.items())) for d in out]


@dataclass
class FamilyData:
    """Enumerated family with cached conductors and per-prime lambda sums."""

    spec: FamilySpec
    X: float
    X_eff: float
    params: dict[str, np.ndarray]
    weights: np.ndarray
    R_factors: list[dict[int, int]]
    log_N: np.ndarray
    _lambda_sums: dict[int, float] = field(default_factory=dict, repr=False)

    @property
    def count(self) -> int:
        return int(self.weights.size)

    @property
    def weight_total(self) -> float:
        return math.fsum(self.weights.tolist())

    def curves(self) -> list[Curve]:
        names = [n for n, _ in self.spec.params]
        return [self.spec.curve(**{n: int(self.params[n][i]) for n in names})
                for i in range(self.count)]

    def lambda_sums(self, primes: Sequence[int], threads: int = 1) -> np.ndarray:
        """sum_E w(E) lambda_E(p) for each p, computed once per prime."""
        todo = [int(p) for p in primes if int(p) not in self._lambda_sums]
        if todo:
            fn = lambda p: weighted_lambda_sum(self.spec, self.params, self.weights, p)  # noqa: E731
            if threads > 1 and len(todo) > 1:
                with ThreadPoolExecutor(max_workers=threads) as ex:
                    vals = list(ex.map(fn, todo))
            else:
                vals = [fn(p) for p in todo]
            self._lambda_sums.update(zip(todo, vals))
        return np.array([self._lambda_sums[int(p)] for p in primes], dtype=float)


def kappa(spec: FamilySpec, w: WeightFunction | None = None) -> float:
    """exp of the w-weighted mean of log R_scaled over the support box."""
    w = w or default_weight(spec.arity)
    x, g = w.nodes()
    if spec.arity == 1:
        vals = np.log(np.abs(spec.R_scaled(x)))
        return math.exp(float((vals * g).sum() / g.sum()))
    S, T = np.meshgrid(x, x, indexing="ij")
    G = np.outer(g, g)
    vals = np.log(np.abs(spec.R_scaled(S, T)))
    return math.exp(float((vals * G).sum() / G.sum()))


def _conductor_primes(spec: FamilySpec, kw: dict, rf: dict[int, int]) -> list[int]:
    ps = set(rf) | {2, 3}
    if spec.base is not None:
        ps |= set(factorize(spec.base.discriminant))
    return sorted(ps)


def build_family(spec: FamilySpec, X: float, w: WeightFunction | None = None,
                 small_primes: str = "tate") -> FamilyData:
    """Enumerate the family at scale X and compute log N for every member."""
    w = w or default_weight(spec.arity)
    cols, weights = parameter_grid(spec, X, w)
    names = [n for n, _ in spec.params]
    n = len(weights)
    R_vals = [spec.R(**{k: int(cols[k][i]) for k in names}) for i in range(n)]
    R_factors = factor_batch(R_vals)
    log_N = np.empty(n)
    for i in range(n):
        kw = {k: int(cols[k][i]) for k in names}
        E = spec.curve(**kw)
        log_N[i] = log_conductor(E, _conductor_primes(spec, kw, R_factors[i]), small_primes)
    return FamilyData(spec, float(X), float(X) * kappa(spec, w), cols, weights, R_factors, log_N)


@lru_cache(maxsize=32)
def _cached_family(spec: FamilySpec, X: float, w: WeightFunction | None, small_primes: str) -> FamilyData:
    return build_family(spec, X, w, small_primes)


def family_data(spec: FamilySpec, X: float, w: WeightFunction | None = None,
                small_primes: str = "tate") -> FamilyData:
    """Cached build_family (families are immutable, so reuse is safe)."""
    return _cached_family(spec, float(X), w, small_primes)


# ---------------------------------------------------------------------------
# Weighted lambda sums per prime


def _binned_dot(values: np.ndarray, wts: np.ndarray) -> float:
    """sum_i values_i * wts_i for small integer values, in a fixed order."""
    v = np.asarray(values, dtype=np.int64).ravel()
    lo = int(v.min())
    bins = np.bincount(v - lo, weights=np.asarray(wts, dtype=float).ravel())
    return math.fsum(float(k + lo) * float(b) for k, b in enumerate(bins) if b)


def _short_table_sum(A: np.ndarray, B: np.ndarray, wts: np.ndarray, p: int) -> float:
    """sum_i w_i lambda(A_i, B_i) for y^2 = x^3 + A x + B, via per-residue correlations."""
    chi = qr_table(p).astype(float)
    am = np.mod(A, p)
    bm = np.mod(B, p)
    alphas, ainv = np.unique(am, return_inverse=True)
    na = alphas.size
    # weights binned on the (alpha, beta) residue grid
    wgrid = np.bincount(ainv * p + bm, weights=wts, minlength=na * p).reshape(na, p)
    x = np.arange(p, dtype=np.int64)
    x3 = (x * x % p) * x % p
    vals = (x3[None, :] + alphas[:, None] * x[None, :]) % p
    betas = np.flatnonzero(wgrid.any(axis=0))
    if betas.size <= 8:
        lam = np.zeros((na, p), dtype=np.int64)
        for bt in betas:
            lam[:, bt] = -chi[(vals + bt) % p].sum(axis=1)
    else:
        counts = np.bincount((np.arange(na)[:, None] * p + vals).ravel(), minlength=na * p)
        counts = counts.reshape(na, p).astype(float)
        # corr[beta] = sum_c counts[c] chi[(c + beta) mod p], as a linear correlation
        L = sfft.next_fast_len(2 * p, real=True)
        chi2 = np.concatenate([chi, chi])
        fc = sfft.rfft(counts, n=L, axis=1)
        fchi = sfft.rfft(chi2, n=L)
        corr = sfft.irfft(np.conj(fc) * fchi[None, :], n=L, axis=1)[:, :p]
        lam = -np.rint(corr).astype(np.int64)
    live = wgrid != 0
    return _binned_dot(lam[live], wgrid[live])


def _cubic_sum(C: np.ndarray, wts: np.ndarray, p: int) -> float:
    """sum_i w_i lambda_i with lambda = -sum_x chi(c3 x^3 + c2 x^2 + c1 x + c0)."""
    chi = qr_table(p)
    Cm = np.mod(C, p)
    key = ((Cm[:, 0] * p + Cm[:, 1]) * p + Cm[:, 2]) * p + Cm[:, 3]
    ukey, inv = np.unique(key, return_inverse=True)
    uc = np.stack([(ukey // p ** 3) % p, (ukey // p ** 2) % p, (ukey // p) % p, ukey % p], axis=1)
    lam = np.empty(ukey.size, dtype=np.int64)
    # every partial sum stays below 4 p^2, so int32 suffices for p < 23000
    dt = np.int32 if p < 23000 else np.int64
    x = np.arange(p, dtype=np.int64)
    powers = [(x * x % p * x % p).astype(dt), (x * x % p).astype(dt), x.astype(dt)]
    uc = uc.astype(dt)
    chunk = max(1, 2_000_000 // p)
    for s in range(0, ukey.size, chunk):
        c = uc[s:s + chunk]
        v = np.multiply.outer(c[:, 0], powers[0])
        v += np.multiply.outer(c[:, 1], powers[1])
        v += np.multiply.outer(c[:, 2], powers[2])
        v += c[:, 3:4]
        v %= p
        lam[s:s + chunk] = -np.take(chi, v).sum(axis=1, dtype=np.int64)
    wsum = np.bincount(inv, weights=wts, minlength=ukey.size)
    return _binned_dot(lam, wsum)


def weighted_lambda_sum(spec: FamilySpec, params: dict[str, np.ndarray], wts: np.ndarray, p: int) -> float:
    """sum over the family of w(E) lambda_E(p), for one prime p > 3."""
    if wts.size == 0:
        return 0.0
    if spec.base is not None:
        lam = lambda_p(spec.base, p)
        if lam == 0:
            return 0.0
        u = params["u"]
        d = u ** 3 + spec.base.a * u + spec.base.b
        return lam * _binned_dot(qr_table(p)[np.mod(d, p)], wts)
    if spec.short is not None:
        A, B = spec.short(**params)
        A = np.broadcast_to(np.asarray(A, dtype=np.int64), wts.shape)
        B = np.broadcast_to(np.asarray(B, dtype=np.int64), wts.shape)
        return _short_table_sum(A, B, wts, p)
    a1, a2, a3, a4, a6 = (np.broadcast_to(np.asarray(c, dtype=np.int64), wts.shape) for c in spec.general(**params))
    b2, b4, b6 = a1 * a1 + 4 * a2, 2 * a4 + a1 * a3, a3 * a3 + 4 * a6
    C = np.stack([np.full_like(b2, 4), b2, 2 * b4, b6], axis=1)
    return _cubic_sum(C, wts, p)


# ---------------------------------------------------------------------------
# Averages


def default_threads() -> int:
    env = os.environ.get("ECDENSITY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def predicted_target(spec: FamilySpec, tf: TestFunctionPair) -> float:
    """Orthogonal prediction plus one phi(0) per forced central zero."""
    return predicted_average(SymmetryType.O, tf) + spec.extra_rank * tf.phi0()


def average_from_data(data: FamilyData, tf: TestFunctionPair, threads: int = 1,
                      ledger: bool = False) -> DensityReport:
    W = data.weight_total
    if not W > 0:
        raise DomainError(f"{data.spec.kind} has zero total weight at X={data.X}")
    logX = math.log(data.X_eff)
    ps, cp = prime_weights(tf, data.X_eff)
    S = data.lambda_sums(ps.tolist(), threads)
    contrib = (cp * S).tolist()
    P_total = math.fsum(contrib)
    sum_logN = math.fsum((data.weights * data.log_N).tolist())
    D_total = tf.phi_hat0() * sum_logN / logX + 0.5 * tf.phi0() * W - P_total
    led = [(int(p), c / W) for p, c in zip(ps, contrib)] if ledger else []
    return DensityReport(
        family=data.spec.label,
        X=data.X,
        X_eff=data.X_eff,
        nu=tf.nu,
        density_ratio=D_total / W,
        predicted=predicted_target(data.spec, tf),
        conductor_stat=sum_logN / (W * logX),
        count=data.count,
        weight_total=W,
        per_prime_ledger=led,
    )


def family_average(spec: FamilySpec, X: float, tf: TestFunctionPair, w: WeightFunction | None = None,
                   threads: int | None = None, ledger: bool = False,
                   small_primes: str = "tate") -> DensityReport:
    """Weighted average of D(E; phi) over the family at scale X."""
    data = family_data(spec, X, w, small_primes)
    return average_from_data(data, tf, threads or default_threads(), ledger)


def average_over(curves: Sequence[Curve], weights: Sequence[float], tf: TestFunctionPair,
                 X: float, label: str = "custom") -> DensityReport:
    """Direct per-curve average at scale X (no batching, no rescaling)."""
    from .density import D_statistic

    W = math.fsum(weights)
    if not W > 0:
        raise DomainError("zero total weight")
    logX = math.log(X)
    logs = [log_conductor(E) for E in curves]
    D = math.fsum(wt * D_statistic(E, tf, X, ln) for E, wt, ln in zip(curves, weights, logs))
    cstat = math.fsum(wt * ln for wt, ln in zip(weights, logs)) / (W * logX)
    return DensityReport(label, float(X), float(X), tf.nu, D / W,
                         predicted_average(SymmetryType.O, tf), cstat, len(curves), W)


def square_divisor_stat(spec: FamilySpec, X: float, w: WeightFunction | None = None) -> float:
    """(sum_E |w| sum_{p^a || R_E, a >= 2} (a-1) log p) / W."""
    data = family_data(spec, X, w)
    terms = [wt * sum((e - 1) * math.log(p) for p, e in rf.items() if e >= 2)
             for wt, rf in zip(data.weights.tolist(), data.R_factors)]
    return math.fsum(terms) / data.weight_total


# ---------------------------------------------------------------------------
# Quadratic twists


def twisted_lambda(E: ShortWeierstrass, d: int, p: int) -> int:
    """(d/p) lambda_E(p) for a prime p > 3 not dividing d."""
    if d % p == 0:
        raise DomainError(f"p={p} divides d={d}; twisted trace undefined here")
    return legendre(d, p) * lambda_p(E, p)


def twist_model(E: ShortWeierstrass, d: int) -> ShortWeierstrass:
    """y^2 = x^3 + a d^2 x + b d^3, isomorphic to d y^2 = x^3 + a x + b."""
    if d == 0:
        raise DomainError("twist by zero")
    return ShortWeierstrass(E.a * d * d, E.b * d ** 3)


@dataclass(frozen=True)
class TwistData:
    d: int
    N_d_log: float
    root_number_factor: int


def twist_conductor_and_sign(E: ShortWeierstrass, d: int, N: int | None = None) -> TwistData:
    """log N_d = 2 log|d| + log N and the factor (d / -N) relating root numbers.

    Only for squarefree d = 1 mod 4 coprime to N; otherwise DomainError.
    """
    if N is None:
        N = math.prod(p ** f for p, f in conductor_exponents(E).items())
    if d % 4 != 1 or not is_squarefree(d) or math.gcd(d, N) != 1:
        raise DomainError(f"twist formulas need squarefree d = 1 mod 4 coprime to N (d={d}, N={N})")
    return TwistData(d, 2 * math.log(abs(d)) + math.log(N), kronecker(d, -N))


def twist_cubic_family(E: ShortWeierstrass, X: float, tf: TestFunctionPair,
                       w: WeightFunction | None = None, threads: int | None = None) -> DensityReport:
    return family_average(twist_cubic_spec(E), X, tf, w, threads)
