"""Test functions, symmetry-type densities and the explicit-formula statistic."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .arith import DomainError, primes_upto
from .curves import Curve, lambda_p, log_conductor

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TestFunctionPair:
    """Even phi with compactly supported transform phi_hat, supp in [-nu, nu].

    ``tent`` records the Fejer closed form (height/nu pairs) so integrals
    against piecewise-constant densities can be done exactly.
    """

    __test__ = False  # not a pytest class

    phi: ArrayFn
    phi_hat: ArrayFn
    nu: float
    label: str = ""
    tent: tuple[tuple[Fraction, Fraction], ...] = ()

    def phi0(self) -> float:
        return float(self.phi(np.zeros(1))[0])

    def phi_hat0(self) -> float:
        return float(self.phi_hat(np.zeros(1))[0])

    def scaled(self, c: float) -> "TestFunctionPair":
        phi, phi_hat = self.phi, self.phi_hat
        tent = tuple((h * Fraction(c), n) for h, n in self.tent) if isinstance(c, (int, Fraction)) else ()
        return TestFunctionPair(
            lambda t: c * phi(t), lambda y: c * phi_hat(y), self.nu, f"{c}*{self.label}", tent
        )

    def __add__(self, other: "TestFunctionPair") -> "TestFunctionPair":
        f1, g1, f2, g2 = self.phi, self.phi_hat, other.phi, other.phi_hat
        tent = self.tent + other.tent if self.tent and other.tent else ()
        return TestFunctionPair(
            lambda t: f1(t) + f2(t),
            lambda y: g1(y) + g2(y),
            max(self.nu, other.nu),
            f"{self.label}+{other.label}",
            tent,
        )


def fejer_pair(nu: float | Fraction) -> TestFunctionPair:
    """phi(t) = (sin(pi nu t)/(pi nu t))^2, phi_hat(y) = (1/nu)(1 - |y|/nu)_+."""
    if not nu > 0:
        raise DomainError(f"support radius must be positive, got {nu}")
    nf = float(nu)

    def phi(t):
        return np.sinc(nf * np.asarray(t, dtype=float)) ** 2

    def phi_hat(y):
        y = np.abs(np.asarray(y, dtype=float))
        return np.where(y < nf, (1.0 - y / nf) / nf, 0.0)

    nq = Fraction(nu).limit_denominator(10 ** 9) if not isinstance(nu, Fraction) else nu
    return TestFunctionPair(phi, phi_hat, nf, f"fejer({nu})", ((1 / nq, nq),))


class SymmetryType(enum.Enum):
    U = "U"
    SP = "Sp"
    O = "O"
    SO_EVEN = "SOeven"
    SO_ODD = "SOodd"


def eta(y: float) -> float:
    a = abs(y)
    return 1.0 if a < 1 else (0.5 if a == 1 else 0.0)


# Fourier transform of W(G): (constant, coefficient of eta, coefficient of delta_0)
_FT_PARTS = {
    SymmetryType.U: (0.0, 0.0, 1.0),
    SymmetryType.SP: (0.0, -0.5, 1.0),
    SymmetryType.O: (0.5, 0.0, 1.0),
    SymmetryType.SO_EVEN: (0.0, 0.5, 1.0),
    SymmetryType.SO_ODD: (1.0, -0.5, 1.0),
}


def symmetry_density_ft(G: SymmetryType, y: float) -> tuple[float, float]:
    """(regular part at y, delta_0 mass) of the transform of W(G)."""
    const, c_eta, mass = _FT_PARTS[G]
    return const + c_eta * eta(y), mass


def _tent_integral(height: Fraction, nu: Fraction, upto: Fraction | None) -> Fraction:
    """Integral of height*(1 - |y|/nu)_+ over |y| < upto (None: everywhere)."""
    m = nu if upto is None else min(nu, upto)
    return 2 * height * (m - m * m / (2 * nu))


def predicted_average(G: SymmetryType, tf: TestFunctionPair, exact: bool = False):
    """Integral of phi against W(G), evaluated on the Fourier side.

    With ``exact=True`` the pair must carry a tent description and the
    result is a Fraction.
    """
    const, c_eta, mass = _FT_PARTS[G]
    if exact:
        if not tf.tent:
            raise DomainError("exact mode needs a tent (Fejer-type) test pair")
        q = lambda v: Fraction(v).limit_denominator(8)  # noqa: E731
        total = Fraction(0)
        for h, n in tf.tent:
            total += q(mass) * h
            total += q(const) * _tent_integral(h, n, None)
            total += q(c_eta) * _tent_integral(h, n, Fraction(1))
        return total
    phi_hat = lambda y: float(tf.phi_hat(np.array([y]))[0])  # noqa: E731
    total = mass * tf.phi_hat0()
    if const or c_eta:
        # phi_hat is even; split at |y| = 1 where eta jumps
        nu = tf.nu
        val, _ = integrate.quad(phi_hat, 0.0, min(nu, 1.0), epsabs=1e-13, epsrel=1e-12, limit=200)
        total += 2 * (const + c_eta) * val
        if nu > 1:
            val2, _ = integrate.quad(phi_hat, 1.0, nu, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += 2 * const * val2
    return total


def rank_bound(nu) -> Fraction:
    """1/2 + 1/nu as an exact rational."""
    nu = Fraction(nu)
    if nu <= 0:
        raise DomainError(f"support radius must be positive, got {nu}")
    return Fraction(1, 2) + 1 / nu


def prime_weights(tf: TestFunctionPair, X: float, primes: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Primes 3 < p <= X^nu and their explicit-formula weights.

    The weight of p is phi_hat(log p / log X) * 2 log p / (p log X).
    """
    if X < 2:
        raise DomainError(f"X must be >= 2, got {X}")
    logX = math.log(X)
    if primes is None:
        limit = math.exp(tf.nu * logX) * (1 + 1e-12)
        primes = [p for p in primes_upto(limit) if p > 3]
    ps = np.asarray(primes, dtype=np.int64)
    if ps.size == 0:
        return ps, np.zeros(0)
    lp = np.log(ps.astype(float))
    return ps, tf.phi_hat(lp / logX) * 2.0 * lp / (ps * logX)


def P_sum(E: Curve, tf: TestFunctionPair, X: float) -> float:
    """sum over 3 < p <= X^nu of lambda_E(p) phi_hat(log p/log X) 2 log p/(p log X)."""
    ps, wts = prime_weights(tf, X)
    terms = [lambda_p(E, int(p)) * float(wp) for p, wp in zip(ps, wts)]
    return math.fsum(terms)


def D_statistic(E: Curve, tf: TestFunctionPair, X: float, log_N: float | None = None) -> float:
    """phi_hat(0) log N/log X + phi(0)/2 - P(E; phi), error term omitted."""
    if log_N is None:
        log_N = log_conductor(E)
    return tf.phi_hat0() * log_N / math.log(X) + 0.5 * tf.phi0() - P_sum(E, tf, X)


REPORT_FIELDS = (
    "family",
    "X",
    "X_eff",
    "nu",
    "density_ratio",
    "predicted",
    "conductor_stat",
    "count",
    "weight_total",
)


@dataclass
class DensityReport:
    family: str
    X: float
    X_eff: float
    nu: float
    density_ratio: float
    predicted: float
    conductor_stat: float
    count: int
    weight_total: float
    per_prime_ledger: list[tuple[int, float]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.weight_total > 0:
            raise DomainError("family has zero total weight")

    @property
    def gap(self) -> float:
        return self.density_ratio - self.predicted

    def row(self) -> dict:
        d = asdict(self)
        d.pop("per_prime_ledger")
        return {k: d[k] for k in REPORT_FIELDS}

    def to_json(self, ledger: bool = False) -> str:
        d = self.row()
        if ledger:
            d["per_prime_ledger"] = [list(t) for t in self.per_prime_ledger]
        return json.dumps(d, sort_keys=False)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def reports_to_csv(reports: Sequence[DensityReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(REPORT_FIELDS)
    for r in reports:
        row = r.row()
        wr.writerow([_fmt(row[k]) for k in REPORT_FIELDS])
    return buf.getvalue()


def reports_to_json(reports: Sequence[DensityReport], ledger: bool = False) -> str:
    return "[" + ",\n".join(r.to_json(ledger) for r in reports) + "]\n"
