"""Gamma and Meijer-G evaluation for fading-channel statistics.

Two independent evaluation routes are provided for the Meijer G-function:

* ``meijer_g`` sums the residue (power) series of the defining contour
  integral: one series per pole ladder of the numerator Gamma factors,
  each a power of the argument times a generalized hypergeometric series.
  Coefficients are assembled in log-space with an extended-precision
  log-gamma so that the cancellation between ladders (severe for large
  pointing-error parameters) does not destroy accuracy.

* ``meijer_g_oracle`` integrates the defining Mellin-Barnes integral
  numerically along a vertical contour separating the two pole families.
  It shares no code with the series route (it uses scipy's complex
  log-gamma) and exists purely to cross-check ``meijer_g``.

Everything here is a pure function of its arguments and safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad as _quad
from scipy.special import loggamma as _cx_loggamma

__all__ = [
    "PoleError",
    "NonConvergenceError",
    "DegenerateParameterError",
    "ContourError",
    "ln_gamma",
    "gen_hypergeometric",
    "MeijerGSpec",
    "meijer_g",
    "meijer_g_info",
    "meijer_g_oracle",
]


class PoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


class NonConvergenceError(RuntimeError):
    """A series or quadrature failed to reach its tolerance."""


class DegenerateParameterError(ValueError):
    """Meijer-G parameters still collide after regularization."""


class ContourError(RuntimeError):
    """No vertical line separates the two Mellin-Barnes pole families."""


# 80-bit extended precision on x86; falls back to float64 elsewhere.
_LD = np.longdouble
_LD_EPS = float(np.finfo(_LD).eps)

_HALF_LN_2PI = _LD("0.918938533204672741780329736405617639862")
_LN_PI = _LD("1.144729885849400174143427351353058711647")
_PI_LD = _LD("3.141592653589793238462643383279502884197")

# B_{2j} / (2j (2j-1)) for the Stirling asymptotic series, exact ratios.
_STIRLING = tuple(
    _LD(p) / _LD(q)
    for p, q in [
        (1, 12), (-1, 360), (1, 1260), (-1, 1680), (1, 1188),
        (-691, 360360), (1, 156), (-3617, 122400), (43867, 244188),
        (-174611, 125400), (77683, 5796), (-236364091, 1506960),
        (657931, 300),
    ]
)
_STIRLING_MIN_X = 13.0


def _lngamma_ld(x) -> tuple[np.longdouble, float]:
    """log|Gamma(x)| and sign(Gamma(x)) in extended precision."""
    xf = float(x)
    if not math.isfinite(xf):
        raise ValueError(f"ln_gamma argument must be finite, got {x!r}")
    if xf <= 0.0 and xf == math.floor(xf):
        raise PoleError(f"Gamma pole at x = {xf}")
    x = _LD(x)
    if xf < 0.5:
        # Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        n = math.floor(xf)
        s = np.sin(_PI_LD * (x - _LD(n)))  # sin(pi x) * (-1)^n
        if n % 2:
            s = -s
        lg, sg = _lngamma_ld(_LD(1.0) - x)
        sign = (1.0 if s > 0 else -1.0) * sg
        return _LN_PI - np.log(np.abs(s)) - lg, sign
    shift = _LD(0.0)
    y = x
    while y < _STIRLING_MIN_X:
        shift += np.log(y)
        y += _LD(1.0)
    inv = _LD(1.0) / y
    inv2 = inv * inv
    ser = _LD(0.0)
    t = inv
    for c in _STIRLING:
        ser += c * t
        t *= inv2
    return (y - _LD(0.5)) * np.log(y) - y + _HALF_LN_2PI + ser - shift, 1.0


def ln_gamma(x: float) -> tuple[float, float]:
    """Return (log|Gamma(x)|, sign of Gamma(x)).

    Valid for any finite x that is not a non-positive integer; raises
    :class:`PoleError` at the poles.
    """
    val, sign = _lngamma_ld(x)
    return float(val), sign


def _hyp_series_ld(num, den, z, tol, max_terms=10**6):
    """Sum the hypergeometric series with longdouble accumulation.

    ``num``/``den`` are longdouble parameter arrays; the term recurrence is
    t_{k+1} = t_k * z/(k+1) * prod(num+k)/prod(den+k).  Stops once the term
    magnitude stays below ``tol * |partial sum|`` for three consecutive
    terms (hypergeometric terms can transiently dip near sign changes, so a
    single small term is not trusted).
    """
    term = _LD(1.0)
    total = _LD(1.0)
    tol = _LD(tol)
    small = 0
    for k in range(max_terms):
        r = z / _LD(k + 1)
        for u in num:
            r *= u + _LD(k)
        for v in den:
            r /= v + _LD(k)
        term = term * r
        if term == 0.0:
            return total  # series terminated exactly (polynomial case)
        total += term
        if np.abs(term) <= tol * np.abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
    raise NonConvergenceError(
        f"hypergeometric series did not converge within {max_terms} terms"
    )


def gen_hypergeometric(a, b, z: float, tol: float = 1e-16) -> float:
    """Generalized hypergeometric series pFq(a; b; z).

    Requires len(a) <= len(b) (entire, converges for every z) or the
    geometric case 1F0, for which the closed form (1-z)^(-a) is used.
    Denominator parameters must not be non-positive integers.
    """
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    for bi in b:
        if bi <= 0.0 and bi == math.floor(bi):
            raise PoleError(f"denominator parameter {bi} is a non-positive integer")
    if len(a) == 1 and len(b) == 0:
        if z >= 1.0:
            raise NonConvergenceError("1F0 diverges for z >= 1")
        return float((_LD(1.0) - _LD(z)) ** -_LD(a[0]))
    if len(a) > len(b):
        raise ValueError(
            f"series requires len(a) <= len(b), got {len(a)} > {len(b)}"
        )
    num = [_LD(x) for x in a]
    den = [_LD(x) for x in b]
    return float(_hyp_series_ld(num, den, _LD(z), tol))


def _is_integer(x: float, tol: float = 1e-9) -> bool:
    return abs(x - round(x)) < tol


@dataclass(frozen=True)
class MeijerGSpec:
    """Orders (m, n, p, q) and parameter rows of a Meijer G-function.

    ``a`` has length p (first n entries are the "numerator" group), ``b``
    has length q (first m entries the numerator group).  The instances used
    by the link analytics all have q > p, which makes the residue series
    converge for every finite positive argument.
    """

    m: int
    n: int
    a: tuple[float, ...]
    b: tuple[float, ...]
    perturbations: tuple[tuple[str, int, float, float], ...] = field(
        default_factory=tuple, compare=False
    )

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ValueError(
                f"need 0 <= m <= q and 0 <= n <= p, got m={self.m} n={self.n} "
                f"p={self.p} q={self.q}"
            )

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    def regularized(self, eps: float = 1e-7) -> "MeijerGSpec":
        """Shift integer-colliding parameters so every residue is simple.

        Perturbs by +eps: any pair of b[0:m] whose difference is an exact
        integer (a higher-order pole, i.e. the logarithmic case), any
        b[j], j >= m exceeding some b[h], h < m by a positive integer (a
        denominator Pochhammer that would vanish mid-series), and any
        a[i], i < n exceeding some b[h] by a positive integer (coincident
        left/right pole ladders).  Each shift is recorded in
        ``perturbations`` as (row, index, old, new).
        """
        a = list(self.a)
        b = list(self.b)
        shifts: list[tuple[str, int, float, float]] = []
        for _ in range(4):
            dirty = False
            for h in range(self.m):
                for j in range(h + 1, self.m):
                    if _is_integer(b[j] - b[h]):
                        shifts.append(("b", j, b[j], b[j] + eps))
                        b[j] += eps
                        dirty = True
                for j in range(self.m, self.q):
                    d = b[j] - b[h]
                    if d > 0.5 and _is_integer(d):
                        shifts.append(("b", j, b[j], b[j] + eps))
                        b[j] += eps
                        dirty = True
                for i in range(self.n):
                    d = a[i] - b[h]
                    if d > 0.5 and _is_integer(d):
                        shifts.append(("a", i, a[i], a[i] + eps))
                        a[i] += eps
                        dirty = True
            if not dirty:
                if not shifts:
                    return self
                return MeijerGSpec(
                    self.m, self.n, tuple(a), tuple(b),
                    perturbations=self.perturbations + tuple(shifts),
                )
        raise DegenerateParameterError(
            f"parameters still collide modulo integers after shifts: a={a} b={b}"
        )

    def inverted(self) -> "MeijerGSpec":
        """The equivalent spec for argument 1/z (swaps the two pole families)."""
        return MeijerGSpec(
            self.n,
            self.m,
            tuple(1.0 - bj for bj in self.b),
            tuple(1.0 - ai for ai in self.a),
        )


# One residue-ladder of the expansion: sign, log-coefficient (without the
# z^bh factor), the power bh, and the hypergeometric parameter rows.
@lru_cache(maxsize=256)
def _expansion(m, n, a, b):
    p, q = len(a), len(b)
    ladders = []
    for h in range(m):
        bh = b[h]
        log_c = _LD(0.0)
        sign = 1.0
        dead = False
        for j in range(m):
            if j == h:
                continue
            lg, s = _lngamma_ld(b[j] - bh)  # PoleError here = unregularized collision
            log_c += lg
            sign *= s
        for i in range(n):
            lg, s = _lngamma_ld(1.0 + bh - a[i])
            log_c += lg
            sign *= s
        for i in range(n, p):
            if a[i] - bh <= 0.5 and _is_integer(a[i] - bh):
                dead = True  # 1/Gamma(nonpositive integer) = 0: ladder vanishes
                break
            lg, s = _lngamma_ld(a[i] - bh)
            log_c -= lg
            sign *= s
        if not dead:
            for j in range(m, q):
                if 1.0 + bh - b[j] <= 0.5 and _is_integer(1.0 + bh - b[j]):
                    dead = True
                    break
                lg, s = _lngamma_ld(1.0 + bh - b[j])
                log_c -= lg
                sign *= s
        if dead:
            continue
        num = tuple(_LD(1.0 + bh - ai) for ai in a)
        den = tuple(
            _LD(1.0 + bh - bj) for j, bj in enumerate(b) if j != h
        )
        ladders.append((sign, log_c, _LD(bh), num, den))
    return tuple(ladders)


def _meijer_g_series(spec: MeijerGSpec, z: float, series_tol: float):
    reg = spec.regularized()
    p, q = reg.p, reg.q
    if q < p:
        return _meijer_g_series(reg.inverted(), 1.0 / z, series_tol)
    if q == p and z > 1.0:
        # Residue series only converges for |z| < 1 when p = q; use the
        # inversion identity G(z | a; b) = G(1/z | 1-b; 1-a) with roles swapped.
        return _meijer_g_series(reg.inverted(), 1.0 / z, series_tol)
    ladders = _expansion(reg.m, reg.n, reg.a, reg.b)
    zl = _LD(z)
    lnz = np.log(zl)
    arg = zl if (p - reg.m - reg.n) % 2 == 0 else -zl
    total = _LD(0.0)
    for sign, log_c, bh, num, den in ladders:
        if len(num) == 1 + len(den):  # geometric ladder (p = q case)
            series = (_LD(1.0) - arg) ** -num[0]
        else:
            series = _hyp_series_ld(num, den, arg, series_tol)
        total += _LD(sign) * np.exp(log_c + bh * lnz) * series
    return float(total), reg.perturbations


def meijer_g(spec: MeijerGSpec, z: float, series_tol: float = 1e-19) -> float:
    """Meijer G-function of a positive real argument via the residue series.

    Each numerator-b pole ladder contributes z^{b_h} times a generalized
    hypergeometric series; the coefficients are Gamma products assembled in
    log space.  Parameters whose differences are exact integers are first
    shifted by 1e-7 (see :meth:`MeijerGSpec.regularized`); use
    :func:`meijer_g_info` to inspect the applied shifts.
    """
    if z <= 0.0:
        raise ValueError(f"argument must be positive, got z={z}")
    value, _ = _meijer_g_series(spec, z, series_tol)
    return value


def meijer_g_info(spec: MeijerGSpec, z: float, series_tol: float = 1e-19):
    """Like :func:`meijer_g` but also returns the regularization shifts."""
    if z <= 0.0:
        raise ValueError(f"argument must be positive, got z={z}")
    return _meijer_g_series(spec, z, series_tol)


def _mb_contour(spec: MeijerGSpec) -> float:
    """Abscissa of a vertical line separating the two pole families."""
    right = min(spec.b[: spec.m]) if spec.m else math.inf
    left = max(spec.a[: spec.n]) - 1.0 if spec.n else -math.inf
    if left >= right:
        raise ContourError(
            f"pole ladders overlap: need max(a_n)-1 < min(b_m), got "
            f"{left + 1.0} - 1 >= {right}"
        )
    if math.isinf(left) and math.isinf(right):
        return 0.0
    if math.isinf(left):
        return right - 1.0
    if math.isinf(right):
        return left + 1.0
    return 0.5 * (left + right)


def meijer_g_oracle(
    spec: MeijerGSpec,
    z: float,
    rel_tol: float = 1e-13,
    tail_cut: float = 1e-18,
) -> float:
    """Meijer G via adaptive quadrature of the Mellin-Barnes integral.

    Integrates Re[chi(c+it) z^(c+it)] / pi over t >= 0 (conjugate symmetry
    supplies the lower half line), where chi is the Gamma-product kernel and
    c separates the pole families.  The truncation height grows until the
    integrand falls below ``tail_cut`` of its peak.  Independent of
    :func:`meijer_g`: complex log-gamma comes from scipy.
    """
    if z <= 0.0:
        raise ValueError(f"argument must be positive, got z={z}")
    m, n, p, q = spec.m, spec.n, spec.p, spec.q
    if 2 * (m + n) <= p + q:
        # Kernel decays like |t|^sigma e^{-(m+n-(p+q)/2) pi |t|}: need m+n
        # strictly above (p+q)/2 for absolute convergence at every z.
        raise ContourError(
            f"Mellin-Barnes kernel does not decay for m+n={m + n}, p+q={p + q}"
        )
    a, b = spec.a, spec.b
    c = _mb_contour(spec)
    lnz = math.log(z)

    def integrand(t: float) -> float:
        s = complex(c, t)
        w = s * lnz
        for j in range(m):
            w += _cx_loggamma(b[j] - s)
        for i in range(n):
            w += _cx_loggamma(1.0 - a[i] + s)
        for i in range(n, p):
            w -= _cx_loggamma(a[i] - s)
        for j in range(m, q):
            w -= _cx_loggamma(1.0 - b[j] + s)
        return math.exp(w.real) * math.cos(w.imag)

    peak = max(abs(integrand(0.0)), abs(integrand(0.5)), 1e-300)
    height = 10.0
    while abs(integrand(height)) > tail_cut * peak:
        height *= 1.5
        if height > 1e6:
            raise NonConvergenceError("Mellin-Barnes integrand tail does not decay")
    value, abserr = _quad(
        integrand,
        0.0,
        height,
        limit=800,
        epsabs=peak * 1e-14,
        epsrel=rel_tol,
    )
    value /= math.pi
    abserr /= math.pi
    if abs(value) > 0 and abserr > 1e-6 * abs(value) + 1e-250:
        raise NonConvergenceError(
            f"Mellin-Barnes quadrature error estimate {abserr:.2e} too large "
            f"for value {value:.6e}"
        )
    return value
