"""Large-deviations rate function, its inverse, and checked Chernoff-type bounds.

The rate function ``h_function(t) = 1 - t + t*log(t)`` controls the upper and
lower tails of binomial and Poisson counts.  Its partial inverse ``hhat(a, x)``
(the unique ``y >= a`` solving ``y * h_function(a / y) = x``) is the ingredient
of every limit constant in :mod:`polylink.limits`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["BetaMode", "h_function", "hhat", "chernoff_bound"]

_E_SQUARED = math.e ** 2
_BISECT_TOL = 1e-13  # bracket width; the contract asks for 1e-12 absolute


@dataclass(frozen=True)
class BetaMode:
    """Growth regime of the neighbour count k(n) relative to log n.

    ``BetaMode.finite(b)`` models k(n)/log n -> b (including b = 0 for constant
    k); ``BetaMode.infinite()`` models k(n) outgrowing every multiple of log n,
    e.g. k(n) = c * n**gamma with gamma < 1.  The two regimes normalise the
    thresholds differently (per log n vs per k(n)), so infinity is a distinct
    mode and never a large float.
    """

    beta: float | None  # None encodes the infinite regime

    def __post_init__(self):
        if self.beta is not None:
            b = float(self.beta)
            if not math.isfinite(b) or b < 0:
                raise ValueError(f"finite beta must be >= 0 and finite, got {self.beta!r}")
            object.__setattr__(self, "beta", b)

    @classmethod
    def finite(cls, beta: float) -> "BetaMode":
        return cls(float(beta))

    @classmethod
    def infinite(cls) -> "BetaMode":
        return cls(None)

    @classmethod
    def parse(cls, text) -> "BetaMode":
        """Accept a BetaMode, a number, or a string like '1.5' / 'inf'."""
        if isinstance(text, BetaMode):
            return text
        if isinstance(text, (int, float)):
            return cls.finite(text)
        s = str(text).strip().lower()
        if s in ("inf", "infinity", "infinite"):
            return cls.infinite()
        return cls.finite(float(s))

    @property
    def is_infinite(self) -> bool:
        return self.beta is None

    def __str__(self) -> str:
        return "inf" if self.beta is None else format(self.beta, "g")


def h_function(t: float) -> float:
    """Rate function ``1 - t + t*log(t)``, extended by continuity to ``h(0) = 1``.

    Non-negative, strictly convex, with its only zero at t = 1.  Near t = 1 the
    naive expression cancels catastrophically (h ~ (t-1)^2/2), so a short
    alternating series in u = t - 1 is used there.

    Raises ValueError for negative or non-finite t.
    """
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"h_function requires finite t >= 0, got {t!r}")
    if t == 0.0:
        return 1.0
    u = t - 1.0
    if abs(u) <= 0.25:
        # sum_{m>=2} (-1)^m u^m / (m(m-1)); ratio of consecutive terms is
        # -u(m-1)/(m+1), so convergence is geometric at rate |u| <= 1/4
        term = 0.5 * u * u
        total = term
        m = 2
        while abs(term) > 1e-20 and m < 80:
            m += 1
            term *= -u * (m - 2) / m
            total += term
        return total
    return 1.0 - t + t * math.log(t)


def hhat(a: float, x: float) -> float:
    """Inverse of the rate map: the unique ``y >= a`` with ``y * h_function(a/y) = x``.

    ``hhat(0, x) = x`` and ``hhat(a, 0) = a`` by convention (both are the
    continuous limits).  Strictly increasing in x for fixed a.  Solved by
    bracketed bisection (the map is monotone on [a, inf)) to 1e-12 absolute,
    with a short Newton polish.

    Raises ValueError for negative or non-finite inputs.
    """
    a = float(a)
    x = float(x)
    if not (math.isfinite(a) and math.isfinite(x)) or a < 0 or x < 0:
        raise ValueError(f"hhat requires finite a >= 0 and x >= 0, got a={a!r}, x={x!r}")
    if a == 0.0:
        return x
    if x == 0.0:
        return a

    def g(y):
        return y * h_function(a / y) - x

    lo = a
    hi = a + x + 20.0
    while g(hi) < 0.0:
        hi = a + 2.0 * (hi - a)
    for _ in range(200):
        if hi - lo <= _BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    # Newton on y - a - a*log(y/a) - x; derivative 1 - a/y degenerates at y = a,
    # where the bisection result already sits on the root
    for _ in range(3):
        deriv = 1.0 - a / y
        if deriv <= 1e-8:
            break
        y_next = y - g(y) / deriv
        if y_next < a:
            break
        y = y_next
    return y


def chernoff_bound(kind: str, *, n: int | None = None, p: float | None = None,
                   t: float | None = None, k: int) -> float:
    """Tail-bound values for binomial and Poisson counts.

    kind selects the bound; each has a precondition and the violated inequality
    is named in the error:

    - ``binom_upper``:      P[Bin(n,p) >= k] <= exp(-np * h(k/np)),   needs k >= np
    - ``binom_lower``:      P[Bin(n,p) <= k] <= exp(-np * h(k/np)),   needs k <= np
    - ``binom_poly``:       P[Bin(n,p) >= k] <= exp(-(k/2) log(k/np)), needs k >= e^2 np
    - ``poisson_lower``:    P[Pois(t) <= k]  <= exp(-t * h(k/t)),     needs k < t
    - ``poisson_point_lb``: P[Pois(t) = k]   >= (2 pi k)^{-1/2} e^{-1/(12k)} exp(-t h(k/t)),
      needs k >= 1

    Returns the bound value only; exact tails live in the test oracles.
    """
    if not isinstance(k, int) or isinstance(k, bool):
        raise ValueError(f"k must be an integer count, got {k!r}")

    if kind in ("binom_upper", "binom_lower", "binom_poly"):
        if n is None or p is None:
            raise ValueError(f"{kind} requires n and p")
        if not isinstance(n, int) or n < 1:
            raise ValueError(f"n must be a positive integer, got {n!r}")
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {p!r}")
        if k < 0:
            raise ValueError(f"k must be >= 0, got {k}")
        m = n * p
        if kind == "binom_upper":
            if k < m:
                raise ValueError(f"binom_upper requires k >= n*p, got k={k} < n*p={m}")
            return math.exp(-m * h_function(k / m))
        if kind == "binom_lower":
            if k > m:
                raise ValueError(f"binom_lower requires k <= n*p, got k={k} > n*p={m}")
            return math.exp(-m * h_function(k / m))
        # binom_poly
        if k < _E_SQUARED * m:
            raise ValueError(f"binom_poly requires k >= e^2*n*p, got k={k} < e^2*n*p={_E_SQUARED * m}")
        return math.exp(-(k / 2.0) * math.log(k / m))

    if kind in ("poisson_lower", "poisson_point_lb"):
        if t is None:
            raise ValueError(f"{kind} requires t")
        t = float(t)
        if not math.isfinite(t) or t <= 0.0:
            raise ValueError(f"t must be positive and finite, got {t!r}")
        if kind == "poisson_lower":
            if not k < t:
                raise ValueError(f"poisson_lower requires k < t, got k={k} >= t={t}")
            if k < 0:
                raise ValueError(f"k must be >= 0, got {k}")
            return math.exp(-t * h_function(k / t))
        if k < 1:
            raise ValueError(f"poisson_point_lb requires k >= 1, got k={k}")
        return (2.0 * math.pi * k) ** -0.5 * math.exp(-1.0 / (12.0 * k)) \
            * math.exp(-t * h_function(k / t))

    raise ValueError(f"unknown bound kind {kind!r}")
