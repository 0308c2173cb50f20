"""Truncated Taylor series arithmetic (forward-mode, univariate in time).

A series is a list ``c`` with ``x(t0 + h) = sum_k c[k] h^k``, i.e. normalised
coefficients ``c[k] = x^(k)(t0) / k!``.  Plain Python floats keep the inner
control loop cheap; the series here never exceed order 4.
"""

from math import factorial


def derivative(c):
    """Series of dx/dt, one order shorter."""
    return [k * c[k] for k in range(1, len(c))]


def add(a, b):
    n = min(len(a), len(b))
    return [a[k] + b[k] for k in range(n)]


def mul(a, b):
    n = min(len(a), len(b))
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n)]


def compose(c, derivs):
    """Series of ``h(x(t))`` given ``derivs[j] = h^(j)(c[0])`` for j = 0..len(c)-1."""
    n = len(c)
    if len(derivs) < n:
        raise ValueError(f"need {n} derivatives of the outer function, got {len(derivs)}")
    if n <= 4:
        return _compose_low(c, derivs, n)
    return compose_generic(c, derivs)


def _compose_low(c, d, n):
    # Faa di Bruno on normalised coefficients, orders <= 3
    out = [d[0]]
    if n > 1:
        c1 = c[1]
        out.append(d[1] * c1)
    if n > 2:
        c2 = c[2]
        out.append(d[1] * c2 + 0.5 * d[2] * c1 * c1)
    if n > 3:
        out.append(d[1] * c[3] + d[2] * c1 * c2 + d[3] * c1 * c1 * c1 / 6.0)
    return out


def compose_generic(c, derivs):
    """Reference composition through repeated series products (any order)."""
    n = len(c)
    d = [0.0] + list(c[1:])
    out = [0.0] * n
    out[0] = derivs[0]
    power = [1.0] + [0.0] * (n - 1)
    for j in range(1, n):
        power = mul(power, d)
        w = derivs[j] / factorial(j)
        for k in range(j, n):
            out[k] += w * power[k]
    return out


def to_derivatives(c):
    """Convert normalised coefficients back to plain derivatives."""
    return [factorial(k) * v for k, v in enumerate(c)]
