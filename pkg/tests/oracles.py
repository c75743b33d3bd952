"""Independent reference computations used to freeze expected values.

None of these share code with the package: they are slow, direct
transcriptions of the definitions.
"""

from fractions import Fraction

import numpy as np


def collatz_orbit(n, steps):
    """Plain Collatz iteration with explicit halving."""
    out = [n]
    for _ in range(steps):
        n = 3 * n + 1 if n % 2 else n // 2
        out.append(n)
    return out


def syracuse_by_halving(n):
    m = 3 * n + 1
    while m % 2 == 0:
        m //= 2
    return m


def valuation_by_halving(n, length):
    out = []
    for _ in range(length):
        m, a = 3 * n + 1, 0
        while m % 2 == 0:
            m //= 2
            a += 1
        out.append(a)
        n = m
    return tuple(out)


def offset_by_sum(a):
    """F_n(a) = sum_m 3^(n-m) 2^(-a_[m,n]) as a Fraction."""
    n = len(a)
    total = Fraction(0)
    for m in range(1, n + 1):
        total += Fraction(3 ** (n - m), 2 ** sum(a[m - 1:]))
    return total


def syracuse_dist_direct(n):
    """P(Syrac(Z/3^n) = y) by the level-raising recursion, summing one full
    period of a with the geometric correction 1 / (1 - 2^-T).

    Costs O(9^n) Fraction operations; fine up to n = 5.
    """
    probs = [Fraction(1)]
    for level in range(n):
        mod_next = 3 ** (level + 1)
        period = 2 * 3 ** level
        inv2 = pow(2, -1, mod_next)
        scale = 1 / (1 - Fraction(1, 2 ** period))
        nxt = [Fraction(0)] * mod_next
        step = 1
        for a in range(1, period + 1):
            step = step * inv2 % mod_next
            w = Fraction(1, 2 ** a) * scale
            for x, p in enumerate(probs):
                if p:
                    nxt[(3 * x + 1) * step % mod_next] += w * p
        probs = nxt
    return probs


def oscillation_direct(probs, m):
    mod = 3 ** m
    out = Fraction(0)
    for y, p in enumerate(probs):
        fibre = [q for z, q in enumerate(probs) if z % mod == y % mod]
        out += abs(p - sum(fibre) / len(fibre))
    return out


def char_direct(probs, xi):
    mod = len(probs)
    return sum(float(p) * np.exp(-2j * np.pi * xi * y / mod) for y, p in enumerate(probs))


def renewal_overshoot_exact(s, horizon=1200):
    """Exact law of the renewal walk's exit overshoot and mean exit index.

    A Hold step adds (J, L): J ~ Geom(4), L = 3 plus J - 1 independent
    Pascal draws conditioned to differ from 3.  Returns
    (overshoot pmf as dict r -> prob, mean exit j).
    """
    b = np.arange(horizon + 1, dtype=float)
    pascal = np.where(b >= 2, (b - 1) * 2.0 ** (-np.minimum(b, 1070)), 0.0)
    cond = pascal.copy()
    cond[3] = 0.0
    cond /= cond.sum()
    # h = 1/4 delta_3 + 3/4 (cond * h), solved by increasing l
    h = np.zeros(horizon + 1)
    for l in range(horizon + 1):
        acc = 0.25 if l == 3 else 0.0
        acc += 0.75 * sum(cond[k] * h[l - k] for k in range(2, l + 1))
        h[l] = acc
    # renewal measure: u(t) = P(some partial sum of L equals t)
    u = np.zeros(s + 1)
    u[0] = 1.0
    for t in range(1, s + 1):
        u[t] = sum(h[k] * u[t - k] for k in range(1, t + 1))
    over = {}
    for r in range(1, horizon - s):
        over[r] = float(sum(u[t] * h[s + r - t] for t in range(max(0, s + r - horizon), s + 1)))
    # Wald: E[steps] = sum_t u(t), each step adds 4 to j on average
    return over, 4.0 * float(u.sum())
