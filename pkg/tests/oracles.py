"""Independent reference computations used as test oracles.

Pure Python on purpose: they share no code path with the package.
"""

from fractions import Fraction


def normal_equations_fit(xs, ys):
    """OLS coefficients (b0, b1, b2, b3) from the 4x4 normal equations.

    Solved by Gauss-Jordan elimination in exact rational arithmetic, so the
    oracle carries no rounding error of its own.
    """
    rows = [[Fraction(1)] + [Fraction(v) for v in x] for x in xs]
    y = [Fraction(v) for v in ys]
    k = 4
    a = [[sum(r[i] * r[j] for r in rows) for j in range(k)] for i in range(k)]
    b = [sum(r[i] * yy for r, yy in zip(rows, y)) for i in range(k)]
    m = [a[i] + [b[i]] for i in range(k)]
    for col in range(k):
        pivot = next(r for r in range(col, k) if m[r][col] != 0)
        m[col], m[pivot] = m[pivot], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(k):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return tuple(float(m[i][k]) for i in range(k))


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    if va == 0 or vb == 0:
        return 0.0
    return cov / (va * vb) ** 0.5
