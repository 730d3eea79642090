"""Plain Gaussian elimination with Fraction / int-mod-p entries.

Independent of flint; used only to cross-check the package.
"""
from fractions import Fraction


def _norm(x, p):
    return Fraction(x) if p == 0 else int(x) % p


def _inv(x, p):
    return 1 / x if p == 0 else pow(x, p - 2, p)


def rref(rows, p=0):
    A = [[_norm(x, p) for x in r] for r in rows]
    if not A:
        return [], []
    m, n = len(A), len(A[0])
    piv, r = [], 0
    for c in range(n):
        k = next((i for i in range(r, m) if A[i][c]), None)
        if k is None:
            continue
        A[r], A[k] = A[k], A[r]
        s = _inv(A[r][c], p)
        A[r] = [_norm(x * s, p) for x in A[r]]
        for i in range(m):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [_norm(x - f * y, p) for x, y in zip(A[i], A[r])]
        piv.append(c)
        r += 1
        if r == m:
            break
    return A[:r], piv


def rank(rows, p=0):
    return len(rref(rows, p)[1])


def nullity(rows, ncols, p=0):
    return ncols - rank(rows, p)


def solvable(rows, b, p=0):
    aug = [list(r) + [x] for r, x in zip(rows, b)]
    return rank(aug, p) == rank(rows, p)
