"""Compiled core of Platt's sequential minimal optimisation.

Conventions follow Platt (1998): output ``u = sum(alpha*y*K) - b`` and the
error cache holds ``E = u - y`` for every example.
"""

import numpy as np
from numba import njit

EPS = 1e-12


@njit(cache=True)
def _take_step(i1, i2, K, y, alpha, E, state, C):
    # state[0] = b, state[1] = successful step count
    if i1 == i2:
        return 0
    alph1 = alpha[i1]
    alph2 = alpha[i2]
    y1 = y[i1]
    y2 = y[i2]
    E1 = E[i1]
    E2 = E[i2]
    b = state[0]
    s = y1 * y2
    if y1 != y2:
        L = max(0.0, alph2 - alph1)
        H = min(C, C + alph2 - alph1)
    else:
        L = max(0.0, alph1 + alph2 - C)
        H = min(C, alph1 + alph2)
    if H - L < EPS:
        return 0
    k11 = K[i1, i1]
    k12 = K[i1, i2]
    k22 = K[i2, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta > 0:
        a2 = alph2 + y2 * (E1 - E2) / eta
        if a2 < L:
            a2 = L
        elif a2 > H:
            a2 = H
    else:
        f1 = y1 * (E1 + b) - alph1 * k11 - s * alph2 * k12
        f2 = y2 * (E2 + b) - s * alph1 * k12 - alph2 * k22
        L1 = alph1 + s * (alph2 - L)
        H1 = alph1 + s * (alph2 - H)
        Lobj = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
        Hobj = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
        if Lobj < Hobj - EPS:
            a2 = L
        elif Lobj > Hobj + EPS:
            a2 = H
        else:
            a2 = alph2
    if a2 < 1e-8:
        a2 = 0.0
    elif a2 > C - 1e-8:
        a2 = C
    if abs(a2 - alph2) < EPS * (a2 + alph2 + EPS):
        return 0
    a1 = alph1 + s * (alph2 - a2)
    # snap a1 to its bounds as well, so no alpha sits a hair inside [0, C]
    if a1 < 1e-8:
        a2 += s * a1
        a1 = 0.0
    elif a1 > C - 1e-8:
        a2 += s * (a1 - C)
        a1 = C
    d1 = y1 * (a1 - alph1)
    d2 = y2 * (a2 - alph2)
    b1 = E1 + d1 * k11 + d2 * k12 + b
    b2 = E2 + d1 * k12 + d2 * k22 + b
    if 0.0 < a1 < C:
        bnew = b1
    elif 0.0 < a2 < C:
        bnew = b2
    else:
        bnew = 0.5 * (b1 + b2)
    db = bnew - b
    for i in range(len(y)):
        E[i] += d1 * K[i1, i] + d2 * K[i2, i] - db
    alpha[i1] = a1
    alpha[i2] = a2
    state[0] = bnew
    state[1] += 1
    return 1


@njit(cache=True)
def _examine(i2, K, y, alpha, E, state, C, tol):
    y2 = y[i2]
    alph2 = alpha[i2]
    E2 = E[i2]
    r2 = E2 * y2
    if not ((r2 < -tol and alph2 < C) or (r2 > tol and alph2 > 0)):
        return 0
    n = len(y)
    n_free = 0
    best = -1
    best_gap = -1.0
    for i in range(n):
        if 0.0 < alpha[i] < C:
            n_free += 1
            gap = abs(E[i] - E2)
            if gap > best_gap:
                best_gap = gap
                best = i
    if n_free > 1 and best >= 0:
        if _take_step(best, i2, K, y, alpha, E, state, C):
            return 1
    for i in range(n):
        if 0.0 < alpha[i] < C:
            if _take_step(i, i2, K, y, alpha, E, state, C):
                return 1
    for i in range(n):
        if _take_step(i, i2, K, y, alpha, E, state, C):
            return 1
    return 0


@njit(cache=True)
def smo_solve(K, y, C, tol, max_steps):
    """Return ``(alpha, b, converged)`` for kernel matrix ``K`` and labels +-1."""
    n = len(y)
    alpha = np.zeros(n)
    E = -y.astype(np.float64)
    state = np.zeros(2)
    num_changed = 0
    examine_all = True
    converged = True
    while num_changed > 0 or examine_all:
        if state[1] > max_steps:
            converged = False
            break
        num_changed = 0
        if examine_all:
            for i in range(n):
                num_changed += _examine(i, K, y, alpha, E, state, C, tol)
        else:
            for i in range(n):
                if 0.0 < alpha[i] < C:
                    num_changed += _examine(i, K, y, alpha, E, state, C, tol)
        if examine_all:
            examine_all = False
        elif num_changed == 0:
            examine_all = True
    return alpha, state[0], converged
