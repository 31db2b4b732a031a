"""Pure-Python/numpy versions of the compiled kernels.

Signatures and in-place semantics match ``_kernels.pyx`` exactly.
"""

import math

import numpy as np


def _off_norm(a):
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return math.sqrt(float(np.sum(off * off)))


def jacobi_sweeps(a, vt, tol, max_sweeps):
    n = a.shape[0]
    fro = math.sqrt(float(np.sum(a * a)))
    for sweep in range(max_sweeps + 1):
        if _off_norm(a) <= tol * fro:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
                vp = vt[p].copy()
                vq = vt[q].copy()
                vt[p] = c * vp - s * vq
                vt[q] = s * vp + c * vq
    return -1


def hinge_sgd(x, labels, orders, w, b, lr, lam):
    k_classes = w.shape[0]
    classes = np.arange(k_classes)
    shrink = 1.0 - lr * lam
    for order in orders:
        for i in order:
            xi = x[i]
            y = np.where(classes == labels[i], 1.0, -1.0)
            score = b + w @ xi
            w *= shrink
            hit = y * score < 1.0
            if hit.any():
                w[hit] += lr * y[hit, None] * xi
                b[hit] += lr * y[hit]


def adam_update(p, g, m, v, lr, b1, b2, bc1, bc2, eps):
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
