# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: cyclic Jacobi rotations and per-sample hinge SGD."""

from libc.math cimport sqrt, fabs


cdef double _off_norm(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], i, j
    cdef double s = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                s += a[i, j] * a[i, j]
    return sqrt(s)


cdef int _jacobi(double[:, ::1] a, double[:, ::1] vt, double tol, int max_sweeps) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], p, q, k
    cdef int sweep
    cdef double fro = 0.0, apq, app, aqq, theta, t, c, s, g, akp, akq, vp, vq
    for p in range(n):
        for q in range(n):
            fro += a[p, q] * a[p, q]
    fro = sqrt(fro)
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
                g = 100.0 * fabs(apq)
                # negligible against both diagonals: zero it instead of rotating
                if sweep > 3 and fabs(app) + g == fabs(app) and fabs(aqq) + g == fabs(aqq):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[p, k] = a[k, p]
                    a[k, q] = s * akp + c * akq
                    a[q, k] = a[k, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vp = vt[p, k]
                    vq = vt[q, k]
                    vt[p, k] = c * vp - s * vq
                    vt[q, k] = s * vp + c * vq
    return -1


def jacobi_sweeps(double[:, ::1] a, double[:, ::1] vt, double tol, int max_sweeps):
    """Diagonalise symmetric ``a`` in place; ``vt`` accumulates eigenvectors as rows.

    Returns the number of sweeps performed, or -1 when ``max_sweeps`` ran out.
    """
    cdef int result
    with nogil:
        result = _jacobi(a, vt, tol, max_sweeps)
    return result


def hinge_sgd(const double[:, ::1] x, const long[::1] labels, const long[:, ::1] orders,
              double[:, ::1] w, double[::1] b, double lr, double lam):
    """One-vs-rest hinge-loss SGD; ``orders`` holds one sample permutation per epoch."""
    cdef Py_ssize_t n_epochs = orders.shape[0], n = orders.shape[1], d = x.shape[1]
    cdef Py_ssize_t k_classes = w.shape[0], e, r, i, k, j
    cdef double y, score, shrink = 1.0 - lr * lam
    with nogil:
        for e in range(n_epochs):
            for r in range(n):
                i = orders[e, r]
                for k in range(k_classes):
                    y = 1.0 if labels[i] == k else -1.0
                    score = b[k]
                    for j in range(d):
                        score = score + w[k, j] * x[i, j]
                    for j in range(d):
                        w[k, j] = w[k, j] * shrink
                    if y * score < 1.0:
                        for j in range(d):
                            w[k, j] = w[k, j] + lr * y * x[i, j]
                        b[k] = b[k] + lr * y


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double b1, double b2, double bc1, double bc2, double eps):
    """Fused in-place Adam update over flat arrays; same operation order as the numpy path."""
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double gi
    with nogil:
        for i in range(n):
            gi = g[i]
            m[i] = m[i] * b1 + (1.0 - b1) * gi
            v[i] = v[i] * b2 + (1.0 - b2) * (gi * gi)
            p[i] = p[i] - lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
