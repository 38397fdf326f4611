# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled one-sided Jacobi kernel: the hot loop behind every SVD call."""

from libc.math cimport fabs, hypot, sqrt


def jacobi_orthogonalize(double[:, ::1] a, double[:, ::1] v, double tol, int max_sweeps):
    """Rotate the columns of ``a`` in place until they are mutually orthogonal.

    ``v`` must be the identity on entry and accumulates the product of the
    applied rotations, so ``a_in = a_out @ v.T`` throughout. A pair (p, q) is
    considered converged when |a_p . a_q| <= tol * ||a_p|| * ||a_q||. Returns
    the number of full sweeps executed.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t i, p, q
    cdef int sweep, rotated
    cdef double alpha, beta, gamma, zeta, t, c, s, ap, aq

    if v.shape[0] != n or v.shape[1] != n:
        raise ValueError("rotation accumulator must be n x n")

    for sweep in range(max_sweeps):
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    ap = a[i, p]
                    aq = a[i, q]
                    alpha += ap * ap
                    beta += aq * aq
                    gamma += ap * aq
                # separate square roots keep the test exact when alpha * beta
                # would underflow
                if fabs(gamma) <= tol * sqrt(alpha) * sqrt(beta):
                    continue
                rotated = 1
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + hypot(1.0, zeta))
                else:
                    t = -1.0 / (-zeta + hypot(1.0, zeta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for i in range(m):
                    ap = a[i, p]
                    aq = a[i, q]
                    a[i, p] = c * ap - s * aq
                    a[i, q] = s * ap + c * aq
                for i in range(n):
                    ap = v[i, p]
                    aq = v[i, q]
                    v[i, p] = c * ap - s * aq
                    v[i, q] = s * ap + c * aq
        if not rotated:
            return sweep + 1
    return max_sweeps
