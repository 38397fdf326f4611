"""Pure-numpy fallback for the Jacobi kernel.

Same contract as the compiled ``_jacobi`` module; used when the extension is
not built or when NUCONTRAST_PURE_PYTHON is set. Each column pair is handled
through one small Gram product and, if a rotation is needed, one 2x2
right-multiplication, which keeps the per-pair Python overhead low.
"""

import math

import numpy as np


def jacobi_orthogonalize(a, v, tol, max_sweeps):
    """Rotate the columns of ``a`` in place until they are mutually orthogonal.

    ``v`` must be the identity on entry and accumulates the applied rotations.
    Returns the number of full sweeps executed.
    """
    m, n = a.shape
    if v.shape != (n, n):
        raise ValueError("rotation accumulator must be n x n")

    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                cols = a[:, (p, q)]
                gram = cols.T @ cols
                alpha = float(gram[0, 0])
                beta = float(gram[1, 1])
                gamma = float(gram[0, 1])
                # separate square roots keep the test exact when alpha * beta
                # would underflow
                if abs(gamma) <= tol * math.sqrt(alpha) * math.sqrt(beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if zeta >= 0.0:
                    t = 1.0 / (zeta + math.hypot(1.0, zeta))
                else:
                    t = -1.0 / (-zeta + math.hypot(1.0, zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array(((c, s), (-s, c)))
                a[:, (p, q)] = cols @ rot
                v[:, (p, q)] = v[:, (p, q)] @ rot
        if not rotated:
            return sweep + 1
    return max_sweeps
