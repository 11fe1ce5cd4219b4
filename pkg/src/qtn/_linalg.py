"""Hermitian positive (semi)definite solves shared by ALS, ridge and KRR."""
import numpy as np
import scipy.linalg as sla

from .errors import NumericalError

JITTER_LADDER = (0.0, 1e-12, 1e-10)


def solve_hermitian(S, rhs, min_norm_fallback=True):
    """Solve ``S x = rhs`` by Cholesky, escalating a relative diagonal jitter on failure.

    If every rung fails and ``min_norm_fallback`` is set, returns the
    minimum-norm least-squares solution instead.
    """
    S = np.asarray(S)
    rhs = np.asarray(rhs)
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(rhs))):
        raise NumericalError("non-finite entries in linear system")
    scale = np.abs(np.diag(S)).mean() if S.size else 1.0
    eye = np.eye(S.shape[0])
    for jitter in JITTER_LADDER:
        try:
            c = sla.cho_factor(S + jitter * scale * eye, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        x = sla.cho_solve(c, rhs, check_finite=False)
        if np.all(np.isfinite(x)):
            return x
    if not min_norm_fallback:
        raise NumericalError("Cholesky failed after jitter escalation")
    x = sla.lstsq(S, rhs, check_finite=False)[0]
    if not np.all(np.isfinite(x)):
        raise NumericalError("least-squares fallback produced non-finite solution")
    return x
