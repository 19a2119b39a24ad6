"""Pure-numpy implementations of the solver kernels."""
import numpy as np


def refresh_ratio(Y, V, eps, out):
    """out = Y / max(V, eps), elementwise, in place."""
    np.maximum(V, eps, out=out)
    np.divide(Y, out, out=out)
    return out


def rank1_add(V, d, x):
    """V += outer(d, x), in place."""
    V += d[:, None] * x[None, :]
    return V


def kl_divergence_floored(Y, V, eps):
    """Generalized KL divergence sum(Y log(Y/V) - Y + V) with V floored at eps.

    Zero entries of Y contribute V only (0*log 0 taken as 0).
    """
    Vf = np.maximum(V, eps)
    pos = Y > 0
    Yp = Y[pos]
    return float(np.sum(Yp * np.log(Yp / Vf[pos]) - Yp) + Vf.sum())
