"""Special functions used to turn test statistics into P-values."""
import numpy as np
from scipy import special as _sp


def erfc(x):
    """Complementary error function."""
    return _sp.erfc(x)


def igamc(a, x):
    """Regularized upper incomplete gamma function Q(a, x).

    ``igamc(a, 0) == 1`` and the result is clipped to [0, 1] to absorb
    rounding at the tails.
    """
    if np.any(np.asarray(a) <= 0):
        raise ValueError("igamc requires a > 0")
    if np.any(np.asarray(x) < 0):
        raise ValueError("igamc requires x >= 0")
    return np.clip(_sp.gammaincc(a, x), 0.0, 1.0)


def normal_cdf(x):
    return _sp.ndtr(x)
