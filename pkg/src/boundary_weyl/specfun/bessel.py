"""Integer-order Bessel functions of the first and second kind on the real axis.

Thin wrappers over ``scipy.special`` (AMOS / Cephes), which already combine
power series, recurrences and Hankel/Debye asymptotics internally. The
wrappers add argument validation and broadcasting.
"""

from __future__ import annotations

import numpy as np
from scipy import special


class BesselDomainError(ValueError):
    pass


def _prep(m, x, allow_zero: bool):
    m_arr = np.asarray(m)
    x_arr = np.asarray(x, dtype=float)
    if np.any(m_arr < 0) or np.any(m_arr != np.round(m_arr)):
        raise BesselDomainError("order must be a non-negative integer")
    if np.any(~np.isfinite(x_arr)) or np.any(x_arr < 0):
        raise BesselDomainError("argument must be finite and non-negative")
    if not allow_zero and np.any(x_arr == 0):
        raise BesselDomainError("Y_m is singular at x = 0")
    return m_arr.astype(float), x_arr


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def bessel_j(m, x):
    mm, xx = _prep(m, x, True)
    return _out(special.jv(mm, xx))


def bessel_y(m, x):
    mm, xx = _prep(m, x, False)
    return _out(special.yv(mm, xx))


def bessel_j_prime(m, x):
    mm, xx = _prep(m, x, True)
    return _out(special.jvp(mm, xx))


def bessel_y_prime(m, x):
    mm, xx = _prep(m, x, False)
    return _out(special.yvp(mm, xx))
