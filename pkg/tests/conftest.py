import warnings

import numpy as np
import pytest
from scipy import integrate

from ddequiv.windows import window_value

# Small grid for unit tests: W = 1 MHz, T = 128 / W.
W_SMALL = 1.0e6
T_SMALL = 128 / W_SMALL


def quad_transform(w, xi):
    """Independent oracle: QUADPACK oscillatory quadrature of the window transform integral."""
    sign = -1.0 if w.domain == "time" else 1.0
    pts = [w.lo, w.hi]
    if w.shape == "rc":
        flat = (1 - w.rolloff) * w.width / (1 + w.rolloff) / 2
        pts += [w.center - flat, w.center + flat]
    pts = np.unique(pts)
    omega = 2 * np.pi * xi
    total = 0j
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0:
            continue
        f = lambda u: window_value(w, u)
        kw = dict(wvar=omega, limit=400, epsabs=1e-15 * w.width, epsrel=1e-13)
        with warnings.catch_warnings():
            # roundoff notices fire when a part is exactly zero by symmetry
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            re = integrate.quad(f, a, b, weight="cos", **kw)[0]
            im = integrate.quad(f, a, b, weight="sin", **kw)[0]
        total += re + sign * 1j * im
    return complex(total)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
