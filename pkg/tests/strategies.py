"""Hypothesis strategies for admissible parameter sets."""

import math

from hypothesis import strategies as st

from bgkmix.mixture_model import MixtureParams, delta_lower_bound, gamma_upper_bound


@st.composite
def admissible_params(draw, normalized: bool = True):
    m1 = draw(st.floats(0.2, 5.0))
    m2 = draw(st.floats(0.2, 5.0))
    eps = draw(st.floats(0.1, 1.0))
    n1 = draw(st.floats(0.3, 3.0))
    n2 = draw(st.floats(0.3, 3.0))
    lo = delta_lower_bound(m1, m2, eps)
    delta = lo + (1.0 - lo) * draw(st.floats(0.0, 1.0))
    gamma = draw(st.floats(0.0, 1.0)) * max(0.0, gamma_upper_bound(m1, m2, eps, delta))
    alpha = draw(st.floats(0.0, 1.0))
    if normalized:
        nu21 = draw(st.floats(0.1, 0.9)) * min(1.0 / (eps * n2), 1.0 / n1)
        nu11 = (1.0 - eps * nu21 * n2) / n1
        nu22 = (1.0 - nu21 * n1) / n2
    else:
        nu11, nu21, nu22 = (draw(st.floats(0.0, 2.0)) for _ in range(3))
    L = draw(st.floats(1.0, 4.0 * math.pi))
    return MixtureParams(m1, m2, nu11, eps * nu21, nu21, nu22, eps, delta, alpha, gamma, n1, n2, L)
