import math

import pytest
from hypothesis import strategies as st

from cqedfeedback import SystemParams
from cqedfeedback._backend import available


@pytest.fixture
def optimal25():
    """Optimal coupling ratio at lambda_L = 2.5 kappa, kappa = 1."""
    return SystemParams.optimal(2.5)


@pytest.fixture(params=available())
def backend(request):
    return request.param


@st.composite
def system_params(draw, coupled=True):
    """Random valid parameter sets with moderate dynamic range."""
    kappa = draw(st.floats(min_value=0.1, max_value=10.0))
    lam = st.floats(min_value=0.05, max_value=20.0)
    if not coupled:
        # exactly decoupled, or comfortably away from vanishing coupling where
        # a Rabi pole sinks onto the real axis
        lam = st.one_of(st.just(0.0), lam)
    lam_l = draw(lam)
    lam_r = draw(lam)
    delta = draw(st.floats(min_value=-5.0, max_value=5.0))
    k_c = draw(st.floats(min_value=-10.0, max_value=10.0))
    return SystemParams(kappa=kappa, k_c=k_c, delta_e=delta, lambda_L=lam_l, lambda_R=lam_r)


def close(a, b, tol):
    return abs(a - b) <= tol


SQRT2 = math.sqrt(2.0)
