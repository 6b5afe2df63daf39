import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from critline.forms import GramForm

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_pd(rng, m, lo=0.5, hi=4.0):
    """Random positive-definite Gram matrix with eigenvalues in [lo, hi]."""
    q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    g = q @ np.diag(rng.uniform(lo, hi, size=m)) @ q.T
    return GramForm.positive(0.5 * (g + g.T))


@st.composite
def pd_forms(draw, m=None, lo=0.5, hi=4.0):
    dim = draw(st.integers(2, 4)) if m is None else m
    seed = draw(st.integers(0, 2**32 - 1))
    return random_pd(np.random.default_rng(seed), dim, lo, hi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
