import numpy as np
import pytest
from hypothesis import given, strategies as st

from areasim.analysis.normal import norm_ppf

scipy_special = pytest.importorskip("scipy.special")


def test_matches_reference_implementation():
    p = np.concatenate([np.logspace(-300, -1, 200), np.linspace(0.01, 0.99, 301), 1 - np.logspace(-16, -1, 100)])
    assert np.allclose(norm_ppf(p), scipy_special.ndtri(p), rtol=1e-13, atol=1e-13)


def test_edges():
    assert norm_ppf(0.5) == 0.0
    assert norm_ppf(0.0) == -np.inf and norm_ppf(1.0) == np.inf
    with pytest.raises(ValueError):
        norm_ppf(1.5)


@given(st.floats(1e-12, 0.5 - 1e-9))
def test_symmetry(p):
    p = 1 - (1 - p)  # make 1 - p exact
    assert norm_ppf(p) == pytest.approx(-norm_ppf(1 - p), rel=1e-9, abs=1e-12)
