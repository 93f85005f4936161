import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hec_adapt.features import STATE_DIM, extract_state
from hec_adapt.scoring import WEEK_STEPS


def test_state_dim_is_28():
    assert STATE_DIM == 28


def test_constant_day():
    window = np.zeros(WEEK_STEPS)
    window[0:96] = 3.5
    state = extract_state(window)
    npt.assert_allclose(state[0:4], [3.5, 3.5, 3.5, 0.0])


def test_alternating_day_population_std():
    window = np.zeros(WEEK_STEPS)
    window[96:192] = np.tile([-1.0, 1.0], 48)  # day 1
    state = extract_state(window)
    npt.assert_allclose(state[4:8], [-1.0, 1.0, 0.0, 1.0])


def test_length_checked():
    with pytest.raises(ValueError, match="672"):
        extract_state(np.zeros(100))


@given(st.integers(0, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=25)
def test_within_day_permutation_invariant(day, seed):
    rng = np.random.default_rng(seed)
    window = rng.normal(size=WEEK_STEPS)
    base = extract_state(window)
    shuffled = window.copy()
    segment = slice(day * 96, (day + 1) * 96)
    shuffled[segment] = rng.permutation(shuffled[segment])
    npt.assert_allclose(extract_state(shuffled), base, atol=1e-12)


def test_day_reorder_equivariance():
    rng = np.random.default_rng(7)
    window = rng.normal(size=WEEK_STEPS)
    order = [3, 0, 6, 1, 5, 2, 4]
    reordered = window.reshape(7, 96)[order].ravel()
    base = extract_state(window).reshape(7, 4)
    moved = extract_state(reordered).reshape(7, 4)
    npt.assert_allclose(moved, base[order], atol=1e-12)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25)
def test_finite_and_ordered(seed):
    rng = np.random.default_rng(seed)
    window = rng.normal(scale=5.0, size=WEEK_STEPS)
    state = extract_state(window).reshape(7, 4)
    assert np.all(np.isfinite(state))
    mins, maxs, means, stds = state.T
    assert np.all(mins <= means) and np.all(means <= maxs)
    assert np.all(stds >= 0)
