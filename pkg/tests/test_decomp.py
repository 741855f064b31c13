import numpy as np
import pytest

from lacsum import (
    JkIndexSpace,
    LacsumError,
    SampleJk,
    Spectrum,
    TorusGrid,
    apply_pair_weight,
    cesaro_mean,
    coefficient_transfer,
    decompose_free_pair,
    make_lacunary,
    min_log_inverse,
    min_log_inverse_diffs,
    min_pair_weight,
    partial_sum,
    single_mode_spectrum,
    summed_partial_sums,
    weighted_energy,
    zero_spectrum,
)

GRID = TorusGrid((16, 16, 16))


def random_spectrum(rng, bandwidth):
    shape = tuple(2 * b + 1 for b in bandwidth)
    return Spectrum(bandwidth, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def test_weight_values():
    assert min_log_inverse(0, 0) == pytest.approx(1.0 / np.log(2.0), abs=1e-12)
    assert min_log_inverse(5, 100) == min_log_inverse(5, 7) == pytest.approx(1.0 / np.log(7.0))
    assert min_log_inverse(3, -9) == min_log_inverse(-9, 3)


def test_difference_values():
    d = min_log_inverse_diffs(3, 5)
    assert d["dq"] == pytest.approx(0.0, abs=1e-15)
    d = min_log_inverse_diffs(5, 3)
    assert d["dq"] == pytest.approx(1.0 / np.log(5.0) - 1.0 / np.log(6.0), abs=1e-14)


def test_mixed_difference_vanishes_off_diagonal():
    t = np.arange(66)
    w = min_log_inverse(t[:, None], t[None, :])
    mixed = w[:-1, :-1] - w[1:, :-1] - w[:-1, 1:] + w[1:, 1:]
    off = np.abs(mixed.copy())
    np.fill_diagonal(off, 0.0)
    assert off.max() == 0.0
    # and the diagonal is a genuine drop
    diag = np.diag(mixed)
    assert np.all(diag < 0.0)


def test_transfer_round_trip_and_single_coefficient():
    rng = np.random.default_rng(0)
    s = random_spectrum(rng, (2, 3, 3))
    g = coefficient_transfer(s, (2, 3))
    back = apply_pair_weight(g, (2, 3))
    assert np.max(np.abs(back.coeffs - s.coeffs)) < 1e-14

    one = single_mode_spectrum((2, 2, 2), (1, 0, 0))
    g1 = coefficient_transfer(one, (2, 3))
    assert g1.coefficient((1, 0, 0)) == pytest.approx(np.log(2.0), abs=1e-14)


def test_transfer_energy_matches_pair_weighted_energy():
    rng = np.random.default_rng(1)
    s = random_spectrum(rng, (2, 3, 3))
    g = coefficient_transfer(s, (2, 3))
    sigma0 = weighted_energy(s, min_pair_weight(SampleJk(3, (1,))))
    assert g.energy() == pytest.approx(sigma0, rel=1e-12)


def test_decompose_zero_spectrum():
    res = decompose_free_pair(zero_spectrum((3, 3, 3)), (2, 3, 1), (2, 3), GRID)
    for term in res.terms:
        assert np.max(np.abs(term)) == 0.0
    assert res.max_error == 0.0


def test_decompose_zero_free_components():
    rng = np.random.default_rng(2)
    g = random_spectrum(rng, (3, 3, 3))
    res = decompose_free_pair(g, (2, 0, 0), (2, 3), GRID)
    for term in res.terms[:3]:
        assert np.max(np.abs(term)) == 0.0
    # the boundary term alone reproduces the reference partial sum
    assert np.max(np.abs(res.terms[3] - res.reference)) < 1e-12
    assert res.max_error < 1e-12


def test_decompose_reassembles_random():
    rng = np.random.default_rng(3)
    for _ in range(5):
        bw = tuple(int(v) for v in rng.integers(2, 6, size=3))
        g = random_spectrum(rng, bw)
        index = (4, 5, 3)
        res = decompose_free_pair(g, index, (2, 3), GRID)
        assert res.max_error < 1e-10


def test_decompose_engines_agree_termwise():
    rng = np.random.default_rng(4)
    g = random_spectrum(rng, (3, 4, 4))
    closed = decompose_free_pair(g, (2, 4, 3), (2, 3), GRID, engine="closed")
    raw = decompose_free_pair(g, (2, 4, 3), (2, 3), GRID, engine="bilinear")
    for a, b in zip(closed.terms, raw.terms):
        assert np.max(np.abs(a - b)) < 1e-12
    assert raw.max_error < 1e-10


def test_decompose_general_free_pair_position():
    rng = np.random.default_rng(5)
    g = random_spectrum(rng, (3, 3, 3))
    res = decompose_free_pair(g, (2, 3, 1), (1, 3), GRID)
    assert res.max_error < 1e-10


def test_decompose_dimension_guard():
    with pytest.raises(LacsumError):
        decompose_free_pair(zero_spectrum((3, 3)), (1, 1), (1, 2), TorusGrid((8, 8)))


# ---------------------------------------------------------------------------
# summed partial sums over free boxes


def space_j1():
    sample = SampleJk(3, (1,))
    return JkIndexSpace(sample, (make_lacunary(2.0, 3),), (6, 6))


def test_summed_cap_zero_is_single_partial_sum():
    rng = np.random.default_rng(6)
    s = random_spectrum(rng, (3, 3, 3))
    space = space_j1()
    q = summed_partial_sums(s, space, (2, 5, 3), (2,), (0,), GRID)
    direct = partial_sum(s, (2, 0, 3), GRID)
    assert np.max(np.abs(q.values - direct.values)) < 1e-12


def test_summed_excluded_mode_is_zero():
    s = single_mode_spectrum((3, 3, 3), (2, 1, 1))
    space = space_j1()
    q = summed_partial_sums(s, space, (1, 3, 3), (2,), (3,), GRID)
    assert np.max(np.abs(q.values)) < 1e-14


def test_summed_matches_brute_force_and_cesaro():
    rng = np.random.default_rng(7)
    s = random_spectrum(rng, (3, 3, 3))
    space = space_j1()
    index, p = (2, 0, 3), 3
    q = summed_partial_sums(s, space, index, (2,), (p,), GRID)
    acc = np.zeros(GRID.resolution, dtype=complex)
    for m in range(p + 1):
        acc += partial_sum(s, (2, m, 3), GRID).values
    assert np.max(np.abs(q.values - acc)) < 1e-12
    # equals (p+1) times the Cesaro mean of the axis-2 partial-sum sequence
    cesaro = cesaro_mean(lambda r: partial_sum(s, (2, r, 3), GRID).values, p)
    assert np.max(np.abs(q.values - (p + 1) * cesaro)) < 1e-12


def test_summed_matches_attenuation_multiplier():
    # summing the box over one free axis multiplies each mode by
    # max(0, p + 1 - |nu|); independent coefficient-side oracle
    rng = np.random.default_rng(8)
    s = random_spectrum(rng, (3, 3, 3))
    space = space_j1()
    index, p = (4, 0, 2), 2
    q = summed_partial_sums(s, space, index, (2,), (p,), GRID)
    weights = np.maximum(0.0, p + 1 - np.abs(np.arange(-3, 4)))
    scaled = s.coeffs * weights[None, :, None]
    expected = partial_sum(Spectrum(s.bandwidth, scaled), (4, 3, 2), GRID).values
    assert np.max(np.abs(q.values - expected)) < 1e-12


def test_summed_growth_envelope():
    rng = np.random.default_rng(9)
    s = random_spectrum(rng, (3, 3, 3))
    space = space_j1()
    index, caps = (2, 0, 0), (2, 3)
    q = summed_partial_sums(s, space, index, (2, 3), caps, GRID)
    worst = 0.0
    for m2 in range(caps[0] + 1):
        for m3 in range(caps[1] + 1):
            worst = max(worst, float(np.max(np.abs(partial_sum(s, (2, m2, m3), GRID).values))))
    bound = (caps[0] + 1) * (caps[1] + 1) * worst
    assert np.max(np.abs(q.values)) <= bound + 1e-12


def test_summed_rejects_non_free_axis():
    s = zero_spectrum((3, 3, 3))
    with pytest.raises(LacsumError):
        summed_partial_sums(s, space_j1(), (1, 0, 0), (1,), (2,), GRID)
