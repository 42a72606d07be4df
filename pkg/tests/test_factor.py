"""Coprime factorizations, pole placement, Youla shifts, closed-loop tables."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrfctl import factor
from nrfctl.errors import (
    DimensionMismatch,
    GainsNotStabilizing,
    InvariantViolation,
    NotStabilizable,
    PlacementFailed,
    UnstableParameter,
)
from nrfctl.factor import (
    closed_loop_maps,
    controller_tfm,
    dcf_from_obj,
    dcf_from_ss,
    dcf_to_obj,
    default_targets,
    hinf_grid_norm,
    load_dcf,
    place_gains,
    save_dcf,
    youla_shift,
)
from nrfctl.ratmat import (
    Polynomial,
    RationalFunction,
    RationalMatrix,
    StabilityDomain,
    probe_points,
)
from nrfctl.sstate import StateSpace, match_multisets, ss_to_tf

DISC = StabilityDomain.DISCRETE


def make_plant(seed, n, m, p):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1.0, 1.0, size=(n, n))
    B = rng.uniform(-1.0, 1.0, size=(n, m))
    C = rng.uniform(-1.0, 1.0, size=(p, n))
    return StateSpace(A, B, C, np.zeros((p, m)), DISC)


def spread_targets(n):
    return [complex(0.1 + 0.08 * i) for i in range(n)]


# --- placement ---


def test_place_scalar():
    plant = StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.0]], DISC)
    F, L = place_gains(plant, [0.5])
    assert np.allclose(F, [[-0.5]])
    assert np.allclose(L, [[-0.5]])


def test_place_decoupled_diagonal():
    plant = StateSpace(np.diag([1.0, 2.0]), np.eye(2), np.eye(2), np.zeros((2, 2)), DISC)
    F, _ = place_gains(plant, [0.4, 0.5])
    got = sorted(np.linalg.eigvals(plant.A + plant.B @ F).real)
    assert np.allclose(got, [0.4, 0.5], atol=1e-9)


def test_place_repeated_targets_defective():
    # repeated targets blur individual eigenvalues; the characteristic
    # polynomial still pins the placement down
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.3, -0.2, 1.1]])
    plant = StateSpace(A, [[0.0], [0.0], [1.0]], [[1.0, 0.0, 0.0]], [[0.0]], DISC)
    F, _ = place_gains(plant, [0.5, 0.5, 0.5])
    got = np.real(np.poly(np.linalg.eigvals(A + np.array([[0.0], [0.0], [1.0]]) @ F)))
    assert np.allclose(got, np.poly([0.5, 0.5, 0.5]), atol=1e-8)


def test_place_keeps_uncontrollable_stable_modes(grid5_plant):
    # three of the grid lags are driven by the same upstream node, leaving
    # two difference modes at 0.8 that no feedback can move
    F, L = place_gains(grid5_plant, default_targets(9, DISC))
    got_F = np.linalg.eigvals(grid5_plant.A + grid5_plant.B @ F)
    assert match_multisets(got_F, [0.5] * 7 + [0.8] * 2, 1e-5)
    got_L = np.linalg.eigvals(grid5_plant.A + L @ grid5_plant.C)
    assert np.max(np.abs(np.real(np.poly(got_L)) - np.poly([0.5] * 9))) < 1e-6


def test_place_input_validation():
    plant = StateSpace([[0.5]], [[1.0]], [[1.0]], [[0.0]], DISC)
    with pytest.raises(DimensionMismatch):
        place_gains(plant, [0.5, 0.5])
    with pytest.raises(PlacementFailed):
        place_gains(plant, [1.5])  # outside the unit disc
    with pytest.raises(NotStabilizable):
        place_gains(StateSpace([[2.0]], [[0.0]], [[1.0]], [[0.0]], DISC), [0.5])


def test_default_targets():
    assert default_targets(3, DISC) == [0.5, 0.5, 0.5]
    assert default_targets(2, StabilityDomain.CONTINUOUS) == [-1.0, -1.0]


# --- factorization ---


def test_dcf_from_ss_small_plant():
    plant = make_plant(11, 3, 2, 2)
    F, L = place_gains(plant, spread_targets(3))
    dcf = dcf_from_ss(plant, F, L)
    assert dcf.bezout_residual() < 1e-8
    G = ss_to_tf(plant)
    Gq = dcf.plant()
    for pt in probe_points(DISC, 8):
        assert np.max(np.abs(Gq.eval(pt) - G.eval(pt))) < 1e-7


def test_dcf_rejects_destabilizing_gains():
    plant = StateSpace([[1.2]], [[1.0]], [[1.0]], [[0.0]], DISC)
    with pytest.raises(GainsNotStabilizing):
        dcf_from_ss(plant, [[0.0]], [[-0.9]])


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    n=st.integers(1, 3),
    m=st.integers(1, 2),
    p=st.integers(1, 2),
)
def test_dcf_roundtrip_random_plants(seed, n, m, p):
    """Construction either rejects the sample or yields a valid factorization."""
    plant = make_plant(seed, n, m, p)
    try:
        F, L = place_gains(plant, spread_targets(n))
        dcf = dcf_from_ss(plant, F, L)
    except (NotStabilizable, PlacementFailed, InvariantViolation):
        return
    assert dcf.bezout_residual() < 1e-8
    G = ss_to_tf(plant)
    for pt in probe_points(DISC, 5):
        assert np.max(np.abs(dcf.plant().eval(pt) - G.eval(pt))) < 1e-6


def test_dcf_grid5_invariants(grid5_dcf):
    assert grid5_dcf.bezout_residual() < 1e-8
    for name in ("Y", "Yt", "M", "Mt"):
        gain = getattr(grid5_dcf, name).gain_at_infinity()
        assert np.allclose(gain, np.eye(gain.shape[0]), atol=1e-10)


def test_dcf_json_roundtrip(tmp_path, grid5_dcf):
    path = tmp_path / "dcf.json"
    save_dcf(grid5_dcf, str(path))
    back = load_dcf(str(path))
    assert back.bezout_residual() < 1e-8
    assert dcf_to_obj(back) == dcf_to_obj(grid5_dcf)
    obj = dcf_to_obj(grid5_dcf)
    assert dcf_to_obj(dcf_from_obj(obj)) == obj


# --- Youla shifts ---


def test_youla_shift_rejects_unstable_q(grid5_dcf):
    bad = RationalMatrix.scalar(
        RationalFunction(Polynomial([1.0]), Polynomial([-1.5, 1.0])), 5, DISC
    )
    with pytest.raises(UnstableParameter):
        youla_shift(grid5_dcf, bad)


def test_youla_shift_dimension_guard(grid5_dcf):
    with pytest.raises(DimensionMismatch):
        youla_shift(grid5_dcf, RationalMatrix.zeros(2, 2, DISC))


def test_controller_quotients_agree(grid5_dcf, grid5_shift, grid5_pair):
    K = controller_tfm(grid5_shift)
    assert grid5_pair.reproduces(K)


def test_zero_q_reduces_to_central_controller(grid5_dcf):
    q0 = RationalMatrix.zeros(5, 5, DISC)
    shift = youla_shift(grid5_dcf, q0)
    for pt in probe_points(DISC, 5):
        assert np.allclose(shift.YQ.eval(pt), grid5_dcf.Y.eval(pt))
        assert np.allclose(shift.XQ.eval(pt), grid5_dcf.X.eval(pt))


# --- closed-loop tables ---


def test_closed_loop_maps_stable_and_consistent(grid5_dcf, grid5_shift):
    maps = closed_loop_maps(grid5_dcf, grid5_shift)
    maps.assert_stable()
    # z = r - y and v-row relations hold blockwise
    eye5 = np.eye(5)
    for pt in probe_points(DISC, 5):
        assert np.allclose(
            maps.block("z", "r").eval(pt), eye5 - maps.block("y", "r").eval(pt), atol=1e-9
        )
        assert np.allclose(
            maps.block("v", "w").eval(pt), eye5 + maps.block("u", "w").eval(pt), atol=1e-9
        )
        assert np.allclose(maps.block("v", "r").eval(pt), maps.block("u", "r").eval(pt), atol=1e-9)


def test_affinity_in_q(grid5_dcf):
    """Closed-loop blocks are affine in the parameter: the midpoint table is
    the average of the endpoint tables."""
    qa = RationalMatrix.scalar(
        RationalFunction(Polynomial([0.4]), Polynomial([-0.3, 1.0])), 5, DISC
    )
    qb = RationalMatrix.scalar(
        RationalFunction(Polynomial([-0.2]), Polynomial([0.5, 1.0])), 5, DISC
    )
    qm = (qa + qb).scale(RationalFunction.const(0.5))
    ma = closed_loop_maps(grid5_dcf, youla_shift(grid5_dcf, qa))
    mb = closed_loop_maps(grid5_dcf, youla_shift(grid5_dcf, qb))
    mm = closed_loop_maps(grid5_dcf, youla_shift(grid5_dcf, qm))
    for out in ("y", "u", "z", "v"):
        for inp in ("r", "w", "nu"):
            for pt in probe_points(DISC, 4):
                avg = 0.5 * (ma.block(out, inp).eval(pt) + mb.block(out, inp).eval(pt))
                assert np.max(np.abs(mm.block(out, inp).eval(pt) - avg)) < 1e-8


def test_hinf_grid_norm_bounds_samples(grid5_dcf, grid5_shift):
    maps = closed_loop_maps(grid5_dcf, grid5_shift)
    norm = hinf_grid_norm(maps, grid=64)
    assert np.isfinite(norm) and norm >= 1.0  # the table contains identity blocks
