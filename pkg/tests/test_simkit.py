"""Noise streams, scenario plumbing, and closed-loop simulation."""

import numpy as np
import pytest

from nrfctl import dimpl, nrfsyn, simkit
from nrfctl.errors import InvariantViolation, NonDiscrete
from nrfctl.nrfsyn import NrfPair
from nrfctl.ratmat import StabilityDomain, probe_points
from nrfctl.simkit import Scenario, SignalSpec
from nrfctl.sstate import is_detectable, is_stabilizable, tfm_to_ss

DISC = StabilityDomain.DISCRETE


def quiet(n):
    return [SignalSpec.zero()] * n


def steps(n, level=1.0):
    return [SignalSpec.step(level)] * n


# --- noise streams ---


def test_noise_stream_deterministic():
    a = simkit.noise_block(seed=7, channel=3, bound=0.2, count=50)
    b = simkit.noise_block(seed=7, channel=3, bound=0.2, count=50)
    assert np.array_equal(a, b)
    c = simkit.noise_block(seed=7, channel=4, bound=0.2, count=50)
    assert not np.array_equal(a, c)


def test_noise_stream_bound_and_mean():
    x = simkit.noise_block(seed=1, channel=0, bound=0.05, count=100_000)
    assert np.max(np.abs(x)) <= 0.05
    assert abs(float(np.mean(x))) < 1e-3
    assert np.array_equal(simkit.noise_block(seed=1, channel=0, bound=0.0, count=10), np.zeros(10))
    with pytest.raises(InvariantViolation):
        simkit.noise_block(seed=1, channel=0, bound=-0.1, count=10)


def test_signal_spec_materialize():
    step = SignalSpec.step(0.5, at=3).materialize(6, seed=0, channel=0)
    assert np.array_equal(step, [0.0, 0.0, 0.0, 0.5, 0.5, 0.5])
    assert np.array_equal(SignalSpec.zero().materialize(4, 0, 0), np.zeros(4))
    u = SignalSpec.uniform(0.1).materialize(100, seed=2, channel=5)
    assert np.max(np.abs(u)) <= 0.1
    obj = SignalSpec.uniform(0.1).to_obj()
    assert SignalSpec.from_obj(obj).to_obj() == obj


# --- the grid plant ---


def test_grid5_plant_matches_rational_model(grid5_plant, grid5_tfm):
    assert grid5_plant.order == 9
    for pt in probe_points(DISC, 8):
        assert np.max(np.abs(grid5_plant.eval(pt) - grid5_tfm.eval(pt))) < 1e-9
    assert is_stabilizable(grid5_plant)
    assert is_detectable(grid5_plant)


def test_grid5_incidence_edges():
    inc = simkit.grid5_incidence()
    want = {(2, 1), (3, 1), (3, 2), (4, 1), (5, 1)}
    got = {(i + 1, j + 1) for i in range(5) for j in range(5) if inc[i][j]}
    assert got == want


# --- simulation ---


def test_simulate_loop_identities(grid5_plant, grid5_ctrl):
    sc = simkit.grid5_scenario(grid5_plant, grid5_ctrl, seed=42, horizon=100)
    t = simkit.simulate(sc)
    r, w, nu, du = sc.signals()
    assert np.array_equal(t.z, r - t.y)
    assert np.array_equal(t.v, t.u + w)
    assert t.horizon == 100
    met = simkit.trace_metrics(t, settle_from=60)
    assert not met.diverged
    assert np.max(met.max_abs_y) <= 3.0
    assert np.max(met.tracking_error) <= 0.15


def test_simulate_deterministic_and_csv_roundtrip(tmp_path, grid5_plant, grid5_ctrl):
    sc = simkit.grid5_scenario(grid5_plant, grid5_ctrl, seed=42, horizon=60)
    t1 = simkit.simulate(sc)
    t2 = simkit.simulate(sc)
    assert np.array_equal(t1.y, t2.y) and np.array_equal(t1.u, t2.u)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    simkit.save_trace(str(p1), t1)
    simkit.save_trace(str(p2), t2)
    assert p1.read_bytes() == p2.read_bytes()
    back = simkit.load_trace(str(p1))
    for name in ("r", "w", "nu", "du", "z", "u", "v", "y"):
        assert np.array_equal(getattr(back, name), getattr(t1, name))
    # the CSV is a signal boundary; states are not serialized
    assert back.x_plant.shape == (60, 0)


def test_superposition_without_noise(grid5_plant, grid5_ctrl):
    """Reference responses add: the loop is linear and starts at rest."""

    def run(level):
        sc = Scenario(
            40, steps(5, level), quiet(5), quiet(5), quiet(5), 0, grid5_plant, grid5_ctrl
        )
        return simkit.simulate(sc)

    ya, yb, yab = run(0.7).y, run(0.3).y, run(1.0).y
    assert np.allclose(ya + yb, yab, atol=1e-9)


def test_step_reference_settles_to_one(grid5_plant, grid5_ctrl):
    sc = Scenario(
        220, steps(5), quiet(5), quiet(5), quiet(5), 0, grid5_plant, grid5_ctrl
    )
    t = simkit.simulate(sc)
    assert np.max(np.abs(t.y[-1] - 1.0)) < 1e-6


def test_simulate_requires_discrete():
    cont = tfm_to_ss(
        simkit.grid5_tfm()
    )  # discrete; build a continuous impostor via transform
    import dataclasses

    from nrfctl.sstate import StateSpace

    bad_plant = StateSpace(cont.A, cont.B, cont.C, cont.D, StabilityDomain.CONTINUOUS)
    sc_kwargs = dict(
        horizon=5,
        reference=quiet(5),
        input_disturbance=quiet(5),
        measurement_noise=quiet(5),
        command_disturbance=quiet(5),
        seed=0,
    )
    with pytest.raises(NonDiscrete):
        simkit.simulate(
            Scenario(plant=bad_plant, controller=_zero_ctrl(5, 5), **sc_kwargs)
        )


def _zero_ctrl(m, p):
    from nrfctl.ratmat import RationalMatrix

    pair = NrfPair(RationalMatrix.zeros(m, m, DISC), RationalMatrix.zeros(m, p, DISC))
    return dimpl.assemble(dimpl.realize_rows(pair))


def test_horizon_zero_trace(grid5_plant, grid5_ctrl):
    sc = Scenario(0, quiet(5), quiet(5), quiet(5), quiet(5), 0, grid5_plant, grid5_ctrl)
    t = simkit.simulate(sc)
    assert t.horizon == 0
    assert t.y.shape == (0, 5)


def test_beta_iteration_diverges_while_output_matches(grid5_plant, grid5_dcf, grid5_shift, grid5_pair, grid5_ctrl):
    """The beta recursion reproduces the external behaviour but its internal
    signal drifts: the representation is not internally stable around an
    unstable plant, which is exactly what the mr3 witness predicts."""
    beta_phi, beta_gamma, u_beta, u_z = nrfsyn.sls_like_rep(grid5_dcf, grid5_shift)
    beta_pair = NrfPair(beta_phi, beta_gamma)
    beta_ctrl = dimpl.assemble(dimpl.realize_rows(beta_pair))
    u_sys = tfm_to_ss(u_beta.hstack(u_z))
    # the unstable map is the one from the input disturbance, so a step on w
    # is the exciting input; the command channel stays quiet because it is
    # injected at a different point in the two representations
    refs = steps(5)
    wsig = [SignalSpec.step(0.5, at=20)] + [SignalSpec.zero()] * 4
    noise = [SignalSpec.uniform(0.05)] * 5
    sc = Scenario(100, refs, wsig, noise, quiet(5), 42, grid5_plant, beta_ctrl)
    t_beta = simkit.simulate_beta_loop(sc, u_sys)
    met = simkit.trace_metrics(t_beta, settle_from=60)
    assert met.diverged  # the internal beta channel grows without bound
    assert np.max(np.abs(t_beta.beta)) > 10.0

    sc_nrf = Scenario(100, refs, wsig, noise, quiet(5), 42, grid5_plant, grid5_ctrl)
    t_nrf = simkit.simulate(sc_nrf)
    assert not simkit.trace_metrics(t_nrf, settle_from=60).diverged
    # external agreement despite the internal drift
    assert np.max(np.abs(t_beta.y - t_nrf.y)) < 1e-9


def test_scenario_json_roundtrip(tmp_path, grid5_plant, grid5_ctrl):
    sc = simkit.grid5_scenario(grid5_plant, grid5_ctrl, seed=9, horizon=30)
    path = tmp_path / "scenario.json"
    simkit.save_scenario(str(path), sc)
    back = simkit.load_scenario(str(path))
    t1, t2 = simkit.simulate(sc), simkit.simulate(back)
    assert np.array_equal(t1.y, t2.y)
    assert np.array_equal(t1.x_ctrl, t2.x_ctrl)
    with pytest.raises(InvariantViolation):
        simkit.scenario_from_obj({"horizon": 3})
