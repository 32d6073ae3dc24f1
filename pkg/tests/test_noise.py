import numpy as np
import pytest

from rydberg_singlet.control import ControlConfig, controlled_generator
from rydberg_singlet.dynamics import TWO_PI, DensityMatrix, LindbladGenerator, integrate, superop_lindblad
from rydberg_singlet.model import FULL, TRANSIT, SystemParams, build_collapse_ops, build_model_hamiltonian, named_state
from rydberg_singlet.noise import (
    ControlReplay,
    NoiseChannel,
    ReplayGenerator,
    averaged_dissipator,
    build_noise_hamiltonians,
    channels_for_model,
    dissipator_superop,
    stochastic_ensemble,
    stochastic_trajectory,
)

from helpers import random_density

P = SystemParams()


def test_noise_operators():
    chans = build_noise_hamiltonians(P, (0.1, 0.2, 0.3, 0.4))
    assert [c.index for c in chans] == [1, 2, 3, 4]
    assert [c.eta for c in chans] == [0.1, 0.2, 0.3, 0.4]
    rr = FULL.index("rr")
    assert chans[3].h_s[rr, rr] == pytest.approx(100.0)
    assert np.count_nonzero(chans[3].h_s) == 1
    g00 = FULL.index("00")
    assert chans[1].h_s[g00, g00] == pytest.approx(2 * P.delta_m)
    # symmetric microwave noise leaves the singlet alone
    assert np.abs(chans[0].h_s @ named_state("D", FULL)).max() <= 1e-18
    assert np.abs(chans[2].h_s @ named_state("D", FULL)).max() > 0.1


def test_channel_validation():
    with pytest.raises(ValueError):
        NoiseChannel(5, 0.1, np.eye(9))
    with pytest.raises(ValueError):
        NoiseChannel(1, -0.1, np.eye(9))
    with pytest.raises(ValueError):
        NoiseChannel(1, 0.1, np.triu(np.ones((9, 9))))


def test_projection_drops_laser_noise_in_effective_model():
    chans = channels_for_model(build_noise_hamiltonians(P), "effective")
    assert not chans[2].h_s.any()
    assert chans[3].h_s[TRANSIT.index("rr"), TRANSIT.index("rr")] == pytest.approx(100.0)


def test_averaged_dissipator_properties():
    rng = np.random.default_rng(5)
    chans = build_noise_hamiltonians(P, (0.05, 0.05, 0.05, 0.05))
    sup = dissipator_superop(chans, 9)
    for _ in range(10):
        rho = random_density(rng, 9)
        out = averaged_dissipator(rho, chans)
        assert abs(np.trace(out)) <= 1e-13
        assert np.abs(out - out.conj().T).max() <= 1e-13
        assert np.allclose((sup @ rho.reshape(-1)).reshape(9, 9), out, atol=1e-13)
    assert not averaged_dissipator(rng.normal(size=(9, 9)), build_noise_hamiltonians(P)).any()


def test_dephasing_rate():
    # a coherence between eigenstates of H_s with gap delta decays at eta^2 delta^2 / 2
    eta = 0.01
    ch = build_noise_hamiltonians(P, (0, 0, 0, eta))[3]
    rho = np.zeros((9, 9), dtype=complex)
    i, j = FULL.index("rr"), FULL.index("00")
    rho[i, j] = rho[j, i] = 0.5
    out = averaged_dissipator(rho, [ch])
    assert out[i, j] == pytest.approx(-0.5 * eta**2 * 100.0**2 * 0.5, rel=1e-14)


def test_seed_contract_and_determinism():
    ch = build_noise_hamiltonians(P, (0, 0.5, 0, 0))[1]
    ket = (named_state("00", TRANSIT) + named_state("D", TRANSIT)) / np.sqrt(2)
    a = stochastic_ensemble(ket, ch, P, 6, 100, 0.5, 3 * TWO_PI)
    b = stochastic_ensemble(ket, ch, P, 6, 100, 0.5, 3 * TWO_PI)
    assert np.array_equal(a.fidelity, b.fidelity)
    assert list(a.seeds) == list(range(100, 106))
    # trajectory i is reproduced by a single run with seed base_seed + i
    single = stochastic_ensemble(ket, ch, P, 1, 103, 0.5, 3 * TWO_PI)
    assert np.array_equal(single.fidelity[0], a.fidelity[3])
    # and does not depend on the block size
    c = stochastic_ensemble(ket, ch, P, 6, 100, 0.5, 3 * TWO_PI, block=4)
    assert np.array_equal(a.fidelity, c.fidelity)
    assert a.fidelity.std(axis=0)[-1] > 0


def test_zero_noise_reproduces_deterministic_dynamics():
    p = P.with_(gamma=0.0)
    ch = build_noise_hamiltonians(p, (0, 0, 0, 0))[3]
    ket = named_state("11", TRANSIT) * 0.6 + named_state("00", TRANSIT) * 0.8
    res = stochastic_ensemble(ket, ch, p, 3, 0, 0.1, 20 * TWO_PI)
    det = integrate(DensityMatrix.from_ket(ket, TRANSIT), LindbladGenerator(build_model_hamiltonian(p, "effective")), 20 * TWO_PI, 0.1)
    assert np.abs(res.fidelity - det["F"]).max() <= 1e-12


def test_ensemble_mean_matches_averaged_equation():
    p = SystemParams(omega_m=0.2, gamma=0.05)
    ch = build_noise_hamiltonians(p, (0, 0, 0, 0.01))[3]
    rho = DensityMatrix.pure("11", TRANSIT)
    t_end = 10 * TWO_PI
    res = stochastic_ensemble(rho, ch, p, 150, 11, 0.1, t_end, decay=True)
    h, ops = build_model_hamiltonian(p, "effective"), build_collapse_ops(p, "effective")
    noisy = integrate(rho, LindbladGenerator(superop=superop_lindblad(h, ops) + dissipator_superop(channels_for_model([ch], "effective"), 9)), t_end, 0.1)
    quiet = integrate(rho, LindbladGenerator(h, ops), t_end, 0.1)
    se = res.standard_error()
    assert np.all(np.abs(res.mean() - noisy["F"])[1:] <= 4 * se[1:])
    # the noise effect itself is resolved far beyond the sampling error
    assert np.abs(noisy["F"] - quiet["F"]).max() > 50 * se.max()


def test_ket_and_density_inputs_agree():
    p = P.with_(gamma=0.0, omega_m=0.2)
    ch = build_noise_hamiltonians(p, (0.3, 0, 0, 0))[0]
    ket = named_state("10", TRANSIT)
    a = stochastic_ensemble(ket, ch, p, 4, 9, 0.2, 2 * TWO_PI)
    b = stochastic_ensemble(DensityMatrix.from_ket(ket, TRANSIT), ch, p, 4, 9, 0.2, 2 * TWO_PI)
    assert np.abs(a.fidelity - b.fidelity).max() <= 1e-12
    with pytest.raises(ValueError):
        stochastic_ensemble(ket, ch, p, 4, 9, 0.2, 1.0, decay=True)
    with pytest.raises(ValueError):
        stochastic_ensemble(ket, ch, p, 0, 9, 0.2, 1.0)


def _replay_run(t_end=10 * TWO_PI):
    cfg = ControlConfig(0.08, 0.0, "only_H1")
    src = integrate(DensityMatrix.pure("10", TRANSIT), controlled_generator(P, cfg), t_end, 0.1, record_every=TWO_PI / 8)
    return cfg, src, ControlReplay.from_trajectory(src)


def test_replay_bounds():
    cfg, src, replay = _replay_run()
    assert replay(0.0) == (src["f1"][0], 0.0)
    assert replay.t_max == pytest.approx(10 * TWO_PI)
    with pytest.raises(ValueError):
        replay(replay.t_max + 1.0)
    gen = ReplayGenerator(P, cfg, replay, model="effective")
    with pytest.raises(ValueError):
        integrate(DensityMatrix.pure("10", TRANSIT), gen, 11 * TWO_PI, 0.1)
    ch = build_noise_hamiltonians(P)[3]
    with pytest.raises(ValueError):
        stochastic_ensemble(named_state("10", TRANSIT), ch, P, 2, 0, 0.1, 11 * TWO_PI, cfg=cfg, replay=replay)


def test_replay_reproduces_closed_loop():
    cfg, src, replay = _replay_run()
    gen = ReplayGenerator(P, cfg, replay, model="effective")
    rho0 = DensityMatrix.pure("10", TRANSIT)
    out = integrate(rho0, gen, 10 * TWO_PI, 0.1, record_every=TWO_PI / 8)
    # linear interpolation of the recorded fields
    assert np.abs(out["F"] - src["F"]).max() <= 1e-6
    split = integrate(rho0, gen, 10 * TWO_PI, TWO_PI / 32, record_every=TWO_PI / 8, method="split", inner_dt=0.05)
    assert np.abs(split["F"] - out["F"]).max() <= 1e-6


def test_split_method_matches_rk4_in_full_model():
    cfg, _, replay = _replay_run(2 * TWO_PI)
    gen = ReplayGenerator(P, cfg, replay, build_noise_hamiltonians(P, (0, 0.05, 0, 0)), model="full")
    rho0 = DensityMatrix.pure("10", FULL)
    ref = integrate(rho0, gen, 2 * TWO_PI, 1e-3)
    split = integrate(rho0, gen, 2 * TWO_PI, TWO_PI / 32, method="split")
    assert np.abs(split["F"] - ref["F"]).max() <= 1e-8


def test_single_trajectory_records():
    ch = build_noise_hamiltonians(P, (0, 0.5, 0, 0))[1]
    ket = named_state("10", TRANSIT)
    tr = stochastic_trajectory(ket, ch, P, 42, 0.5, 3 * TWO_PI)
    ens = stochastic_ensemble(ket, ch, P, 1, 42, 0.5, 3 * TWO_PI)
    assert np.allclose(tr["F"], ens.fidelity[0], rtol=0, atol=1e-15)
    assert np.abs(tr["purity"] - 1).max() <= 1e-12
    assert np.abs(tr["trace"] - 1).max() <= 1e-12
