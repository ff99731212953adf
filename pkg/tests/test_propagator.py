import numpy as np
import pytest

from jchsim.constants import khz, mhz
from jchsim.fock_basis import enumerate_sector
from jchsim.hamiltonian import JchParameters, build_hamiltonian
from jchsim.ion_chain import (
    ChainGeometry,
    TrapParameters,
    anchor_transverse_frequency,
    interaction_picture_shift,
    mode_parameters,
)
from jchsim.propagator import (
    EvolutionRequest,
    average_sigma_z,
    evolve,
    prepare_initial_state,
    propagate_krylov,
)


def single_site(g, delta, omega):
    basis = enumerate_sector(1, 1)
    params = JchParameters([delta], [omega], [g], [[0.0]])
    return basis, build_hamiltonian(params, basis)


def fig2a_model():
    """Two-ion chain at the shipped fig2a parameters."""
    geo = ChainGeometry.from_spacings([5.280e-6])
    wx = anchor_transverse_frequency(geo, mhz(2.718))
    modes = interaction_picture_shift(
        mode_parameters(TrapParameters(wx, khz(100)), geo), wx
    )
    params = JchParameters(
        detunings=np.full(2, khz(-60.0)),
        local_frequencies=modes.corrected_local,
        couplings=np.full(2, khz(11.6)),
        hoppings=modes.corrected_hopping,
    )
    basis = enumerate_sector(2, 2)
    return basis, build_hamiltonian(params, basis)


class TestPrepareInitialState:
    def test_single_ion(self):
        basis = enumerate_sector(1, 1)
        v = prepare_initial_state(basis, [1])
        state = basis.state_at(int(np.argmax(np.abs(v))))
        assert state.spins == 1 and state.phonons == (0,)

    def test_two_edge_ions_of_twenty(self):
        basis = enumerate_sector(20, 2)
        v = prepare_initial_state(basis, [1, 2])
        assert np.linalg.norm(v) == pytest.approx(1.0)
        state = basis.state_at(int(np.argmax(np.abs(v))))
        assert state.spins == 0b11
        assert all(n == 0 for n in state.phonons)

    def test_duplicate_index_rejected(self):
        basis = enumerate_sector(2, 2)
        with pytest.raises(ValueError):
            prepare_initial_state(basis, [1, 1])

    def test_count_mismatch_rejected(self):
        basis = enumerate_sector(3, 2)
        with pytest.raises(ValueError):
            prepare_initial_state(basis, [1])


class TestAnalyticRabi:
    @pytest.mark.parametrize(
        "g_khz,delta_khz",
        [(10.0, 0.0), (10.0, 15.0), (4.0, -22.0)],
    )
    def test_detuned_rabi_formula(self, g_khz, delta_khz):
        g = khz(g_khz)
        omega = khz(-3.0)
        delta = omega + khz(delta_khz)  # spin-phonon detuning = delta - omega
        basis, h = single_site(g, delta, omega)
        req = EvolutionRequest(total_time=1e-3, samples=301, excited_ions=[1])
        series = evolve(h, req, basis)
        d = khz(delta_khz)
        rabi_sq = g**2 + d**2 / 4.0
        expected = 1.0 - (2.0 * g**2 / rabi_sq) * np.sin(
            np.sqrt(rabi_sq) * series.times
        ) ** 2
        assert np.max(np.abs(series.sigma_z[:, 0] - expected)) < 1e-10

    def test_resonant_is_cosine(self):
        g = khz(7.0)
        basis, h = single_site(g, khz(2.0), khz(2.0))
        req = EvolutionRequest(total_time=5e-4, samples=101, excited_ions=[1])
        series = evolve(h, req, basis)
        assert series.sigma_z[:, 0] == pytest.approx(
            np.cos(2 * g * series.times), abs=1e-10
        )


class TestEvolve:
    def test_zero_coupling_spins_frozen(self):
        basis = enumerate_sector(3, 3)
        params = JchParameters(
            detunings=[khz(5)] * 3,
            local_frequencies=[khz(-10), khz(-20), khz(-30)],
            couplings=[0.0, 0.0, 0.0],
            hoppings=khz(1.0) * (np.ones((3, 3)) - np.eye(3)),
        )
        h = build_hamiltonian(params, basis)
        req = EvolutionRequest(total_time=1e-3, samples=41, excited_ions=[1, 2, 3])
        series = evolve(h, req, basis)
        assert np.allclose(series.sigma_z, 1.0, atol=1e-12)

    def test_krylov_matches_dense_oracle_fig2a(self):
        basis, h = fig2a_model()
        kw = dict(total_time=5e-4, samples=101, excited_ions=[1, 2],
                  store_states=True)
        krylov = evolve(h, EvolutionRequest(method="krylov", **kw), basis)
        dense = evolve(h, EvolutionRequest(method="dense-oracle", **kw), basis)
        assert np.max(np.abs(krylov.states - dense.states)) < 1e-8

    def test_dense_oracle_cap(self):
        basis = enumerate_sector(8, 8)
        params = JchParameters(
            detunings=np.zeros(8),
            local_frequencies=np.zeros(8),
            couplings=np.full(8, khz(1)),
            hoppings=np.zeros((8, 8)),
        )
        h = build_hamiltonian(params, basis)
        req = EvolutionRequest(
            total_time=1e-4, samples=2, excited_ions=list(range(1, 9)),
            method="dense-oracle",
        )
        with pytest.raises(ValueError):
            evolve(h, req, basis)

    def test_conservation_suite(self):
        # four ions, every spin initially excited, band-edge detuning
        geo = ChainGeometry.from_spacings([6.602e-6, 6.104e-6, 6.602e-6])
        wx = anchor_transverse_frequency(geo, mhz(2.744))
        modes = interaction_picture_shift(
            mode_parameters(TrapParameters(wx, khz(100)), geo), wx
        )
        params = JchParameters(
            detunings=np.full(4, khz(-15.0)),
            local_frequencies=modes.corrected_local,
            couplings=np.full(4, khz(12.9)),
            hoppings=modes.corrected_hopping,
        )
        basis = enumerate_sector(4, 4)
        h = build_hamiltonian(params, basis)
        req = EvolutionRequest(
            total_time=1e-3, samples=51, excited_ions=[1, 2, 3, 4],
            store_states=True,
        )
        series = evolve(h, req, basis)
        assert series.norm_drift.max() < 1e-9
        assert series.excitation_drift.max() < 1e-9
        energies = [
            np.real(np.vdot(v, h.apply(v))) for v in series.states
        ]
        e0 = energies[0]
        assert np.max(np.abs(np.array(energies) - e0)) < 1e-8 * abs(e0)

    def test_time_reversal(self):
        basis, h = fig2a_model()
        v0 = prepare_initial_state(basis, [1, 2])
        forward = propagate_krylov(h, v0, 1e-3, 1e-9, 40)
        # exp(+iHt) w = conj(exp(-iHt) conj(w))
        back = np.conj(propagate_krylov(h, np.conj(forward), 1e-3, 1e-9, 40))
        assert np.max(np.abs(back - v0)) < 1e-7

    def test_step_halving_convergence(self):
        basis, h = fig2a_model()
        kw = dict(excited_ions=[1, 2], krylov_tol=1e-9)
        coarse = evolve(
            h, EvolutionRequest(total_time=4e-4, samples=21, **kw), basis
        )
        fine = evolve(
            h, EvolutionRequest(total_time=4e-4, samples=41, **kw), basis
        )
        assert np.max(np.abs(fine.sigma_z[::2] - coarse.sigma_z)) < 1e-9

    def test_norm_drift_two_ms(self):
        geo = ChainGeometry.from_spacings([6.602e-6, 6.104e-6, 6.602e-6])
        wx = anchor_transverse_frequency(geo, mhz(2.744))
        modes = interaction_picture_shift(
            mode_parameters(TrapParameters(wx, khz(100)), geo), wx
        )
        params = JchParameters(
            detunings=np.full(4, khz(-15.0)),
            local_frequencies=modes.corrected_local,
            couplings=np.full(4, khz(12.9)),
            hoppings=modes.corrected_hopping,
        )
        basis = enumerate_sector(4, 4)
        h = build_hamiltonian(params, basis)
        req = EvolutionRequest(total_time=2e-3, samples=41,
                               excited_ions=[1, 2, 3, 4])
        series = evolve(h, req, basis)
        assert series.norm_drift.max() < 1e-9

    def test_sigma_z_bounds(self):
        basis, h = fig2a_model()
        req = EvolutionRequest(total_time=1e-3, samples=101, excited_ions=[1, 2])
        series = evolve(h, req, basis)
        assert np.all(np.abs(series.sigma_z) <= 1.0 + 1e-8)


class TestAverageSigmaZ:
    def test_all_up_first_sample(self):
        basis, h = fig2a_model()
        req = EvolutionRequest(total_time=1e-4, samples=11, excited_ions=[1, 2])
        series = evolve(h, req, basis)
        assert average_sigma_z(series)[0] == pytest.approx(1.0)

    def test_symmetric_chain_average_equals_either_ion(self):
        basis, h = fig2a_model()
        req = EvolutionRequest(total_time=5e-4, samples=51, excited_ions=[1, 2])
        series = evolve(h, req, basis)
        avg = average_sigma_z(series)
        assert avg == pytest.approx(series.sigma_z[:, 0], abs=1e-10)

    def test_matches_naive_resummation(self):
        rng = np.random.default_rng(5)
        from jchsim.propagator import TimeSeries

        sz = rng.uniform(-1, 1, size=(7, 4))
        series = TimeSeries(
            times=np.linspace(0, 1e-4, 7),
            sigma_z=sz,
            norm_drift=np.zeros(7),
            excitation_drift=np.zeros(7),
        )
        naive = np.array([sum(row) / len(row) for row in sz])
        assert np.max(np.abs(average_sigma_z(series) - naive)) < 1e-14


def test_timeseries_csv_format(tmp_path):
    basis, h = fig2a_model()
    req = EvolutionRequest(total_time=1e-4, samples=5, excited_ions=[1, 2])
    series = evolve(h, req, basis)
    path = tmp_path / "ts.csv"
    series.to_csv(str(path))
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "time_us,sz_ion1,sz_ion2,norm_drift,excitation_drift"
    assert len(rows) == 6
    first = rows[1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == 1.0


def test_invalid_requests():
    with pytest.raises(ValueError):
        EvolutionRequest(total_time=0.0, samples=10, excited_ions=[1])
    with pytest.raises(ValueError):
        EvolutionRequest(total_time=1e-3, samples=1, excited_ions=[1])
    with pytest.raises(ValueError):
        EvolutionRequest(total_time=1e-3, samples=10, excited_ions=[1],
                         krylov_tol=1e-2)
    with pytest.raises(ValueError):
        EvolutionRequest(total_time=1e-3, samples=10)
