import math

import numpy as np
import pytest

from oracles import random_small_circuit
from stellarsim.errors import CutoffTooSmallError, DimensionMismatchError, ParseError
from stellarsim.fock import (
    TruncatedState,
    fock_state,
    husimi_q,
    core_from_truncated,
    inner_product,
    vacuum_state,
)
from stellarsim.gaussian import (
    BeamSplitter,
    BogoliubovMap,
    Displacement,
    GaussianCircuit,
    Phase,
    ProjectorSpec,
    Squeeze,
    TwoModeSqueeze,
    apply,
    apply_gate,
    apply_passive_unitary,
    build_projector_state,
    circuit_from_json_dict,
    circuit_to_json_dict,
    gate_matrix,
    haar_unitary,
)


class TestGateMatrices:
    def test_zero_displacement_is_identity(self):
        u = gate_matrix(Displacement(0.0, 0), 6)
        np.testing.assert_allclose(u, np.eye(7), atol=1e-14)

    def test_beamsplitter_one_photon_convention(self):
        # fixed Heisenberg convention pinned on the one-photon subspace:
        # the block must equal [[cos, e^{i phi} sin], [-e^{-i phi} sin, cos]]
        theta, phi = 0.6, 0.9
        u = gate_matrix(BeamSplitter(theta, phi, (0, 1)), 3)
        d = 4
        block = np.array(
            [
                [u[1 * d + 0, 1 * d + 0], u[1 * d + 0, 0 * d + 1]],
                [u[0 * d + 1, 1 * d + 0], u[0 * d + 1, 0 * d + 1]],
            ]
        )
        want = np.array(
            [
                [math.cos(theta), np.exp(1j * phi) * math.sin(theta)],
                [-np.exp(-1j * phi) * math.sin(theta), math.cos(theta)],
            ]
        )
        np.testing.assert_allclose(block, want, atol=1e-12)

    def test_fifty_fifty_splits_single_photon(self):
        out = apply_gate(fock_state([1, 0], 5), BeamSplitter(math.pi / 4, 0.0, (0, 1)))
        assert abs(out.amplitudes[1, 0]) == pytest.approx(1 / math.sqrt(2))
        assert abs(out.amplitudes[0, 1]) == pytest.approx(1 / math.sqrt(2))

    def test_two_mode_squeezer_closed_form(self):
        r = 0.3
        out = apply_gate(vacuum_state(2, 12), TwoModeSqueeze(r, (0, 1)))
        for n in range(10):
            want = math.tanh(r) ** n / math.cosh(r)
            assert out.amplitudes[n, n] == pytest.approx(want, abs=1e-9)

    def test_beamsplitter_preserves_photon_number_exactly(self):
        u = gate_matrix(BeamSplitter(0.7, 0.3, (0, 1)), 5)
        d = 6
        totals = np.add.outer(np.arange(d), np.arange(d)).ravel()
        mixing = np.abs(u)[totals[:, None] != totals[None, :]]
        assert np.max(mixing) < 1e-12

    @pytest.mark.parametrize(
        "gate,cutoff,block",
        [
            (Displacement(0.8, 0), 14, 4),
            (Squeeze(0.3, 0), 24, 5),
            (Phase(1.1, 0), 8, 9),
        ],
    )
    def test_crop_unitary_on_low_block(self, gate, cutoff, block):
        u = gate_matrix(gate, cutoff)
        g = u.conj().T @ u
        np.testing.assert_allclose(g[:block, :block], np.eye(block), atol=1e-8)

    @pytest.mark.parametrize(
        "gate,cutoff,block",
        [
            (TwoModeSqueeze(0.3, (0, 1)), 18, 5),
            (BeamSplitter(0.7, 0.3, (0, 1)), 8, 5),
        ],
    )
    def test_crop_unitary_two_mode(self, gate, cutoff, block):
        u = gate_matrix(gate, cutoff)
        g = u.conj().T @ u
        d = cutoff + 1
        idx = [i * d + j for i in range(block) for j in range(block)]
        np.testing.assert_allclose(g[np.ix_(idx, idx)], np.eye(len(idx)), atol=1e-8)


class TestApply:
    def test_empty_circuit_is_identity(self):
        s = fock_state([1, 0], 4)
        out = apply(GaussianCircuit(2, ()), s)
        np.testing.assert_allclose(out.amplitudes, s.amplitudes)

    def test_displacement_roundtrip_on_vacuum(self):
        beta = 0.7 + 0.2j
        circuit = GaussianCircuit(1, (Displacement(beta, 0), Displacement(-beta, 0)))
        vac = vacuum_state(1, 14)
        out = apply(circuit, vac)
        # global phase exp(i Im(beta (-beta)*)) allowed: compare fidelity
        assert abs(inner_product(vac, out)) == pytest.approx(1.0, abs=1e-9)

    def test_random_circuit_preserves_norm(self):
        rng = np.random.default_rng(21)
        circuit = random_small_circuit(rng, 2, 3)
        out = apply(circuit, fock_state([1, 0], 12))
        assert out.norm() == pytest.approx(1.0, abs=1e-8)

    def test_mode_count_checked(self):
        with pytest.raises(DimensionMismatchError):
            apply(GaussianCircuit(2, ()), vacuum_state(1, 3))


class TestProjectorStates:
    def test_rank0_vacuum(self):
        state, norm_sq = build_projector_state(ProjectorSpec(), 8)
        assert norm_sq == pytest.approx(1.0, abs=1e-12)
        assert abs(state.amplitudes[0]) == pytest.approx(1.0)

    def test_single_addition_gives_one_photon(self):
        state, norm_sq = build_projector_state(ProjectorSpec(additions=(0.0,)), 8)
        assert norm_sq == pytest.approx(1.0, abs=1e-12)
        assert abs(state.amplitudes[1]) == pytest.approx(1.0)

    def test_displaced_addition_norm_factor(self):
        # D(b) a^dag D(-b) = a^dag - conj(b): on vacuum the squared norm is 1 + |b|^2
        beta = 1.0
        state, norm_sq = build_projector_state(ProjectorSpec(additions=(beta,)), 12)
        assert norm_sq == pytest.approx(1.0 + abs(beta) ** 2, abs=1e-9)
        want = np.zeros(13, dtype=complex)
        want[0], want[1] = -np.conj(beta), 1.0
        want /= np.linalg.norm(want)
        phase = state.amplitudes[1] / want[1]
        np.testing.assert_allclose(state.amplitudes[:2], phase * want[:2], atol=1e-9)

    def test_matches_ladder_identity_chain(self):
        # gate-built chain equals the exact (a^dag - conj(beta)) ladder algebra
        spec = ProjectorSpec(squeeze=0.15, coherent=0.3, additions=(0.4 - 0.2j, -0.3))
        state, norm_sq = build_projector_state(spec, 18)
        dim = 40
        a = np.diag(np.sqrt(np.arange(1.0, dim)), 1)
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        import scipy.linalg

        vec = scipy.linalg.expm(spec.coherent * a.conj().T - np.conj(spec.coherent) * a) @ vec
        vec = scipy.linalg.expm(
            0.5 * (np.conj(spec.squeeze) * a @ a - spec.squeeze * a.conj().T @ a.conj().T)
        ) @ vec
        for beta in spec.additions:
            vec = (a.conj().T - np.conj(beta) * np.eye(dim)) @ vec
        assert np.linalg.norm(vec) ** 2 == pytest.approx(norm_sq, rel=1e-9)
        vec /= np.linalg.norm(vec)
        np.testing.assert_allclose(state.amplitudes, vec[:19], atol=1e-8)

    def test_cutoff_guard(self):
        with pytest.raises(CutoffTooSmallError):
            build_projector_state(ProjectorSpec(squeeze=0.3, additions=(1.0, 1.0)), 6)

    def test_rank0_q_function_log_concave(self):
        state, _ = build_projector_state(ProjectorSpec(squeeze=0.2, coherent=0.4), 14)
        core = core_from_truncated(state, tol=1e-12)
        xs = np.linspace(-1.5, 1.5, 21)
        for vals in (
            [husimi_q(core, [complex(x, 0.2)]) for x in xs],
            [husimi_q(core, [complex(-0.1, y)]) for y in xs],
        ):
            logs = np.log(vals)
            second = logs[:-2] - 2 * logs[1:-1] + logs[2:]
            assert np.max(second) <= 1e-9


class TestPassiveUnitary:
    def test_matches_beamsplitter_gate(self):
        rng = np.random.default_rng(3)
        amps = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
        totals = np.add.outer(np.arange(7), np.arange(7))
        amps[totals > 6] = 0.0
        amps /= np.linalg.norm(amps)
        state = TruncatedState(2, 6, amps)
        theta, phi = 0.6, 0.9
        via_gate = apply_gate(state, BeamSplitter(theta, phi, (0, 1)))
        t = np.array(
            [
                [math.cos(theta), np.exp(1j * phi) * math.sin(theta)],
                [-np.exp(-1j * phi) * math.sin(theta), math.cos(theta)],
            ]
        )
        via_sector = apply_passive_unitary(state, t)
        np.testing.assert_allclose(via_sector.amplitudes, via_gate.amplitudes, atol=1e-12)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            apply_passive_unitary(vacuum_state(2, 3), np.ones((2, 2)))

    def test_haar_unitary_is_unitary_and_seeded(self):
        u1 = haar_unitary(4, np.random.default_rng(5))
        u2 = haar_unitary(4, np.random.default_rng(5))
        np.testing.assert_allclose(u1, u2)
        np.testing.assert_allclose(u1.conj().T @ u1, np.eye(4), atol=1e-12)


class TestBogoliubov:
    def test_symplectic_identities(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            circuit = random_small_circuit(rng, 3, 4)
            bmap = BogoliubovMap.of_circuit(circuit)
            m = 3
            e, f = bmap.s[:m, :m], bmap.s[:m, m:]
            np.testing.assert_allclose(
                e @ e.conj().T - f @ f.conj().T, np.eye(m), atol=1e-12
            )
            np.testing.assert_allclose(e @ f.T, (e @ f.T).T, atol=1e-12)

    def test_heisenberg_means_match_truncated_evolution(self):
        # <a_i> of circuit|alpha> from the transform equals the oracle value
        rng = np.random.default_rng(23)
        circuit = random_small_circuit(rng, 2, 4)
        alphas = np.array([0.3 - 0.1j, 0.2j])
        from stellarsim.fock import truncated_coherent

        state = apply(circuit, truncated_coherent(alphas, 16))
        d = 17
        a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
        got = []
        for mode in range(2):
            from stellarsim.gaussian import apply_single_mode_operator

            lowered = apply_single_mode_operator(state, a, mode)
            got.append(complex(np.vdot(state.amplitudes, lowered.amplitudes)))
        # <psi|a|psi> with psi = U|alpha> is the forward map of U at (alpha, conj alpha)
        bmap = BogoliubovMap.of_circuit(circuit)
        tvec = np.concatenate([alphas, np.conj(alphas)])
        want = (bmap.s @ tvec + bmap.tau)[:2]
        np.testing.assert_allclose(got, want, atol=1e-8)

    def test_inverse_composes_to_identity(self):
        rng = np.random.default_rng(29)
        circuit = random_small_circuit(rng, 2, 5)
        bmap = BogoliubovMap.of_circuit(circuit)
        both = bmap.then(bmap.inverse())
        np.testing.assert_allclose(both.s, np.eye(4), atol=1e-12)
        np.testing.assert_allclose(both.tau, np.zeros(4), atol=1e-12)


class TestCircuitJson:
    def test_roundtrip(self):
        circuit = GaussianCircuit(
            2,
            (
                Displacement(0.4 - 0.1j, 0),
                Squeeze(0.2j, 1),
                Phase(1.2, 0),
                BeamSplitter(0.5, 0.25, (0, 1)),
                TwoModeSqueeze(0.1 + 0.05j, (0, 1)),
            ),
        )
        assert circuit_from_json_dict(circuit_to_json_dict(circuit)) == circuit

    def test_kind_names_fixed(self):
        circuit = GaussianCircuit(2, (BeamSplitter(0.5, 0.0, (0, 1)),))
        data = circuit_to_json_dict(circuit)
        assert data["gates"][0]["kind"] == "bs"
        assert data["gates"][0]["modes"] == [0, 1]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ParseError):
            circuit_from_json_dict({"modes": 1, "gates": [{"kind": "kerr", "modes": [0]}]})
