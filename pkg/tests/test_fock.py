import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stellarsim.errors import (
    CutoffTooSmallError,
    DimensionMismatchError,
    NormalizationError,
    ZeroProjectionError,
)
from stellarsim.fock import (
    CoreState,
    TruncatedState,
    attach_mode,
    core_from_truncated,
    fock_state,
    husimi_q,
    inner_product,
    project_mode,
    rank_truncate,
    stellar_function_eval,
    stellar_rank,
    tensor,
    to_truncated,
    truncated_coherent,
    vacuum_state,
)


class TestStellarFunction:
    def test_vacuum_is_one(self):
        vac = CoreState.vacuum(1)
        for z in (0.0, 0.3 + 0.2j, -1.5j):
            assert stellar_function_eval(vac, [z]) == pytest.approx(1.0)

    def test_single_photon_is_z(self):
        one = CoreState.fock([1])
        z = 0.7 - 0.4j
        assert stellar_function_eval(one, [z]) == pytest.approx(z)

    def test_zero_two_superposition(self):
        s = CoreState(1, {(0,): 1 / math.sqrt(2), (2,): 1 / math.sqrt(2)})
        z = 0.7 - 0.1j
        want = (1 + z**2 / math.sqrt(2)) / math.sqrt(2)
        assert stellar_function_eval(s, [z]) == pytest.approx(want)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            stellar_function_eval(CoreState.vacuum(2), [0.1])


class TestHusimiQ:
    def test_vacuum_at_origin(self):
        assert husimi_q(CoreState.vacuum(1), [0.0]) == pytest.approx(1 / math.pi)
        assert husimi_q(CoreState.vacuum(2), [0.0, 0.0]) == pytest.approx(1 / math.pi**2)

    def test_single_photon_vanishes_at_origin(self):
        assert husimi_q(CoreState.fock([1]), [0.0]) == 0.0

    def test_quadrature_normalization(self):
        # trapezoid over [-6, 6]^2 for |1>; Q decays fast enough that the
        # window truncation sits well under the 1e-3 budget
        one = CoreState.fock([1])
        xs = np.linspace(-6.0, 6.0, 241)
        h = xs[1] - xs[0]
        total = sum(husimi_q(one, [complex(x, y)]) for x in xs for y in xs) * h * h
        assert total == pytest.approx(1.0, abs=1e-3)

    def test_matches_coherent_overlap(self):
        state = CoreState(1, {(0,): 0.6, (1,): -0.64j, (3,): 0.48}).renormalized()
        dense = to_truncated(state, 12)
        for alpha in (0.0, 0.4 - 0.2j, -1.1 + 0.7j):
            coh = truncated_coherent([alpha], 12)
            want = abs(inner_product(coh, dense)) ** 2 / math.pi
            assert husimi_q(state, [alpha]) == pytest.approx(want, abs=1e-9)


class TestStellarRank:
    def test_examples(self):
        assert stellar_rank(CoreState.vacuum(1)) == 0
        assert stellar_rank(CoreState.fock([1, 1])) == 2
        s = CoreState(1, {(0,): 1 / math.sqrt(2), (3,): 1 / math.sqrt(2)})
        assert stellar_rank(s) == 3

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_tensor_additivity(self, seed):
        rng = np.random.default_rng(seed)

        def rand_core(modes):
            occs = {tuple(int(v) for v in rng.integers(0, 3, size=modes)) for _ in range(3)}
            amps = {o: complex(rng.normal(), rng.normal()) for o in occs}
            nrm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
            return CoreState(modes, {o: a / nrm for o, a in amps.items()})

        a, b = rand_core(int(rng.integers(1, 3))), rand_core(int(rng.integers(1, 3)))
        t = tensor(a, b)
        assert t.stellar_rank == a.stellar_rank + b.stellar_rank
        assert t.support_size == a.support_size * b.support_size
        assert t.modes == a.modes + b.modes


class TestTruncated:
    def test_embedding_single_photon(self):
        dense = to_truncated(CoreState.fock([1]), 3)
        want = np.zeros(4)
        want[1] = 1.0
        np.testing.assert_allclose(dense.amplitudes, want)

    def test_embedding_too_small(self):
        with pytest.raises(CutoffTooSmallError):
            to_truncated(CoreState.fock([3]), 2)

    def test_inner_product_conjugate_linear(self):
        a = TruncatedState(1, 2, np.array([1j, 0, 0]), normalized=True)
        b = TruncatedState(1, 2, np.array([1.0, 0, 0]), normalized=True)
        assert inner_product(a, b) == pytest.approx(-1j)
        assert inner_product(b, a) == pytest.approx(1j)

    def test_norm_is_real_nonnegative(self):
        s = to_truncated(CoreState(1, {(0,): 0.6, (2,): 0.8j}), 4)
        assert inner_product(s, s) == pytest.approx(1.0)

    def test_coherent_overlap_with_vacuum(self):
        coh = truncated_coherent([0.5], 20)
        vac = vacuum_state(1, 20)
        assert inner_product(vac, coh) == pytest.approx(math.exp(-0.125), abs=1e-9)

    def test_shapes_must_match(self):
        with pytest.raises(DimensionMismatchError):
            inner_product(vacuum_state(1, 3), vacuum_state(1, 4))

    def test_attach_and_project(self):
        s = fock_state([1], 4)
        t = attach_mode(s, occupation=2)
        assert t.modes == 2 and t.amplitudes[1, 2] == 1.0
        back = project_mode(t, 1, level=2)
        np.testing.assert_allclose(back.amplitudes, s.amplitudes)

    def test_normalized_flag_guard(self):
        with pytest.raises(NormalizationError):
            TruncatedState(1, 1, np.array([2.0, 0]), normalized=True)


class TestRankTruncate:
    def test_identity_on_core(self):
        one = to_truncated(CoreState.fock([1]), 4)
        core, fid = rank_truncate(one, 1)
        assert fid == pytest.approx(1.0)
        assert core.amplitudes == {(1,): 1.0}

    def test_zero_projection(self):
        two = to_truncated(CoreState.fock([2]), 4)
        with pytest.raises(ZeroProjectionError):
            rank_truncate(two, 1)

    def test_coherent_truncation_trace_distance(self):
        coh = truncated_coherent([1.0], 30)
        core, fid = rank_truncate(coh, 2)
        kept = sum(math.exp(-1.0) / math.factorial(n) for n in range(3))
        assert core.support_size == 3
        assert math.sqrt(1 - fid**2) == pytest.approx(math.sqrt(1 - kept), abs=1e-9)

    def test_roundtrip_is_identity(self):
        state = CoreState(2, {(0, 1): 0.6, (2, 0): 0.8j})
        back, fid = rank_truncate(to_truncated(state, 4), state.stellar_rank)
        assert fid == pytest.approx(1.0, abs=1e-12)
        for occ, amp in state.amplitudes.items():
            assert back.amplitudes[occ] == pytest.approx(amp, abs=1e-12)


class TestCoreStateContainer:
    def test_norm_window(self):
        with pytest.raises(NormalizationError):
            CoreState(1, {(0,): 1.2})
        with pytest.raises(NormalizationError):
            CoreState(1, {})
        sub = CoreState(1, {(0,): 0.5})
        assert not sub.normalized

    def test_json_roundtrip_field_names(self):
        s = CoreState(2, {(0, 1): 0.6, (2, 0): 0.8j})
        data = s.to_json_dict()
        assert set(data) == {"modes", "terms"}
        assert set(data["terms"][0]) == {"n", "re", "im"}
        assert CoreState.from_json_dict(data).amplitudes == s.amplitudes

    def test_core_from_truncated_prunes(self):
        dense = to_truncated(CoreState(1, {(0,): 0.6, (2,): 0.8}), 5)
        core = core_from_truncated(dense)
        assert set(core.amplitudes) == {(0,), (2,)}
