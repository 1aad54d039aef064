"""Coherent-state sampler assembly and strong simulation.

The Born probability of a product projective outcome is rewritten as a
coherent-state (double homodyne) overlap of an enlarged state: each photon
addition inside a detector eigenstate becomes an auxiliary single photon
coupled in by a weak two-mode squeezer, the squeezing of the eigenstates is
undone on the system modes, and the measurement reduces to projecting the
system modes on coherent values and every auxiliary mode on vacuum.  With
attenuation parameters xi the estimate reads

    P_estimate = |<alpha, 0...0 | chi>|^2 / (N * prod xi^2),

where chi is the evolved total state and N the product of the detector-state
normalization factors.  Three evaluation routes are provided and tested
against each other: the truncated-Fock oracle (:func:`exact_probability`),
the physically assembled gadget circuit (:func:`estimate_probability`), and
the exact loop-hafnian kernel behind :func:`strong_simulate`, whose per-term
cost grows with the total stellar rank of the setup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CutoffTooSmallError,
    DimensionMismatchError,
    PhotonNumberMismatchError,
    RankBudgetTooSmallError,
)
from .fock import (
    CoreState,
    TruncatedState,
    attach_mode,
    project_mode,
    rank_truncate,
    to_truncated,
    truncated_coherent,
)
from .gadget import GadgetPlan, choose_xi
from .gaussian import (
    BogoliubovMap,
    Displacement,
    GaussianCircuit,
    ProjectorSpec,
    Squeeze,
    TwoModeSqueeze,
    apply,
    apply_gate,
    apply_passive_unitary,
    build_projector_state,
    circuit_from_json_dict,
    circuit_to_json_dict,
)
from .numerics import loop_hafnian, permanent

LEAKAGE_GUARD = 1e-6

__all__ = [
    "InputState",
    "SamplerSetup",
    "StrongSimResult",
    "fock_outcome",
    "outcome_rank",
    "exact_probability",
    "build_sampler",
    "estimate_probability",
    "marginal_probability",
    "bs_probability",
    "gbs_probability",
    "strong_simulate",
]


@dataclass(frozen=True)
class InputState:
    """Input state in (core state, Gaussian evolution) normal form.

    The dense form is ``interferometer @ circuit @ core``: the optional gate
    circuit acts first, then the optional passive unitary.  Either part may
    be omitted.
    """

    core: CoreState
    circuit: GaussianCircuit | None = None
    interferometer: np.ndarray | None = None

    def __post_init__(self):
        if self.circuit is not None and self.circuit.modes != self.core.modes:
            raise DimensionMismatchError(
                f"circuit has {self.circuit.modes} modes, core has {self.core.modes}"
            )
        if self.interferometer is not None:
            u = np.asarray(self.interferometer, dtype=np.complex128)
            if u.shape != (self.core.modes, self.core.modes):
                raise DimensionMismatchError(
                    f"interferometer shape {u.shape} for {self.core.modes} modes"
                )
            object.__setattr__(self, "interferometer", u)

    @property
    def modes(self) -> int:
        return self.core.modes

    @property
    def is_gaussian(self) -> bool:
        return self.core.stellar_rank == 0

    def to_truncated(self, cutoff: int) -> TruncatedState:
        state = to_truncated(self.core, cutoff)
        if self.circuit is not None:
            state = apply(self.circuit, state)
        if self.interferometer is not None:
            state = apply_passive_unitary(state, self.interferometer)
        return state

    def bogoliubov(self) -> BogoliubovMap:
        bmap = BogoliubovMap.identity(self.modes)
        if self.circuit is not None:
            bmap = bmap.then(BogoliubovMap.of_circuit(self.circuit))
        if self.interferometer is not None:
            bmap = bmap.then(BogoliubovMap.of_passive(self.interferometer))
        return bmap

    def to_json_dict(self) -> dict:
        data: dict = {"core_state": self.core.to_json_dict()}
        if self.circuit is not None:
            data["circuit"] = circuit_to_json_dict(self.circuit)
        if self.interferometer is not None:
            data["interferometer"] = {
                "re": self.interferometer.real.tolist(),
                "im": self.interferometer.imag.tolist(),
            }
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "InputState":
        core = CoreState.from_json_dict(data["core_state"])
        circuit = None
        if "circuit" in data:
            circuit = circuit_from_json_dict(data["circuit"])
        interferometer = None
        if "interferometer" in data:
            re = np.asarray(data["interferometer"]["re"], dtype=float)
            im = np.asarray(data["interferometer"].get("im", np.zeros_like(re)), dtype=float)
            interferometer = re + 1j * im
        return cls(core, circuit, interferometer)


def fock_outcome(occupation: Sequence[int]) -> list[ProjectorSpec]:
    """Projector specs for a Fock outcome: t photon additions at beta = 0."""
    return [ProjectorSpec(additions=(0.0,) * int(t)) for t in occupation]


def outcome_rank(outcome: Sequence[ProjectorSpec]) -> int:
    return sum(spec.stellar_rank for spec in outcome)


def _coherent_overlap(amps: np.ndarray, targets: Sequence[complex], cutoff: int) -> complex:
    """<alpha_1 ... alpha_p | psi>, contracting the first len(targets) axes."""
    out = amps
    for alpha in targets:
        vec = truncated_coherent([alpha], cutoff).amplitudes
        out = np.tensordot(np.conj(vec), out, axes=([0], [0]))
    return out if np.ndim(out) else complex(out)


def _input_to_state(input_state, cutoff: int) -> TruncatedState:
    if isinstance(input_state, TruncatedState):
        return input_state
    if isinstance(input_state, CoreState):
        return to_truncated(input_state, cutoff)
    return input_state.to_truncated(cutoff)


def _guard_leakage(state: TruncatedState, what: str) -> None:
    if state.leakage > LEAKAGE_GUARD:
        raise CutoffTooSmallError(f"{what} leaks {state.leakage:.2e}; raise the cutoff")


def exact_probability(input_state, outcome: Sequence[ProjectorSpec], cutoff: int) -> float:
    """Born probability via the truncated-Fock oracle: |<y_1...y_m|psi>|^2."""
    psi = _input_to_state(input_state, cutoff)
    if len(outcome) != psi.modes:
        raise DimensionMismatchError(f"{len(outcome)} projectors for {psi.modes} modes")
    _guard_leakage(psi, "input state")
    proj = None
    for spec in outcome:
        vec, _ = build_projector_state(spec, cutoff)
        proj = vec.amplitudes if proj is None else np.multiply.outer(proj, vec.amplitudes)
    return float(abs(np.vdot(proj, psi.amplitudes)) ** 2)


# ----------------------------------------------------------------------
# Sampler assembly
# ----------------------------------------------------------------------


def _norm_factor(spec: ProjectorSpec) -> float:
    last: Exception | None = None
    for cutoff in (spec.stellar_rank + 10, spec.stellar_rank + 16, spec.stellar_rank + 24):
        try:
            _, norm_sq = build_projector_state(spec, cutoff)
            return norm_sq
        except CutoffTooSmallError as exc:
            last = exc
    raise last


@dataclass(frozen=True)
class SamplerSetup:
    """Assembled coherent-state sampler for one outcome.

    ``circuit`` covers system modes 0..m-1 plus one auxiliary mode per
    photon addition; auxiliaries start in |1> and are projected on vacuum,
    system modes on the coherent ``targets``.  Both the main prefactor
    1/(N prod xi^2) and the exact correction prod (sinh xi/(xi cosh^2 xi))^2
    are recorded; the estimate applies the main prefactor, which already
    contains the correction relative to the raw attenuated form.
    """

    input: InputState | TruncatedState | CoreState
    outcome: tuple[ProjectorSpec, ...]
    plan: GadgetPlan
    system_modes: int
    aux_count: int
    circuit: GaussianCircuit
    targets: tuple[complex, ...]
    norm_factor: float
    prefactor_main: float
    correction: float
    aux_of: tuple[tuple[int, ...], ...]

    @property
    def total_modes(self) -> int:
        return self.system_modes + self.aux_count

    def to_json_dict(self) -> dict:
        return {
            "system_modes": self.system_modes,
            "aux_count": self.aux_count,
            "targets": [{"re": t.real, "im": t.imag} for t in self.targets],
            "norm_factor": self.norm_factor,
            "prefactor_main": self.prefactor_main,
            "correction": self.correction,
            "plan": self.plan.to_json_dict(),
            "circuit": circuit_to_json_dict(self.circuit),
        }


def build_sampler(input_state, outcome: Sequence[ProjectorSpec], plan: GadgetPlan) -> SamplerSetup:
    """Assemble the dual coherent-state sampler for the given outcome.

    One auxiliary mode is appended per photon addition (ordered by detector
    mode, then addition index).  Gadget blocks enter in adjoint chain order
    (last addition coupled first), followed by the inverse squeezings of the
    detector seeds.
    """
    outcome = tuple(outcome)
    plan.check_against(outcome)
    m = len(outcome)
    aux_of = []
    next_aux = m
    for spec in outcome:
        row = []
        for _ in range(spec.stellar_rank):
            row.append(next_aux)
            next_aux += 1
        aux_of.append(tuple(row))
    aux_count = next_aux - m

    gates = []
    for k, spec in enumerate(outcome):
        for j in reversed(range(spec.stellar_rank)):
            beta = spec.additions[j]
            xi = plan.xis[k][j]
            if beta != 0:
                gates.append(Displacement(-beta, k))
            gates.append(TwoModeSqueeze(xi, (k, aux_of[k][j])))
            if beta != 0:
                gates.append(Displacement(beta, k))
    for k, spec in enumerate(outcome):
        if spec.squeeze != 0:
            gates.append(Squeeze(-spec.squeeze, k))
    circuit = GaussianCircuit(m + aux_count, tuple(gates))

    norm_factor = 1.0
    for spec in outcome:
        norm_factor *= _norm_factor(spec)
    xi_sq = 1.0
    correction = 1.0
    for row in plan.xis:
        for xi in row:
            xi_sq *= xi**2
            correction *= (math.sinh(xi) / (xi * math.cosh(xi) ** 2)) ** 2
    return SamplerSetup(
        input=input_state,
        outcome=outcome,
        plan=plan,
        system_modes=m,
        aux_count=aux_count,
        circuit=circuit,
        targets=tuple(spec.coherent for spec in outcome),
        norm_factor=norm_factor,
        prefactor_main=1.0 / (norm_factor * xi_sq),
        correction=correction,
        aux_of=tuple(aux_of),
    )


def _stream_gadgets(
    psi: TruncatedState,
    outcome: Sequence[ProjectorSpec],
    plan: GadgetPlan,
    modes: Sequence[int] | None = None,
) -> TruncatedState:
    """Apply all gadget blocks and inverse squeezes, one auxiliary at a time.

    Each auxiliary interacts through a single two-mode squeezer and is never
    touched again, so attaching it, coupling, and projecting on vacuum right
    away produces exactly the same amplitudes as evolving the full register
    and projecting at the end, while keeping memory at (m+1)-mode scale.
    """
    modes = range(len(outcome)) if modes is None else modes
    for k in modes:
        spec = outcome[k]
        for j in reversed(range(spec.stellar_rank)):
            beta = spec.additions[j]
            xi = plan.xis[k][j]
            work = attach_mode(psi, occupation=1)
            aux = work.modes - 1
            if beta != 0:
                work = apply_gate(work, Displacement(-beta, k))
            work = apply_gate(work, TwoModeSqueeze(xi, (k, aux)))
            if beta != 0:
                work = apply_gate(work, Displacement(beta, k))
            psi = project_mode(work, aux, level=0)
    for k in modes:
        if outcome[k].squeeze != 0:
            psi = apply_gate(psi, Squeeze(-outcome[k].squeeze, k))
    return psi


def estimate_probability(setup: SamplerSetup, cutoff: int, streaming: bool = True) -> float:
    """Evaluate the sampler: coherent/vacuum overlap of the evolved total state.

    With ``streaming`` (default) auxiliaries are contracted eagerly; setting
    it False evolves the full (m + n)-mode register through ``setup.circuit``
    instead, which is bitwise the same physics and exists for cross-checking.
    """
    psi = _input_to_state(setup.input, cutoff)
    if psi.modes != setup.system_modes:
        raise DimensionMismatchError(
            f"input has {psi.modes} modes, sampler expects {setup.system_modes}"
        )
    if streaming:
        chi = _stream_gadgets(psi, setup.outcome, setup.plan)
    else:
        chi = psi
        for _ in range(setup.aux_count):
            chi = attach_mode(chi, occupation=1)
        chi = apply(setup.circuit, chi)
        for _ in range(setup.aux_count):
            chi = project_mode(chi, chi.modes - 1, level=0)
    _guard_leakage(chi, "evolved sampler state")
    amp = _coherent_overlap(chi.amplitudes, setup.targets, cutoff)
    return float(setup.prefactor_main * abs(amp) ** 2)


def marginal_probability(
    input_state,
    outcome_prefix: Sequence[ProjectorSpec],
    plan: GadgetPlan | None,
    cutoff: int,
) -> float:
    """Probability of the outcome on the first p modes, rest traced out.

    With a plan the coherent-sampler estimate is used (gadgets only on the
    measured modes, so the auxiliary photon count is the summed rank of the
    prefix); with ``plan=None`` the exact projector overlap is computed.
    """
    psi = _input_to_state(input_state, cutoff)
    p = len(outcome_prefix)
    if p > psi.modes:
        raise DimensionMismatchError(f"prefix of {p} modes for a {psi.modes}-mode state")
    if p == 0:
        return float(psi.norm() ** 2)
    if plan is None:
        arr = psi.amplitudes
        for spec in outcome_prefix:
            vec, _ = build_projector_state(spec, cutoff)
            arr = np.tensordot(np.conj(vec.amplitudes), arr, axes=([0], [0]))
        return float(np.sum(np.abs(arr) ** 2))
    plan.check_against(outcome_prefix)
    chi = _stream_gadgets(psi, outcome_prefix, plan, modes=range(p))
    _guard_leakage(chi, "evolved sampler state")
    arr = chi.amplitudes
    for alpha in (spec.coherent for spec in outcome_prefix):
        vec = truncated_coherent([alpha], cutoff).amplitudes
        arr = np.tensordot(np.conj(vec), arr, axes=([0], [0]))
    weight = float(np.sum(np.abs(arr) ** 2))
    norm_factor = 1.0
    for spec in outcome_prefix:
        norm_factor *= _norm_factor(spec)
    xi_sq = 1.0
    for row in plan.xis:
        for xi in row:
            xi_sq *= xi**2
    return weight / (norm_factor * xi_sq)


# ----------------------------------------------------------------------
# Reference probabilities for (Gaussian) Boson Sampling
# ----------------------------------------------------------------------


def bs_probability(unitary, input_occupation, output_occupation) -> float:
    """Boson Sampling probability from the permanent of a submatrix.

    The interferometer acts as a_i -> sum_j U_ij a_j; rows of the submatrix
    repeat per output photon, columns per input photon, and the value is
    |permanent|^2 / (prod s! prod t!).
    """
    u = np.asarray(unitary, dtype=np.complex128)
    s = [int(v) for v in input_occupation]
    t = [int(v) for v in output_occupation]
    if sum(s) != sum(t):
        raise PhotonNumberMismatchError(f"input has {sum(s)} photons, output {sum(t)}")
    rows = [i for i, n in enumerate(t) for _ in range(n)]
    cols = [j for j, n in enumerate(s) for _ in range(n)]
    sub = u[np.ix_(rows, cols)]
    per = permanent(sub)
    weight = 1.0
    for n in s + t:
        weight *= math.factorial(n)
    return float(abs(per) ** 2 / weight)


def _pure_gaussian_amplitudes(
    vmap: BogoliubovMap, targets: np.ndarray, occupations: Sequence[tuple[int, ...]]
) -> np.ndarray:
    """Fock amplitudes <n|V|targets> of the Gaussian state V|targets>.

    The state is pinned by its nullifiers: with the Heisenberg transform of
    V written as V^dag v V = S v + tau, one has a_i |psi> = (A a^dag + d)_i
    |psi> with A = -P^{-1} Q and d = P^{-1}(targets + c), where [P Q] are the
    annihilation rows of S^{-1} and c = S^{-1} tau.  Amplitudes then follow
    the displaced-Gaussian loop-hafnian form

        <n|psi> = c0 * lhaf(A_n) / sqrt(n!),

    with A_n the A matrix with rows/columns repeated per occupation and the
    diagonal replaced by d.  |c0| is fixed by the Husimi covariance; its
    phase is not resolved, so amplitudes carry one common unknown phase
    (irrelevant in any |sum|^2).
    """
    m = vmap.modes
    s_inv = np.linalg.inv(vmap.s)
    p_blk = s_inv[:m, :m]
    q_blk = s_inv[:m, m:]
    c_full = s_inv @ vmap.tau
    a_mat = -np.linalg.solve(p_blk, q_blk)
    asym = np.max(np.abs(a_mat - a_mat.T)) if m else 0.0
    if asym > 1e-8:
        raise ValueError(f"nullifier matrix asymmetry {asym:.2e}; transform is inconsistent")
    a_mat = 0.5 * (a_mat + a_mat.T)
    d_vec = np.linalg.solve(p_blk, targets + c_full[:m])

    tvec = np.concatenate([targets, np.conj(targets)])
    mu = (vmap.s @ tvec + vmap.tau)[:m]
    e_blk = vmap.s[:m, :m]
    f_blk = vmap.s[:m, m:]
    c_mat = e_blk @ f_blk.T
    n_mat = f_blk @ f_blk.conj().T
    sigma_q = np.block(
        [
            [np.eye(m) + n_mat, c_mat],
            [c_mat.conj(), np.eye(m) + n_mat.conj()],
        ]
    )
    m_tilde = np.concatenate([mu, np.conj(mu)])
    quad = float(np.real(np.conj(m_tilde) @ np.linalg.solve(sigma_q, m_tilde)))
    det = np.linalg.det(sigma_q)
    c0 = math.sqrt(math.exp(-0.5 * quad) / math.sqrt(float(np.real(det))))

    amps = np.empty(len(occupations), dtype=np.complex128)
    for i, occ in enumerate(occupations):
        idx = [k for k, n in enumerate(occ) for _ in range(n)]
        if not idx:
            amps[i] = c0
            continue
        sub = a_mat[np.ix_(idx, idx)].copy()
        np.fill_diagonal(sub, d_vec[idx])
        fact = 1.0
        for n in occ:
            fact *= math.factorial(n)
        amps[i] = c0 * loop_hafnian(sub) / math.sqrt(fact)
    return amps


def gbs_probability(input_state: InputState, occupation: Sequence[int]) -> float:
    """Exact Fock-outcome probability of a pure Gaussian input via (loop) hafnians."""
    if not input_state.is_gaussian:
        raise ValueError("gbs_probability needs a rank-0 (Gaussian) input")
    occ = tuple(int(v) for v in occupation)
    if len(occ) != input_state.modes:
        raise DimensionMismatchError(f"occupation {occ} for {input_state.modes} modes")
    vmap = input_state.bogoliubov()
    targets = np.zeros(input_state.modes, dtype=np.complex128)
    amp = _pure_gaussian_amplitudes(vmap, targets, [occ])[0]
    scale = abs(next(iter(input_state.core.amplitudes.values()))) ** 2
    return float(scale * abs(amp) ** 2)


# ----------------------------------------------------------------------
# Strong simulation
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StrongSimResult:
    probability: float
    term_count: int
    max_matrix_dim: int
    rank_used: int
    truncation_fidelity: float
    plan: GadgetPlan


def _normal_form(input_state, rank_budget: int, frame: GaussianCircuit | None):
    """Reduce the input to (core state, Gaussian map) with rank <= budget."""
    if isinstance(input_state, (TruncatedState, CoreState)):
        if isinstance(input_state, CoreState):
            input_state = to_truncated(input_state, max(1, input_state.stellar_rank))
        work = apply(frame, input_state) if frame is not None else input_state
        core, fidelity = rank_truncate(work, rank_budget)
        pre_map = (
            BogoliubovMap.of_circuit(frame).inverse()
            if frame is not None
            else BogoliubovMap.identity(input_state.modes)
        )
        return core, fidelity, pre_map
    keep = {
        occ: amp
        for occ, amp in input_state.core.amplitudes.items()
        if sum(occ) <= rank_budget
    }
    if not keep:
        raise RankBudgetTooSmallError(
            f"no core support at total photon number <= {rank_budget}"
        )
    kept_norm = math.sqrt(sum(abs(a) ** 2 for a in keep.values()))
    fidelity = kept_norm / input_state.core.norm()
    core = CoreState(input_state.modes, {o: a / kept_norm for o, a in keep.items()})
    return core, fidelity, input_state.bogoliubov()


def strong_simulate(
    input_state,
    outcome: Sequence[ProjectorSpec],
    epsilon: float,
    rank_budget: int,
    frame: GaussianCircuit | None = None,
    plan: GadgetPlan | None = None,
) -> StrongSimResult:
    """Evaluate the outcome probability through the coherent-sampler reduction.

    Pipeline: finite-rank approximation of the input inside the supplied
    Gaussian frame (identity by default; :class:`InputState` inputs carry
    their own normal form), attenuation parameters from :func:`choose_xi`
    at the requested epsilon unless a plan is given, and one loop-hafnian
    Gaussian amplitude per core-state term.  The result is within 2 epsilon
    of the Born value whenever the rank truncation met the epsilon budget.
    """
    outcome = tuple(outcome)
    core, fidelity, pre_map = _normal_form(input_state, rank_budget, frame)
    trace_dist = math.sqrt(max(0.0, 1.0 - fidelity**2))
    if trace_dist > epsilon:
        raise RankBudgetTooSmallError(
            f"rank {rank_budget} truncation has trace distance {trace_dist:.3e} > {epsilon}"
        )
    m = core.modes
    if len(outcome) != m:
        raise DimensionMismatchError(f"{len(outcome)} projectors for {m} modes")
    if plan is None:
        plan = choose_xi(outcome, epsilon, m)
    setup = build_sampler(InputState(core), outcome, plan)
    total = setup.total_modes
    total_map = pre_map.extended(total).then(BogoliubovMap.of_circuit(setup.circuit))
    targets = np.concatenate(
        [np.asarray(setup.targets, dtype=np.complex128), np.zeros(setup.aux_count)]
    )

    support = list(core.amplitudes.items())
    occs = [occ + (1,) * setup.aux_count for occ, _ in support]
    amps = _pure_gaussian_amplitudes(total_map.inverse(), targets, occs)
    total_amp = sum(c * np.conj(a) for (_, c), a in zip(support, amps))
    prob = float(setup.prefactor_main * abs(total_amp) ** 2)
    max_dim = max((sum(occ) for occ in occs), default=0)
    return StrongSimResult(
        probability=prob,
        term_count=len(support),
        max_matrix_dim=max_dim,
        rank_used=core.stellar_rank,
        truncation_fidelity=fidelity,
        plan=plan,
    )
