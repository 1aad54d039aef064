"""Auxiliary-photon gadgets and the accuracy budget for replacing them.

A photon subtraction is realized physically by coupling the target mode to
an auxiliary single photon through a weak two-mode squeezer and postselecting
the auxiliary on vacuum.  Up to the prefactor -sinh(xi)/cosh(xi)^2 this
equals the attenuated subtraction (cosh xi)^(-n) a, and the adjoint
construction attenuates photon additions the same way.  This module houses
both forms, the pure-state trace-distance formula, the moment bound
constant, and :func:`choose_xi`, which turns a target accuracy epsilon into
per-addition squeezing parameters via the descending recursion

    xi_{k,j} = eps^2/(4 m^2) * (prod_{i>j} xi_{k,i}^2 / (r_k K_{k,j}))^2,

guaranteeing trace distance at most eps/(2m) between each detector state
and its attenuated version.  The recursion shrinks double-exponentially in
chain depth, so for deep chains it exits double precision; that is surfaced
as :class:`UnderflowRiskError` rather than silently losing the guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CutoffTooSmallError,
    NormalizationError,
    PlanMismatchError,
    UnderflowRiskError,
)
from .fock import TruncatedState, attach_mode, inner_product, project_mode
from .gaussian import (
    BeamSplitter,
    ProjectorSpec,
    TwoModeSqueeze,
    _crop_single,
    _single_mode_chain,
    annihilation_matrix,
    apply_gate,
    apply_single_mode_operator,
)

XI_MAX = 0.5
XI_UNDERFLOW = 1e-12
MOMENT_HEADROOM = 8

__all__ = [
    "GadgetPlan",
    "attenuated_subtract",
    "subtraction_gadget",
    "addition_gadget",
    "trace_distance_pure",
    "moment_bound_constant",
    "choose_xi",
    "build_attenuated_projector",
    "projector_moments",
]


def _attenuation_diag(xi: float, dim: int) -> np.ndarray:
    return np.cosh(xi) ** (-np.arange(dim, dtype=float))


def attenuated_subtract(state: TruncatedState, mode: int, xi: float) -> TruncatedState:
    """Apply (cosh xi)^(-n) a on one mode; returns an unnormalized state."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    d = state.cutoff + 1
    op = np.diag(_attenuation_diag(xi, d)) @ annihilation_matrix(d)
    return apply_single_mode_operator(state, op, mode)


def _postselected_gadget(state: TruncatedState, gate, mode: int) -> TruncatedState:
    if state.top_level_weight() > 1e-4:
        raise CutoffTooSmallError("input state occupies the top Fock level; raise the cutoff")
    work = attach_mode(state, occupation=1)
    aux = work.modes - 1
    work = apply_gate(work, gate(mode, aux))
    return project_mode(work, aux, level=0)


def subtraction_gadget(state: TruncatedState, mode: int, xi: float) -> TruncatedState:
    """Physically constructed single-photon subtraction on ``mode``.

    Attaches an auxiliary mode in |1>, applies the two-mode squeezer and
    projects the auxiliary on vacuum.  Equals
    (-sinh xi / cosh^2 xi) (cosh xi)^(-n) a |psi> up to truncation leakage.
    """
    if not 0 < xi <= XI_MAX:
        raise ValueError(f"xi must lie in (0, {XI_MAX}]")
    return _postselected_gadget(state, lambda k, aux: TwoModeSqueeze(xi, (k, aux)), mode)


def addition_gadget(state: TruncatedState, mode: int, zeta: complex) -> TruncatedState:
    """Photon addition from an auxiliary photon and a beamsplitter.

    Equals (e^{i delta} tan(gamma)) (cos gamma)^(2n) a^dag |psi> for
    zeta = gamma e^{i delta}, up to truncation leakage.
    """
    zeta = complex(zeta)
    gamma = abs(zeta)
    if not 0 < gamma <= XI_MAX:
        raise ValueError(f"|zeta| must lie in (0, {XI_MAX}]")
    delta = math.atan2(zeta.imag, zeta.real)
    return _postselected_gadget(
        state, lambda k, aux: BeamSplitter(gamma, delta, (k, aux)), mode
    )


def trace_distance_pure(psi: TruncatedState, phi: TruncatedState) -> float:
    """Trace distance between a normalized pure state and a possibly
    unnormalized one: sqrt((1 + ||phi||^2)^2 / 4 - |<psi|phi>|^2)."""
    if abs(psi.norm() - 1.0) > 1e-7:
        raise NormalizationError(f"first argument has norm {psi.norm()}, expected 1")
    nsq = phi.norm() ** 2
    val = 0.25 * (1.0 + nsq) ** 2 - abs(inner_product(psi, phi)) ** 2
    return math.sqrt(min(max(val, 0.0), 1.0))


def moment_bound_constant(e_moment: float, m_moment: float) -> float:
    """Constant C = (8(E + M)/(E + 1))^(1/4) of the bound D <= C sqrt(xi)."""
    if e_moment < 0 or m_moment < 0:
        raise ValueError("moments must be non-negative")
    return (8.0 * (e_moment + m_moment) / (e_moment + 1.0)) ** 0.25


@dataclass(frozen=True)
class GadgetPlan:
    """Per-detector-mode attenuation parameters plus the data behind them.

    ``xis[k]`` lists one xi per photon addition of detector mode k, in
    application order.  For plans produced by :func:`choose_xi` the moment
    table (E, M for the intermediate chain states, j = 0..r) and the chained moment-bound
    constants K (j = 1..r) are recorded; uniform plans leave them empty.
    """

    modes: int
    xis: tuple[tuple[float, ...], ...]
    epsilon: float | None = None
    per_mode_bound: float | None = None
    moments_e: tuple[tuple[float, ...], ...] = ()
    moments_m: tuple[tuple[float, ...], ...] = ()
    constants_k: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "xis", tuple(tuple(float(x) for x in row) for row in self.xis))
        for row in self.xis:
            for x in row:
                if not 0.0 < x <= XI_MAX:
                    raise ValueError(f"xi {x} outside (0, {XI_MAX}]")

    @property
    def aux_count(self) -> int:
        return sum(len(row) for row in self.xis)

    def flat(self) -> list[float]:
        return [x for row in self.xis for x in row]

    def check_against(self, outcome) -> None:
        if len(self.xis) != len(outcome):
            raise PlanMismatchError(
                f"plan covers {len(self.xis)} modes, outcome has {len(outcome)}"
            )
        for k, (row, spec) in enumerate(zip(self.xis, outcome)):
            if len(row) != spec.stellar_rank:
                raise PlanMismatchError(
                    f"mode {k}: plan has {len(row)} xi values, spec rank is {spec.stellar_rank}"
                )

    @classmethod
    def uniform(cls, outcome, xi: float, modes: int | None = None) -> "GadgetPlan":
        outcome = list(outcome)
        rows = tuple(tuple(xi for _ in range(spec.stellar_rank)) for spec in outcome)
        return cls(modes if modes is not None else len(outcome), rows)

    def to_json_dict(self) -> dict:
        return {
            "modes": self.modes,
            "epsilon": self.epsilon,
            "per_mode_bound": self.per_mode_bound,
            "xis": [list(row) for row in self.xis],
            "moments_e": [list(row) for row in self.moments_e],
            "moments_m": [list(row) for row in self.moments_m],
            "constants_k": [list(row) for row in self.constants_k],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GadgetPlan":
        return cls(
            modes=int(data["modes"]),
            xis=tuple(tuple(row) for row in data["xis"]),
            epsilon=data.get("epsilon"),
            per_mode_bound=data.get("per_mode_bound"),
            moments_e=tuple(tuple(row) for row in data.get("moments_e", [])),
            moments_m=tuple(tuple(row) for row in data.get("moments_m", [])),
            constants_k=tuple(tuple(row) for row in data.get("constants_k", [])),
        )


def projector_moments(spec: ProjectorSpec, cutoff: int | None = None):
    """Photon-number moments E_j, M_j of the normalized partial chains.

    Index j = 0 is the Gaussian seed, j = 1..r the states after each photon
    addition.  Computed by truncated simulation with ``MOMENT_HEADROOM``
    levels above the stellar rank unless an explicit cutoff is given.
    """
    work = cutoff if cutoff is not None else spec.stellar_rank + MOMENT_HEADROOM
    _, _, inter = _single_mode_chain(spec, work, keep_intermediates=True)
    levels = np.arange(len(inter[0]), dtype=float)
    es, ms = [], []
    for vec in inter:
        p = np.abs(vec) ** 2
        es.append(float(np.sum(levels * p)))
        ms.append(float(np.sum(levels**2 * p)))
    return es, ms


def choose_xi(
    specs, epsilon: float, m: int | None = None, cutoff: int | None = None
) -> GadgetPlan:
    """Pick attenuation parameters guaranteeing trace distance eps/(2m) per mode.

    Moments of the intermediate photon-added chains are measured from
    truncated simulation, the chained moment-bound constants K_{k,j} are assembled, and the
    xi values follow the descending recursion (clamping at ``XI_MAX`` only
    tightens the bound).  Raises :class:`UnderflowRiskError` when any xi
    would drop below 1e-12: the guarantee then needs more than double
    precision and the caller must relax epsilon.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    specs = list(specs)
    if m is None:
        m = len(specs)
    all_xis, all_e, all_m, all_k = [], [], [], []
    base = epsilon**2 / (4.0 * m**2)
    for spec in specs:
        r = spec.stellar_rank
        es, ms = projector_moments(spec, cutoff)
        all_e.append(tuple(es))
        all_m.append(tuple(ms))
        if r == 0:
            all_xis.append(())
            all_k.append(())
            continue
        consts = []
        for j in range(1, r + 1):
            k_j = moment_bound_constant(es[j], ms[j])
            for i in range(j + 1, r + 1):
                k_j *= 2.0 / (es[i - 1] + 1.0)
            consts.append(k_j)
        all_k.append(tuple(consts))
        xis = [0.0] * r
        prod_sq = 1.0  # running product of xi_i^2 for i > j
        for j in range(r, 0, -1):
            xi = base * (prod_sq / (r * consts[j - 1])) ** 2
            xi = min(xi, XI_MAX)
            if xi < XI_UNDERFLOW:
                raise UnderflowRiskError(
                    f"xi for addition {j} fell to {xi:.3e}; epsilon {epsilon} is"
                    " out of double-precision reach for this chain depth"
                )
            xis[j - 1] = xi
            prod_sq *= xi**2
        all_xis.append(tuple(xis))
    return GadgetPlan(
        modes=m,
        xis=tuple(all_xis),
        epsilon=epsilon,
        per_mode_bound=epsilon / (2.0 * m),
        moments_e=tuple(all_e),
        moments_m=tuple(all_m),
        constants_k=tuple(all_k),
    )


def build_attenuated_projector(spec: ProjectorSpec, xis, cutoff: int) -> TruncatedState:
    """The attenuated detector state |y~>, scaled by the exact 1/sqrt(N).

    Each photon addition of the exact chain is replaced by
    a^dag (cosh xi_j)^(-n); the result is unnormalized with norm at most 1.
    A xi of exactly 0 leaves that addition exact.
    """
    xis = [float(x) for x in xis]
    if len(xis) != spec.stellar_rank:
        raise PlanMismatchError(
            f"{len(xis)} xi values for a rank-{spec.stellar_rank} spec"
        )
    if any(x < 0 or x > XI_MAX for x in xis):
        raise ValueError(f"xi values must lie in [0, {XI_MAX}]")
    _, norm_sq, _ = _single_mode_chain(spec, cutoff)
    tilde, _, _ = _single_mode_chain(spec, cutoff, xis=xis)
    state = _crop_single(tilde / math.sqrt(norm_sq), cutoff, normalized=False)
    if state.top_level_weight() > 1e-10:
        raise CutoffTooSmallError(
            f"attenuated projector leaks {state.top_level_weight():.2e} at cutoff {cutoff}"
        )
    return state
