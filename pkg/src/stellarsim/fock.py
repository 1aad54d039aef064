"""Fock-basis state algebra.

Two state representations coexist:

* :class:`CoreState` -- a finite superposition of multimode Fock states,
  stored sparsely as a map from occupation tuples to complex amplitudes.
  This is the exact representation of finite-stellar-rank cores.
* :class:`TruncatedState` -- a dense amplitude array over a per-mode Fock
  cutoff.  This is the brute-force oracle representation that every
  approximate path in the package is checked against.

Occupation tuples linearize row-major with mode 0 most significant (plain
C-order flattening of the dense array), so serialized states are bit-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    CutoffTooSmallError,
    DimensionMismatchError,
    NormalizationError,
    ZeroProjectionError,
)

FockIndex = tuple[int, ...]

NORM_ATOL = 1e-9
PRUNE_TOL = 1e-14

__all__ = [
    "CoreState",
    "TruncatedState",
    "stellar_function_eval",
    "husimi_q",
    "stellar_rank",
    "tensor",
    "to_truncated",
    "inner_product",
    "truncated_coherent",
    "vacuum_state",
    "fock_state",
    "rank_truncate",
    "core_from_truncated",
    "attach_mode",
    "project_mode",
]


def _sqrt_fact(n: Iterable[int]) -> float:
    out = 1.0
    for k in n:
        out *= math.factorial(k)
    return math.sqrt(out)


@dataclass(frozen=True)
class CoreState:
    """Finite-support Fock superposition.

    Amplitudes with modulus below ``PRUNE_TOL`` are dropped on construction.
    The squared norm must lie in (0, 1 + 1e-12]; subnormalized states are
    permitted and flagged through :attr:`normalized`.
    """

    modes: int
    amplitudes: Mapping[FockIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[FockIndex, complex] = {}
        for occ, amp in self.amplitudes.items():
            occ = tuple(int(v) for v in occ)
            if len(occ) != self.modes:
                raise DimensionMismatchError(
                    f"occupation {occ} has {len(occ)} entries for {self.modes} modes"
                )
            if any(v < 0 for v in occ):
                raise ValueError(f"negative occupation in {occ}")
            amp = complex(amp)
            if abs(amp) > PRUNE_TOL:
                clean[occ] = clean.get(occ, 0.0) + amp
        nsq = sum(abs(a) ** 2 for a in clean.values())
        if nsq <= 0.0:
            raise NormalizationError("core state has no support")
        if nsq > 1.0 + 1e-12:
            raise NormalizationError(f"core state norm^2 = {nsq} exceeds 1")
        object.__setattr__(self, "amplitudes", dict(sorted(clean.items())))

    @property
    def support_size(self) -> int:
        return len(self.amplitudes)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    @property
    def normalized(self) -> bool:
        return abs(self.norm() - 1.0) <= NORM_ATOL

    @property
    def stellar_rank(self) -> int:
        return max(sum(occ) for occ in self.amplitudes)

    def renormalized(self) -> "CoreState":
        n = self.norm()
        return CoreState(self.modes, {o: a / n for o, a in self.amplitudes.items()})

    @classmethod
    def vacuum(cls, modes: int) -> "CoreState":
        return cls(modes, {(0,) * modes: 1.0})

    @classmethod
    def fock(cls, occupation: Iterable[int]) -> "CoreState":
        occ = tuple(int(v) for v in occupation)
        return cls(len(occ), {occ: 1.0})

    def to_json_dict(self) -> dict:
        return {
            "modes": self.modes,
            "terms": [
                {"n": list(occ), "re": amp.real, "im": amp.imag}
                for occ, amp in self.amplitudes.items()
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CoreState":
        terms = {
            tuple(t["n"]): complex(t["re"], t.get("im", 0.0)) for t in data["terms"]
        }
        return cls(int(data["modes"]), terms)


@dataclass
class TruncatedState:
    """Dense amplitude array over a per-mode Fock cutoff.

    ``amplitudes`` has shape ``(cutoff + 1,) * modes``.  ``leakage`` records
    the worst top-level probability weight seen while producing this state
    (gate applications update it); :meth:`top_level_weight` reports the
    current one.
    """

    modes: int
    cutoff: int
    amplitudes: np.ndarray
    normalized: bool = True
    leakage: float = 0.0

    def __post_init__(self):
        expected = (self.cutoff + 1,) * self.modes
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != expected:
            raise DimensionMismatchError(
                f"amplitude shape {self.amplitudes.shape}, expected {expected}"
            )
        if self.normalized and self.norm() > 1.0 + NORM_ATOL:
            raise NormalizationError(f"norm {self.norm()} exceeds 1 for a normalized state")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def top_level_weight(self) -> float:
        """Probability weight on the top Fock level of any mode."""
        worst = 0.0
        for axis in range(self.modes):
            sl = [slice(None)] * self.modes
            sl[axis] = self.cutoff
            worst = max(worst, float(np.sum(np.abs(self.amplitudes[tuple(sl)]) ** 2)))
        return worst

    def renormalized(self) -> "TruncatedState":
        n = self.norm()
        if n == 0.0:
            raise NormalizationError("cannot renormalize the zero vector")
        return TruncatedState(self.modes, self.cutoff, self.amplitudes / n, True, self.leakage)

    def copy(self) -> "TruncatedState":
        return TruncatedState(
            self.modes, self.cutoff, self.amplitudes.copy(), self.normalized, self.leakage
        )


def stellar_function_eval(state: CoreState, z) -> complex:
    """Evaluate the holomorphic series sum_n psi_n z^n / sqrt(n!) at z."""
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != (state.modes,):
        raise DimensionMismatchError(f"z has shape {z.shape}, state has {state.modes} modes")
    total = 0.0 + 0.0j
    for occ, amp in state.amplitudes.items():
        mono = 1.0 + 0.0j
        for zk, nk in zip(z, occ):
            mono *= zk**nk
        total += amp * mono / _sqrt_fact(occ)
    return total


def husimi_q(state: CoreState, alpha) -> float:
    """Husimi Q density at the coherent point alpha.

    Convention: exp(-||alpha||^2) |F(alpha*)|^2 / pi^m, which integrates to
    one over d^2m(alpha) for a normalized state.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    if alpha.shape != (state.modes,):
        raise DimensionMismatchError(
            f"alpha has shape {alpha.shape}, state has {state.modes} modes"
        )
    f = stellar_function_eval(state, np.conj(alpha))
    val = math.exp(-float(np.sum(np.abs(alpha) ** 2))) * abs(f) ** 2 / math.pi**state.modes
    return float(val)


def stellar_rank(state: CoreState) -> int:
    """Largest total photon number in the support."""
    return state.stellar_rank


def tensor(a: CoreState, b: CoreState) -> CoreState:
    """Tensor product; support sizes multiply and stellar ranks add."""
    amps = {
        occ_a + occ_b: amp_a * amp_b
        for occ_a, amp_a in a.amplitudes.items()
        for occ_b, amp_b in b.amplitudes.items()
    }
    return CoreState(a.modes + b.modes, amps)


def to_truncated(state: CoreState, cutoff: int) -> TruncatedState:
    """Embed a core state losslessly into a dense cutoff array."""
    per_mode_max = max(max(occ) for occ in state.amplitudes)
    if cutoff < per_mode_max:
        raise CutoffTooSmallError(
            f"cutoff {cutoff} loses occupation {per_mode_max}; need >= stellar rank"
        )
    amps = np.zeros((cutoff + 1,) * state.modes, dtype=np.complex128)
    for occ, amp in state.amplitudes.items():
        amps[occ] = amp
    return TruncatedState(state.modes, cutoff, amps, normalized=state.normalized)


def inner_product(a: TruncatedState, b: TruncatedState) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise DimensionMismatchError(
            f"shapes {a.amplitudes.shape} and {b.amplitudes.shape} differ"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def truncated_coherent(alphas, cutoff: int) -> TruncatedState:
    """Product of truncated coherent states |alpha_1> x ... x |alpha_m>."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=np.complex128))
    levels = np.arange(cutoff + 1)
    sqf = np.array([math.sqrt(math.factorial(int(k))) for k in levels])
    vec = None
    for a in alphas:
        single = np.exp(-0.5 * abs(a) ** 2) * a**levels / sqf
        vec = single if vec is None else np.multiply.outer(vec, single)
    return TruncatedState(len(alphas), cutoff, vec, normalized=True)


def vacuum_state(modes: int, cutoff: int) -> TruncatedState:
    amps = np.zeros((cutoff + 1,) * modes, dtype=np.complex128)
    amps[(0,) * modes] = 1.0
    return TruncatedState(modes, cutoff, amps)


def fock_state(occupation, cutoff: int) -> TruncatedState:
    occ = tuple(int(v) for v in occupation)
    if max(occ) > cutoff:
        raise CutoffTooSmallError(f"occupation {occ} exceeds cutoff {cutoff}")
    amps = np.zeros((cutoff + 1,) * len(occ), dtype=np.complex128)
    amps[occ] = 1.0
    return TruncatedState(len(occ), cutoff, amps)


def attach_mode(state: TruncatedState, occupation: int = 0) -> TruncatedState:
    """Append one mode in a Fock level, as the new last mode."""
    if occupation > state.cutoff:
        raise CutoffTooSmallError(f"occupation {occupation} exceeds cutoff {state.cutoff}")
    shape = state.amplitudes.shape + (state.cutoff + 1,)
    amps = np.zeros(shape, dtype=np.complex128)
    amps[..., occupation] = state.amplitudes
    out = TruncatedState(state.modes + 1, state.cutoff, amps, state.normalized)
    out.leakage = state.leakage
    return out


def project_mode(state: TruncatedState, mode: int, level: int = 0) -> TruncatedState:
    """Project one mode onto <level| and drop it (unnormalized result)."""
    amps = np.take(state.amplitudes, level, axis=mode)
    out = TruncatedState(state.modes - 1, state.cutoff, amps, normalized=False)
    out.leakage = state.leakage
    return out


@lru_cache(maxsize=64)
def _total_photon_grid(modes: int, cutoff: int) -> np.ndarray:
    grids = np.indices((cutoff + 1,) * modes)
    return grids.sum(axis=0)


def rank_truncate(state: TruncatedState, k: int) -> tuple[CoreState, float]:
    """Project onto total photon number <= k and renormalize.

    Returns the resulting core state and the achieved fidelity
    |<psi|P_k psi>| / (||P_k psi|| ||psi||), i.e. the overlap with the
    normalized projection.  Raises :class:`ZeroProjectionError` when the
    projector annihilates the state.
    """
    if k < 0:
        raise ValueError("rank budget must be non-negative")
    mask = _total_photon_grid(state.modes, state.cutoff) <= k
    projected = np.where(mask, state.amplitudes, 0.0)
    nrm = float(np.linalg.norm(projected))
    if nrm <= 1e-14:
        raise ZeroProjectionError(f"projector onto total photon number <= {k} annihilates the state")
    fidelity = nrm / state.norm()
    core = core_from_truncated(
        TruncatedState(state.modes, state.cutoff, projected / nrm, normalized=True)
    )
    return core, fidelity


def core_from_truncated(state: TruncatedState, tol: float = PRUNE_TOL) -> CoreState:
    """Sparse core-state view of a dense array, pruning entries below tol."""
    amps: dict[FockIndex, complex] = {}
    it = np.nditer(state.amplitudes, flags=["multi_index"])
    for val in it:
        v = complex(val)
        if abs(v) > tol:
            amps[it.multi_index] = v
    return CoreState(state.modes, amps)
