"""Classical sampling from Husimi Q-functions of passively separable states.

A state that is a discrete mixture of products of finite-rank single-mode
states, possibly viewed through a passive interferometer, admits efficient
Q-sampling: draw a mixture label, sample each mode's single-mode Q by
rejection against a widened Gaussian envelope, and rotate the outcome vector
back with the adjoint interferometer (Q(alpha | U^dag sigma U) samples are
U^dag times samples of Q(. | sigma)).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EnvelopeFailureError, NormalizationError
from .fock import CoreState

logger = logging.getLogger(__name__)

ENVELOPE_SAFETY = 1.25
MIN_ACCEPTANCE = 1e-4

__all__ = [
    "SeparableDecomposition",
    "QFunctionSampler",
    "single_mode_q_sample",
    "sample_separable",
]


def _q_values(state: CoreState, alphas: np.ndarray) -> np.ndarray:
    """Vectorized single-mode Husimi Q at an array of coherent points."""
    rank = state.stellar_rank
    coeffs = np.zeros(rank + 1, dtype=np.complex128)
    for occ, amp in state.amplitudes.items():
        n = occ[0]
        coeffs[n] = amp / math.sqrt(math.factorial(n))
    f = np.polynomial.polynomial.polyval(np.conj(alphas), coeffs)
    return np.exp(-np.abs(alphas) ** 2) * np.abs(f) ** 2 / math.pi


class QFunctionSampler:
    """Rejection sampler for the Q-function of one single-mode core state.

    The envelope is a centered complex Gaussian whose per-quadrature variance
    is (1 + r) times the vacuum's, r the stellar rank; the bound constant is
    measured on a grid at setup and padded by ``ENVELOPE_SAFETY``.
    """

    def __init__(self, state: CoreState, grid_points: int = 201):
        if state.modes != 1:
            raise DimensionMismatchError("Q sampling works mode by mode")
        if abs(state.norm() - 1.0) > 1e-9:
            raise NormalizationError("state must be normalized for Q sampling")
        self.state = state
        rank = state.stellar_rank
        self.scale = 1.0 + rank  # envelope variance inflation
        radius = 3.0 + 2.0 * math.sqrt(self.scale)
        axis = np.linspace(-radius, radius, grid_points)
        grid = axis[None, :] + 1j * axis[:, None]
        ratio = _q_values(state, grid.ravel()) / self._envelope_density(grid.ravel())
        self.bound = float(np.max(ratio)) * ENVELOPE_SAFETY
        self.last_acceptance_rate: float | None = None

    def _envelope_density(self, alphas: np.ndarray) -> np.ndarray:
        return np.exp(-np.abs(alphas) ** 2 / self.scale) / (math.pi * self.scale)

    def sample(self, n_samples: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty(n_samples, dtype=np.complex128)
        got = 0
        proposed = 0
        accepted = 0
        while got < n_samples:
            batch = max(1024, 2 * (n_samples - got))
            z = rng.standard_normal(batch) + 1j * rng.standard_normal(batch)
            cand = math.sqrt(self.scale / 2.0) * z
            accept_p = _q_values(self.state, cand) / (self.bound * self._envelope_density(cand))
            keep = cand[rng.random(batch) < accept_p]
            proposed += batch
            accepted += keep.size
            take = min(keep.size, n_samples - got)
            out[got : got + take] = keep[:take]
            got += take
            if proposed >= 20000 and accepted / proposed < MIN_ACCEPTANCE:
                raise EnvelopeFailureError(
                    f"acceptance rate {accepted / proposed:.2e} below {MIN_ACCEPTANCE};"
                    " envelope variance misconfigured"
                )
        self.last_acceptance_rate = accepted / proposed
        logger.debug(
            "Q sampler: %d samples, acceptance rate %.3f", n_samples, self.last_acceptance_rate
        )
        return out


def single_mode_q_sample(
    state: CoreState, n_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw samples whose law is the state's Q-function."""
    return QFunctionSampler(state).sample(n_samples, rng)


@dataclass(frozen=True)
class SeparableDecomposition:
    """Discrete mixture of single-mode products, in a rotated mode basis.

    The represented physical state is U^dag (sum_l w_l prod_k sigma_lk) U;
    with ``unitary`` None the identity is used.  Weights must be
    non-negative and sum to one within 1e-12.
    """

    weights: tuple[float, ...]
    label_states: tuple[tuple[CoreState, ...], ...]
    unitary: np.ndarray | None = None

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
            raise NormalizationError(f"weights must be a distribution, got sum {sum(w)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "label_states", tuple(tuple(row) for row in self.label_states))
        if len(self.label_states) != len(w):
            raise DimensionMismatchError("one state tuple per label required")
        n = len(self.label_states[0])
        for row in self.label_states:
            if len(row) != n:
                raise DimensionMismatchError("all labels must cover the same mode count")
            for st in row:
                if st.modes != 1:
                    raise DimensionMismatchError("decomposition states must be single-mode")
        if self.unitary is not None:
            u = np.asarray(self.unitary, dtype=np.complex128)
            if u.shape != (n, n):
                raise DimensionMismatchError(f"unitary shape {u.shape} for {n} modes")
            if np.max(np.abs(u.conj().T @ u - np.eye(n))) > 1e-10:
                raise ValueError("matrix is not unitary within 1e-10")
            object.__setattr__(self, "unitary", u)

    @property
    def modes(self) -> int:
        return len(self.label_states[0])

    def to_json_dict(self) -> dict:
        data: dict = {
            "labels": [
                {"weight": w, "states": [s.to_json_dict() for s in row]}
                for w, row in zip(self.weights, self.label_states)
            ]
        }
        if self.unitary is not None:
            data["unitary"] = {
                "re": self.unitary.real.tolist(),
                "im": self.unitary.imag.tolist(),
            }
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "SeparableDecomposition":
        weights = []
        rows = []
        for entry in data["labels"]:
            weights.append(float(entry["weight"]))
            rows.append(tuple(CoreState.from_json_dict(s) for s in entry["states"]))
        unitary = None
        if "unitary" in data:
            re = np.asarray(data["unitary"]["re"], dtype=float)
            im = np.asarray(data["unitary"].get("im", np.zeros_like(re)), dtype=float)
            unitary = re + 1j * im
        return cls(tuple(weights), tuple(rows), unitary)


def sample_separable(
    dec: SeparableDecomposition, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Q-function samples of a passively separable state.

    Returns (samples, labels) with samples of shape (n_samples, modes).
    Labels are drawn from the mixture weights on a dedicated child stream of
    the master seed; each (label, mode) pair then samples from its own child
    stream, so groups are independent and the output is reproducible.
    """
    n_modes = dec.modes
    n_labels = len(dec.weights)
    seq = np.random.SeedSequence(seed)
    children = seq.spawn(1 + n_labels * n_modes)
    label_rng = np.random.default_rng(children[0])
    labels = label_rng.choice(n_labels, size=n_samples, p=np.asarray(dec.weights))

    betas = np.empty((n_samples, n_modes), dtype=np.complex128)
    for lam in range(n_labels):
        rows = np.where(labels == lam)[0]
        if rows.size == 0:
            continue
        for k in range(n_modes):
            rng = np.random.default_rng(children[1 + lam * n_modes + k])
            betas[rows, k] = single_mode_q_sample(dec.label_states[lam][k], rows.size, rng)
    if dec.unitary is not None:
        alphas = betas @ np.conj(dec.unitary)  # row s: U^dag beta_s
    else:
        alphas = betas
    return alphas, labels
