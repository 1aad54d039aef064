"""Primitive Gaussian gates, their truncated-Fock matrices, and circuits.

Conventions (fixed here and asserted by tests):

* Squeeze:        S(zeta) = exp[(conj(zeta) a^2 - zeta a^dag^2) / 2]
* Beam splitter:  U(theta, phi) with Heisenberg action
                  a_1 -> cos(theta) a_1 + e^{i phi} sin(theta) a_2,
                  a_2 -> -e^{-i phi} sin(theta) a_1 + cos(theta) a_2
* Two-mode squeezer: U(xi) = exp[xi a^dag b^dag - conj(xi) a b]
* Circuit order: gates listed first are applied first.

Truncated gate matrices are built by exponentiating the generator on a
padded space (``GATE_BUFFER`` extra levels per mode) and cropping, so the
returned block acts correctly on low-photon states up to the reported
leakage.  Passive interferometers given as plain unitary matrices are
applied exactly per total-photon sector instead (see
:func:`apply_passive_unitary`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .errors import CutoffTooSmallError, DimensionMismatchError, ParseError
from .fock import TruncatedState, _total_photon_grid

GATE_BUFFER = 4
PROJECTOR_LEAK_TOL = 1e-10

__all__ = [
    "Displacement",
    "Squeeze",
    "Phase",
    "BeamSplitter",
    "TwoModeSqueeze",
    "GaussianGate",
    "GaussianCircuit",
    "ProjectorSpec",
    "gate_matrix",
    "apply",
    "apply_gate",
    "build_projector_state",
    "apply_passive_unitary",
    "haar_unitary",
    "BogoliubovMap",
    "circuit_to_json_dict",
    "circuit_from_json_dict",
]


@dataclass(frozen=True)
class Displacement:
    beta: complex
    mode: int

    @property
    def target_modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Squeeze:
    zeta: complex
    mode: int

    @property
    def target_modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Phase:
    theta: float
    mode: int

    @property
    def target_modes(self) -> tuple[int, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class BeamSplitter:
    theta: float
    phi: float
    modes: tuple[int, int]

    @property
    def target_modes(self) -> tuple[int, ...]:
        return tuple(self.modes)


@dataclass(frozen=True)
class TwoModeSqueeze:
    xi: complex
    modes: tuple[int, int]

    @property
    def target_modes(self) -> tuple[int, ...]:
        return tuple(self.modes)


GaussianGate = Union[Displacement, Squeeze, Phase, BeamSplitter, TwoModeSqueeze]


@dataclass(frozen=True)
class GaussianCircuit:
    """Ordered gate sequence; first listed gate is applied first."""

    modes: int
    gates: tuple[GaussianGate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            tm = g.target_modes
            if len(set(tm)) != len(tm):
                raise DimensionMismatchError(f"gate {g} targets a mode twice")
            if any(k < 0 or k >= self.modes for k in tm):
                raise DimensionMismatchError(f"gate {g} targets modes outside 0..{self.modes - 1}")


# ----------------------------------------------------------------------
# Truncated matrices
# ----------------------------------------------------------------------


def annihilation_matrix(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1).astype(np.complex128)


def creation_matrix(dim: int) -> np.ndarray:
    return annihilation_matrix(dim).conj().T


def _dense_gate(gate: GaussianGate, dim: int) -> np.ndarray:
    """Gate matrix on exactly ``dim`` levels per mode, no padding or crop."""
    a = annihilation_matrix(dim)
    ad = a.conj().T
    if isinstance(gate, Displacement):
        return scipy.linalg.expm(gate.beta * ad - np.conj(gate.beta) * a)
    if isinstance(gate, Squeeze):
        gen = 0.5 * (np.conj(gate.zeta) * (a @ a) - gate.zeta * (ad @ ad))
        return scipy.linalg.expm(gen)
    if isinstance(gate, Phase):
        return np.diag(np.exp(1j * gate.theta * np.arange(dim))).astype(np.complex128)
    if isinstance(gate, BeamSplitter):
        gen = gate.theta * (
            np.exp(1j * gate.phi) * np.kron(ad, a) - np.exp(-1j * gate.phi) * np.kron(a, ad)
        )
        return scipy.linalg.expm(gen)
    if isinstance(gate, TwoModeSqueeze):
        gen = gate.xi * np.kron(ad, ad) - np.conj(gate.xi) * np.kron(a, a)
        return scipy.linalg.expm(gen)
    raise TypeError(f"unknown gate {gate!r}")


@lru_cache(maxsize=256)
def _gate_matrix_cached(gate: GaussianGate, cutoff: int) -> np.ndarray:
    dim = cutoff + 1
    pad = dim + GATE_BUFFER
    full = _dense_gate(gate, pad)
    if len(gate.target_modes) == 1:
        out = full[:dim, :dim]
    else:
        out = full.reshape(pad, pad, pad, pad)[:dim, :dim, :dim, :dim].reshape(dim**2, dim**2)
    out = np.ascontiguousarray(out)
    out.flags.writeable = False
    return out


def gate_matrix(gate: GaussianGate, cutoff: int) -> np.ndarray:
    """Truncated matrix of a gate: exponentiated at cutoff + buffer, cropped.

    Two-mode gates return a (cutoff+1)^2 square matrix in row-major
    (first mode most significant) product order.
    """
    if cutoff < 1:
        raise CutoffTooSmallError("gate matrices need cutoff >= 1")
    return _gate_matrix_cached(gate, cutoff)


def apply_single_mode_operator(
    state: TruncatedState, op: np.ndarray, mode: int, unitary: bool = False
) -> TruncatedState:
    """Apply a (cutoff+1)x(cutoff+1) operator on one mode of a dense state."""
    amps = np.tensordot(op, state.amplitudes, axes=([1], [mode]))
    amps = np.moveaxis(amps, 0, mode)
    out = TruncatedState(
        state.modes, state.cutoff, amps, normalized=state.normalized and unitary
    )
    out.leakage = max(state.leakage, out.top_level_weight())
    return out


def apply_gate(state: TruncatedState, gate: GaussianGate) -> TruncatedState:
    tm = gate.target_modes
    mat = gate_matrix(gate, state.cutoff)
    if len(tm) == 1:
        return apply_single_mode_operator(state, mat, tm[0], unitary=True)
    d = state.cutoff + 1
    tensor = mat.reshape(d, d, d, d)
    amps = np.tensordot(tensor, state.amplitudes, axes=([2, 3], list(tm)))
    amps = np.moveaxis(amps, [0, 1], list(tm))
    out = TruncatedState(state.modes, state.cutoff, amps, normalized=state.normalized)
    out.leakage = max(state.leakage, out.top_level_weight())
    return out


def apply(circuit: GaussianCircuit, state: TruncatedState) -> TruncatedState:
    """Apply all gates in sequence, recording cumulative leakage."""
    if circuit.modes != state.modes:
        raise DimensionMismatchError(
            f"circuit has {circuit.modes} modes, state has {state.modes}"
        )
    out = state
    for gate in circuit.gates:
        out = apply_gate(out, gate)
    return out


# ----------------------------------------------------------------------
# Detector eigenstates as photon-added Gaussian states
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectorSpec:
    """Stellar decomposition of a single-mode detector eigenstate.

    The state is built by displacing the vacuum to ``coherent``, squeezing by
    ``squeeze``, then applying the displaced photon additions
    D(beta) a^dag D(-beta) for each beta in ``additions``, first entry first.
    """

    squeeze: complex = 0.0
    coherent: complex = 0.0
    additions: tuple[complex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "squeeze", complex(self.squeeze))
        object.__setattr__(self, "coherent", complex(self.coherent))
        object.__setattr__(self, "additions", tuple(complex(b) for b in self.additions))

    @property
    def stellar_rank(self) -> int:
        return len(self.additions)

    def to_json_dict(self) -> dict:
        return {
            "squeeze": {"re": self.squeeze.real, "im": self.squeeze.imag},
            "coherent": {"re": self.coherent.real, "im": self.coherent.imag},
            "additions": [{"re": b.real, "im": b.imag} for b in self.additions],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ProjectorSpec":
        def cx(d):
            return complex(d.get("re", 0.0), d.get("im", 0.0))

        return cls(
            squeeze=cx(data.get("squeeze", {})),
            coherent=cx(data.get("coherent", {})),
            additions=tuple(cx(b) for b in data.get("additions", [])),
        )


def _single_mode_chain(
    spec: ProjectorSpec,
    cutoff: int,
    xis: Sequence[float] | None = None,
    keep_intermediates: bool = False,
):
    """Shared builder for the (possibly attenuated) photon-addition chain.

    Works on ``cutoff + 1 + GATE_BUFFER`` levels and crops at the end.
    Returns (final unnormalized padded vector, norm_sq, intermediates), where
    intermediates are the padded normalized vectors after each addition.
    """
    if cutoff < spec.stellar_rank + 1:
        raise CutoffTooSmallError(
            f"cutoff {cutoff} below stellar rank {spec.stellar_rank} + headroom"
        )
    dim = cutoff + 1 + GATE_BUFFER
    psi = np.zeros(dim, dtype=np.complex128)
    psi[0] = 1.0
    psi = _dense_gate(Displacement(spec.coherent, 0), dim) @ psi
    psi = _dense_gate(Squeeze(spec.squeeze, 0), dim) @ psi
    ad = creation_matrix(dim)
    levels = np.arange(dim)
    intermediates = [psi.copy()] if keep_intermediates else []
    for j, beta in enumerate(spec.additions):
        if beta != 0:
            psi = _dense_gate(Displacement(-beta, 0), dim) @ psi
        if xis is not None and xis[j] > 0:
            psi = np.cosh(xis[j]) ** (-levels) * psi
        psi = ad @ psi
        if beta != 0:
            psi = _dense_gate(Displacement(beta, 0), dim) @ psi
        if keep_intermediates:
            intermediates.append(psi / np.linalg.norm(psi))
    norm_sq = float(np.linalg.norm(psi) ** 2)
    return psi, norm_sq, intermediates


def _crop_single(vec: np.ndarray, cutoff: int, normalized: bool) -> TruncatedState:
    out = TruncatedState(1, cutoff, vec[: cutoff + 1].copy(), normalized=normalized)
    out.leakage = out.top_level_weight()
    return out


def build_projector_state(spec: ProjectorSpec, cutoff: int) -> tuple[TruncatedState, float]:
    """Construct the normalized detector eigenstate and its norm factor.

    Returns the normalized state (cropped to ``cutoff``) and the squared
    pre-normalization norm of the addition chain applied to the Gaussian
    seed.  Raises :class:`CutoffTooSmallError` when leakage at the top level
    exceeds ``PROJECTOR_LEAK_TOL``.
    """
    psi, norm_sq, _ = _single_mode_chain(spec, cutoff)
    state = _crop_single(psi / math.sqrt(norm_sq), cutoff, normalized=True)
    if state.top_level_weight() > PROJECTOR_LEAK_TOL or abs(state.norm() - 1.0) > 1e-9:
        raise CutoffTooSmallError(
            f"projector state leaks {state.top_level_weight():.2e} at cutoff {cutoff}"
        )
    return state, norm_sq


# ----------------------------------------------------------------------
# Passive interferometers
# ----------------------------------------------------------------------


@lru_cache(maxsize=512)
def _sector_basis(modes: int, cutoff: int, total: int) -> tuple[tuple[int, ...], ...]:
    def gen(prefix, remaining, slots):
        if slots == 1:
            if remaining <= cutoff:
                yield prefix + (remaining,)
            return
        for v in range(min(remaining, cutoff) + 1):
            yield from gen(prefix + (v,), remaining - v, slots - 1)

    return tuple(gen((), total, modes))


def apply_passive_unitary(state: TruncatedState, unitary: np.ndarray) -> TruncatedState:
    """Apply an N x N passive linear-optics unitary to a dense state.

    The unitary acts in the Heisenberg sense a_i -> sum_j U_ij a_j.  Photon
    number is conserved, so the action is evaluated exactly inside each
    total-photon sector (sectors without support are skipped, which is exact).
    Sectors whose total exceeds the per-mode cutoff budget are truncated to
    configurations representable in the array.
    """
    u = np.asarray(unitary, dtype=np.complex128)
    if u.shape != (state.modes, state.modes):
        raise DimensionMismatchError(f"unitary shape {u.shape} for {state.modes} modes")
    if np.max(np.abs(u.conj().T @ u - np.eye(state.modes))) > 1e-10:
        raise ValueError("matrix is not unitary within 1e-10")
    herm = -1j * scipy.linalg.logm(u)
    herm = 0.5 * (herm + herm.conj().T)

    totals = _total_photon_grid(state.modes, state.cutoff)
    flat = state.amplitudes.reshape(-1)
    flat_totals = totals.reshape(-1)
    out = np.zeros_like(flat)
    for s in range(int(flat_totals.max()) + 1):
        sector = np.where(flat_totals == s)[0]
        if sector.size == 0:
            continue
        seg = flat[sector]
        if float(np.sum(np.abs(seg) ** 2)) <= 1e-32:
            continue
        basis = _sector_basis(state.modes, state.cutoff, s)
        index_of = {occ: i for i, occ in enumerate(basis)}
        dim = len(basis)
        h_s = np.zeros((dim, dim), dtype=np.complex128)
        for col, occ in enumerate(basis):
            for k in range(state.modes):
                if occ[k] == 0:
                    continue
                for j in range(state.modes):
                    if j == k:
                        h_s[col, col] += herm[k, k] * occ[k]
                        continue
                    if occ[j] + 1 > state.cutoff:
                        continue
                    target = list(occ)
                    target[k] -= 1
                    target[j] += 1
                    row = index_of[tuple(target)]
                    h_s[row, col] += herm[j, k] * math.sqrt(occ[k] * (occ[j] + 1))
        u_s = scipy.linalg.expm(1j * h_s)
        strides = (state.cutoff + 1) ** np.arange(state.modes - 1, -1, -1)
        lin = np.array([int(np.dot(occ, strides)) for occ in basis])
        out[lin] = u_s @ flat[lin]
    result = TruncatedState(
        state.modes, state.cutoff, out.reshape(state.amplitudes.shape), state.normalized
    )
    result.leakage = max(state.leakage, result.top_level_weight())
    return result


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Gaussian with phase-fixed diagonal.

    The random stream is whatever Generator the caller hands in; the CLI uses
    numpy's default PCG64 so runs are reproducible across machines.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q @ np.diag(d / np.abs(d))


# ----------------------------------------------------------------------
# Heisenberg (Bogoliubov) transforms of circuits
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BogoliubovMap:
    """Affine Heisenberg action U^dag (a; a^dag) U = S (a; a^dag) + tau.

    ``S`` is 2M x 2M with block structure [[E, F], [conj F, conj E]] and
    ``tau`` = (t, conj t).  Composition follows operator products, so the
    map of a circuit is folded gate by gate in application order.
    """

    modes: int
    s: np.ndarray
    tau: np.ndarray

    @classmethod
    def identity(cls, modes: int) -> "BogoliubovMap":
        return cls(modes, np.eye(2 * modes, dtype=np.complex128), np.zeros(2 * modes, dtype=np.complex128))

    @classmethod
    def of_blocks(cls, e, f, t) -> "BogoliubovMap":
        m = e.shape[0]
        s = np.block([[e, f], [f.conj(), e.conj()]])
        tau = np.concatenate([t, np.conj(t)])
        return cls(m, s, tau)

    @classmethod
    def of_gate(cls, gate: GaussianGate, modes: int) -> "BogoliubovMap":
        e = np.eye(modes, dtype=np.complex128)
        f = np.zeros((modes, modes), dtype=np.complex128)
        t = np.zeros(modes, dtype=np.complex128)
        if isinstance(gate, Displacement):
            t[gate.mode] = gate.beta
        elif isinstance(gate, Phase):
            e[gate.mode, gate.mode] = np.exp(1j * gate.theta)
        elif isinstance(gate, Squeeze):
            r = abs(gate.zeta)
            if r > 0:
                k = gate.mode
                e[k, k] = math.cosh(r)
                f[k, k] = -(gate.zeta / r) * math.sinh(r)
        elif isinstance(gate, BeamSplitter):
            p, q = gate.modes
            ct, st = math.cos(gate.theta), math.sin(gate.theta)
            e[p, p] = ct
            e[p, q] = np.exp(1j * gate.phi) * st
            e[q, p] = -np.exp(-1j * gate.phi) * st
            e[q, q] = ct
        elif isinstance(gate, TwoModeSqueeze):
            r = abs(gate.xi)
            if r > 0:
                k, l = gate.modes
                e[k, k] = e[l, l] = math.cosh(r)
                f[k, l] = f[l, k] = (gate.xi / r) * math.sinh(r)
        else:
            raise TypeError(f"unknown gate {gate!r}")
        return cls.of_blocks(e, f, t)

    @classmethod
    def of_passive(cls, unitary: np.ndarray) -> "BogoliubovMap":
        u = np.asarray(unitary, dtype=np.complex128)
        m = u.shape[0]
        return cls.of_blocks(u, np.zeros((m, m), np.complex128), np.zeros(m, np.complex128))

    @classmethod
    def of_circuit(cls, circuit: GaussianCircuit) -> "BogoliubovMap":
        total = cls.identity(circuit.modes)
        for gate in circuit.gates:
            total = total.then(cls.of_gate(gate, circuit.modes))
        return total

    def then(self, later: "BogoliubovMap") -> "BogoliubovMap":
        """Map of (later applied after self)."""
        return BogoliubovMap(self.modes, later.s @ self.s, later.s @ self.tau + later.tau)

    def inverse(self) -> "BogoliubovMap":
        s_inv = np.linalg.inv(self.s)
        return BogoliubovMap(self.modes, s_inv, -s_inv @ self.tau)

    def extended(self, total_modes: int) -> "BogoliubovMap":
        """Embed into a larger register, acting trivially on appended modes."""
        m = self.modes
        if total_modes == m:
            return self
        e = np.eye(total_modes, dtype=np.complex128)
        f = np.zeros((total_modes, total_modes), dtype=np.complex128)
        t = np.zeros(total_modes, dtype=np.complex128)
        e[:m, :m] = self.s[:m, :m]
        f[:m, :m] = self.s[:m, m:]
        t[:m] = self.tau[:m]
        return BogoliubovMap.of_blocks(e, f, t)


# ----------------------------------------------------------------------
# Circuit JSON form
# ----------------------------------------------------------------------

_KIND_OF = {
    Displacement: "disp",
    Squeeze: "sq",
    Phase: "phase",
    BeamSplitter: "bs",
    TwoModeSqueeze: "tms",
}


def circuit_to_json_dict(circuit: GaussianCircuit) -> dict:
    gates = []
    for g in circuit.gates:
        entry: dict = {"kind": _KIND_OF[type(g)], "modes": list(g.target_modes)}
        if isinstance(g, Displacement):
            entry.update(re=g.beta.real, im=g.beta.imag)
        elif isinstance(g, Squeeze):
            entry.update(re=g.zeta.real, im=g.zeta.imag)
        elif isinstance(g, Phase):
            entry.update(theta=g.theta)
        elif isinstance(g, BeamSplitter):
            entry.update(theta=g.theta, phi=g.phi)
        elif isinstance(g, TwoModeSqueeze):
            entry.update(re=g.xi.real, im=g.xi.imag)
        gates.append(entry)
    return {"modes": circuit.modes, "gates": gates}


def circuit_from_json_dict(data: dict) -> GaussianCircuit:
    try:
        modes = int(data["modes"])
    except KeyError as exc:
        raise ParseError("circuit missing mode count", field="modes") from exc
    gates: list[GaussianGate] = []
    for i, entry in enumerate(data.get("gates", [])):
        kind = entry.get("kind")
        target = entry.get("modes")
        where = f"gates[{i}]"
        if kind is None or target is None:
            raise ParseError("gate entry needs 'kind' and 'modes'", field=where)
        if kind == "disp":
            gates.append(Displacement(complex(entry.get("re", 0.0), entry.get("im", 0.0)), target[0]))
        elif kind == "sq":
            gates.append(Squeeze(complex(entry.get("re", 0.0), entry.get("im", 0.0)), target[0]))
        elif kind == "phase":
            gates.append(Phase(float(entry["theta"]), target[0]))
        elif kind == "bs":
            gates.append(BeamSplitter(float(entry["theta"]), float(entry.get("phi", 0.0)), (target[0], target[1])))
        elif kind == "tms":
            gates.append(TwoModeSqueeze(complex(entry.get("re", 0.0), entry.get("im", 0.0)), (target[0], target[1])))
        else:
            raise ParseError(f"unknown gate kind {kind!r}", field=f"{where}.kind")
    return GaussianCircuit(modes, tuple(gates))
