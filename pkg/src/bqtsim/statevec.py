"""Dense state vectors over big-endian qubit registers.

Qubit 0 is the leftmost symbol of a ket, so ``|q0 q1 ... q(k-1)>`` lives at
index ``q0 * 2**(k-1) + ... + q(k-1)``. Every operation returns a new
:class:`StateVector`; amplitude arrays are frozen after construction.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels

AMP_TOL = 1e-12
NORM_CONTRACT_TOL = 1e-9
# branches lighter than this are reported as empty rather than renormalised
ZERO_PROB = 1e-24


class DomainError(ValueError):
    """Invalid qubit index, basis index or register shape."""


class ContractError(ValueError):
    """A precondition on the state itself (e.g. normalisation) was violated."""


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 0:
            raise DomainError(f"num_qubits must be >= 0, got {self.num_qubits}")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << self.num_qubits:
            raise DomainError(
                f"{amps.shape[0]} amplitudes cannot describe {self.num_qubits} qubits"
            )
        if amps.flags.writeable:
            amps = amps.copy() if amps is self.amplitudes else amps
            amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def _owned(cls, num_qubits: int, amps: np.ndarray) -> "StateVector":
        # fresh kernel output: freeze in place, skip the defensive copy
        amps.flags.writeable = False
        obj = object.__new__(cls)
        object.__setattr__(obj, "num_qubits", num_qubits)
        object.__setattr__(obj, "amplitudes", amps)
        return obj

    @classmethod
    def from_array(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        k = amps.shape[0].bit_length() - 1
        if amps.shape[0] != 1 << k:
            raise DomainError(f"length {amps.shape[0]} is not a power of two")
        return cls(k, amps)

    def norm_sq(self) -> float:
        return _kernels.norm_sq(self.amplitudes)

    def normalized(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes / math.sqrt(self.norm_sq()))

    def allclose(self, other: "StateVector", atol: float = AMP_TOL) -> bool:
        return self.num_qubits == other.num_qubits and bool(
            np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=atol)
        )

    def support(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.amplitudes)]

    def __len__(self):
        return self.amplitudes.shape[0]

    def __repr__(self):
        terms = ", ".join(
            f"|{i:0{self.num_qubits}b}>:{self.amplitudes[i]:.4g}" for i in self.support()[:8]
        )
        more = "" if len(self.support()) <= 8 else ", ..."
        return f"StateVector({self.num_qubits}q; {terms}{more})"


@dataclass(frozen=True)
class MeasurementRecord:
    """One single-qubit measurement: X outcome 0 is |+>, 1 is |->."""

    qubit: int
    basis: Basis
    outcome: int
    probability: float


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.num_qubits:
        raise DomainError(f"qubit {q} out of range for a {state.num_qubits}-qubit register")


def basis_state(num_qubits: int, index: int) -> StateVector:
    if num_qubits < 0 or not 0 <= index < 1 << num_qubits:
        raise DomainError(f"basis index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def apply_h(state: StateVector, q: int) -> StateVector:
    _check_qubit(state, q)
    return StateVector._owned(state.num_qubits, _kernels.apply_h(state.amplitudes, state.num_qubits, q))


def apply_x(state: StateVector, q: int) -> StateVector:
    _check_qubit(state, q)
    return StateVector._owned(state.num_qubits, _kernels.apply_x(state.amplitudes, state.num_qubits, q))


def apply_z(state: StateVector, q: int) -> StateVector:
    _check_qubit(state, q)
    return StateVector._owned(state.num_qubits, _kernels.apply_z(state.amplitudes, state.num_qubits, q))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise DomainError(f"CNOT control and target are both qubit {control}")
    return StateVector._owned(
        state.num_qubits,
        _kernels.apply_cnot(state.amplitudes, state.num_qubits, control, target),
    )


def _check_normalized(state: StateVector) -> None:
    dev = abs(state.norm_sq() - 1.0)
    if dev > NORM_CONTRACT_TOL:
        raise ContractError(f"state is not normalised (|norm^2 - 1| = {dev:.3g})")


def _branch(state: StateVector, q: int, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    amps = state.amplitudes
    if Basis(basis) is Basis.X:
        amps = _kernels.apply_h(amps, state.num_qubits, q)
    k = state.num_qubits
    return _kernels.project(amps, k, q, 0), _kernels.project(amps, k, q, 1)


def project(
    state: StateVector, q: int, basis: Basis | str, outcome: int
) -> tuple[float, StateVector | None]:
    """Force ``outcome`` on qubit ``q``; the qubit is removed from the register.

    Returns the branch probability and the renormalised remainder, or
    ``(0.0, None)`` for an empty branch.
    """
    _check_qubit(state, q)
    if outcome not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {outcome}")
    _check_normalized(state)
    sub = _branch(state, q, basis)[outcome]
    p = _kernels.norm_sq(sub)
    if p <= ZERO_PROB:
        return 0.0, None
    return p, StateVector._owned(state.num_qubits - 1, sub / math.sqrt(p))


def measure(
    state: StateVector, q: int, basis: Basis | str, rng_draw: float
) -> tuple[MeasurementRecord, StateVector]:
    """Sample a measurement of qubit ``q``: outcome 0 iff ``rng_draw < p0``."""
    _check_qubit(state, q)
    _check_normalized(state)
    basis = Basis(basis)
    branches = _branch(state, q, basis)
    p0 = _kernels.norm_sq(branches[0])
    p1 = _kernels.norm_sq(branches[1])
    # renormalise the pair so the two probabilities sum to one exactly
    p0 = p0 / (p0 + p1)
    outcome = 0 if rng_draw < p0 else 1
    p = p0 if outcome == 0 else 1.0 - p0
    sub = branches[outcome]
    post = StateVector._owned(state.num_qubits - 1, sub / math.sqrt(_kernels.norm_sq(sub)))
    return MeasurementRecord(q, basis, outcome, p), post


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise DomainError(f"fidelity between {a.num_qubits}- and {b.num_qubits}-qubit states")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(f, 1.0))


def random_state(num_qubits: int, seed: int | Sequence[int]) -> StateVector:
    """Haar-like random state from complex Gaussian amplitudes."""
    if num_qubits == 0:
        return basis_state(0, 0)
    rng = np.random.default_rng(seed)
    dim = 1 << num_qubits
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return StateVector(num_qubits, amps / np.linalg.norm(amps))


def random_ghz_state(num_qubits: int, seed: int | Sequence[int]) -> StateVector:
    """alpha0|0...0> + alpha1|1...1> with a random qubit (alpha0, alpha1)."""
    if num_qubits < 1:
        raise DomainError("a GHZ-type block needs at least one qubit")
    pair = random_state(1, seed).amplitudes
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0], amps[-1] = pair[0], pair[1]
    return StateVector(num_qubits, amps)


# --------------------------------------------------------------------------
# .qsv text format

def format_qsv(state: StateVector, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"qsv 1 {state.num_qubits}")
    for i in state.support():
        a = state.amplitudes[i]
        lines.append(f"{i} {a.real:.16e} {a.imag:.16e}")
    return "\n".join(lines) + "\n"


def parse_qsv(text: str) -> StateVector:
    header = None
    amps = None
    last = -1
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if header is None:
            if len(fields) != 3 or fields[0] != "qsv" or fields[1] != "1":
                raise ValueError(f"line {lineno}: expected 'qsv 1 <num_qubits>' header")
            header = int(fields[2])
            if not 0 <= header <= 30:
                raise ValueError(f"line {lineno}: unsupported qubit count {header}")
            amps = np.zeros(1 << header, dtype=np.complex128)
            continue
        if len(fields) != 3:
            raise ValueError(f"line {lineno}: expected '<index> <re> <im>'")
        idx = int(fields[0])
        if not last < idx < len(amps):
            raise ValueError(f"line {lineno}: index {idx} out of order or out of range")
        amps[idx] = complex(float(fields[1]), float(fields[2]))
        last = idx
    if header is None:
        raise ValueError("missing qsv header")
    return StateVector(header, amps)


def write_qsv(path: str | Path, state: StateVector, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_qsv(state, comments))


def read_qsv(path: str | Path) -> StateVector:
    return parse_qsv(Path(path).read_text())
