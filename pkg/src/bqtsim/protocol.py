"""Bidirectional (controlled) teleportation over an H/CNOT channel.

The pipeline, each stage a plain function over :class:`StateVector`:

1. ``build_channel``          Hadamards on main qubits, CNOTs onto controls (and Charlie)
2. ``step2_entangle``         sending qubits CNOT onto their control qubits
3. ``step3_measure_controls`` Z-measure every control qubit
4. ``step4_x_corrections``    X on the main qubits mirrored by controls that read 1
5. ``step5_measure_sending``  X-measure every sending qubit
6. ``step6_z_corrections``    Z on main qubits whose sending partner read |->
   ``charlie_release``        (controlled only) Charlie X-measures and releases
7. ``step7_extract``          split the main register into the two received states

Measured qubits leave the register. Main qubits sit at the front of the
global order, so their positions never move while ancillas are consumed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import statevec as sv
from .layout import ProtocolConfig, RegisterLayout, build_layout
from .statevec import Basis, MeasurementRecord, StateVector

PRODUCT_TOL = 1e-9
FIDELITY_TOL = 1e-10


class ProtocolFailure(RuntimeError):
    """The residual main register did not factor into the two received states."""

    def __init__(self, message: str, audit: Sequence[MeasurementRecord] = ()):
        super().__init__(message)
        self.audit = tuple(audit)


@dataclass(frozen=True)
class CorrectionPlan:
    x_targets: tuple[int, ...] = ()
    z_targets: tuple[int, ...] = ()

    def __add__(self, other: "CorrectionPlan") -> "CorrectionPlan":
        return CorrectionPlan(self.x_targets + other.x_targets, self.z_targets + other.z_targets)


@dataclass(frozen=True, eq=False)
class BranchReport:
    control_outcomes: str
    sending_outcomes: str
    charlie_outcome: int | None
    probability: float
    corrections: CorrectionPlan
    alice_received: StateVector
    bob_received: StateVector
    fidelity_alice: float
    fidelity_bob: float
    measurements: tuple[MeasurementRecord, ...] = field(default=())

    @property
    def outcome_key(self) -> str:
        tail = "" if self.charlie_outcome is None else str(self.charlie_outcome)
        return self.control_outcomes + self.sending_outcomes + tail

    def succeeded(self, tol: float = FIDELITY_TOL) -> bool:
        return self.fidelity_alice >= 1 - tol and self.fidelity_bob >= 1 - tol


# ---------------------------------------------------------------------------
# stage bookkeeping

def _stage_qubits(layout: RegisterLayout, stage: str) -> list[int]:
    """Global indices still in the register at the start of ``stage``."""
    head = list(layout.main + layout.charlie)
    if stage in ("step2", "step3"):
        return list(range(layout.total_qubits))
    if stage in ("step4", "step5"):
        return head + list(layout.sending)
    if stage in ("step6", "charlie"):
        return head
    if stage == "step7":
        return list(layout.main)
    raise ValueError(f"unknown stage {stage!r}")


def _expect(state: StateVector, layout: RegisterLayout, stage: str) -> list[int]:
    live = _stage_qubits(layout, stage)
    if state.num_qubits != len(live):
        raise sv.DomainError(
            f"{stage} expects a {len(live)}-qubit register, got {state.num_qubits}"
        )
    return live


def _measure_group(
    state: StateVector,
    live: list[int],
    targets: Sequence[int],
    basis: Basis,
    rng: np.random.Generator | None,
    forced: Sequence[int] | None,
) -> tuple[list[MeasurementRecord], StateVector | None]:
    if forced is not None and len(forced) != len(targets):
        raise sv.DomainError(f"{len(forced)} forced outcomes for {len(targets)} qubits")
    if forced is None and rng is None:
        raise sv.DomainError("either an rng or forced outcomes must be supplied")
    live = list(live)
    records = []
    for i, q in enumerate(targets):
        pos = live.index(q)
        if forced is None:
            rec, state = sv.measure(state, pos, basis, rng.random())
            rec = MeasurementRecord(q, rec.basis, rec.outcome, rec.probability)
        else:
            p, state = sv.project(state, pos, basis, forced[i])
            rec = MeasurementRecord(q, basis, int(forced[i]), p)
            if state is None:
                records.append(rec)
                return records, None
        records.append(rec)
        live.pop(pos)
    return records, state


def bits(records: Sequence[MeasurementRecord]) -> str:
    return "".join(str(r.outcome) for r in records)


# ---------------------------------------------------------------------------
# steps

def build_channel(cfg: ProtocolConfig | RegisterLayout) -> StateVector:
    layout = cfg if isinstance(cfg, RegisterLayout) else build_layout(cfg)
    state = sv.basis_state(layout.channel_qubits, 0)
    for q in layout.hadamard_targets:
        state = sv.apply_h(state, q)
    for c, t in layout.channel_cnots:
        state = sv.apply_cnot(state, c, t)
    return state


def attach_inputs(channel: StateVector, phi_a: StateVector, phi_b: StateVector) -> StateVector:
    return sv.tensor(sv.tensor(channel, phi_a), phi_b)


def step2_entangle(state: StateVector, layout: RegisterLayout) -> StateVector:
    _expect(state, layout, "step2")
    for c, t in layout.step2_cnots:
        state = sv.apply_cnot(state, c, t)
    return state


def step3_measure_controls(state, layout, rng=None, forced=None):
    live = _expect(state, layout, "step3")
    return _measure_group(state, live, layout.controls, Basis.Z, rng, forced)


def plan_x_corrections(layout: RegisterLayout, outcomes: Sequence[int] | str) -> CorrectionPlan:
    targets = []
    for c, bit in zip(layout.controls, outcomes):
        if int(bit):
            # a GHZ block's single control flips every main qubit of the block
            targets.extend(layout.mirror_map[c])
    return CorrectionPlan(x_targets=tuple(targets))


def step4_x_corrections(state, layout, outcomes):
    _expect(state, layout, "step4")
    plan = plan_x_corrections(layout, outcomes)
    for q in plan.x_targets:
        state = sv.apply_x(state, q)
    return state, plan


def step5_measure_sending(state, layout, rng=None, forced=None):
    live = _expect(state, layout, "step5")
    return _measure_group(state, live, layout.sending, Basis.X, rng, forced)


def plan_z_corrections(layout: RegisterLayout, outcomes: Sequence[int] | str) -> CorrectionPlan:
    minus = {q for q, bit in zip(layout.sending, outcomes) if int(bit)}
    targets = []
    for blk in layout.blocks:
        if blk.entangled:
            if sum(q in minus for q in blk.sending) % 2:
                targets.append(blk.main[0])
        else:
            targets.extend(m for s, m in zip(blk.sending, blk.main) if s in minus)
    return CorrectionPlan(z_targets=tuple(targets))


def step6_z_corrections(state, layout, outcomes):
    _expect(state, layout, "step6")
    plan = plan_z_corrections(layout, outcomes)
    for q in plan.z_targets:
        state = sv.apply_z(state, q)
    return state, plan


def plan_charlie_corrections(layout: RegisterLayout, outcome: int) -> CorrectionPlan:
    if not outcome:
        return CorrectionPlan()
    # one Z per masked control, on the first main qubit it mirrors
    return CorrectionPlan(z_targets=tuple(layout.mirror_map[c][0] for c in layout.masked_controls()))


def charlie_release(state, layout, rng=None, forced=None):
    if not layout.cfg.controlled:
        raise sv.DomainError("charlie_release needs a controlled configuration")
    live = _expect(state, layout, "charlie")
    records, state = _measure_group(
        state, live, layout.charlie, Basis.X, rng, None if forced is None else [forced]
    )
    rec = records[0]
    plan = plan_charlie_corrections(layout, rec.outcome)
    if state is not None:
        for q in plan.z_targets:
            state = sv.apply_z(state, q)
    return rec, state, plan


def split_product(state: StateVector, n_left: int, tol: float = PRODUCT_TOL):
    """Factor ``state`` across the cut after ``n_left`` qubits, or None if entangled."""
    n_right = state.num_qubits - n_left
    mat = state.amplitudes.reshape(1 << n_left, 1 << n_right)
    top = np.linalg.svd(mat, compute_uv=False)[0]
    if abs(top - 1.0) > tol:
        return None
    i, j = np.unravel_index(np.argmax(np.abs(mat)), mat.shape)
    left = mat[:, j] / np.linalg.norm(mat[:, j])
    right = mat[i, :] / np.linalg.norm(mat[i, :])
    return StateVector(n_left, left), StateVector(n_right, right)


def step7_extract(state, layout, audit: Sequence[MeasurementRecord] = ()):
    _expect(state, layout, "step7")
    parts = split_product(state, len(layout.main_bob))
    if parts is None:
        raise ProtocolFailure("main register is entangled across the Bob|Alice cut", audit)
    return parts


# ---------------------------------------------------------------------------
# full pipeline

def check_inputs(layout: RegisterLayout, phi_a: StateVector, phi_b: StateVector) -> None:
    cfg = layout.cfg
    for name, phi, size, ent in (
        ("phi_a", phi_a, cfg.n, cfg.alice_entangled),
        ("phi_b", phi_b, cfg.m, cfg.bob_entangled),
    ):
        if phi.num_qubits != size:
            raise sv.DomainError(f"{name} has {phi.num_qubits} qubits, expected {size}")
        if abs(phi.norm_sq() - 1.0) > sv.NORM_CONTRACT_TOL:
            raise sv.ContractError(f"{name} is not normalised")
        if ent:
            off = phi.amplitudes[1:-1]
            if np.any(np.abs(off) > sv.AMP_TOL):
                raise sv.DomainError(f"{name} is declared entangled but is not GHZ-type")


def finish_branch(
    state: StateVector,
    layout: RegisterLayout,
    phi_a: StateVector,
    phi_b: StateVector,
    records: Sequence[MeasurementRecord],
    corrections: CorrectionPlan,
) -> BranchReport:
    bob_rx, alice_rx = step7_extract(state, layout, records)
    nc = len(layout.controls)
    ns = len(layout.sending)
    charlie = records[nc + ns].outcome if layout.cfg.controlled else None
    return BranchReport(
        control_outcomes=bits(records[:nc]),
        sending_outcomes=bits(records[nc:nc + ns]),
        charlie_outcome=charlie,
        probability=float(np.prod([r.probability for r in records])),
        corrections=corrections,
        alice_received=alice_rx,
        bob_received=bob_rx,
        fidelity_alice=sv.fidelity(alice_rx, phi_b),
        fidelity_bob=sv.fidelity(bob_rx, phi_a),
        measurements=tuple(records),
    )


def run(
    cfg: ProtocolConfig,
    phi_a: StateVector,
    phi_b: StateVector,
    rng: np.random.Generator | None = None,
) -> BranchReport:
    """Execute every step once, sampling outcomes from ``rng`` (seeded from cfg)."""
    layout = build_layout(cfg)
    check_inputs(layout, phi_a, phi_b)
    if rng is None:
        rng = protocol_rng(cfg.seed)

    state = attach_inputs(build_channel(layout), phi_a, phi_b)
    state = step2_entangle(state, layout)
    ctrl, state = step3_measure_controls(state, layout, rng)
    state, xplan = step4_x_corrections(state, layout, bits(ctrl))
    send, state = step5_measure_sending(state, layout, rng)
    state, zplan = step6_z_corrections(state, layout, bits(send))
    records = ctrl + send
    plan = xplan + zplan
    if cfg.controlled:
        rec, state, cplan = charlie_release(state, layout, rng)
        records.append(rec)
        plan = plan + cplan
    return finish_branch(state, layout, phi_a, phi_b, records, plan)


def protocol_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, 2])


def input_states(cfg: ProtocolConfig, seed: int | None = None, trial: int = 0):
    """Seeded random inputs; GHZ-type for entangled sides."""
    seed = cfg.seed if seed is None else seed
    make_a = sv.random_ghz_state if cfg.alice_entangled else sv.random_state
    make_b = sv.random_ghz_state if cfg.bob_entangled else sv.random_state
    phi_a = make_a(cfg.n, [seed, trial, 0]) if cfg.n else sv.basis_state(0, 0)
    phi_b = make_b(cfg.m, [seed, trial, 1]) if cfg.m else sv.basis_state(0, 0)
    return phi_a, phi_b
