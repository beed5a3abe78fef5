"""Exhaustive verification and channel-equivalence checks.

``verify_all_branches`` forces every measurement outcome instead of sampling,
so a report with ``min_fidelity >= 1 - 1e-10`` is a proof of correctness for
that (config, input) instance.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import statevec as sv
from .layout import ProtocolConfig, RegisterLayout, build_layout
from .protocol import (
    FIDELITY_TOL,
    BranchReport,
    ProtocolFailure,
    _stage_qubits,
    attach_inputs,
    build_channel,
    check_inputs,
    finish_branch,
    plan_charlie_corrections,
    step2_entangle,
    step4_x_corrections,
    step6_z_corrections,
)
from .statevec import Basis, MeasurementRecord, StateVector

MAX_QUBITS = 22
EQUIV_TOL = 1e-10
PAULI_NAMES = ("I", "X", "Z", "XZ")


class ResourceLimitError(RuntimeError):
    """Problem size exceeds what exhaustive search is allowed to attempt."""


@dataclass
class VerificationReport:
    cfg: ProtocolConfig
    num_branches: int
    min_fidelity: float
    failing_branches: list[tuple[str, float]] = field(default_factory=list)
    empty_branches: int = 0
    total_probability: float = 0.0
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failing_branches and self.min_fidelity >= 1 - FIDELITY_TOL


def _project_tree(
    state: StateVector,
    live: list[int],
    targets: Sequence[int],
    basis: Basis,
    prefix: list[MeasurementRecord],
) -> Iterator[tuple[list[MeasurementRecord], StateVector | None]]:
    """Depth-first over outcome assignments, 0 before 1; empty subtrees yield once."""
    if not targets:
        yield prefix, state
        return
    q = targets[0]
    pos = live.index(q)
    rest_live = live[:pos] + live[pos + 1:]
    for o in (0, 1):
        p, sub = sv.project(state, pos, basis, o)
        rec = prefix + [MeasurementRecord(q, basis, o, p)]
        if sub is None:
            yield rec, None
            continue
        yield from _project_tree(sub, rest_live, targets[1:], basis, rec)


def enumerate_branches(
    cfg: ProtocolConfig, phi_a: StateVector, phi_b: StateVector
) -> Iterator[tuple[list[MeasurementRecord], BranchReport | None]]:
    """Yield every branch in ascending outcome-bitstring order.

    Empty (probability-zero) subtrees yield ``(partial_records, None)`` once.
    """
    layout = build_layout(cfg)
    check_inputs(layout, phi_a, phi_b)
    if layout.total_qubits > MAX_QUBITS:
        raise ResourceLimitError(
            f"{layout.total_qubits} qubits exceeds the {MAX_QUBITS}-qubit exhaustive bound"
        )
    state = step2_entangle(attach_inputs(build_channel(layout), phi_a, phi_b), layout)

    for ctrl, s3 in _project_tree(
        state, _stage_qubits(layout, "step3"), layout.controls, Basis.Z, []
    ):
        if s3 is None:
            yield ctrl, None
            continue
        s4, xplan = step4_x_corrections(s3, layout, [r.outcome for r in ctrl])
        for recs, s5 in _project_tree(
            s4, _stage_qubits(layout, "step5"), layout.sending, Basis.X, ctrl
        ):
            if s5 is None:
                yield recs, None
                continue
            s6, zplan = step6_z_corrections(s5, layout, [r.outcome for r in recs[len(ctrl):]])
            plan = xplan + zplan
            if not cfg.controlled:
                yield recs, _finish(s6, layout, phi_a, phi_b, recs, plan)
                continue
            for full, s7 in _project_tree(
                s6, _stage_qubits(layout, "charlie"), layout.charlie, Basis.X, recs
            ):
                if s7 is None:
                    yield full, None
                    continue
                cplan = plan_charlie_corrections(layout, full[-1].outcome)
                for q in cplan.z_targets:
                    s7 = sv.apply_z(s7, q)
                yield full, _finish(s7, layout, phi_a, phi_b, full, plan + cplan)


def _finish(state, layout, phi_a, phi_b, records, plan) -> BranchReport | None:
    try:
        return finish_branch(state, layout, phi_a, phi_b, records, plan)
    except ProtocolFailure:
        return None


def branch_count(layout: RegisterLayout) -> int:
    return 2 ** (len(layout.controls) + len(layout.sending) + len(layout.charlie))


def verify_all_branches(
    cfg: ProtocolConfig, phi_a: StateVector, phi_b: StateVector, tol: float = FIDELITY_TOL
) -> VerificationReport:
    t0 = time.perf_counter()
    layout = build_layout(cfg)
    total = branch_count(layout)
    report = VerificationReport(cfg=cfg, num_branches=total, min_fidelity=1.0)
    for records, br in enumerate_branches(cfg, phi_a, phi_b):
        key = "".join(str(r.outcome) for r in records)
        if br is None:
            if records[-1].probability == 0.0:
                report.empty_branches += 2 ** (len(_all_measured(layout)) - len(records))
                continue
            # non-product residual state
            report.failing_branches.append((key, 0.0))
            report.min_fidelity = 0.0
            continue
        report.total_probability += br.probability
        f = min(br.fidelity_alice, br.fidelity_bob)
        report.min_fidelity = min(report.min_fidelity, f)
        if f < 1 - tol:
            report.failing_branches.append((key, f))
    report.elapsed = time.perf_counter() - t0
    return report


def _all_measured(layout: RegisterLayout) -> tuple[int, ...]:
    return layout.controls + layout.sending + layout.charlie


# ---------------------------------------------------------------------------
# product-state check

def schmidt_product_check(state: StateVector, cut: Sequence[int], tol: float = 1e-9) -> bool:
    k = state.num_qubits
    left = sorted(set(cut))
    if any(not 0 <= q < k for q in left):
        raise sv.DomainError(f"cut {cut} out of range for {k} qubits")
    right = [q for q in range(k) if q not in left]
    if not left or not right:
        return True
    mat = np.transpose(state.amplitudes.reshape((2,) * k), left + right).reshape(
        1 << len(left), 1 << len(right)
    )
    s = np.linalg.svd(mat, compute_uv=False)
    return abs(s[0] ** 2 - state.norm_sq()) <= tol


def channel_structure_ok(cfg: ProtocolConfig, channel: StateVector | None = None) -> bool:
    """Support size 2^(n+m), flat amplitudes, controls mirror main bits in every term."""
    layout = build_layout(cfg)
    if channel is None:
        channel = build_channel(layout)
    k = channel.num_qubits
    support = channel.support()
    if len(support) != 2 ** (cfg.n + cfg.m) and not (cfg.alice_entangled or cfg.bob_entangled):
        return False
    amps = channel.amplitudes[support]
    if not np.allclose(amps, amps[0], atol=sv.AMP_TOL, rtol=0):
        return False
    for idx in support:
        bitv = [(idx >> (k - 1 - q)) & 1 for q in range(k)]
        for c, mains in layout.mirror_map.items():
            if any(bitv[c] != bitv[q] for q in mains):
                return False
    return True


# ---------------------------------------------------------------------------
# equivalence up to qubit relabelling

@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    permutation: tuple[int, ...] | None = None
    local_paulis: tuple[str, ...] | None = None
    phase: complex | None = None
    reason: str = ""


def _marginals(t: np.ndarray) -> np.ndarray:
    k = t.ndim
    p = np.abs(t) ** 2
    return np.array([p.sum(axis=tuple(a for a in range(k) if a != i)) for i in range(k)])


def _pair_marginals(t: np.ndarray) -> np.ndarray:
    k = t.ndim
    p = np.abs(t) ** 2
    out = np.zeros((k, k, 2, 2))
    for i, j in itertools.combinations(range(k), 2):
        m = p.sum(axis=tuple(a for a in range(k) if a not in (i, j)))
        out[i, j] = m
        out[j, i] = m.T
    return out


_POPCOUNT = np.array([bin(i).count("1") for i in range(1 << 12)], dtype=np.int64)


def _pauli_fit(ap: np.ndarray, b: np.ndarray, k: int, tol: float):
    """Lexicographically-first (f, z, phase) with B(x^f) = phase (-1)^{z.x} A'(x)."""
    n = 1 << k
    idx = np.arange(n)
    flips = idx[:, None] ^ idx[None, :]  # row f, column x -> x ^ f
    mod_ok = np.all(np.abs(np.abs(b[flips]) - np.abs(ap)[None, :]) <= tol, axis=1)
    support = np.flatnonzero(np.abs(ap) > tol)
    if support.size == 0:
        return None
    x0 = support[0]
    best = None
    for f in np.flatnonzero(mod_ok):
        r = b[support ^ f] / ap[support]
        t = r / r[0]
        sgn = np.rint(t.real)
        if np.any(np.abs(t - sgn) > tol) or np.any(np.abs(sgn) != 1):
            continue
        want = (sgn < 0).astype(np.int64)
        par = _POPCOUNT[idx[:, None] & (support ^ x0)[None, :]] & 1
        zs = np.flatnonzero(np.all(par == want[None, :], axis=1))
        for z in zs:
            key = _pauli_key(int(f), int(z), k)
            if best is None or key < best[0]:
                phase = r[0] * (-1) ** int(_POPCOUNT[z & x0] & 1)
                best = (key, int(f), int(z), complex(phase))
    return best


def _pauli_key(f: int, z: int, k: int) -> tuple[int, ...]:
    return tuple(
        ((f >> (k - 1 - j)) & 1) + 2 * ((z >> (k - 1 - j)) & 1) for j in range(k)
    )


def equivalent_up_to_relabeling(
    a: StateVector, b: StateVector, allow_local_paulis: bool = False, tol: float = EQUIV_TOL
) -> EquivalenceResult:
    """Search qubit permutations (and optionally local Paulis) mapping ``a`` onto ``b``.

    The witness satisfies ``b = phase * P(perm(a))`` where ``perm(a)`` puts a's
    qubit ``perm[j]`` at position ``j`` and ``P`` applies ``local_paulis[j]``
    (``XZ`` meaning Z first, then X) to qubit ``j``. Permutations are tried in
    lexicographic order and Pauli assignments in I < X < Z < XZ order; the
    first witness found is returned.
    """
    if a.num_qubits != b.num_qubits:
        raise sv.DomainError(f"qubit-count mismatch: {a.num_qubits} vs {b.num_qubits}")
    k = a.num_qubits
    limit = 8 if allow_local_paulis else 12
    if k > limit:
        raise ResourceLimitError(f"{k} qubits exceeds the search bound of {limit}")

    ta = a.amplitudes.reshape((2,) * k) if k else a.amplitudes
    tb = b.amplitudes
    if k == 0:
        ok = abs(abs(tb[0]) - abs(ta[0])) <= tol
        return EquivalenceResult(ok, (), () if allow_local_paulis else None,
                                 complex(tb[0] / ta[0]) if ok else None)

    ma, mb = _marginals(ta), _marginals(tb.reshape((2,) * k))
    pa, pb = _pair_marginals(ta), _pair_marginals(tb.reshape((2,) * k))
    if allow_local_paulis:
        ma, mb = np.sort(ma, axis=1), np.sort(mb, axis=1)
        pa = np.sort(pa.reshape(k, k, 4), axis=2)
        pb = np.sort(pb.reshape(k, k, 4), axis=2)
    sig_tol = 1e-9

    def compatible(j: int, i: int, perm: list[int]) -> bool:
        if not np.allclose(ma[i], mb[j], atol=sig_tol, rtol=0):
            return False
        for jj, ii in enumerate(perm):
            if not np.allclose(pa[ii, i], pb[jj, j], atol=sig_tol, rtol=0):
                return False
        return True

    def leaf(perm: list[int]):
        ap = np.transpose(ta, perm).reshape(-1)
        if allow_local_paulis:
            fit = _pauli_fit(ap, tb, k, tol)
            if fit is None:
                return None
            key, _, _, phase = fit
            return EquivalenceResult(True, tuple(perm), tuple(PAULI_NAMES[c] for c in key), phase)
        i = int(np.argmax(np.abs(tb)))
        if abs(ap[i]) <= tol:
            return None
        phase = tb[i] / ap[i]
        if abs(abs(phase) - 1) > tol or not np.allclose(phase * ap, tb, atol=tol, rtol=0):
            return None
        return EquivalenceResult(True, tuple(perm), None, complex(phase))

    def search(perm: list[int], used: set[int]):
        j = len(perm)
        if j == k:
            return leaf(perm)
        for i in range(k):
            if i in used or not compatible(j, i, perm):
                continue
            perm.append(i)
            used.add(i)
            found = search(perm, used)
            perm.pop()
            used.discard(i)
            if found is not None:
                return found
        return None

    found = search([], set())
    if found is None:
        what = "permutation and local Paulis" if allow_local_paulis else "permutation"
        return EquivalenceResult(False, reason=f"no {what} maps the first state onto the second")
    return found


def apply_relabeling(state: StateVector, result: EquivalenceResult) -> StateVector:
    """Apply an equivalence witness to ``state`` (used to check witnesses)."""
    k = state.num_qubits
    amps = np.transpose(state.amplitudes.reshape((2,) * k), result.permutation).reshape(-1)
    out = StateVector(k, amps)
    for q, name in enumerate(result.local_paulis or ()):
        if "Z" in name:
            out = sv.apply_z(out, q)
        if "X" in name:
            out = sv.apply_x(out, q)
    phase = 1.0 if result.phase is None else result.phase
    return StateVector(k, out.amplitudes * phase)
