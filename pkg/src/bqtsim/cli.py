"""Command-line front end.

Subcommands::

    bqtsim run      sample one protocol branch and print a run report
    bqtsim verify   enumerate every branch for seeded random inputs
    bqtsim channel  write the channel state as a .qsv file
    bqtsim compare  test two .qsv states for equivalence up to relabelling

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Reports are JSON documents with sorted keys; timing is included only with
``--timing`` so that identical flags give byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from . import statevec as sv
from .layout import ConfigError, ProtocolConfig, build_layout
from .oracle import ResourceLimitError, equivalent_up_to_relabeling, verify_all_branches
from .protocol import (
    FIDELITY_TOL,
    BranchReport,
    ProtocolFailure,
    build_channel,
    input_states,
    protocol_rng,
    run,
)

logger = logging.getLogger("bqtsim")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# report documents

def state_to_list(state: sv.StateVector) -> dict:
    return {
        "num_qubits": state.num_qubits,
        "amplitudes": [
            [i, float(state.amplitudes[i].real), float(state.amplitudes[i].imag)]
            for i in state.support()
        ],
    }


def state_from_list(doc: dict) -> sv.StateVector:
    amps = np.zeros(1 << doc["num_qubits"], dtype=np.complex128)
    for i, re, im in doc["amplitudes"]:
        amps[i] = complex(re, im)
    return sv.StateVector(doc["num_qubits"], amps)


def branch_to_dict(br: BranchReport, labels) -> dict:
    return {
        "control_outcomes": br.control_outcomes,
        "sending_outcomes": br.sending_outcomes,
        "charlie_outcome": br.charlie_outcome,
        "probability": br.probability,
        "corrections": {
            "x_targets": list(br.corrections.x_targets),
            "z_targets": list(br.corrections.z_targets),
        },
        "alice_received": state_to_list(br.alice_received),
        "bob_received": state_to_list(br.bob_received),
        "fidelity_alice": br.fidelity_alice,
        "fidelity_bob": br.fidelity_bob,
        "measurements": [
            {
                "qubit": r.qubit,
                "label": labels[r.qubit],
                "basis": r.basis.value,
                "outcome": r.outcome,
                "probability": r.probability,
            }
            for r in br.measurements
        ],
    }


@dataclass
class RunReport:
    tool_version: str
    config: dict
    phi_a: dict
    phi_b: dict
    status: str
    branch: dict | None = None
    audit: list | None = None
    duration: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


def config_to_dict(cfg: ProtocolConfig) -> dict:
    return asdict(cfg)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    # write-then-rename so a failed run never leaves a partial file behind
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# argument handling

def _add_config_flags(p: argparse.ArgumentParser, with_inputs: bool = True) -> None:
    p.add_argument("--n", type=int, required=True, help="qubits Alice sends")
    p.add_argument("--m", type=int, required=True, help="qubits Bob sends")
    p.add_argument("--entangled-a", action="store_true", help="Alice's state is GHZ-type")
    p.add_argument("--entangled-b", action="store_true", help="Bob's state is GHZ-type")
    p.add_argument("--controlled", action="store_true", help="add Charlie as supervisor")
    p.add_argument("--charlie-mask", help="bitstring over control qubits wired to Charlie")
    p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    p.add_argument("--out", help="write the output document to this path")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in reports")
    if with_inputs:
        p.add_argument("--random-inputs", action="store_true", help="seeded random inputs (default)")
        p.add_argument("--phi-a", help=".qsv file with Alice's n-qubit state")
        p.add_argument("--phi-b", help=".qsv file with Bob's m-qubit state")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bqtsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bqtsim {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="sample one protocol branch")
    _add_config_flags(p_run)

    p_ver = sub.add_parser("verify", help="exhaustively check every branch")
    _add_config_flags(p_ver, with_inputs=False)
    p_ver.add_argument("--trials", type=int, default=1, help="random input pairs to check")

    p_ch = sub.add_parser("channel", help="write the channel state as .qsv")
    _add_config_flags(p_ch, with_inputs=False)

    p_cmp = sub.add_parser("compare", help="equivalence of two .qsv states")
    p_cmp.add_argument("file_a")
    p_cmp.add_argument("file_b")
    p_cmp.add_argument("--allow-local-paulis", action="store_true")
    p_cmp.add_argument("--out")
    return parser


def config_from_args(args) -> ProtocolConfig:
    if args.charlie_mask is not None and not args.controlled:
        raise ConfigError("--charlie-mask requires --controlled")
    return ProtocolConfig(
        n=args.n,
        m=args.m,
        alice_entangled=args.entangled_a,
        bob_entangled=args.entangled_b,
        controlled=args.controlled,
        charlie_mask=args.charlie_mask,
        seed=args.seed,
    )


def _load_inputs(args, cfg: ProtocolConfig):
    if args.phi_a is None and args.phi_b is None:
        return input_states(cfg)
    if args.random_inputs:
        raise UsageError("--random-inputs cannot be combined with --phi-a/--phi-b")
    empty = sv.basis_state(0, 0)
    phi_a = sv.read_qsv(args.phi_a) if args.phi_a else (empty if cfg.n == 0 else None)
    phi_b = sv.read_qsv(args.phi_b) if args.phi_b else (empty if cfg.m == 0 else None)
    if phi_a is None or phi_b is None:
        raise UsageError("both --phi-a and --phi-b are required when either is given")
    return phi_a, phi_b


# ---------------------------------------------------------------------------
# commands

def cmd_run(args) -> int:
    cfg = config_from_args(args)
    layout = build_layout(cfg)
    phi_a, phi_b = _load_inputs(args, cfg)
    t0 = time.perf_counter()
    report = RunReport(
        tool_version=__version__,
        config=config_to_dict(cfg),
        phi_a=state_to_list(phi_a),
        phi_b=state_to_list(phi_b),
        status="ok",
    )
    try:
        br = run(cfg, phi_a, phi_b, protocol_rng(cfg.seed))
    except ProtocolFailure as exc:
        report.status = "protocol-failure"
        report.audit = [
            {"qubit": r.qubit, "basis": r.basis.value, "outcome": r.outcome,
             "probability": r.probability}
            for r in exc.audit
        ]
        code = EXIT_FAIL
    else:
        report.branch = branch_to_dict(br, layout.labels)
        code = EXIT_OK if br.succeeded(FIDELITY_TOL) else EXIT_FAIL
        if code:
            report.status = "low-fidelity"
    if args.timing:
        report.duration = time.perf_counter() - t0
    _emit(report.to_json(), args.out)
    return code


def cmd_verify(args) -> int:
    cfg = config_from_args(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    t0 = time.perf_counter()
    trials = []
    passed = True
    for trial in range(args.trials):
        phi_a, phi_b = input_states(cfg, cfg.seed, trial)
        rep = verify_all_branches(cfg, phi_a, phi_b)
        passed &= rep.passed
        trials.append(
            {
                "trial": trial,
                "num_branches": rep.num_branches,
                "empty_branches": rep.empty_branches,
                "min_fidelity": rep.min_fidelity,
                "total_probability": rep.total_probability,
                "failing_branches": [list(fb) for fb in rep.failing_branches],
                "passed": rep.passed,
            }
        )
    doc: dict[str, Any] = {
        "tool_version": __version__,
        "config": config_to_dict(cfg),
        "trials": trials,
        "passed": passed,
    }
    if args.timing:
        doc["elapsed"] = time.perf_counter() - t0
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_channel(args) -> int:
    cfg = config_from_args(args)
    layout = build_layout(cfg)
    state = build_channel(layout)
    comments = [
        f"bqtsim {__version__} channel n={cfg.n} m={cfg.m}"
        + (" entangled-a" if cfg.alice_entangled else "")
        + (" entangled-b" if cfg.bob_entangled else "")
        + (f" controlled mask={cfg.charlie_mask}" if cfg.controlled else ""),
        "qubits: " + " ".join(layout.labels[: layout.channel_qubits]),
    ]
    _emit(sv.format_qsv(state, comments), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    a = sv.read_qsv(args.file_a)
    b = sv.read_qsv(args.file_b)
    doc: dict[str, Any] = {"file_a": args.file_a, "file_b": args.file_b,
                           "num_qubits": [a.num_qubits, b.num_qubits]}
    try:
        res = equivalent_up_to_relabeling(a, b, args.allow_local_paulis)
    except (sv.DomainError, ResourceLimitError) as exc:
        doc.update(equivalent=None, error=str(exc))
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_USAGE
    doc.update(
        equivalent=res.equivalent,
        permutation=None if res.permutation is None else list(res.permutation),
        local_paulis=None if res.local_paulis is None else list(res.local_paulis),
        phase=None if res.phase is None else [res.phase.real, res.phase.imag],
        reason=res.reason,
    )
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if res.equivalent else EXIT_FAIL


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "channel": cmd_channel, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError, ResourceLimitError, ValueError, OSError) as exc:
        print(f"bqtsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
