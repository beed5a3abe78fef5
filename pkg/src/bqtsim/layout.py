"""Register layout and wiring plan for one protocol instance.

Global register order (left to right in every ket)::

    main_bob | main_alice | charlie | control_a | control_b | sending_A | sending_B

``main_bob`` receives Alice's n-qubit state and is mirrored by ``control_a``;
``main_alice`` receives Bob's m-qubit state and is mirrored by ``control_b``.
A side whose sending state is a GHZ-type block gets a single control qubit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """A ProtocolConfig invariant does not hold."""


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    m: int
    alice_entangled: bool = False
    bob_entangled: bool = False
    controlled: bool = False
    charlie_mask: str | None = None
    seed: int = 0

    def __post_init__(self):
        validate_config(self)

    @property
    def num_controls(self) -> int:
        return _side_controls(self.n, self.alice_entangled) + _side_controls(
            self.m, self.bob_entangled
        )


def _side_controls(count: int, entangled: bool) -> int:
    return 1 if entangled else count


def validate_config(cfg: ProtocolConfig) -> None:
    if cfg.n < 0 or cfg.m < 0:
        raise ConfigError(f"n and m must be non-negative (got n={cfg.n}, m={cfg.m})")
    if cfg.n + cfg.m < 1:
        raise ConfigError("n + m >= 1 violated: nothing to teleport")
    if cfg.alice_entangled and cfg.n < 2:
        raise ConfigError("alice_entangled => n >= 2 violated")
    if cfg.bob_entangled and cfg.m < 2:
        raise ConfigError("bob_entangled => m >= 2 violated")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed must fit in 64 unsigned bits (got {cfg.seed})")
    if cfg.controlled:
        mask = cfg.charlie_mask
        if mask is None:
            raise ConfigError("charlie_mask is required when controlled")
        if any(c not in "01" for c in mask):
            raise ConfigError(f"charlie_mask must be a bitstring (got {mask!r})")
        if len(mask) != cfg.num_controls:
            raise ConfigError(
                f"charlie_mask length {len(mask)} != number of control qubits {cfg.num_controls}"
            )
        if "1" not in mask:
            logger.warning("charlie_mask %s leaves Charlie's qubit decoupled", mask)
    elif cfg.charlie_mask is not None:
        raise ConfigError("charlie_mask given but controlled is false")


@dataclass(frozen=True)
class Block:
    """One side's sending register together with the channel qubits serving it."""

    side: str  # "A" (Alice -> Bob) or "B" (Bob -> Alice)
    entangled: bool
    main: tuple[int, ...]
    controls: tuple[int, ...]
    sending: tuple[int, ...]

    def control_for(self, sending_qubit: int) -> int | None:
        if self.entangled:
            return self.controls[0] if sending_qubit == self.sending[0] else None
        return self.controls[self.sending.index(sending_qubit)]


@dataclass(frozen=True)
class RegisterLayout:
    cfg: ProtocolConfig
    main_bob: tuple[int, ...]
    main_alice: tuple[int, ...]
    charlie: tuple[int, ...]
    control_a: tuple[int, ...]
    control_b: tuple[int, ...]
    sending_a: tuple[int, ...]
    sending_b: tuple[int, ...]
    labels: tuple[str, ...]
    hadamard_targets: tuple[int, ...]
    channel_cnots: tuple[tuple[int, int], ...]
    step2_cnots: tuple[tuple[int, int], ...]
    mirror_map: dict[int, tuple[int, ...]] = field(hash=False)
    blocks: tuple[Block, ...]

    @property
    def main(self) -> tuple[int, ...]:
        return self.main_bob + self.main_alice

    @property
    def controls(self) -> tuple[int, ...]:
        return self.control_a + self.control_b

    @property
    def sending(self) -> tuple[int, ...]:
        return self.sending_a + self.sending_b

    @property
    def channel_qubits(self) -> int:
        return len(self.main) + len(self.charlie) + len(self.controls)

    @property
    def total_qubits(self) -> int:
        return self.channel_qubits + len(self.sending)

    @property
    def block_map(self) -> dict[int, int]:
        """Qubit index -> position of its block in ``blocks``."""
        out = {}
        for bi, blk in enumerate(self.blocks):
            for q in blk.main + blk.controls + blk.sending:
                out[q] = bi
        return out

    def masked_controls(self) -> tuple[int, ...]:
        if not self.cfg.controlled:
            return ()
        return tuple(c for c, bit in zip(self.controls, self.cfg.charlie_mask) if bit == "1")


def build_layout(cfg: ProtocolConfig) -> RegisterLayout:
    validate_config(cfg)
    n, m = cfg.n, cfg.m
    nca = _side_controls(n, cfg.alice_entangled)
    ncb = _side_controls(m, cfg.bob_entangled)

    pos = 0

    def take(count):
        nonlocal pos
        r = tuple(range(pos, pos + count))
        pos += count
        return r

    main_bob = take(n)
    main_alice = take(m)
    charlie = take(1 if cfg.controlled else 0)
    control_a = take(nca)
    control_b = take(ncb)
    sending_a = take(n)
    sending_b = take(m)

    labels = (
        [f"b{i}" for i in range(n)]
        + [f"a{i}" for i in range(m)]
        + ["C"] * len(charlie)
        + (["c_a"] if cfg.alice_entangled else [f"c_a{i}" for i in range(nca)])
        + (["c_b"] if cfg.bob_entangled else [f"c_b{i}" for i in range(ncb)])
        + [f"A{i}" for i in range(n)]
        + [f"B{i}" for i in range(m)]
    )

    blocks = []
    if n:
        blocks.append(Block("A", cfg.alice_entangled, main_bob, control_a, sending_a))
    if m:
        blocks.append(Block("B", cfg.bob_entangled, main_alice, control_b, sending_b))

    hadamards: list[int] = []
    channel: list[tuple[int, int]] = []
    step2: list[tuple[int, int]] = []
    mirror: dict[int, tuple[int, ...]] = {}
    for blk in blocks:
        if blk.entangled:
            head = blk.main[0]
            hadamards.append(head)
            channel.extend((head, q) for q in blk.main[1:])
            channel.append((head, blk.controls[0]))
            step2.append((blk.sending[0], blk.controls[0]))
            mirror[blk.controls[0]] = blk.main
        else:
            hadamards.extend(blk.main)
            channel.extend(zip(blk.main, blk.controls))
            step2.extend(zip(blk.sending, blk.controls))
            for c, q in zip(blk.controls, blk.main):
                mirror[c] = (q,)

    layout = RegisterLayout(
        cfg=cfg,
        main_bob=main_bob,
        main_alice=main_alice,
        charlie=charlie,
        control_a=control_a,
        control_b=control_b,
        sending_a=sending_a,
        sending_b=sending_b,
        labels=tuple(labels),
        hadamard_targets=tuple(hadamards),
        channel_cnots=tuple(channel),
        step2_cnots=tuple(step2),
        mirror_map=mirror,
        blocks=tuple(blocks),
    )
    if cfg.controlled:
        charlie_cnots = tuple((c, charlie[0]) for c in layout.masked_controls())
        layout = replace(layout, channel_cnots=layout.channel_cnots + charlie_cnots)
    return layout


def channel_size(n: int, m: int, alice_entangled=False, bob_entangled=False, controlled=False) -> int:
    """Closed-form channel qubit count, independent of build_layout."""
    if alice_entangled and bob_entangled:
        size = n + m + 2
    elif alice_entangled:
        size = n + 2 * m + 1
    elif bob_entangled:
        size = 2 * n + m + 1
    else:
        size = 2 * (n + m)
    return size + (1 if controlled else 0)
