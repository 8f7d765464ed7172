"""Token vocabulary and conversion between token sequences and stimuli.

A value token packs one cycle's input assignments into a single integer:
the bits are sliced across input ports in declaration order, first-declared
port taking the least-significant bits.  The vocabulary is global (sized by
``wmax``), so a policy can emit values too wide for a given DUT; that
rejection path is the artifact's stand-in for a compile failure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .hdl import DutModel
from .sim import Stimulus

DEFAULT_WMAX = 4
DEFAULT_T_MAX = 8


@dataclass(frozen=True)
class Vocab:
    """Global token ids: values 0..2^wmax-1, then BOS, then EOS."""

    wmax: int = DEFAULT_WMAX

    @property
    def n_values(self) -> int:
        return 1 << self.wmax

    @property
    def bos(self) -> int:
        return self.n_values

    @property
    def eos(self) -> int:
        return self.n_values + 1

    @property
    def size(self) -> int:
        return self.n_values + 2


class CodecError(Exception):
    """First rule violated by a token sequence, with its position."""

    def __init__(self, kind: str, position: int, message: str):
        self.kind = kind  # not_well_formed | value_exceeds_input_width | empty_stimulus | too_long
        self.position = position
        super().__init__(f"{kind} at position {position}: {message}")


def total_input_width(dut: DutModel) -> int:
    return sum(p.width for p in dut.input_ports)


def is_well_formed(tokens, vocab: Vocab, t_max: int) -> bool:
    if len(tokens) < 2 or tokens[0] != vocab.bos or tokens[-1] != vocab.eos:
        return False
    interior = tokens[1:-1]
    if any(t in (vocab.bos, vocab.eos) or not 0 <= t < vocab.n_values for t in interior):
        return False
    return len(interior) <= t_max


def validate_and_decode(dut: DutModel, tokens, vocab: Vocab, t_max: int) -> Stimulus:
    """Decode a token sequence into a Stimulus or raise CodecError."""
    if len(tokens) < 2 or tokens[0] != vocab.bos:
        raise CodecError("not_well_formed", 0, "sequence must start with BOS")
    if tokens[-1] != vocab.eos:
        raise CodecError("not_well_formed", len(tokens) - 1, "sequence must end with EOS")
    interior = tokens[1:-1]
    for i, t in enumerate(interior):
        if t in (vocab.bos, vocab.eos) or not 0 <= t < vocab.n_values:
            raise CodecError("not_well_formed", i + 1, f"interior token {t} is not a value token")
    if not interior:
        raise CodecError("empty_stimulus", 1, "at least one cycle is required")
    if len(interior) > t_max:
        raise CodecError("too_long", t_max + 1, f"{len(interior)} cycles exceed limit {t_max}")

    width = total_input_width(dut)
    limit = 1 << width
    cycles = []
    for i, t in enumerate(interior):
        if t >= limit:
            raise CodecError("value_exceeds_input_width", i + 1,
                             f"value {t} needs more than {width} input bits")
        cycle = {}
        v = t
        for port in dut.input_ports:
            cycle[port.name] = v & ((1 << port.width) - 1)
            v >>= port.width
        cycles.append(cycle)
    return Stimulus(tuple(cycles))


def encode(dut: DutModel, stim: Stimulus, vocab: Vocab, t_max: int) -> list[int]:
    """Exact inverse of validate_and_decode on valid inputs."""
    if not 1 <= len(stim.cycles) <= t_max:
        raise ValueError(f"stimulus length {len(stim.cycles)} outside 1..{t_max}")
    tokens = [vocab.bos]
    for i, cycle in enumerate(stim.cycles):
        value = 0
        shift = 0
        for port in dut.input_ports:
            v = cycle[port.name]
            if not 0 <= v < (1 << port.width):
                raise ValueError(f"cycle {i}: value {v} out of range for port {port.name!r}")
            value |= v << shift
            shift += port.width
        if value >= vocab.n_values:
            raise ValueError(f"cycle {i}: packed value {value} exceeds vocabulary")
        tokens.append(value)
    tokens.append(vocab.eos)
    return tokens
