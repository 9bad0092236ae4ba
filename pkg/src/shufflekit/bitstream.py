"""Metered random-bit source.

Every algorithm in this package draws randomness exclusively through a
:class:`BitSource`, whose unit of consumption is the single unbiased bit.
The source keeps an exact count of bits handed out, supports deterministic
seeding, recording/replaying bit tapes, and deriving independent substreams
for parallel tasks.

The underlying word generator is splitmix64: 64-bit state, one output word
per step, passes standard statistical test batteries, and is trivially
seedable and splittable.  Bits are consumed most-significant-first from
generator words; leftover bits within a word are buffered, never discarded.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Optional

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit bijective avalanche mix."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state by one step; returns (new_state, word)."""
    state = (state + _GOLDEN) & MASK64
    return state, mix64(state)


def substream_seed(seed: int, index: int) -> int:
    """Seed of the substream with the given index, derived from a parent seed.

    Deterministic in (seed, index); distinct indices give distinct,
    statistically independent-looking streams.
    """
    if index < 0:
        raise ValueError("substream index must be non-negative")
    return mix64((seed + _GOLDEN * (index + 1)) & MASK64)


class TapeExhausted(Exception):
    """Raised when a replayed tape runs out of bits."""


@dataclass
class DrawTape:
    """A recorded sequence of bits, replayable through any algorithm.

    Replaying a tape reproduces the identical output permutation and the
    identical bits_consumed count as the run that recorded it.
    """

    bits: List[int] = field(default_factory=list)
    cursor: int = 0

    def __len__(self) -> int:
        return len(self.bits)

    def rewind(self) -> None:
        self.cursor = 0


def write_tape(path, tape: DrawTape) -> None:
    """Write a tape as one ASCII '0'/'1' character per bit, newline-terminated."""
    with open(path, "w") as fh:
        fh.write("".join("1" if b else "0" for b in tape.bits))
        fh.write("\n")


def read_tape(path) -> DrawTape:
    with open(path) as fh:
        text = fh.read().strip()
    if text and set(text) - {"0", "1"}:
        raise ValueError(f"tape file {path!r} contains non-bit characters")
    return DrawTape(bits=[1 if c == "1" else 0 for c in text])


class BitSource:
    """A stream of unbiased random bits with an exact consumed-bit counter.

    A source is single-owner: never use one instance from two concurrent
    tasks.  Parallel code must derive one substream per task with
    :meth:`split_substream` before launching the tasks.
    """

    __slots__ = ("seed", "bits_consumed", "_state", "_buf", "_buflen",
                 "_tape", "_record")

    def __init__(self, seed: Optional[int] = None, *, record: bool = False):
        if seed is None:
            seed = int.from_bytes(os.urandom(8), "big")
        self.seed = seed & MASK64
        self._state = self.seed
        self._buf = 0
        self._buflen = 0
        self.bits_consumed = 0
        self._tape: Optional[DrawTape] = None
        self._record: Optional[List[int]] = [] if record else None

    @classmethod
    def from_tape(cls, tape: DrawTape) -> "BitSource":
        """A source that replays a recorded tape instead of generating bits."""
        src = cls(seed=0)
        src._tape = tape
        return src

    # -- state introspection (used by the jitted engine to stay in sync) --

    @property
    def is_plain(self) -> bool:
        """True when generator-backed and not recording (fast-path eligible)."""
        return self._tape is None and self._record is None

    def state_tuple(self) -> tuple[int, int, int, int]:
        return (self._state, self._buf, self._buflen, self.bits_consumed)

    def set_state_tuple(self, t) -> None:
        self._state, self._buf, self._buflen, self.bits_consumed = (
            int(t[0]), int(t[1]), int(t[2]), int(t[3]))

    # -- core draws --

    def take(self, k: int) -> int:
        """The next k bits of the stream as an integer, most significant first."""
        if k < 0:
            raise ValueError("cannot take a negative number of bits")
        if k == 0:
            return 0
        if self._tape is not None:
            tape = self._tape
            if tape.cursor + k > len(tape.bits):
                raise TapeExhausted(
                    f"tape has {len(tape.bits) - tape.cursor} bits left, "
                    f"need {k}")
            out = 0
            for b in tape.bits[tape.cursor:tape.cursor + k]:
                out = (out << 1) | b
            tape.cursor += k
            self.bits_consumed += k
            return out
        buf, buflen = self._buf, self._buflen
        if buflen < k:
            need = k - buflen
            nwords = (need + 63) >> 6
            if nwords <= 4:
                state = self._state
                for _ in range(nwords):
                    state, word = splitmix64_next(state)
                    buf = (buf << 64) | word
                self._state = state
            else:
                # bulk fill: assemble the words as bytes to stay linear-time
                state = self._state
                chunks = bytearray()
                for _ in range(nwords):
                    state, word = splitmix64_next(state)
                    chunks += word.to_bytes(8, "big")
                self._state = state
                buf = (buf << (nwords << 6)) | int.from_bytes(chunks, "big")
            buflen += nwords << 6
        buflen -= k
        out = buf >> buflen
        self._buf = buf & ((1 << buflen) - 1)
        self._buflen = buflen
        self.bits_consumed += k
        if self._record is not None:
            rec = self._record
            for i in range(k - 1, -1, -1):
                rec.append((out >> i) & 1)
        return out

    def flip(self) -> int:
        """One fair coin flip; increments the counter by exactly 1."""
        return self.take(1)

    def random_int(self, bound: int) -> int:
        """A uniform integer in [0, bound), drawn entropy-optimally.

        Uses the fast-dice-roller scheme: accumulate bits into a candidate
        c while doubling a capacity v; whenever v reaches the bound, accept
        c if it is in range, otherwise carry the rejected remainder forward.
        Consumes no bits when bound == 1; expected cost is between log2(bound)
        and log2(bound) + 2 bits.
        """
        if bound < 1:
            raise ValueError(f"bound must be >= 1, got {bound}")
        if bound == 1:
            return 0
        v = 1
        c = 0
        while True:
            # smallest k with v * 2**k >= bound
            k = ((bound + v - 1) // v - 1).bit_length()
            c = (c << k) | self.take(k)
            v <<= k
            if c < bound:
                return c
            c -= bound
            v -= bound

    # -- bookkeeping --

    def reset_bit_count(self) -> None:
        self.bits_consumed = 0

    def split_substream(self, index: int) -> "BitSource":
        """An independent child stream, deterministic in (seed, index).

        The child's counter starts at zero and the parent's counter is not
        affected by anything the child consumes.
        """
        if self._tape is not None:
            raise ValueError("cannot split a tape-replay source")
        return BitSource(substream_seed(self.seed, index))

    def recorded_tape(self) -> DrawTape:
        """The tape of every bit handed out so far (recording sources only)."""
        if self._record is None:
            raise ValueError("source was not created with record=True")
        return DrawTape(bits=list(self._record))

    def __repr__(self) -> str:
        kind = "tape" if self._tape is not None else "gen"
        return (f"BitSource({kind}, seed={self.seed:#x}, "
                f"bits_consumed={self.bits_consumed})")
