"""
Prover/verifier message channels with exact cost accounting.

Wire format of one message: 1-byte tag, 4-byte little-endian payload
length, then the payload as 8-byte little-endian canonical field elements.
Both transports move these exact bytes, so transcripts are bit-identical
whichever one carries a session.
"""

import logging
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from arithmetic.field import (
    FieldError, ELEMENT_BYTES, encode_many, decode_many, vec_add, from_int,
)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

FRAME_HEADER = struct.Struct('<BI')
MAX_PAYLOAD_BYTES = 1 << 31

PROVER = "prover"
VERIFIER = "verifier"


class TransportError(RuntimeError):
    """Framing violation, truncation or a non-canonical element on the wire."""


class ChannelClosed(TransportError):
    """The peer closed the channel."""


class MessageTag(IntEnum):
    ANSWER = 1
    CLAIM = 2
    ROUND = 3
    CLAIMS = 4
    LINE = 5
    PROOF = 6
    CHALLENGE = 7


VERIFIER_TAGS = frozenset({MessageTag.CHALLENGE})


# ============================================================================
# Framing
# ============================================================================

def encode_frame(tag: int, elements) -> bytes:
    payload = encode_many(np.asarray(elements, dtype=np.uint64).ravel())
    return FRAME_HEADER.pack(int(tag), len(payload)) + payload


def decode_frame(frame: bytes) -> tuple[MessageTag, np.ndarray]:
    if len(frame) < FRAME_HEADER.size:
        raise TransportError("truncated frame header")
    tag, length = FRAME_HEADER.unpack_from(frame)
    if len(frame) != FRAME_HEADER.size + length:
        raise TransportError(f"frame declares {length} payload bytes, carries {len(frame) - FRAME_HEADER.size}")
    return _parse(tag, frame[FRAME_HEADER.size:])


def _parse(tag: int, payload: bytes) -> tuple[MessageTag, np.ndarray]:
    try:
        message_tag = MessageTag(tag)
    except ValueError as e:
        raise TransportError(f"unknown message tag {tag}") from e
    if len(payload) % ELEMENT_BYTES:
        raise TransportError(f"payload of {len(payload)} bytes is not a whole number of elements")
    try:
        return message_tag, decode_many(payload)
    except FieldError as e:
        raise TransportError(str(e)) from e


def split_frames(data: bytes) -> list[bytes]:
    """Cut a raw frame concatenation (a transcript file) into frames."""
    frames, offset = [], 0
    while offset < len(data):
        if len(data) - offset < FRAME_HEADER.size:
            raise TransportError("truncated frame header in transcript")
        _, length = FRAME_HEADER.unpack_from(data, offset)
        end = offset + FRAME_HEADER.size + length
        if end > len(data):
            raise TransportError("truncated frame payload in transcript")
        frames.append(data[offset:end])
        offset = end
    return frames


# ============================================================================
# Accounting
# ============================================================================

@dataclass
class ChannelStats:
    """Byte, element and round counters shared by both endpoints."""

    bytes_to_verifier: int = 0
    bytes_to_prover: int = 0
    elements_to_verifier: int = 0
    elements_to_prover: int = 0
    messages: int = 0
    rounds: int = 0
    last_sender: str | None = None
    frames: list[bytes] = field(default_factory=list)
    record: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def observe(self, sender: str, frame: bytes) -> None:
        elements = (len(frame) - FRAME_HEADER.size) // ELEMENT_BYTES
        with self._lock:
            if sender == PROVER:
                self.bytes_to_verifier += len(frame)
                self.elements_to_verifier += elements
                if self.last_sender != PROVER:
                    self.rounds += 1
            else:
                self.bytes_to_prover += len(frame)
                self.elements_to_prover += elements
            self.last_sender = sender
            self.messages += 1
            if self.record:
                self.frames.append(frame)

    @property
    def total_bytes(self) -> int:
        return self.bytes_to_verifier + self.bytes_to_prover

    @property
    def transcript(self) -> bytes:
        return b"".join(self.frames)


# ============================================================================
# Endpoints
# ============================================================================

class Endpoint:
    """One side of a channel: send and receive tagged field-element messages."""

    def __init__(self, role: str, stats: ChannelStats):
        self.role = role
        self.stats = stats
        self.wait_seconds = 0.0

    def _send_frame(self, frame: bytes) -> None:
        raise NotImplementedError

    def _receive_frame(self) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def send(self, tag: MessageTag, elements) -> None:
        frame = encode_frame(tag, elements)
        if len(frame) - FRAME_HEADER.size > MAX_PAYLOAD_BYTES:
            raise TransportError("message exceeds maximum payload size")
        self.stats.observe(self.role, frame)
        self._send_frame(frame)

    def receive(self, expected: MessageTag | None = None) -> np.ndarray:
        started = time.perf_counter()
        frame = self._receive_frame()
        self.wait_seconds += time.perf_counter() - started
        tag, elements = decode_frame(frame)
        if expected is not None and tag != expected:
            raise TransportError(f"expected {expected.name} message, got {tag.name}")
        return elements

    def exchange(self, tag: MessageTag, elements, reply: MessageTag | None = None) -> np.ndarray:
        """Send one message and wait for the peer's answer."""
        self.send(tag, elements)
        return self.receive(reply)

    def send_challenge(self, value: int) -> None:
        self.send(MessageTag.CHALLENGE, [value])

    def receive_challenge(self) -> int:
        values = self.receive(MessageTag.CHALLENGE)
        if values.size != 1:
            raise TransportError(f"challenge carries {values.size} elements")
        return int(values[0])


_CLOSED = object()


class QueueEndpoint(Endpoint):
    """In-process endpoint over a pair of queues."""

    def __init__(self, role: str, stats: ChannelStats, outbox: queue.Queue, inbox: queue.Queue):
        super().__init__(role, stats)
        self.outbox = outbox
        self.inbox = inbox

    def _send_frame(self, frame: bytes) -> None:
        self.outbox.put(frame)

    def _receive_frame(self) -> bytes:
        frame = self.inbox.get()
        if frame is _CLOSED:
            self.inbox.put(_CLOSED)
            raise ChannelClosed(f"{self.role}: peer closed the channel")
        return frame

    def close(self) -> None:
        self.outbox.put(_CLOSED)


class SocketEndpoint(Endpoint):
    """Length-prefixed frames over a stream socket."""

    def __init__(self, role: str, stats: ChannelStats, sock: socket.socket):
        super().__init__(role, stats)
        self.sock = sock
        self.raw_bytes_sent = 0
        self.raw_bytes_received = 0

    def _send_frame(self, frame: bytes) -> None:
        try:
            self.sock.sendall(frame)
            self.raw_bytes_sent += len(frame)
        except OSError as e:
            raise ChannelClosed(f"{self.role}: send failed: {str(e)}") from e

    def _read_exact(self, size: int) -> bytes:
        chunks, remaining = [], size
        while remaining:
            try:
                chunk = self.sock.recv(remaining)
            except OSError as e:
                raise ChannelClosed(f"{self.role}: receive failed: {str(e)}") from e
            if not chunk:
                if remaining == size:
                    raise ChannelClosed(f"{self.role}: peer closed the channel")
                raise TransportError(f"{self.role}: stream truncated mid-frame")
            chunks.append(chunk)
            remaining -= len(chunk)
        self.raw_bytes_received += size
        return b"".join(chunks)

    def _receive_frame(self) -> bytes:
        header = self._read_exact(FRAME_HEADER.size)
        _, length = FRAME_HEADER.unpack(header)
        if length > MAX_PAYLOAD_BYTES:
            raise TransportError(f"frame length {length} exceeds limit")
        return header + self._read_exact(length)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class TamperingEndpoint(Endpoint):
    """
    Prover-side wrapper that corrupts one element of one outgoing message.

    message_index counts the prover's messages from 0; element_index wraps
    around the message length.
    """

    def __init__(self, inner: Endpoint, message_index: int, element_index: int, delta: int):
        super().__init__(inner.role, inner.stats)
        self.inner = inner
        self.message_index = message_index
        self.element_index = element_index
        self.delta = delta
        self.sent = 0
        self.fired = False

    def send(self, tag: MessageTag, elements) -> None:
        elements = np.array(elements, dtype=np.uint64).ravel()
        if self.sent == self.message_index and elements.size:
            k = self.element_index % elements.size
            elements[k] = vec_add(elements[k], np.uint64(from_int(self.delta)))
            self.fired = True
            logger.debug(f"Corrupted element {k} of prover message {self.sent} ({tag.name})")
        self.sent += 1
        self.inner.send(tag, elements)

    def receive(self, expected: MessageTag | None = None) -> np.ndarray:
        return self.inner.receive(expected)

    def close(self) -> None:
        self.inner.close()

    @property
    def wait_seconds(self) -> float:
        return self.inner.wait_seconds

    @wait_seconds.setter
    def wait_seconds(self, value: float) -> None:
        pass


class ReplayEndpoint(Endpoint):
    """Verifier-side endpoint that replays recorded prover frames."""

    def __init__(self, transcript: bytes, stats: ChannelStats | None = None):
        super().__init__(VERIFIER, stats or ChannelStats())
        self.frames = [f for f in split_frames(transcript) if decode_frame(f)[0] not in VERIFIER_TAGS]
        self.position = 0

    def send(self, tag: MessageTag, elements) -> None:
        self.stats.observe(VERIFIER, encode_frame(tag, elements))

    def _receive_frame(self) -> bytes:
        if self.position >= len(self.frames):
            raise ChannelClosed("transcript exhausted")
        frame = self.frames[self.position]
        self.position += 1
        self.stats.observe(PROVER, frame)
        return frame


# ============================================================================
# Channels
# ============================================================================

@dataclass(frozen=True)
class Adversary:
    """Corrupt element `element_index` of prover message `message_index` by `delta`."""

    message_index: int
    element_index: int = 0
    delta: int = 1

    @classmethod
    def parse(cls, text: str) -> "Adversary":
        """"msg:elem:delta", with elem and delta optional."""
        parts = [int(p) for p in text.split(':')]
        if not 1 <= len(parts) <= 3:
            raise ValueError(f"adversary {text!r} must be msg[:elem[:delta]]")
        adversary = cls(*parts)
        if adversary.message_index < 0 or adversary.element_index < 0:
            raise ValueError("adversary indices must be non-negative")
        return adversary


class Channel:
    """A prover endpoint and a verifier endpoint joined by one transport."""

    def __init__(self, transport: str = 'inproc', record: bool = False,
                 adversary: Adversary | None = None, host: str = '127.0.0.1'):
        self.transport = transport
        self.stats = ChannelStats(record=record)
        self._listener = None
        if transport == 'inproc':
            to_verifier, to_prover = queue.Queue(), queue.Queue()
            prover = QueueEndpoint(PROVER, self.stats, to_verifier, to_prover)
            verifier = QueueEndpoint(VERIFIER, self.stats, to_prover, to_verifier)
        elif transport in ('socket', 'tcp'):
            prover_sock, verifier_sock = self._connect(transport, host)
            prover = SocketEndpoint(PROVER, self.stats, prover_sock)
            verifier = SocketEndpoint(VERIFIER, self.stats, verifier_sock)
        else:
            raise ValueError(f"unknown transport {transport!r}")
        self.prover: Endpoint = prover if adversary is None else TamperingEndpoint(
            prover, adversary.message_index, adversary.element_index, adversary.delta)
        self.verifier: Endpoint = verifier
        logger.debug(f"Channel opened over {transport}")

    def _connect(self, transport: str, host: str) -> tuple[socket.socket, socket.socket]:
        if transport == 'socket':
            return socket.socketpair()
        listener = socket.create_server((host, 0))
        client = socket.create_connection(listener.getsockname()[:2])
        server, _ = listener.accept()
        listener.close()
        return client, server

    def close(self) -> None:
        self.prover.close()
        self.verifier.close()

    def save_transcript(self, path: str) -> None:
        with open(path, 'wb') as handle:
            handle.write(self.stats.transcript)
        logger.info(f"Saved transcript of {len(self.stats.frames)} frames to {path}")
