import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum

import numpy as np

from arithmetic.field import random_element
from transport.channel import Endpoint
from transport.cost import SpaceMeter

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


class ProofFormatError(ValueError):
    """Unreadable proof file."""


class RejectReason(str, Enum):
    ARITY = "wrong message arity"
    ROUND_SUM = "round polynomial inconsistent with claim"
    FINAL_EVAL = "final evaluation mismatch"
    LINE_ENDPOINT = "line restriction disagrees with claims"
    INPUT_LDE = "input extension mismatch"
    CHECK_FAILED = "proof check failed"
    OUTPUT = "verified output contradicts the answer"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    answer: object = None
    reason: RejectReason | None = None
    round_index: int | None = None

    @classmethod
    def accept(cls, answer) -> "Verdict":
        return cls(True, answer)

    @classmethod
    def reject(cls, reason: RejectReason, round_index: int | None = None) -> "Verdict":
        logger.warning(f"Verifier rejects: {reason.value}" + (f" at round {round_index}" if round_index is not None else ""))
        return cls(False, None, reason, round_index)

    def describe(self) -> str:
        if self.accepted:
            return "accepted"
        where = f" (round {self.round_index})" if self.round_index is not None else ""
        return f"{self.reason.value}{where}"


class Prover(ABC):
    """Honest prover for one protocol session."""

    field_ops: int = 0

    @abstractmethod
    def run(self, endpoint: Endpoint) -> None:
        ...


class Verifier(ABC):
    """Streaming verifier: observe the stream first, then check the prover."""

    def __init__(self):
        self.space = SpaceMeter()

    @abstractmethod
    def stream(self, stream) -> None:
        ...

    @abstractmethod
    def verify(self, endpoint: Endpoint) -> Verdict:
        ...


class ChallengeSource:
    """Verifier randomness: a seeded generator, optionally preceded by fixed values."""

    def __init__(self, rng: np.random.Generator, fixed=()):
        self.rng = rng
        self.fixed = list(fixed)

    def draw(self) -> int:
        if self.fixed:
            return self.fixed.pop(0)
        return random_element(self.rng)
