import logging
from dataclasses import dataclass, asdict, field

from transport.channel import ELEMENT_BYTES

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

TABLE_COLUMNS = [
    'problem', 'protocol', 'gate_set', 'n', 'gates', 'rounds', 'comm_bytes', 'wire_bytes',
    'prover_ms', 'verifier_stream_ms', 'verifier_check_ms', 'vspace_words',
    'answer', 'accepted',
]


class SpaceMeter:
    """Peak count of live field-element words held by a verifier."""

    def __init__(self):
        self.current = 0
        self.peak = 0

    def observe(self, words: int) -> None:
        self.current = words
        self.peak = max(self.peak, words)


@dataclass
class CostReport:
    """
    Costs of one protocol run.

    `rounds` counts messages in both directions. `comm_bytes` prices the
    prover's field elements at 8 bytes each; `wire_bytes` adds frame headers
    and the verifier's challenges.
    """

    problem: str
    protocol: str
    gate_set: str = ''
    n: int = 0
    gates: int = 0
    rounds: int = 0
    comm_bytes: int = 0
    wire_bytes: int = 0
    proof_bytes: int = 0
    elements: int = 0
    prover_field_ops: int = 0
    prover_ms: float = 0.0
    verifier_stream_ms: float = 0.0
    verifier_check_ms: float = 0.0
    vspace_words: int = 0
    answer: str = ''
    accepted: bool = False
    reject_reason: str = ''
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        data = asdict(self)
        return {column: data[column] for column in TABLE_COLUMNS}

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop('extra')
        data.update(self.extra)
        return data


def format_answer(answer) -> str:
    if answer is None:
        return ''
    if isinstance(answer, (list, tuple)):
        return str([int(v) for v in answer])
    return str(int(answer))


def cost_report(session, problem: str, protocol: str, *, gate_set: str = '', n: int = 0,
                gates: int = 0, stream_seconds: float = 0.0, space_words: int = 0) -> CostReport:
    """Fill a CostReport from a finished SessionResult."""
    stats = session.stats
    verdict = session.verdict
    report = CostReport(
        problem=problem,
        protocol=protocol,
        gate_set=gate_set,
        n=n,
        gates=gates,
        rounds=stats.messages,
        comm_bytes=ELEMENT_BYTES * stats.elements_to_verifier,
        wire_bytes=stats.total_bytes,
        proof_bytes=stats.bytes_to_verifier,
        elements=stats.elements_to_verifier + stats.elements_to_prover,
        prover_field_ops=session.prover_field_ops,
        prover_ms=round(session.prover_seconds * 1000, 3),
        verifier_stream_ms=round(stream_seconds * 1000, 3),
        verifier_check_ms=round(session.verifier_seconds * 1000, 3),
        vspace_words=space_words,
        answer=format_answer(verdict.answer) if verdict.accepted else '',
        accepted=bool(verdict.accepted),
        reject_reason='' if verdict.accepted else verdict.describe(),
    )
    logger.info(
        f"{problem}/{protocol} n={n}: accepted={report.accepted} rounds={report.rounds} "
        f"comm={report.comm_bytes}B vspace={report.vspace_words}"
    )
    return report
