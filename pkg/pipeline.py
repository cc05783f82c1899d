import os
import sys
import time
import logging
import logging.handlers
import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime

# ============================================================================
# Local Imports
# ============================================================================

from analysis.report import OUTPUT_FORMATS, emit_table, print_summary
from arithmetic.mle import next_power_of_two
from circuits.builders import build_circuit, parse_gate_set
from circuits.circuit import WIRING_MODES
from config import ConfigError, LOG_FORMAT, Settings, load_settings
from loading.load import ResultStore
from protocols.gkr import GkrProver, GkrVerifier
from protocols.lin import lin_parties
from protocols.ni import (
    F2_PROTOCOL_ID, MVMULT_PROTOCOL_ID,
    F2NiProver, F2NiVerifier, MvmultNiProver, MvmultNiVerifier,
    default_grid, parse_alpha, read_proof, write_proof,
)
from protocols.sumcheck import BoundedF0Prover, BoundedF0Verifier, MrsF2Prover, MrsF2Verifier
from streaming.oracles import Problem, oracle
from streaming.stream import DEFAULT_ALPHABET, StreamKind, gen_stream, load_stream, split_matrix_vector
from transport.channel import PROVER, Adversary, Channel, ChannelStats, MessageTag, encode_frame
from transport.cost import CostReport, cost_report
from transport.session import SessionResult, run_session

logger = logging.getLogger(__name__)

# ============================================================================
# Run Configuration
# ============================================================================

PROTOCOLS = {
    'ni': (Problem.F2, Problem.MVMULT),
    'ni-fft': (Problem.F2,),
    'gkr': (Problem.F2, Problem.F0, Problem.MVMULT, Problem.PMWW),
    'lin': (Problem.F0, Problem.PMWW),
    'mrs': (Problem.F2,),
    'bounded-f0': (Problem.F0,),
}
TRANSPORTS = ('inproc', 'socket', 'tcp')
PRESETS = ('cost-table',)

STREAM_KINDS = {
    Problem.F2: StreamKind.UNIFORM_FREQUENCIES,
    Problem.F0: StreamKind.UNIFORM_ITEMS,
    Problem.MVMULT: StreamKind.MATRIX_VECTOR,
    Problem.PMWW: StreamKind.TEXT_PATTERN,
}

USAGE = "supported protocol/problem pairs: " + "; ".join(
    f"{name}: {', '.join(p.value for p in problems)}" for name, problems in PROTOCOLS.items()
)


@dataclass(frozen=True)
class RunConfig:
    """
    One protocol run. n is the universe size for F2/F0, the matrix dimension
    for MVMULT and the text length for PMWW; m is the F0 stream length
    (defaults to n).
    """

    problem: str
    protocol: str
    n: int
    m: int = 0
    q: int = 0
    gate_set: str = 'basic'
    alpha: str = '1/2'
    fmax: int = 8
    seed: int = 1
    transport: str = 'inproc'
    output: str = 'csv'
    stream_file: str | None = None
    proof_out: str | None = None
    proof_in: str | None = None
    adversary: str | None = None
    jobs: int = 1
    alphabet: int = DEFAULT_ALPHABET
    offline: bool = False
    wiring_mode: str = 'closed'

    def validate(self) -> "RunConfig":
        try:
            problem = Problem(self.problem)
        except ValueError:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {[p.value for p in Problem]}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; {USAGE}")
        if problem not in PROTOCOLS[self.protocol]:
            raise ConfigError(f"protocol {self.protocol} does not handle {problem.value}; {USAGE}")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if problem is Problem.PMWW and not 1 <= self.q <= self.n:
            raise ConfigError(f"PMWW needs a pattern length 1 <= q <= n, got q={self.q}")
        if problem is Problem.MVMULT and self.protocol == 'gkr' and self.n < 4:
            raise ConfigError("MVMULT circuits need n >= 4")
        if self.m < 0 or self.fmax < 1 or self.jobs < 1:
            raise ConfigError("m must be >= 0, fmax and jobs >= 1")
        if self.transport not in TRANSPORTS:
            raise ConfigError(f"unknown transport {self.transport!r}")
        if self.output not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output!r}")
        if self.wiring_mode not in WIRING_MODES:
            raise ConfigError(f"unknown wiring mode {self.wiring_mode!r}")
        if (self.proof_in or self.proof_out) and not self.protocol.startswith('ni'):
            raise ConfigError("proof files exist only for the non-interactive protocols")
        if self.proof_in and self.adversary:
            raise ConfigError("--adversary corrupts live sessions, not stored proofs")
        try:
            if self.protocol == 'gkr':
                parse_gate_set(self.gate_set)
            if self.protocol == 'ni' and problem is Problem.MVMULT:
                parse_alpha(self.alpha)
            if self.adversary:
                Adversary.parse(self.adversary)
        except ValueError as e:
            raise ConfigError(str(e)) from e
        return self

    @property
    def problem_enum(self) -> Problem:
        return Problem(self.problem)

    @property
    def stream_length(self) -> int:
        return self.m or self.n


def cost_table_configs(base: RunConfig) -> list[RunConfig]:
    """The nine circuit-checking rows of the cost table."""
    rows = [(Problem.F2, 'basic'), (Problem.F2, 'basic+sum')]
    rows += [(Problem.F0, g) for g in ('basic', 'pow8', 'pow16', 'basic+sum', 'pow8+sum', 'pow16+sum')]
    rows += [(Problem.PMWW, 'pow8+sum')]
    q = base.q or min(base.n, 8)
    return [
        replace(base, problem=problem.value, protocol='gkr', gate_set=gate_set,
                q=q if problem is Problem.PMWW else 0, m=0)
        for problem, gate_set in rows
    ]


# ============================================================================
# Runs
# ============================================================================

@dataclass
class Parties:
    prover: object
    verifier: object
    gates: int = 0
    gate_set: str = ''
    extra: dict = field(default_factory=dict)


@dataclass
class RunResult:
    config: RunConfig
    report: CostReport
    oracle_answer: object = None

    @property
    def oracle_match(self) -> bool | None:
        return self.report.extra.get('oracle_match')


def load_run_stream(config: RunConfig):
    problem = config.problem_enum
    if config.stream_file:
        universe = None
        if problem is Problem.MVMULT:
            universe = config.n * config.n + config.n
        elif problem is Problem.PMWW:
            universe = config.n + config.q
        return load_stream(config.stream_file, universe)
    return gen_stream(STREAM_KINDS[problem], config.n, m=config.stream_length, q=config.q,
                      seed=config.seed, alphabet=config.alphabet)


def build_parties(config: RunConfig, stream) -> Parties:
    """Honest prover and fresh verifier for the configured protocol."""
    problem = config.problem_enum
    protocol = config.protocol
    seed = config.seed

    if protocol in ('ni', 'ni-fft') and problem is Problem.F2:
        h, w = default_grid(stream.universe_size)
        mode = 'fft' if protocol == 'ni-fft' else 'naive'
        return Parties(F2NiProver(stream, h, w, mode, config.jobs), F2NiVerifier(stream.universe_size, h, w, seed),
                       extra={'h': h, 'w': w})

    if protocol == 'ni':
        alpha = parse_alpha(config.alpha)
        matrix, vector = split_matrix_vector(stream, config.n)
        verifier = MvmultNiVerifier(config.n, alpha, seed)
        return Parties(MvmultNiProver(matrix, vector, alpha), verifier,
                       extra={'h': verifier.h, 'w': verifier.w, 'alpha': str(alpha)})

    if protocol == 'mrs':
        return Parties(MrsF2Prover(stream), MrsF2Verifier(stream.universe_size, seed))

    if protocol == 'bounded-f0':
        return Parties(BoundedF0Prover(stream, config.fmax), BoundedF0Verifier(stream.universe_size, config.fmax, seed),
                       extra={'fmax': config.fmax})

    if protocol == 'lin':
        prover, verifier = lin_parties(problem, stream, n=config.n, m=config.stream_length, q=config.q,
                                       seed=seed, alphabet=config.alphabet)
        return Parties(prover, verifier, extra={'operators': len(verifier.expression.operators)})

    size = config.n if problem in (Problem.MVMULT, Problem.PMWW) else next_power_of_two(stream.universe_size)
    circuit = build_circuit(problem, size, q=config.q, gate_set=config.gate_set)
    verifier = GkrVerifier(circuit, seed, wiring_mode=config.wiring_mode, offline=config.offline)
    return Parties(GkrProver(circuit, stream), verifier, gates=circuit.size, gate_set=circuit.gate_set,
                   extra={'depth': circuit.depth})


def _check_stored_proof(config: RunConfig, verifier) -> SessionResult:
    """Verify a proof file against a verifier that has seen the stream."""
    proof = read_proof(config.proof_in)
    expected = F2_PROTOCOL_ID if config.problem_enum is Problem.F2 else MVMULT_PROTOCOL_ID
    if proof.protocol_id != expected:
        raise ConfigError(f"{config.proof_in} holds a proof for protocol id {proof.protocol_id}")
    stats = ChannelStats()
    stats.observe(PROVER, encode_frame(MessageTag.PROOF, proof.payload))
    started = time.perf_counter()
    verdict = verifier.check(proof.payload)
    return SessionResult(verdict, stats, 0.0, time.perf_counter() - started)


def log_phase(phase_name: str, status: str = "STARTED") -> None:
    logger.info("=" * 80)
    logger.info(f"{phase_name} - {status}")
    logger.info("=" * 80)


def run(config: RunConfig, settings: Settings | None = None) -> RunResult:
    """Stream, prove, verify and report one configuration."""
    settings = settings or load_settings()
    config.validate()
    label = f"{config.problem}/{config.protocol}" + (f" [{config.gate_set}]" if config.protocol == 'gkr' else '')
    log_phase(f"RUN {label} n={config.n} seed={config.seed}")

    try:
        stream = load_run_stream(config)
        parties = build_parties(config, stream)
        verifier = parties.verifier

        started = time.perf_counter()
        verifier.stream(stream)
        stream_seconds = time.perf_counter() - started
        logger.info(f"Verifier streamed {stream.length} updates in {stream_seconds * 1000:.1f} ms")

        if config.proof_in:
            session = _check_stored_proof(config, verifier)
        else:
            adversary = Adversary.parse(config.adversary) if config.adversary else None
            channel = Channel(config.transport, adversary=adversary, host=settings.socket_host)
            try:
                session = run_session(channel, parties.prover, verifier)
            finally:
                channel.close()
            if config.proof_out and parties.prover.proof is not None:
                write_proof(config.proof_out, parties.prover.proof)

        report = cost_report(
            session, config.problem, config.protocol,
            gate_set=parties.gate_set, n=config.n, gates=parties.gates,
            stream_seconds=stream_seconds, space_words=verifier.space.peak,
        )
        report.extra.update(parties.extra)
        report.extra['seed'] = config.seed
        if config.adversary:
            report.extra['adversary'] = config.adversary

    except Exception as e:
        logger.error(f"Run {label} failed: {str(e)}")
        log_phase(f"RUN {label}", "FAILED")
        raise

    oracle_answer = None
    if session.verdict.accepted and stream.universe_size <= settings.oracle_limit:
        n = config.n if config.problem_enum in (Problem.MVMULT, Problem.PMWW) else None
        oracle_answer = oracle(config.problem, stream, n)
        match = session.verdict.answer == oracle_answer
        report.extra['oracle_match'] = match
        if not match:
            logger.error(f"Accepted answer {session.verdict.answer} differs from the oracle's {oracle_answer}")

    log_phase(f"RUN {label}", "ACCEPTED" if report.accepted else f"REJECTED ({report.reject_reason})")
    return RunResult(config, report, oracle_answer)


def run_many(configs: list[RunConfig], jobs: int = 1, settings: Settings | None = None) -> list[RunResult]:
    """Independent runs fanned across threads; results keep the input order."""
    settings = settings or load_settings()
    if jobs <= 1 or len(configs) <= 1:
        return [run(config, settings) for config in configs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda config: run(config, settings), configs))


# ============================================================================
# Command Line
# ============================================================================

def configure_logging(settings: Settings) -> None:
    """Daily rotating log file (3-day retention) plus the console."""
    os.makedirs(settings.log_dir, exist_ok=True)
    file_handler = logging.handlers.TimedRotatingFileHandler(
        filename=os.path.join(settings.log_dir, 'pipeline.log'),
        when='midnight',
        interval=1,
        backupCount=3,
        encoding='utf-8',
    )
    file_handler.suffix = '%Y-%m-%d'  # e.g. pipeline.log.2026-03-11
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format=LOG_FORMAT,
        handlers=[file_handler, logging.StreamHandler(sys.stderr)],
        force=True,
    )


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='pipeline.py',
        description="Run streaming interactive proofs and report their costs.",
        epilog=USAGE,
    )
    parser.add_argument('--problem', choices=[p.value for p in Problem], default=Problem.F2.value)
    parser.add_argument('--protocol', choices=list(PROTOCOLS), default='gkr')
    parser.add_argument('--n', type=int, default=1 << 10,
                        help="universe size (F2, F0), matrix dimension (MVMULT) or text length (PMWW)")
    parser.add_argument('--m', type=int, default=0, help="F0 stream length (default n)")
    parser.add_argument('--q', type=int, default=0, help="PMWW pattern length")
    parser.add_argument('--gate-set', default='basic', help="basic, pow8 or pow16, optionally +sum")
    parser.add_argument('--alpha', default='1/2', help="MVMULT grid exponent in [0, 1]")
    parser.add_argument('--fmax', type=int, default=8, help="frequency bound for bounded-f0")
    parser.add_argument('--alphabet', type=int, default=DEFAULT_ALPHABET, help="PMWW symbol alphabet size")
    parser.add_argument('--seed', type=int, default=settings.default_seed)
    parser.add_argument('--transport', choices=TRANSPORTS, default='inproc')
    parser.add_argument('--stream-file', help="SIPS1 binary or index,delta text stream")
    parser.add_argument('--proof-out', help="write the non-interactive proof to this file")
    parser.add_argument('--proof-in', help="verify a stored non-interactive proof instead of proving")
    parser.add_argument('--adversary', help="corrupt prover message MSG element ELEM by DELTA: MSG[:ELEM[:DELTA]]")
    parser.add_argument('--output', choices=OUTPUT_FORMATS, default='csv')
    parser.add_argument('--table-out', help="also write the table to this file")
    parser.add_argument('--jobs', type=int, default=settings.jobs)
    parser.add_argument('--store', nargs='?', const=settings.db_path, help="persist reports to SQLite")
    parser.add_argument('--preset', choices=PRESETS)
    parser.add_argument('--offline', action='store_true', help="precompute GKR wiring checks before streaming")
    parser.add_argument('--wiring-mode', choices=WIRING_MODES, default='closed')
    parser.add_argument('--summary', action='store_true', help="print per-protocol aggregates")
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        problem=args.problem, protocol=args.protocol, n=args.n, m=args.m, q=args.q,
        gate_set=args.gate_set, alpha=args.alpha, fmax=args.fmax, seed=args.seed,
        transport=args.transport, output=args.output, stream_file=args.stream_file,
        proof_out=args.proof_out, proof_in=args.proof_in, adversary=args.adversary,
        jobs=args.jobs, alphabet=args.alphabet, offline=args.offline, wiring_mode=args.wiring_mode,
    )


def main(argv=None):
    """Main pipeline execution"""
    try:
        settings = load_settings()
    except ConfigError as e:
        print(f"Configuration error: {str(e)}", file=sys.stderr)
        sys.exit(1)
    args = build_parser(settings).parse_args(argv)
    configure_logging(settings)

    start_time = time.time()
    logger.info("=" * 80)
    logger.info("STREAMING PROOF PIPELINE - EXECUTION STARTED")
    logger.info(f"Start Time: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    logger.info("=" * 80)

    try:
        base = config_from_args(args)
        configs = cost_table_configs(base) if args.preset == 'cost-table' else [base]
        for config in configs:
            config.validate()
        results = run_many(configs, jobs=args.jobs if len(configs) > 1 else 1, settings=settings)
        reports = [result.report for result in results]

        print(emit_table(reports, args.output, args.table_out), end='')
        if args.summary:
            print_summary(reports)
        if args.store:
            with ResultStore(args.store) as store:
                store.save_reports(reports, seed=args.seed)
                store.create_aggregations()

    except ConfigError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        sys.exit(2)
    except Exception as e:
        logger.error("PIPELINE EXECUTION FAILED!")
        logger.error(f"Error: {str(e)}")
        sys.exit(1)

    duration = time.time() - start_time
    logger.info("=" * 80)
    logger.info(f"PIPELINE EXECUTION COMPLETED in {duration:.2f} seconds")
    logger.info("=" * 80)

    honest_failures = [
        r for r in results
        if not r.config.adversary and (not r.report.accepted or r.oracle_match is False)
    ]
    if honest_failures:
        logger.error(f"{len(honest_failures)} honest run(s) rejected or disagreed with the oracle")
        sys.exit(1)


if __name__ == "__main__":
    main()
