import logging
import threading
import time
from dataclasses import dataclass

from transport.channel import Channel, ChannelClosed, ChannelStats

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)


@dataclass
class SessionResult:
    verdict: object
    stats: ChannelStats
    prover_seconds: float
    verifier_seconds: float
    prover_field_ops: int = 0


def run_session(channel: Channel, prover, verifier) -> SessionResult:
    """
    Run prover.run(endpoint) in a worker thread and verifier.verify(endpoint)
    in the calling thread.

    A prover that raises (an honest prover refusing its input) closes the
    channel and its exception is re-raised here after the verifier unblocks.
    Times exclude waiting on the peer.
    """
    prover_error: list[BaseException] = []
    prover_clock = {'seconds': 0.0}
    verifier_done = threading.Event()

    def prover_main():
        started = time.perf_counter()
        try:
            prover.run(channel.prover)
        except ChannelClosed:
            if not verifier_done.is_set():
                logger.warning("Prover saw the channel close before the verifier finished")
        except BaseException as e:
            prover_error.append(e)
            channel.prover.close()
        finally:
            prover_clock['seconds'] = time.perf_counter() - started - channel.prover.wait_seconds

    worker = threading.Thread(target=prover_main, name="prover", daemon=True)
    worker.start()
    started = time.perf_counter()
    try:
        verdict = verifier.verify(channel.verifier)
    except ChannelClosed:
        if prover_error:
            worker.join()
            raise prover_error[0]
        raise
    finally:
        verifier_done.set()
        verifier_seconds = time.perf_counter() - started - channel.verifier.wait_seconds
        channel.close()
    worker.join()
    if prover_error:
        raise prover_error[0]
    return SessionResult(
        verdict=verdict,
        stats=channel.stats,
        prover_seconds=max(prover_clock['seconds'], 0.0),
        verifier_seconds=max(verifier_seconds, 0.0),
        prover_field_ops=getattr(prover, 'field_ops', 0),
    )
