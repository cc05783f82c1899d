import os
import logging
from dataclasses import dataclass

from dotenv import load_dotenv

# ============================================================================
# Logger Configuration
# ============================================================================

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
logger = logging.getLogger(__name__)

# ============================================================================
# Environment
# ============================================================================

load_dotenv()


class ConfigError(ValueError):
    """Invalid run configuration or environment setting."""


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults read from the environment (and an optional .env)."""

    log_dir: str = 'logs'
    log_level: str = 'INFO'
    db_path: str = os.path.join('results', 'runs.db')
    oracle_limit: int = 1 << 20
    default_seed: int = 1
    socket_host: str = '127.0.0.1'
    jobs: int = 1


def _int_setting(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == '':
        return default
    try:
        return int(raw)
    except ValueError as e:
        logger.error(f"Environment variable {name} is not an integer: {raw!r}")
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


def load_settings() -> Settings:
    """Build Settings from SIP_* environment variables."""
    settings = Settings(
        log_dir=os.environ.get('SIP_LOG_DIR', 'logs'),
        log_level=os.environ.get('SIP_LOG_LEVEL', 'INFO').upper(),
        db_path=os.environ.get('SIP_DB_PATH', os.path.join('results', 'runs.db')),
        oracle_limit=_int_setting('SIP_ORACLE_LIMIT', 1 << 20),
        default_seed=_int_setting('SIP_DEFAULT_SEED', 1),
        socket_host=os.environ.get('SIP_SOCKET_HOST', '127.0.0.1'),
        jobs=_int_setting('SIP_JOBS', 1),
    )
    if settings.log_level not in logging.getLevelNamesMapping():
        raise ConfigError(f"Unknown log level {settings.log_level!r}")
    if settings.jobs < 1:
        raise ConfigError("SIP_JOBS must be at least 1")
    return settings
