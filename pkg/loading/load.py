from typing import Optional
import os
import sqlite3
import logging
from datetime import datetime

import pandas as pd

from transport.cost import CostReport

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

REPORT_FIELDS = [
    'problem', 'protocol', 'gate_set', 'n', 'gates', 'rounds', 'comm_bytes', 'wire_bytes', 'proof_bytes',
    'elements', 'prover_field_ops', 'prover_ms', 'verifier_stream_ms', 'verifier_check_ms',
    'vspace_words', 'answer', 'accepted', 'reject_reason',
]


class ResultStore:
    """Persist cost reports of protocol runs in SQLite"""

    def __init__(self, db_path=os.path.join('results', 'runs.db')):
        self.db_path = db_path
        self.conn: Optional[sqlite3.Connection] = None
        logger.info(f"ResultStore initialized with database: {db_path}")

    def __enter__(self) -> "ResultStore":
        self.connect()
        self.create_schema()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _get_conn(self) -> sqlite3.Connection:
        """Return the active connection, raising if not connected."""
        if self.conn is None:
            raise RuntimeError("Database not connected. Call connect() first.")
        return self.conn

    def connect(self):
        """Establish database connection"""
        try:
            directory = os.path.dirname(self.db_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            self.conn = sqlite3.connect(self.db_path)
            logger.info("Database connection established")
            return self.conn
        except Exception as e:
            logger.error(f"Error connecting to database: {str(e)}")
            raise

    def create_schema(self):
        """Create the runs and protocol summary tables"""
        try:
            cursor = self._get_conn().cursor()
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    problem TEXT NOT NULL,
                    protocol TEXT NOT NULL,
                    gate_set TEXT,
                    n INTEGER NOT NULL,
                    gates INTEGER,
                    rounds INTEGER,
                    comm_bytes INTEGER,
                    wire_bytes INTEGER,
                    proof_bytes INTEGER,
                    elements INTEGER,
                    prover_field_ops INTEGER,
                    prover_ms REAL,
                    verifier_stream_ms REAL,
                    verifier_check_ms REAL,
                    vspace_words INTEGER,
                    answer TEXT,
                    accepted INTEGER,
                    reject_reason TEXT,
                    seed INTEGER,
                    load_date TEXT
                )
            """)
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS protocol_summary (
                    problem TEXT,
                    protocol TEXT,
                    run_count INTEGER,
                    accept_rate REAL,
                    avg_comm_bytes REAL,
                    avg_prover_ms REAL,
                    max_vspace_words INTEGER,
                    PRIMARY KEY (problem, protocol)
                )
            """)
            cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_protocol ON runs(problem, protocol)")
            self._get_conn().commit()
            logger.info("Database schema ready")

        except Exception as e:
            logger.error(f"Error creating schema: {str(e)}")
            raise

    def save_reports(self, reports: list[CostReport], seed: int | None = None) -> int:
        """Insert one row per report; returns the number of rows written"""
        try:
            load_date = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
            cursor = self._get_conn().cursor()
            columns = REPORT_FIELDS + ['seed', 'load_date']
            placeholders = ", ".join("?" for _ in columns)
            for report in reports:
                data = report.to_dict()
                values = [data[name] for name in REPORT_FIELDS]
                values[REPORT_FIELDS.index('accepted')] = int(bool(data['accepted']))
                cursor.execute(
                    f"INSERT INTO runs ({', '.join(columns)}) VALUES ({placeholders})",
                    values + [seed, load_date],
                )
            self._get_conn().commit()
            logger.info(f"Stored {len(reports)} run reports")
            return len(reports)

        except Exception as e:
            logger.error(f"Error storing run reports: {str(e)}")
            raise

    def fetch_runs(self, problem: str | None = None, protocol: str | None = None) -> pd.DataFrame:
        """Stored runs as a DataFrame, optionally filtered"""
        query = "SELECT * FROM runs"
        clauses, params = [], []
        if problem:
            clauses.append("problem = ?")
            params.append(problem)
        if protocol:
            clauses.append("protocol = ?")
            params.append(protocol)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        df = pd.read_sql_query(query + " ORDER BY run_id", self._get_conn(), params=params)
        df['accepted'] = df['accepted'].astype(bool)
        return df

    def create_aggregations(self):
        """Rebuild the per-protocol summary table"""
        try:
            cursor = self._get_conn().cursor()
            cursor.execute("DELETE FROM protocol_summary")
            cursor.execute("""
                INSERT INTO protocol_summary
                SELECT
                    problem,
                    protocol,
                    COUNT(*) as run_count,
                    AVG(accepted) as accept_rate,
                    AVG(comm_bytes) as avg_comm_bytes,
                    AVG(prover_ms) as avg_prover_ms,
                    MAX(vspace_words) as max_vspace_words
                FROM runs
                GROUP BY problem, protocol
            """)
            self._get_conn().commit()
            logger.info("Protocol summary rebuilt")

        except Exception as e:
            logger.error(f"Error creating aggregations: {str(e)}")
            raise

    def fetch_summary(self) -> pd.DataFrame:
        return pd.read_sql_query(
            "SELECT * FROM protocol_summary ORDER BY problem, protocol", self._get_conn()
        )

    def count_runs(self) -> int:
        cursor = self._get_conn().cursor()
        cursor.execute("SELECT COUNT(*) FROM runs")
        return int(cursor.fetchone()[0])

    def close(self):
        """Close database connection"""
        if self.conn:
            self.conn.close()
            self.conn = None
            logger.info("Database connection closed")
