import io
import json
import logging

import pandas as pd

from transport.cost import TABLE_COLUMNS, CostReport

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
)
logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ('csv', 'json')


# ============================================================================
# Tables
# ============================================================================

def reports_frame(reports: list[CostReport]) -> pd.DataFrame:
    """One row per report with the fixed table columns, in order."""
    return pd.DataFrame([report.row() for report in reports], columns=TABLE_COLUMNS)


def emit_table(reports: list[CostReport], fmt: str = 'csv', path: str | None = None) -> str:
    """
    Render reports as CSV or JSON records.

    Both formats carry the same values; an empty report list gives a
    header-only CSV or an empty JSON array.
    """
    if fmt not in OUTPUT_FORMATS:
        raise ValueError(f"unknown output format {fmt!r}")
    df = reports_frame(reports)
    if fmt == 'csv':
        buffer = io.StringIO()
        df.to_csv(buffer, index=False)
        text = buffer.getvalue()
    else:
        text = json.dumps(df.to_dict(orient='records'), indent=2, default=_plain)
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"Wrote {len(df)} rows to {path}")
    return text


def _plain(value):
    """numpy scalars to Python values for json."""
    return value.item() if hasattr(value, 'item') else str(value)


def read_table(text: str, fmt: str = 'csv') -> pd.DataFrame:
    if fmt == 'csv':
        return pd.read_csv(io.StringIO(text), dtype={'answer': str, 'gate_set': str}, keep_default_na=False)
    return pd.DataFrame(json.loads(text), columns=TABLE_COLUMNS)


# ============================================================================
# Summaries
# ============================================================================

def summarize(reports: list[CostReport]) -> pd.DataFrame:
    """Per (problem, protocol) aggregates: run count, accept rate, mean costs."""
    if not reports:
        return pd.DataFrame(columns=['problem', 'protocol', 'runs', 'accept_rate',
                                     'mean_comm_bytes', 'mean_rounds', 'mean_prover_ms', 'max_vspace_words'])
    df = pd.DataFrame([report.to_dict() for report in reports])
    summary = (
        df.groupby(['problem', 'protocol'], sort=True)
        .agg(
            runs=('accepted', 'size'),
            accept_rate=('accepted', 'mean'),
            mean_comm_bytes=('comm_bytes', 'mean'),
            mean_rounds=('rounds', 'mean'),
            mean_prover_ms=('prover_ms', 'mean'),
            max_vspace_words=('vspace_words', 'max'),
        )
        .reset_index()
    )
    return summary


def print_summary(reports: list[CostReport]) -> None:
    summary = summarize(reports)
    print("=" * 80)
    print("PROTOCOL RUN SUMMARY")
    print("=" * 80)
    if summary.empty:
        print("  No runs.")
        return
    for _, row in summary.iterrows():
        print(f"\n  {row['problem']} / {row['protocol']}")
        print(f"    Runs: {row['runs']}  Accepted: {row['accept_rate'] * 100:.1f}%")
        print(f"    Mean communication: {row['mean_comm_bytes']:.0f} bytes over {row['mean_rounds']:.1f} rounds")
        print(f"    Mean prover time: {row['mean_prover_ms']:.2f} ms")
        print(f"    Peak verifier space: {row['max_vspace_words']} words")
    print("=" * 80)
