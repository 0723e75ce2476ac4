import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import TOOL_VERSION
from evaluation.cache import cache_kernel
from evaluation.metrics import pass_rate
from evaluation.suites import SuiteContext, describe, expand_selectors, run_suite
from exceptions import UsageError
from models import CheckRecord, ExperimentConfig, ReportDocument
from tracing.setup import RunTracer, convert_values

logger = logging.getLogger(__name__)

EXPORT_FORMATS = ["json", "csv", "text-table"]
RECORD_COLUMNS = ["name", "anchor", "measured", "tolerance", "verdict", "detail"]
SUFFIXES = {"json": ".json", "csv": ".csv", "text-table": ".txt"}

__all__ = ["run_experiment", "export_report", "read_report_csv", "read_report_json", "cache_kernel",
           "EvaluationProcessor"]


############# Running #############

def run_experiment(config: ExperimentConfig, tracer: Optional[RunTracer] = None) -> ReportDocument:
    """
    Run the selected suites and assemble the report.

    Suites run one after another in a fixed order. Failed checks are verdicts, not errors;
    an empty selector list gives an empty report.

    Args:
        config (ExperimentConfig): weight, tolerances, selectors, seed and cache settings.
        tracer (RunTracer, optional): receives suite and check events.

    Returns:
        ReportDocument: records in suite order, with wall-clock timing per suite.

    Raises:
        UsageError: for an unknown selector.
        MissingCacheError: in offline mode when a needed kernel cache is absent.
    """
    suites = expand_selectors(config.selectors)
    ctx = SuiteContext(config)
    report = ReportDocument(tool_version=TOOL_VERSION, config_hash=config.config_hash(), seed=config.seed,
                            weight=config.weight.canonical())
    logger.info(f"Running {len(suites)} suite(s) for {report.weight} (config {report.config_hash}, seed {config.seed})")
    for name in suites:
        if tracer:
            tracer.log_event("suite_start", {"suite": name})
        start = time.perf_counter()
        records = run_suite(name, ctx)
        report.timing[name] = time.perf_counter() - start
        report.records.extend(records)
        summary = describe(records)
        logger.info(f"Suite {name}: {summary['passed']}/{summary['checks']} passed in {report.timing[name]:.1f}s")
        if tracer:
            for record in records:
                tracer.log_event("check", record.model_dump())
            tracer.log_event("suite_end", {"suite": name, **summary, "seconds": report.timing[name]})
    if tracer:
        tracer.write_logs()
    return report


############# Export #############

def report_payload(report: ReportDocument) -> Dict:
    """JSON-safe report without timing, so equal configs give byte-identical files."""
    return convert_values(report.model_dump(exclude={"timing"}))


def records_dataframe(report: ReportDocument) -> pd.DataFrame:
    rows = [convert_values(r.model_dump()) for r in report.records]
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


def text_table(report: ReportDocument) -> str:
    """Fixed-width verdict table; anchors are printed verbatim."""
    header = (f"tool {report.tool_version}  config {report.config_hash}  seed {report.seed}  "
              f"weight {report.weight}")
    if not report.records:
        return header + "\n(no checks selected)\n"
    frame = records_dataframe(report)[["name", "verdict", "measured", "tolerance", "anchor"]]
    passed = sum(r.verdict == "pass" for r in report.records)
    footer = f"{passed}/{len(report.records)} passed ({pass_rate(passed, len(report.records))}%)"
    return "\n".join([header, "=" * len(header), frame.to_string(index=False), footer]) + "\n"


def export_report(report: ReportDocument, fmt: str, path=None) -> Path:
    """
    Write a report as json, csv or text-table.

    Args:
        report (ReportDocument): the report.
        fmt (str): json, csv or text-table.
        path (optional): target file; defaults to report_<config hash> with the format's suffix
            in the working directory.

    Returns:
        Path: the written file.

    Raises:
        UsageError: for an unknown format.
    """
    if fmt not in EXPORT_FORMATS:
        raise UsageError(f"Unknown export format {fmt!r}; expected one of {EXPORT_FORMATS}")
    path = Path(path) if path else Path(f"report_{report.config_hash}{SUFFIXES[fmt]}")
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as f:
            json.dump(report_payload(report), f, sort_keys=True, indent=2)
            f.write("\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# tool_version={report.tool_version}\n")
            f.write(f"# config_hash={report.config_hash}\n")
            f.write(f"# seed={report.seed}\n")
            f.write(f"# weight={report.weight}\n")
            records_dataframe(report).to_csv(f, index=False)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text_table(report))
    logger.info(f"Wrote {fmt} report to {path}")
    return path


def read_report_json(path) -> ReportDocument:
    with open(path, encoding="utf-8") as f:
        return ReportDocument(**json.load(f))


def read_report_csv(path) -> ReportDocument:
    """Rebuild a report from its CSV export; verdict fields come back unchanged."""
    header = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
    frame = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False)
    records = []
    for row in frame.to_dict(orient="records"):
        measured = row.get("measured", "")
        records.append(CheckRecord(name=row["name"], anchor=row["anchor"],
                                   measured=float(measured) if measured != "" else None,
                                   tolerance=row["tolerance"], verdict=row["verdict"], detail=row["detail"]))
    return ReportDocument(tool_version=header.get("tool_version", ""), config_hash=header.get("config_hash", ""),
                          seed=int(header.get("seed", 0)), weight=header.get("weight", ""), records=records)


############# Batch summaries #############

class EvaluationProcessor:
    """Collect exported JSON reports and summarize verdicts across weights and suites."""

    def __init__(self, report_dir="output/reports"):
        """Load every report_*.json under report_dir."""
        self.report_dir = Path(report_dir)
        self.reports: List[ReportDocument] = []
        for path in sorted(self.report_dir.glob("**/report_*.json")):
            try:
                self.reports.append(read_report_json(path))
            except (json.JSONDecodeError, ValueError) as e:
                logger.warning(f"Skipping unreadable report {path}: {e}")
        logger.info(f"Loaded {len(self.reports)} reports from {self.report_dir}")

    def record_rows(self) -> List[Dict]:
        rows = []
        for report in self.reports:
            for record in report.records:
                rows.append({
                    "weight": report.weight,
                    "config_hash": report.config_hash,
                    "seed": report.seed,
                    "check": record.name,
                    "anchor": record.anchor,
                    "measured": record.measured,
                    "verdict": record.verdict,
                    "passed": record.verdict == "pass",
                })
        return rows

    def create_summary_dataframes(self) -> Dict[str, pd.DataFrame]:
        """Record-level table plus pass rates per weight and per check."""
        rows = self.record_rows()
        if not rows:
            return {}
        records = pd.DataFrame(rows)
        by_weight = records.groupby("weight").agg(checks=("passed", "size"), passed=("passed", "sum")).reset_index()
        by_weight["pass_rate"] = [pass_rate(p, n) for p, n in zip(by_weight["passed"], by_weight["checks"])]
        by_check = records.groupby("check").agg(checks=("passed", "size"), passed=("passed", "sum")).reset_index()
        by_check["pass_rate"] = [pass_rate(p, n) for p, n in zip(by_check["passed"], by_check["checks"])]
        return {"record_level": records, "weight_level": by_weight, "check_level": by_check}

    def save_results(self, output_dir=None) -> Dict[str, Path]:
        """Write each summary table as CSV; returns the paths keyed by table name."""
        output_dir = Path(output_dir) if output_dir else self.report_dir / "summary"
        output_dir.mkdir(parents=True, exist_ok=True)
        written = {}
        for name, frame in self.create_summary_dataframes().items():
            path = output_dir / f"{name}.csv"
            frame.to_csv(path, index=False)
            written[name] = path
        logger.info(f"Saved {len(written)} summary tables to {output_dir}")
        return written
