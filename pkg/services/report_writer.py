# services/report_writer.py
import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Union

import pandas as pd

from models.errors import SchemaVersionError
from models.report import (SCHEMA_VERSION, ComparisonRow, EmissionReport, ExperimentConfig, ExperimentResult,
                           Mode, RunManifest)
from services.carbon_data import file_digest

logger = logging.getLogger(__name__)

REPORTS_FILE = "reports.json"
COMPARISON_FILE = "comparison.csv"
DECISIONS_FILE = "decisions.csv"
DELAY_FILE = "delay_histogram.csv"
MANIFEST_FILE = "manifest.json"

COMPARISON_COLUMNS = ["policy", "capacity", "deadline_margin_hours", "mode", "batches", "total_gco2",
                      "baseline_gco2", "reduction_pct", "scheduled", "unschedulable", "mean_delay"]
DECISION_COLUMNS = ["policy", "capacity", "deadline_margin_hours", "mode", "batch", "scheduler", "vm_id",
                    "region", "start_slot", "duration", "deadline", "cost", "delay_slots"]


def _dump_json(document, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def write_reports(reports: Iterable[EmissionReport], path: Union[str, Path]) -> Path:
    document = {
        "schema_version": SCHEMA_VERSION,
        "reports": [r.model_dump(mode="json") for r in sorted(reports, key=lambda r: r.sort_key)],
    }
    return _dump_json(document, Path(path))


def load_reports(path: Union[str, Path]) -> List[EmissionReport]:
    path = Path(path)
    document = json.loads(path.read_text(encoding="utf-8"))
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: report schema version {version}, expected {SCHEMA_VERSION}")
    reports = [EmissionReport(**r) for r in document.get("reports", [])]
    for r in reports:
        if r.schema_version != SCHEMA_VERSION:
            raise SchemaVersionError(f"{path}: report schema version {r.schema_version}, expected {SCHEMA_VERSION}")
    return reports


def comparison_frame(rows: List[ComparisonRow]) -> pd.DataFrame:
    frame = pd.DataFrame([r.model_dump(mode="json") for r in rows], columns=COMPARISON_COLUMNS)
    if frame["baseline_gco2"].isna().all():
        frame = frame.drop(columns=["baseline_gco2", "reduction_pct"])
    return frame


def region_emissions_frame(reports: List[EmissionReport]) -> pd.DataFrame:
    """Per-region emission bars: gCO2eq summed over batches, one row per configuration and region"""
    records = [
        {"policy": r.policy, "capacity": r.capacity, "deadline_margin_hours": r.deadline_margin_hours,
         "mode": r.mode.value, "region": region, "gco2": value, "jobs": r.region_jobs.get(region, 0)}
        for r in reports for region, value in r.region_gco2.items()
    ]
    keys = ["policy", "capacity", "deadline_margin_hours", "mode", "region"]
    frame = pd.DataFrame(records, columns=keys + ["gco2", "jobs"])
    return frame.groupby(keys, sort=True, as_index=False)[["gco2", "jobs"]].sum()


def job_distribution_frame(reports: List[EmissionReport]) -> pd.DataFrame:
    """Share of scheduled jobs per region and configuration, in percent"""
    frame = region_emissions_frame(reports).drop(columns=["gco2"])
    totals = frame.groupby(["policy", "capacity", "deadline_margin_hours", "mode"])["jobs"].transform("sum")
    frame["share_pct"] = (100.0 * frame["jobs"] / totals.where(totals > 0)).fillna(0.0)
    return frame


def delay_histogram_frame(reports: List[EmissionReport]) -> pd.DataFrame:
    records = [
        {"policy": r.policy, "capacity": r.capacity, "deadline_margin_hours": r.deadline_margin_hours,
         "mode": r.mode.value, "delay_slots": int(delay), "jobs": count}
        for r in reports for delay, count in r.delay_histogram.items()
    ]
    keys = ["policy", "capacity", "deadline_margin_hours", "mode", "delay_slots"]
    frame = pd.DataFrame(records, columns=keys + ["jobs"])
    return frame.groupby(keys, sort=True, as_index=False)["jobs"].sum()


def delay_by_margin_frame(reports: List[EmissionReport]) -> pd.DataFrame:
    """Average start delay (hours) per deadline margin, for the time-shifting modes"""
    histogram = delay_histogram_frame([r for r in reports if r.mode != Mode.ROUND_ROBIN])
    histogram["weighted"] = histogram["delay_slots"] * histogram["jobs"]
    keys = ["policy", "capacity", "mode", "deadline_margin_hours"]
    frame = histogram.groupby(keys, sort=True, as_index=False)[["weighted", "jobs"]].sum()
    frame["mean_delay"] = frame["weighted"] / frame["jobs"]
    return frame.drop(columns=["weighted"])


def write_report_tables(reports: List[EmissionReport], rows: List[ComparisonRow],
                        out_dir: Union[str, Path]) -> List[Path]:
    """Plot-ready CSVs; the reduction columns appear only when a round-robin baseline was run"""
    out_dir = Path(out_dir)
    return [
        _write_csv(comparison_frame(rows), out_dir / COMPARISON_FILE),
        _write_csv(region_emissions_frame(reports), out_dir / "region_emissions.csv"),
        _write_csv(job_distribution_frame(reports), out_dir / "job_distribution.csv"),
        _write_csv(delay_histogram_frame(reports), out_dir / DELAY_FILE),
        _write_csv(delay_by_margin_frame(reports), out_dir / "delay_by_margin.csv"),
    ]


def write_decisions(decisions: List[dict], path: Union[str, Path]) -> Path:
    return _write_csv(pd.DataFrame(decisions, columns=DECISION_COLUMNS), Path(path))


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_manifest(config: ExperimentConfig, input_digests: Dict[str, str], version: str,
                   outputs: List[Path], out_dir: Path) -> RunManifest:
    return RunManifest(
        config_hash=config_hash(config),
        input_digests=dict(sorted(input_digests.items())),
        seed=config.seed,
        version=version,
        outputs=sorted(str(p.relative_to(out_dir)) for p in outputs),
        output_digests={str(p.relative_to(out_dir)): file_digest(p) for p in sorted(outputs)},
    )


def write_experiment(result: ExperimentResult, config: ExperimentConfig, out_dir: Union[str, Path],
                     version: str) -> RunManifest:
    """Reports, decision log, plot tables and the manifest (with output digests) for one run"""
    out_dir = Path(out_dir)
    outputs = [write_reports(result.reports, out_dir / REPORTS_FILE),
               write_decisions(result.decisions, out_dir / DECISIONS_FILE)]
    outputs.extend(write_report_tables(result.reports, result.comparison, out_dir))
    manifest = build_manifest(config, result.input_digests, version, outputs, out_dir)
    _dump_json(manifest.model_dump(mode="json"), out_dir / MANIFEST_FILE)
    logger.info("wrote %d files to %s", len(outputs) + 1, out_dir)
    return manifest
