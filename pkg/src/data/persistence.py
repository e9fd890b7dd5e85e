# data/persistence.py

import csv
import hashlib
import json
import math
import os
from datetime import datetime, timezone

from data.experiment import ExperimentConfig, ExperimentReport, RunManifest, TrialRecord

TOOL_VERSION = "1.0.0"
UNITS = ("nats", "bits")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def input_hash(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def build_manifest(command, config, seed):
    return RunManifest(
        command=command,
        config=config,
        input_hash=input_hash(config),
        seed=seed,
        version=TOOL_VERSION,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def rate_scale(unit):
    if unit not in UNITS:
        raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")
    return 1.0 if unit == "nats" else 1.0 / math.log(2.0)


def _write_comments(file, items):
    for key, value in items:
        file.write(f"# {key}: {canonical_json(value)}\n")


def write_table_csv(path, header, rows, manifest, extra=()):
    """Plain table behind `#` comment lines carrying the run manifest."""
    with open(path, mode="w", newline="") as file:
        _write_comments(file, manifest.header_items())
        _write_comments(file, extra)
        writer = csv.writer(file)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_manifest(path, manifest):
    sidecar = f"{path}.manifest.json"
    with open(sidecar, mode="w") as file:
        json.dump(
            {
                "command": manifest.command,
                "config": manifest.config,
                "input_hash": manifest.input_hash,
                "seed": manifest.seed,
                "version": manifest.version,
                "timestamp": manifest.timestamp,
            },
            file,
            indent=2,
            sort_keys=True,
        )
    return sidecar


REPORT_HEADER = ("trial", "user_rank", "user_index", "sinr", "sum_rate_trial")
SUMMARY_HEADER = ("statistic", "value")


def summary_path(path):
    return f"{path}.summary.csv"


def _summary_items(report, unit):
    scale = rate_scale(unit)
    items = [
        ("unit", unit),
        ("trials", len(report.records)),
        ("mean_sum_rate", report.mean_sum_rate * scale),
        ("stderr", report.stderr * scale),
    ]
    items.extend((f"ks_rank_{rank}", value) for rank, value in report.ks)
    if report.analytic_mean is not None:
        items.append(("analytic_mean", report.analytic_mean * scale))
    return items


def _report_rows(report, scale):
    # random-selection schemes tag one user, so only rank 1 carries an index
    for record in report.records:
        rate = float(record.sum_rate) * scale
        for rank, sinr in enumerate(record.sinrs, start=1):
            index = record.users[rank - 1] if rank <= len(record.users) else ""
            yield record.trial, rank, index, float(sinr), rate


def write_report_csv(path, report, manifest, unit="nats"):
    """Per-(trial, rank) rows in path and the run statistics in summary_path(path)."""
    write_table_csv(path, REPORT_HEADER, _report_rows(report, rate_scale(unit)), manifest, [("unit", unit)])
    summary = summary_path(path)
    write_table_csv(summary, SUMMARY_HEADER, _summary_items(report, unit), manifest)
    return summary


def write_report_json(path, report, manifest, unit="nats"):
    scale = rate_scale(unit)
    document = {
        "manifest": dict(manifest.header_items()),
        "summary": dict(_summary_items(report, unit)),
        "records": [
            {
                "trial": record.trial,
                "users": list(record.users),
                "sinrs": list(record.sinrs),
                "sum_rate": record.sum_rate * scale,
            }
            for record in report.records
        ],
    }
    with open(path, mode="w") as file:
        json.dump(document, file, indent=2, sort_keys=True)


def _read_commented_csv(path):
    comments = {}
    data_lines = []
    with open(path, newline="") as file:
        for line in file:
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                comments[key] = json.loads(value)
            else:
                data_lines.append(line)
    return comments, list(csv.DictReader(data_lines))


def _read_summary(path):
    if not os.path.exists(path):
        return {}
    _, rows = _read_commented_csv(path)
    return {row["statistic"]: row["value"] for row in rows}


def read_report_csv(path):
    """Rebuild an ExperimentReport from write_report_csv output; rates come back in nats."""
    comments, rows = _read_commented_csv(path)
    if "config" not in comments:
        raise ValueError(f"{path}: no config comment line")
    scale = rate_scale(comments.get("unit", "nats"))
    by_trial = {}
    for row in rows:
        by_trial.setdefault(int(row["trial"]), []).append(row)
    records = []
    for trial, trial_rows in by_trial.items():
        trial_rows.sort(key=lambda row: int(row["user_rank"]))
        records.append(
            TrialRecord(
                trial=trial,
                users=tuple(int(row["user_index"]) for row in trial_rows if row["user_index"]),
                sinrs=tuple(float(row["sinr"]) for row in trial_rows),
                sum_rate=float(trial_rows[0]["sum_rate_trial"]) / scale,
            )
        )

    statistics = _read_summary(summary_path(path))
    ks = tuple(
        sorted((int(key[len("ks_rank_"):]), float(value)) for key, value in statistics.items() if key.startswith("ks_rank_"))
    )
    analytic_mean = statistics.get("analytic_mean")
    return ExperimentReport(
        config=ExperimentConfig.from_dict(comments["config"]),
        records=tuple(records),
        ks=ks,
        analytic_mean=float(analytic_mean) / scale if analytic_mean is not None else None,
    )
