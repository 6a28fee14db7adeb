"""Result files for Bell tests and the two-fringe reproduction run."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .fitting import CommonPeriodFit, SinusoidFit, fit_common_period_joint, poisson_sigma
from .franson import (
    BellVerdict,
    CoincidenceRecord,
    ExperimentConfig,
    bell_verdict,
    read_scan_csv,
    run_phase_scan,
    write_scan_csv,
)
from .fock import TimeGrid

FIG4_SETTINGS = ((0.0, 0.861), (math.pi / 2, 0.817))


def records_to_dataset(records: Sequence[CoincidenceRecord]):
    x = np.array([r.phi1 for r in records])
    y = np.array([r.counts for r in records], dtype=float)
    return x, y, poisson_sigma(y)


def _fit_entry(fit: SinusoidFit, verdict: BellVerdict | None) -> dict[str, Any]:
    entry = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in asdict(fit).items()}
    entry["bell_verdict"] = verdict.value if verdict is not None else None
    return entry


def emit_report(
    fits: Sequence[SinusoidFit],
    verdicts: Sequence[BellVerdict | None],
    out_path: str | Path,
    datasets: Sequence[tuple] | None = None,
    *,
    labels: Sequence[str] | None = None,
    config: dict[str, Any] | None = None,
    seed: int | None = None,
    extra: dict[str, Any] | None = None,
    timestamp: str | None = None,
) -> list[Path]:
    """Write ``report.json`` plus one plot-data CSV per dataset into ``out_path``.

    Everything except the ``generated_at`` field is a deterministic function
    of the inputs.
    """
    if not fits:
        raise ValueError("no fits to report")
    if len(verdicts) != len(fits):
        raise ValueError("need one verdict per fit")
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    labels = list(labels) if labels is not None else [f"dataset_{i}" for i in range(len(fits))]

    written = []
    payload = {
        "generated_at": timestamp or datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "config": config or {},
        "bell_threshold": 1 / math.sqrt(2),
        "datasets": [dict(label=lab, **_fit_entry(f, v)) for lab, f, v in zip(labels, fits, verdicts)],
    }
    if extra:
        payload.update(extra)
    report = out / "report.json"
    report.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(report)

    for lab, fit, data in zip(labels, fits, datasets or ()):
        x, y, s = (np.asarray(v, dtype=float) for v in data)
        path = out / f"{lab}_plot.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "y", "y_err", "model_y"])
            for row in zip(x, y, s, fit.model(x)):
                writer.writerow([repr(float(v)) for v in row])
        written.append(path)
    return written


@dataclass
class BellTestResult:
    joint: CommonPeriodFit
    verdicts: list[BellVerdict | None]
    labels: list[str]
    files: list[Path]


def _verdicts(fits: Sequence[SinusoidFit], k: float) -> list[BellVerdict | None]:
    return [None if f.degenerate else bell_verdict(min(f.visibility, 1.0), f.visibility_sigma, k) for f in fits]


def bell_test_from_csv(paths: Sequence[str | Path], out_dir: str | Path, k: float = 1.0) -> BellTestResult:
    """Fit scan CSVs jointly (common period) and report visibilities and verdicts."""
    labels = [Path(p).stem for p in paths]
    datasets = [records_to_dataset(read_scan_csv(p)) for p in paths]
    joint = fit_common_period_joint(datasets)
    verdicts = _verdicts(joint.fits, k)
    files = emit_report(
        joint.fits,
        verdicts,
        out_dir,
        datasets,
        labels=labels,
        config={"sources": [str(p) for p in paths], "k_sigma": k},
    )
    return BellTestResult(joint, verdicts, labels, files)


@dataclass
class Fig4Result:
    joint: CommonPeriodFit
    verdicts: list[BellVerdict | None]
    phase_offset: tuple[float, float]
    scans: list[list[CoincidenceRecord]]
    labels: list[str]
    files: list[Path]


def reproduce_fig4(
    seed: int,
    out_dir: str | Path,
    *,
    steps: int = 25,
    shots_mean: float = 1000.0,
    grid: TimeGrid | None = None,
    timestamp: str | None = None,
) -> Fig4Result:
    """Two fringes (phi2 = 0, pi/2 with gamma = 0.861, 0.817), joint fit and verdicts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    phi1 = np.linspace(0.0, 2 * np.pi, steps)
    scans, datasets, labels, files = [], [], [], []
    for stream, (phi2, gamma) in enumerate(FIG4_SETTINGS):
        config = ExperimentConfig(
            grid=grid or TimeGrid(), phi2=phi2, visibility_gamma=gamma, shots_mean=shots_mean, seed=seed
        )
        records = run_phase_scan(config, phi1, stream=stream)
        label = f"scan_phi2_{'0' if phi2 == 0 else 'pi_2'}"
        files.append(write_scan_csv(out / f"{label}.csv", records))
        scans.append(records)
        datasets.append(records_to_dataset(records))
        labels.append(label)

    joint = fit_common_period_joint(datasets)
    verdicts = _verdicts(joint.fits, 1.0)
    offset = joint.phase_difference(0, 1)
    files += emit_report(
        joint.fits,
        verdicts,
        out,
        datasets,
        labels=labels,
        seed=seed,
        timestamp=timestamp,
        config={
            "steps": steps,
            "shots_mean": shots_mean,
            "settings": [{"phi2": p, "gamma": g} for p, g in FIG4_SETTINGS],
        },
        extra={"phase_offset": {"value": offset[0], "sigma": offset[1]}},
    )
    return Fig4Result(joint, verdicts, offset, scans, labels, files)
