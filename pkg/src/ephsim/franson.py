"""Franson-interferometer experiment on the post-selected time-bin EPH state.

Source layout: the late photon (H) enters port 0 and the early photon (V)
enters port 1 of a 50/50 beamsplitter; detectors D1 and D2 sit behind
analyzers on ports 0 and 1. Keeping one photon per port leaves the
antisymmetric time-bin state. Each analyzer sends H along its short arm and
V along its long arm, so with the arm imbalance equal to the source
separation both photons reach the detectors in the same bin and the two
surviving amplitudes interfere.

Analyzer 2's polarizer is oriented at -45 degrees (analyzer 1 at +45). That
orientation sign fixes the fringe to ``1 + cos(phi1 - phi2)``; equal
orientations give the complementary ``1 - cos`` fringe.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .fock import (
    DEFAULT_GRID,
    FockBasisState,
    ModeLabel,
    Pol,
    StateVector,
    TimeGrid,
    inner_product,
    make_single_photon,
    max_deviation_up_to_phase,
    one_photon_per_port,
    project_onto,
    tensor,
)
from .optics import BeamSplitter, Circuit, FransonAnalyzer, apply_element, unbalanced_mz

D1, D2 = 0, 1
AUX1, AUX2 = 2, 3
EARLY_BIN = 0
BELL_THRESHOLD = 1 / math.sqrt(2)


class MismatchWarning(UserWarning):
    """Analyzer imbalance differs from the source separation."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one Franson measurement.

    ``visibility_gamma`` scales the interference cross-term (mode overlap).
    ``analyzer_delay_bins`` defaults to the grid's ``tau0_bins``.
    ``source_phase`` multiplies the early input photon by a global phase.
    ``dark_counts`` is reserved and must stay 0.
    """

    grid: TimeGrid = DEFAULT_GRID
    phi1: float = 0.0
    phi2: float = 0.0
    visibility_gamma: float = 1.0
    shots_mean: float = 1000.0
    seed: int = 0
    polarization_free: bool = False
    analyzer_delay_bins: int | None = None
    source_phase: float = 0.0
    dark_counts: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.visibility_gamma <= 1.0:
            raise ValueError(f"visibility_gamma must lie in [0, 1], got {self.visibility_gamma}")
        if self.shots_mean < 0:
            raise ValueError("shots_mean must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer")
        if self.dark_counts != 0:
            raise NotImplementedError("dark counts are not modeled")

    @property
    def delay_bins(self) -> int:
        return self.grid.tau0_bins if self.analyzer_delay_bins is None else self.analyzer_delay_bins

    def with_(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class CoincidenceRecord:
    phi1: float
    phi2: float
    analytic_rate: float
    counts: int
    shots_mean: float


@dataclass(frozen=True)
class CoincidenceBreakdown:
    """Pipeline result for one phase setting.

    ``rate`` is normalized to the ideal (gamma = 1) fringe peak.
    Probabilities are per input photon pair.
    """

    rate: float
    interfering_probability: float
    satellite_probability: float
    ideal_peak_probability: float
    matched: bool


class BellVerdict(enum.Enum):
    VIOLATION = "VIOLATION"
    NO_VIOLATION = "NO_VIOLATION"
    INCONCLUSIVE = "INCONCLUSIVE"


def prepare_pair_at_beamsplitter(
    grid: TimeGrid,
    separation_bins: int,
    late_pol: Pol = Pol.H,
    early_pol: Pol = Pol.V,
    early_phase: float = 0.0,
) -> tuple[StateVector, float]:
    """Mix a late photon (port 0) and an early photon (port 1) on a 50/50 beamsplitter.

    Returns the unnormalized one-photon-per-port survivor and its
    post-selection probability.
    """
    if separation_bins < 0:
        raise ValueError("separation must be non-negative")
    late = make_single_photon(D1, EARLY_BIN + separation_bins, late_pol, grid)
    early = make_single_photon(D2, EARLY_BIN, early_pol, grid).scaled(complex(math.cos(early_phase), math.sin(early_phase)))
    mixed = apply_element(tensor(late, early), BeamSplitter(D1, D2))
    survivor = project_onto(mixed, one_photon_per_port(D1, D2))
    return survivor, survivor.norm_sq


def prepare_eq1_state(
    grid: TimeGrid = DEFAULT_GRID, polarization_free: bool = False, source_phase: float = 0.0
) -> tuple[StateVector, float]:
    """Post-selected antisymmetric time-bin pair (unnormalized) and its probability."""
    pols = (Pol.NONE, Pol.NONE) if polarization_free else (Pol.H, Pol.V)
    return prepare_pair_at_beamsplitter(grid, grid.tau0_bins, *pols, early_phase=source_phase)


def eq1_reference(grid: TimeGrid = DEFAULT_GRID, late_pol: Pol = Pol.H, early_pol: Pol = Pol.V) -> StateVector:
    """(|l>_1 |e>_2 - |e>_1 |l>_2) / sqrt(2) with the source's polarization labels."""
    e, l = EARLY_BIN, EARLY_BIN + grid.tau0_bins
    le = FockBasisState.from_modes([ModeLabel(D1, l, late_pol), ModeLabel(D2, e, early_pol)])
    el = FockBasisState.from_modes([ModeLabel(D1, e, early_pol), ModeLabel(D2, l, late_pol)])
    amp = 1 / math.sqrt(2)
    return StateVector({le: amp, el: -amp}, grid=grid)


def analyzer_circuits(config: ExperimentConfig, polarizers: bool = True) -> tuple[Circuit, Circuit]:
    d = config.delay_bins
    if config.polarization_free:
        if not polarizers:
            raise ValueError("the polarization-free analyzers have no separate polarizer stage")
        # pi on analyzer 2's long arm plays the role of the -45 degree polarizer
        return (
            unbalanced_mz(D1, AUX1, d, config.phi1),
            unbalanced_mz(D2, AUX2, d, config.phi2 + math.pi),
        )
    first = FransonAnalyzer(D1, d, config.phi1, math.pi / 4, AUX1)
    second = FransonAnalyzer(D2, d, config.phi2, -math.pi / 4, AUX2)
    if polarizers:
        return first.circuit(), second.circuit()
    return first.routing(), second.routing()


def _interfering_bins(config: ExperimentConfig) -> set[tuple[int, int]]:
    late_short = EARLY_BIN + config.grid.tau0_bins
    early_long = EARLY_BIN + config.delay_bins
    return {(late_short, early_long), (early_long, late_short)}


def _detection_bins(basis: FockBasisState) -> tuple[int, int]:
    modes = basis.modes()
    return (
        next(m.bin for m in modes if m.port == D1),
        next(m.bin for m in modes if m.port == D2),
    )


def _through_analyzers(state: StateVector, circuits: tuple[Circuit, Circuit]) -> StateVector:
    for c in circuits:
        state = apply_element(state, c)
    return project_onto(state, one_photon_per_port(D1, D2))


def coincidence_breakdown(config: ExperimentConfig) -> CoincidenceBreakdown:
    """Run source, beamsplitter, post-selection and both analyzers for one setting.

    The two surviving source terms are propagated separately; their
    interfering-bin amplitudes are combined with the cross-term scaled by
    ``visibility_gamma``.
    """
    matched = config.delay_bins == config.grid.tau0_bins
    if not matched:
        warnings.warn(
            f"analyzer delay {config.delay_bins} != source separation {config.grid.tau0_bins}; "
            "the fringe washes out",
            MismatchWarning,
            stacklevel=2,
        )
    survivor, _ = prepare_eq1_state(config.grid, config.polarization_free, config.source_phase)
    circuits = analyzer_circuits(config)
    window = _interfering_bins(config)

    def interfering(basis):
        return _detection_bins(basis) in window

    arms = []
    satellites = survivor.like({})
    for basis, amp in survivor.terms.items():
        detected = _through_analyzers(survivor.like({basis: amp}), circuits)
        arms.append(project_onto(detected, interfering))
        satellites = satellites + project_onto(detected, lambda b: not interfering(b))

    norms = [math.sqrt(a.norm_sq) for a in arms]
    cross = sum(
        2 * inner_product(arms[i], arms[j]).real for i in range(len(arms)) for j in range(i + 1, len(arms))
    )
    prob = sum(a.norm_sq for a in arms) + config.visibility_gamma * cross
    ideal_peak = sum(norms) ** 2
    return CoincidenceBreakdown(
        rate=prob / ideal_peak if ideal_peak > 0 else 0.0,
        interfering_probability=prob,
        satellite_probability=satellites.norm_sq,
        ideal_peak_probability=ideal_peak,
        matched=matched,
    )


def analytic_coincidence_rate(config: ExperimentConfig) -> float:
    """Coincidence rate in the interfering bin, normalized so the ideal peak is 1."""
    return coincidence_breakdown(config).rate


def closed_form_rate(phi1: float, phi2: float, gamma: float = 1.0) -> float:
    return (1 + gamma * math.cos(phi1 - phi2)) / 2


def eq2_target(config: ExperimentConfig) -> StateVector:
    """(|S>_1 |L>_2 - exp(i(phi1 - phi2)) |L>_1 |S>_2) / sqrt(2) before the polarizers."""
    short_bin = EARLY_BIN + config.grid.tau0_bins
    long_bin = EARLY_BIN + config.delay_bins
    s1, l1 = ModeLabel(D1, short_bin, Pol.H), ModeLabel(D1, long_bin, Pol.V)
    s2, l2 = ModeLabel(D2, short_bin, Pol.H), ModeLabel(D2, long_bin, Pol.V)
    amp = 1 / math.sqrt(2)
    phase = complex(math.cos(config.phi1 - config.phi2), math.sin(config.phi1 - config.phi2))
    return StateVector(
        {FockBasisState.from_modes([s1, l2]): amp, FockBasisState.from_modes([l1, s2]): -phase * amp},
        grid=config.grid,
    )


def eq2_pipeline_state(config: ExperimentConfig) -> StateVector:
    """Normalized post-selected state after the PBS routing, before the polarizers."""
    survivor, _ = prepare_eq1_state(config.grid, source_phase=config.source_phase)
    routed = _through_analyzers(survivor, analyzer_circuits(config, polarizers=False))
    return routed.normalized()


def eq2_state_check(config: ExperimentConfig) -> float:
    if config.visibility_gamma != 1:
        raise ValueError("the two-term state check assumes gamma = 1")
    if config.polarization_free:
        raise ValueError("the short/long state is defined for the polarization-based analyzers")
    return max_deviation_up_to_phase(eq2_pipeline_state(config), eq2_target(config))


def _scan_point(config: ExperimentConfig, index: int, phi1: float, stream: int) -> CoincidenceRecord:
    point = config.with_(phi1=float(phi1))
    rate = analytic_coincidence_rate(point)
    rng = np.random.default_rng([config.seed, stream, index])
    counts = int(rng.poisson(config.shots_mean * rate))
    return CoincidenceRecord(float(phi1), config.phi2, rate, counts, config.shots_mean)


def run_phase_scan(
    config: ExperimentConfig,
    phi1_values: Sequence[float],
    *,
    stream: int = 0,
    workers: int | None = None,
) -> list[CoincidenceRecord]:
    """Analytic rate and Poisson counts for each phi1.

    Point ``i`` draws from the generator seeded by ``(seed, stream, i)``, so
    results do not depend on evaluation order or ``workers``.
    """
    if len(phi1_values) == 0:
        raise ValueError("phi1_values is empty")
    args = [(config, i, phi, stream) for i, phi in enumerate(phi1_values)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda a: _scan_point(*a), args))
    return [_scan_point(*a) for a in args]


def bell_verdict(visibility: float, uncertainty: float, k: float = 1.0) -> BellVerdict:
    """Compare a fringe visibility with the 1/sqrt(2) Bell threshold at k sigma."""
    if uncertainty < 0:
        raise ValueError("uncertainty must be non-negative")
    if not 0 <= visibility <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility}")
    if visibility - k * uncertainty > BELL_THRESHOLD:
        return BellVerdict.VIOLATION
    if visibility + k * uncertainty < BELL_THRESHOLD:
        return BellVerdict.NO_VIOLATION
    return BellVerdict.INCONCLUSIVE


SCAN_COLUMNS = ("phi1_rad", "phi2_rad", "analytic_rate", "counts", "shots_mean")


def write_scan_csv(path: str | Path, records: Sequence[CoincidenceRecord]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCAN_COLUMNS)
        for r in records:
            writer.writerow([repr(r.phi1), repr(r.phi2), repr(r.analytic_rate), r.counts, repr(r.shots_mean)])
    return path


def read_scan_csv(path: str | Path) -> list[CoincidenceRecord]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(SCAN_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [
            CoincidenceRecord(
                float(row["phi1_rad"]),
                float(row["phi2_rad"]),
                float(row["analytic_rate"]),
                int(row["counts"]),
                float(row["shots_mean"]),
            )
            for row in reader
        ]

