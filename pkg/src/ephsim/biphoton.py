"""Two-photon amplitudes A(1,2) and A(1:2), and the PDC / EPH scenario builders.

``a1c2[T]`` is the amplitude for one detection in each port at the same bin
``T``. ``a12[delta]`` collects, over absolute time, the amplitudes for
detections in port1 at ``t`` and port2 at ``t - delta``.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .fock import (
    DEFAULT_CUTOFF,
    DEFAULT_GRID,
    FockBasisState,
    ModeLabel,
    Pol,
    StateVector,
    TimeGrid,
    make_coherent_product,
    make_single_photon,
    make_single_photon_superposition,
    tensor,
)
from .optics import apply_element, unbalanced_mz
from .tpa import TpaChannel, apply_tpa

PORT1, PORT2 = 0, 1
AUX1, AUX2 = 2, 3
EARLY_BIN = 0
ET_COHERENT_N_MAX = 2


class Normalization(enum.Enum):
    RAW = "raw"
    PEAK_ONE = "peak"


class Scenario(enum.Enum):
    PDC_ET = "pdc-et"
    EPH_ET = "eph-et"
    PDC_TB = "pdc-tb"
    EPH_TB = "eph-tb"


class ScenarioWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Background:
    """Field the holes are punched into: ``"coherent"`` with amplitude ``alpha`` or ``"single"``."""

    kind: str = "single"
    alpha: complex = 0.0

    def __post_init__(self):
        if self.kind not in ("coherent", "single"):
            raise ValueError(f"unknown background {self.kind!r}")

    @classmethod
    def coherent(cls, alpha: complex) -> Background:
        return cls("coherent", alpha)

    @classmethod
    def single(cls) -> Background:
        return cls("single")

    @classmethod
    def parse(cls, text: str) -> Background:
        """Parse ``single`` or ``coherent:<alpha>``."""
        if text == "single":
            return cls.single()
        kind, _, value = text.partition(":")
        if kind != "coherent" or not value:
            raise ValueError(f"background must be 'single' or 'coherent:<alpha>', got {text!r}")
        return cls.coherent(complex(value))


@dataclass(frozen=True)
class BiphotonAmplitudes:
    a12: dict[int, complex]
    a1c2: dict[int, complex]
    normalization: Normalization = Normalization.RAW
    n_bins: int = 0
    higher_sectors_ignored: bool = False
    empty: bool = False
    pair_counts: dict[int, int] = field(default_factory=dict, repr=False)

    def peak_normalized(self) -> BiphotonAmplitudes:
        return BiphotonAmplitudes(
            a12=_peak_one(self.a12),
            a1c2=_peak_one(self.a1c2),
            normalization=Normalization.PEAK_ONE,
            n_bins=self.n_bins,
            higher_sectors_ignored=self.higher_sectors_ignored,
            empty=self.empty,
            pair_counts=self.pair_counts,
        )


def _peak_one(values: dict[int, complex]) -> dict[int, complex]:
    peak = max((abs(v) for v in values.values()), default=0.0)
    if peak == 0:
        return dict(values)
    return {k: v / peak for k, v in values.items()}


def _aggregate(values: list[complex]) -> complex:
    # a lone contribution keeps its phase; several are combined by magnitude
    if len(values) == 1:
        return values[0]
    return math.sqrt(math.fsum(abs(v) ** 2 for v in values))


def compute_amplitudes(
    state: StateVector,
    port1: int = PORT1,
    port2: int = PORT2,
    normalization: Normalization = Normalization.RAW,
) -> BiphotonAmplitudes:
    """Biphoton amplitudes of the one-photon-per-port sector of ``state``.

    Polarization is traced by magnitude. ``a12`` is the root-sum-square over
    absolute time, rescaled by ``sqrt(n_bins / (n_bins - |delta|))`` so that a
    stationary background on the finite grid gives a flat profile.
    """
    n = state.grid.n_bins
    pairs: dict[tuple[int, int], list[complex]] = {}
    higher = False
    for basis, amp in state.terms.items():
        total = basis.total_photons()
        if total > 2:
            higher = True
            continue
        if total != 2 or basis.port_count(port1) != 1 or basis.port_count(port2) != 1:
            continue
        t1 = next(m.bin for m in basis.modes() if m.port == port1)
        t2 = next(m.bin for m in basis.modes() if m.port == port2)
        pairs.setdefault((t1, t2), []).append(amp)

    a1c2 = {t: 0j for t in range(n)}
    by_delta: dict[int, list[complex]] = {d: [] for d in range(-(n - 1), n)}
    for (t1, t2), amps in pairs.items():
        value = _aggregate(amps)
        by_delta[t1 - t2].append(value)
        if t1 == t2:
            a1c2[t1] = value

    a12: dict[int, complex] = {}
    for d, values in by_delta.items():
        edge = math.sqrt(n / (n - abs(d)))
        a12[d] = 0j if not values else edge * complex(_aggregate(values))

    empty = not pairs
    if empty:
        warnings.warn("state has no support on the one-photon-per-port sector", ScenarioWarning, stacklevel=2)
    result = BiphotonAmplitudes(
        a12=a12,
        a1c2=a1c2,
        n_bins=n,
        higher_sectors_ignored=higher,
        empty=empty,
        pair_counts={d: n - abs(d) for d in by_delta},
    )
    return result.peak_normalized() if normalization == Normalization.PEAK_ONE else result


def _tb_mz_amplitudes(port: int, aux: int, phase: float, grid: TimeGrid) -> list[tuple[int, complex]]:
    """Bin amplitudes a pulse at the early bin acquires in the MZ output port."""
    out = apply_element(make_single_photon(port, EARLY_BIN, Pol.NONE, grid), unbalanced_mz(port, aux, grid.tau0_bins, phase))
    return [(b.modes()[0].bin, a) for b, a in out.terms.items() if b.modes()[0].port == port]


def build_scenario(
    which: Scenario,
    background: Background | None = None,
    grid: TimeGrid = DEFAULT_GRID,
    tpa: TpaChannel | None = None,
    *,
    n_max: int | None = None,
    mz_phases: tuple[float, float] = (0.0, math.pi),
) -> StateVector:
    """Build one of the four canonical PDC / EPH states on ``grid``.

    Energy-time backgrounds fill every bin; time-bin backgrounds are pulses
    at the early bin split by unbalanced Mach-Zehnders with long-arm phases
    ``mz_phases``. The default phases make the punched single-photon state
    antisymmetric; equal phases give the symmetric partner. Coherent
    backgrounds are truncated at ``n_max`` total photons (2 for energy-time,
    the cutoff for time-bin) and renormalized before absorption.
    """
    which = Scenario(which)
    e, l = EARLY_BIN, EARLY_BIN + grid.tau0_bins

    if which in (Scenario.PDC_ET, Scenario.PDC_TB):
        if background is not None and background.kind == "coherent":
            warnings.warn(f"{which.value} ignores the coherent background", ScenarioWarning, stacklevel=2)
        bins = range(grid.n_bins) if which == Scenario.PDC_ET else (e, l)
        pair = [ModeLabel(PORT1, t, Pol.NONE) for t in bins]
        amp = 1 / math.sqrt(len(bins))
        return StateVector(
            {FockBasisState.from_modes([m, m.with_(port=PORT2)]): amp for m in pair}, grid=grid
        )

    if tpa is None or tpa.strength <= 0:
        raise ValueError(f"{which.value} needs a TPA channel with strength > 0")
    background = background or Background.single()

    if which == Scenario.EPH_ET:
        bins = [(t, 1.0) for t in range(grid.n_bins)]
        if background.kind == "single":
            source = tensor(
                make_single_photon_superposition(PORT1, bins, Pol.NONE, grid),
                make_single_photon_superposition(PORT2, bins, Pol.NONE, grid),
            )
        else:
            limit = ET_COHERENT_N_MAX if n_max is None else n_max
            alpha_bins = [(t, background.alpha) for t in range(grid.n_bins)]
            source = tensor(
                make_coherent_product(PORT1, alpha_bins, Pol.NONE, limit, grid),
                make_coherent_product(PORT2, alpha_bins, Pol.NONE, limit, grid),
                n_max=limit,
            ).normalized()
        return apply_tpa(source, tpa)

    if background.kind == "single":
        first = apply_element(
            make_single_photon(PORT1, e, Pol.NONE, grid), unbalanced_mz(PORT1, AUX1, grid.tau0_bins, mz_phases[0])
        )
        second = apply_element(
            make_single_photon(PORT2, e, Pol.NONE, grid), unbalanced_mz(PORT2, AUX2, grid.tau0_bins, mz_phases[1])
        )
        source = tensor(first, second)
    else:
        limit = DEFAULT_CUTOFF if n_max is None else n_max
        # a coherent pulse stays coherent through linear optics; the aux outputs factor out
        first = [(b, background.alpha * a) for b, a in _tb_mz_amplitudes(PORT1, AUX1, mz_phases[0], grid)]
        second = [(b, background.alpha * a) for b, a in _tb_mz_amplitudes(PORT2, AUX2, mz_phases[1], grid)]
        source = tensor(
            make_coherent_product(PORT1, first, Pol.NONE, limit, grid),
            make_coherent_product(PORT2, second, Pol.NONE, limit, grid),
            n_max=limit,
        ).normalized()
    return apply_tpa(source, tpa)


def negative_image_residual(
    eph: BiphotonAmplitudes,
    pdc: BiphotonAmplitudes,
    bg_level: float = 1.0,
    support_tol: float = 1e-12,
) -> float:
    """max | |a12_eph| - bg_level * (1 - |a12_pdc|) | over the populated support.

    The support is every delay where either map is nonzero.
    """
    if eph.normalization != Normalization.PEAK_ONE or pdc.normalization != Normalization.PEAK_ONE:
        raise ValueError("negative-image comparison needs PEAK_ONE amplitudes")
    if eph.n_bins != pdc.n_bins or set(eph.a12) != set(pdc.a12):
        raise ValueError("amplitude grids differ")
    support = [d for d in eph.a12 if abs(eph.a12[d]) > support_tol or abs(pdc.a12[d]) > support_tol]
    return max(
        (abs(abs(eph.a12[d]) - bg_level * (1 - abs(pdc.a12[d]))) for d in support),
        default=0.0,
    )


def write_amplitude_csv(path: str | Path, values: dict[int, complex]) -> Path:
    """CSV with columns index, re, im, abs."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "re", "im", "abs"])
        for k in sorted(values):
            v = complex(values[k])
            writer.writerow([k, repr(v.real), repr(v.imag), repr(abs(v))])
    return path
