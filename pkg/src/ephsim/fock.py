"""Occupation-number basis, sparse state vectors and the time-bin grid.

Every other module builds on the three value types defined here:
:class:`ModeLabel` (one optical mode), :class:`FockBasisState` (an
occupation assignment over modes) and :class:`StateVector` (a sparse complex
superposition of basis states). All of them are immutable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import IntEnum
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

EPS_PRUNE = 1e-14
DEFAULT_CUTOFF = 4


class Pol(IntEnum):
    H = 0
    V = 1
    NONE = 2  # polarization-free experiments only


class ModeLabel(NamedTuple):
    """One optical mode: spatial port, time-bin index and polarization.

    Tuple ordering (port, bin, pol) is the canonical sort key.
    """

    port: int
    bin: int
    pol: Pol = Pol.NONE

    def with_(self, port: int | None = None, bin: int | None = None, pol: Pol | None = None) -> ModeLabel:
        return ModeLabel(
            self.port if port is None else port,
            self.bin if bin is None else bin,
            self.pol if pol is None else pol,
        )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time-bin grid.

    Attributes:
        n_bins: number of bins.
        dt_fs: bin spacing in femtoseconds.
        tau0_bins: early-to-late separation in bins.
        coherence_fs: single-photon coherence time in femtoseconds.
    """

    n_bins: int = 64
    dt_fs: float = 100.0
    tau0_bins: int = 26
    coherence_fs: float = 200.0

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError(f"n_bins must be positive, got {self.n_bins}")
        if not 1 <= self.tau0_bins < self.n_bins:
            raise ValueError(f"need 1 <= tau0_bins < n_bins, got tau0_bins={self.tau0_bins}, n_bins={self.n_bins}")
        if self.dt_fs <= 0:
            raise ValueError("dt_fs must be positive")

    @property
    def tau0_fs(self) -> float:
        return self.tau0_bins * self.dt_fs

    @property
    def coherence_bins(self) -> float:
        return self.coherence_fs / self.dt_fs

    def contains(self, bin: int) -> bool:
        return 0 <= bin < self.n_bins

    def check_bin(self, bin: int) -> None:
        if not self.contains(bin):
            raise OffGridError(f"bin {bin} outside grid [0, {self.n_bins})")


DEFAULT_GRID = TimeGrid()


class OffGridError(ValueError):
    """A photon was placed or moved outside the time-bin grid."""


class CutoffError(ValueError):
    """A basis state exceeds the configured photon-number cutoff."""


@dataclass(frozen=True)
class FockBasisState:
    """Occupation-number basis element.

    ``occupations`` is a tuple of ``(ModeLabel, count)`` pairs, sorted by
    mode, with every count >= 1. Build instances through :meth:`from_counts`
    unless the tuple is already canonical.
    """

    occupations: tuple[tuple[ModeLabel, int], ...] = ()

    @classmethod
    def from_counts(cls, counts: Mapping[ModeLabel, int] | Iterable[tuple[ModeLabel, int]]) -> FockBasisState:
        items = counts.items() if isinstance(counts, Mapping) else counts
        merged: dict[ModeLabel, int] = {}
        for mode, n in items:
            if n < 0:
                raise ValueError(f"negative occupation {n} for {mode}")
            merged[mode] = merged.get(mode, 0) + n
        return cls(tuple(sorted((m, n) for m, n in merged.items() if n > 0)))

    @classmethod
    def from_modes(cls, modes: Iterable[ModeLabel]) -> FockBasisState:
        """Basis state with one photon per listed mode (repeats add up)."""
        return cls.from_counts((m, 1) for m in modes)

    def total_photons(self) -> int:
        return sum(n for _, n in self.occupations)

    def count(self, mode: ModeLabel) -> int:
        for m, n in self.occupations:
            if m == mode:
                return n
        return 0

    def port_count(self, port: int) -> int:
        return sum(n for m, n in self.occupations if m.port == port)

    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(m for m, _ in self.occupations)

    def as_dict(self) -> dict[ModeLabel, int]:
        return dict(self.occupations)

    def __str__(self):
        if not self.occupations:
            return "|vac>"
        parts = [f"{m.port}:{m.bin}:{m.pol.name}" + (f"^{n}" if n > 1 else "") for m, n in self.occupations]
        return "|" + ",".join(parts) + ">"


VACUUM = FockBasisState()


class StateVector:
    """Sparse, immutable superposition of Fock basis states.

    Amplitudes below ``EPS_PRUNE`` in magnitude are dropped on construction.
    The state may be sub-normalized after filters, absorption or projection.
    """

    __slots__ = ("_terms", "_norm_sq", "grid", "cutoff")

    def __init__(
        self,
        terms: Mapping[FockBasisState, complex] | Iterable[tuple[FockBasisState, complex]] = (),
        grid: TimeGrid = DEFAULT_GRID,
        cutoff: int = DEFAULT_CUTOFF,
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        kept: dict[FockBasisState, complex] = {}
        for basis, amp in items:
            kept[basis] = kept.get(basis, 0j) + complex(amp)
        kept = {b: a for b, a in kept.items() if abs(a) >= EPS_PRUNE}
        for basis in kept:
            if basis.total_photons() > cutoff:
                raise CutoffError(f"{basis} has {basis.total_photons()} photons, cutoff is {cutoff}")
        self._terms = MappingProxyType(dict(sorted(kept.items(), key=lambda kv: kv[0].occupations)))
        self._norm_sq = math.fsum(abs(a) ** 2 for a in kept.values())
        self.grid = grid
        self.cutoff = cutoff

    @property
    def terms(self) -> Mapping[FockBasisState, complex]:
        return self._terms

    @property
    def norm_sq(self) -> float:
        return self._norm_sq

    def amplitude(self, basis: FockBasisState) -> complex:
        return self._terms.get(basis, 0j)

    def like(self, terms) -> StateVector:
        """New state on the same grid and cutoff."""
        return StateVector(terms, grid=self.grid, cutoff=self.cutoff)

    def scaled(self, factor: complex) -> StateVector:
        return self.like((b, factor * a) for b, a in self._terms.items())

    def normalized(self) -> StateVector:
        if self._norm_sq == 0:
            raise ZeroDivisionError("cannot normalize the zero state")
        return self.scaled(1 / math.sqrt(self._norm_sq))

    def __add__(self, other: StateVector) -> StateVector:
        merged = dict(self._terms)
        for b, a in other.terms.items():
            merged[b] = merged.get(b, 0j) + a
        return self.like(merged)

    def __sub__(self, other: StateVector) -> StateVector:
        return self + other.scaled(-1)

    def __mul__(self, factor: complex) -> StateVector:
        return self.scaled(factor)

    __rmul__ = __mul__

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[FockBasisState, complex]]:
        return iter(self._terms.items())

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return dict(self._terms) == dict(other.terms)

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self):
        shown = " + ".join(f"({a:.4g}){b}" for b, a in list(self._terms.items())[:6])
        more = f" + ... ({len(self)} terms)" if len(self) > 6 else ""
        return f"StateVector({shown or '0'}{more})"


def vacuum(grid: TimeGrid = DEFAULT_GRID, cutoff: int = DEFAULT_CUTOFF) -> StateVector:
    return StateVector({VACUUM: 1.0}, grid=grid, cutoff=cutoff)


def zero_state(grid: TimeGrid = DEFAULT_GRID, cutoff: int = DEFAULT_CUTOFF) -> StateVector:
    return StateVector({}, grid=grid, cutoff=cutoff)


def make_single_photon(port: int, bin: int, pol: Pol = Pol.NONE, grid: TimeGrid = DEFAULT_GRID) -> StateVector:
    """Normalized one-photon state in mode ``(port, bin, pol)``."""
    grid.check_bin(bin)
    return StateVector({FockBasisState.from_modes([ModeLabel(port, bin, pol)]): 1.0}, grid=grid)


def make_single_photon_superposition(
    port: int,
    bin_amplitudes: Sequence[tuple[int, complex]],
    pol: Pol = Pol.NONE,
    grid: TimeGrid = DEFAULT_GRID,
) -> StateVector:
    """One photon spread over several bins, normalized."""
    if not bin_amplitudes:
        raise ValueError("empty bin list")
    for b, _ in bin_amplitudes:
        grid.check_bin(b)
    state = StateVector(
        ((FockBasisState.from_modes([ModeLabel(port, b, pol)]), a) for b, a in bin_amplitudes), grid=grid
    )
    return state.normalized()


def make_coherent_product(
    port: int,
    bin_amplitudes: Sequence[tuple[int, complex]],
    pol: Pol = Pol.NONE,
    n_max: int = DEFAULT_CUTOFF,
    grid: TimeGrid = DEFAULT_GRID,
    cutoff: int = DEFAULT_CUTOFF,
) -> StateVector:
    """Multi-bin coherent product state truncated at ``n_max`` total photons.

    Amplitudes are proportional to ``prod_b alpha_b**n_b / sqrt(n_b!)`` and
    renormalized over the truncated space.
    """
    if not bin_amplitudes:
        raise ValueError("empty bin list")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if n_max > cutoff:
        raise CutoffError(f"n_max={n_max} exceeds cutoff {cutoff}")
    bins = [b for b, _ in bin_amplitudes]
    if len(set(bins)) != len(bins):
        raise ValueError("duplicate bins in coherent product")
    for b in bins:
        grid.check_bin(b)
    alphas = [complex(a) for _, a in bin_amplitudes]
    modes = [ModeLabel(port, b, pol) for b in bins]

    terms: dict[FockBasisState, complex] = {}
    for occ in _compositions_up_to(len(modes), n_max):
        amp = 1 + 0j
        for alpha, n in zip(alphas, occ):
            if n:
                amp *= alpha**n / math.sqrt(math.factorial(n))
        if amp != 0:
            terms[FockBasisState.from_counts(zip(modes, occ))] = amp
    return StateVector(terms, grid=grid, cutoff=cutoff).normalized()


def _compositions_up_to(n_slots: int, total: int) -> Iterator[tuple[int, ...]]:
    """All non-negative integer tuples of length ``n_slots`` with sum <= total."""
    if n_slots == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _compositions_up_to(n_slots - 1, total - first):
            yield (first, *rest)


def tensor(a: StateVector, b: StateVector, n_max: int | None = None) -> StateVector:
    """Product state of two states living on disjoint mode sets.

    Terms with more than ``n_max`` photons are dropped (no renormalization).
    """
    modes_a = {m for basis in a.terms for m in basis.modes()}
    modes_b = {m for basis in b.terms for m in basis.modes()}
    if modes_a & modes_b:
        raise ValueError(f"tensor factors share modes: {sorted(modes_a & modes_b)[:3]}")
    limit = a.cutoff if n_max is None else n_max
    by_count: dict[int, list[tuple[FockBasisState, complex]]] = {}
    for bb, xb in b.terms.items():
        by_count.setdefault(bb.total_photons(), []).append((bb, xb))
    terms: dict[FockBasisState, complex] = {}
    for ba, xa in a.terms.items():
        room = limit - ba.total_photons()
        for k in range(room + 1):
            for bb, xb in by_count.get(k, ()):
                terms[FockBasisState(tuple(sorted(ba.occupations + bb.occupations)))] = xa * xb
    return StateVector(terms, grid=a.grid, cutoff=max(a.cutoff, limit))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for basis in small.terms:
        if basis in large.terms:
            total += a.terms[basis].conjugate() * b.terms[basis]
    return total


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 between the normalized versions of two states."""
    return abs(inner_product(a, b)) ** 2 / (a.norm_sq * b.norm_sq)


def project_onto(state: StateVector, predicate: Callable[[FockBasisState], bool]) -> StateVector:
    """Keep the terms satisfying ``predicate``; the norm is not restored."""
    return state.like((b, a) for b, a in state.terms.items() if predicate(b))


def max_deviation_up_to_phase(state: StateVector, target: StateVector) -> float:
    """Largest amplitude difference after removing the best global phase."""
    overlap = inner_product(state, target)
    phase = cmath.exp(1j * cmath.phase(overlap)) if abs(overlap) > 0 else 1
    keys = set(state.terms) | set(target.terms)
    return max((abs(phase * state.amplitude(k) - target.amplitude(k)) for k in keys), default=0.0)


def one_photon_per_port(*ports: int, exclusive: bool = True) -> Callable[[FockBasisState], bool]:
    """Predicate: exactly one photon in each listed port.

    With ``exclusive`` the term must also carry no photons elsewhere.
    """
    wanted = set(ports)

    def predicate(basis: FockBasisState) -> bool:
        if any(basis.port_count(p) != 1 for p in wanted):
            return False
        if exclusive:
            return basis.total_photons() == len(wanted)
        return True

    return predicate
