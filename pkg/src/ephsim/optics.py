"""Linear-optical elements acting on sparse Fock states.

Each element describes how a single creation operator is rewritten
(``mode_map``); :func:`apply_element` lifts that map to multi-photon terms by
multilinear expansion with the bosonic square-root factors. Elements are
frozen dataclasses so they can be shared freely.
"""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .fock import (
    DEFAULT_GRID,
    FockBasisState,
    ModeLabel,
    OffGridError,
    Pol,
    StateVector,
    TimeGrid,
)

Image = tuple[tuple[ModeLabel, complex], ...]

SYMMETRIC = "symmetric"
REAL = "real"


class Element:
    """Base class; subclasses implement :meth:`acts_on` and :meth:`mode_map`."""

    unitary: bool = True

    @property
    def ports(self) -> tuple[int, ...]:
        raise NotImplementedError

    def acts_on(self, mode: ModeLabel) -> bool:
        return mode.port in self.ports

    def mode_map(self, mode: ModeLabel, grid: TimeGrid) -> Image:
        raise NotImplementedError


@dataclass(frozen=True)
class BeamSplitter(Element):
    """Lossless beamsplitter coupling two ports, polarization-independent.

    ``theta`` is the mixing angle (pi/4 for 50/50). The symmetric convention
    gives the reflected amplitude a factor ``i``; the real convention uses a
    real rotation with a sign on one reflection.
    """

    port_a: int
    port_b: int
    theta: float = math.pi / 4
    convention: str = SYMMETRIC

    def __post_init__(self):
        if self.port_a == self.port_b:
            raise ValueError("beamsplitter needs two distinct ports")
        if self.convention not in (SYMMETRIC, REAL):
            raise ValueError(f"unknown beamsplitter convention {self.convention!r}")

    @property
    def ports(self):
        return (self.port_a, self.port_b)

    def mode_map(self, mode, grid):
        c, s = math.cos(self.theta), math.sin(self.theta)
        to_a, to_b = mode.with_(port=self.port_a), mode.with_(port=self.port_b)
        if self.convention == SYMMETRIC:
            if mode.port == self.port_a:
                return ((to_a, c), (to_b, 1j * s))
            return ((to_a, 1j * s), (to_b, c))
        if mode.port == self.port_a:
            return ((to_a, c), (to_b, s))
        return ((to_a, -s), (to_b, c))


@dataclass(frozen=True)
class PolarizingBeamSplitter(Element):
    """H stays in its port, V is exchanged between the two ports."""

    port_a: int
    port_b: int

    @property
    def ports(self):
        return (self.port_a, self.port_b)

    def mode_map(self, mode, grid):
        if mode.pol == Pol.H:
            return ((mode, 1.0),)
        if mode.pol == Pol.V:
            other = self.port_b if mode.port == self.port_a else self.port_a
            return ((mode.with_(port=other), 1.0),)
        raise ValueError(f"PBS needs H or V photons, got {mode}")


@dataclass(frozen=True)
class PhaseShift(Element):
    """Phase ``phi`` on one port; ``pol=None`` applies it to every polarization."""

    port: int
    phi: float
    pol: Pol | None = None

    @property
    def ports(self):
        return (self.port,)

    def acts_on(self, mode):
        return mode.port == self.port and (self.pol is None or mode.pol == self.pol)

    def mode_map(self, mode, grid):
        return ((mode, cmath.exp(1j * self.phi)),)


@dataclass(frozen=True)
class Delay(Element):
    """Shift every photon in ``port`` by ``shift_bins`` time bins."""

    port: int
    shift_bins: int

    @property
    def ports(self):
        return (self.port,)

    def mode_map(self, mode, grid):
        new_bin = mode.bin + self.shift_bins
        if not grid.contains(new_bin):
            raise OffGridError(f"delay of {self.shift_bins} moves {mode} off the {grid.n_bins}-bin grid")
        return ((mode.with_(bin=new_bin), 1.0),)


QWP = "QWP"
HWP = "HWP"


@dataclass(frozen=True)
class WavePlate(Element):
    """Quarter- or half-wave plate with its fast axis at ``angle`` from H."""

    port: int
    kind: str = QWP
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in (QWP, HWP):
            raise ValueError(f"unknown wave plate {self.kind!r}")

    @property
    def ports(self):
        return (self.port,)

    def jones(self) -> np.ndarray:
        delta = math.pi / 2 if self.kind == QWP else math.pi
        c, s = math.cos(self.angle), math.sin(self.angle)
        rot = np.array([[c, -s], [s, c]])
        return rot @ np.diag([1, cmath.exp(1j * delta)]) @ rot.T

    def mode_map(self, mode, grid):
        if mode.pol not in (Pol.H, Pol.V):
            raise ValueError(f"wave plate needs H or V photons, got {mode}")
        col = self.jones()[:, int(mode.pol)]
        return ((mode.with_(pol=Pol.H), complex(col[0])), (mode.with_(pol=Pol.V), complex(col[1])))


@dataclass(frozen=True)
class Polarizer(Element):
    """Linear polarizer at ``angle`` from H, relabeling survivors to ``out_pol``.

    Projection removes which-polarization information: H and V inputs become
    the same output mode, weighted by cos(angle) and sin(angle).
    """

    port: int
    angle: float = math.pi / 4
    out_pol: Pol = Pol.H
    unitary = False

    @property
    def ports(self):
        return (self.port,)

    def mode_map(self, mode, grid):
        out = mode.with_(pol=self.out_pol)
        if mode.pol == Pol.H:
            return ((out, math.cos(self.angle)),)
        if mode.pol == Pol.V:
            return ((out, math.sin(self.angle)),)
        raise ValueError(f"polarizer needs H or V photons, got {mode}")


@dataclass(frozen=True)
class Circuit(Element):
    """Elements applied left to right."""

    elements: tuple[Element, ...] = ()

    @property
    def ports(self):
        seen: dict[int, None] = {}
        for e in self.elements:
            seen.update(dict.fromkeys(e.ports))
        return tuple(seen)

    @property
    def unitary(self):
        return all(e.unitary for e in self.elements)

    def mode_map(self, mode, grid):
        current: dict[ModeLabel, complex] = {mode: 1.0}
        for e in self.elements:
            nxt: dict[ModeLabel, complex] = defaultdict(complex)
            for m, c in current.items():
                if e.acts_on(m):
                    for m2, c2 in e.mode_map(m, grid):
                        nxt[m2] += c * c2
                else:
                    nxt[m] += c
            current = nxt
        return tuple((m, c) for m, c in current.items() if c != 0)

    def __add__(self, other: Element) -> Circuit:
        tail = other.elements if isinstance(other, Circuit) else (other,)
        return Circuit(self.elements + tail)


@dataclass(frozen=True)
class FransonAnalyzer:
    """Polarization-based unbalanced Mach-Zehnder followed by a polarizer.

    H takes the short path; V is routed through ``aux_port``, delayed by
    ``delay_bins`` and phase-shifted by ``phase`` before both paths rejoin.
    """

    port: int
    delay_bins: int
    phase: float = 0.0
    polarizer_angle: float = math.pi / 4
    aux_port: int | None = None

    @property
    def long_arm_port(self) -> int:
        return self.aux_port if self.aux_port is not None else 100 + self.port

    def routing(self) -> Circuit:
        """The interferometer alone, without the output polarizer."""
        aux = self.long_arm_port
        return Circuit(
            (
                PolarizingBeamSplitter(self.port, aux),
                Delay(aux, self.delay_bins),
                PhaseShift(aux, self.phase, Pol.V),
                PolarizingBeamSplitter(self.port, aux),
            )
        )

    def circuit(self) -> Circuit:
        return self.routing() + Polarizer(self.port, self.polarizer_angle)


def unbalanced_mz(port: int, aux_port: int, delay_bins: int, phase: float = 0.0) -> Circuit:
    """Ordinary unbalanced Mach-Zehnder built from two 50/50 beamsplitters.

    A photon entering ``port`` leaves the same port as short amplitude 1/2
    plus long amplitude ``-exp(i*phase)/2``; the rest exits ``aux_port``.
    """
    return Circuit(
        (
            BeamSplitter(port, aux_port),
            Delay(aux_port, delay_bins),
            PhaseShift(aux_port, phase),
            BeamSplitter(port, aux_port),
        )
    )


def apply_element(state: StateVector, element: Element) -> StateVector:
    """Rewrite every creation operator of ``state`` through ``element``."""
    if isinstance(element, Circuit):
        for e in element.elements:
            state = apply_element(state, e)
        return state
    grid = state.grid
    images: dict[ModeLabel, Image] = {}
    out: dict[FockBasisState, complex] = defaultdict(complex)
    for basis, amp in state.terms.items():
        for new_basis, coeff in _expand_term(basis, element, grid, images):
            out[new_basis] += amp * coeff
    return state.like(out)


def apply_franson_analyzer(state: StateVector, analyzer: FransonAnalyzer) -> StateVector:
    return apply_element(state, analyzer.circuit())


def _expand_term(basis: FockBasisState, element: Element, grid: TimeGrid, images: dict) -> Iterable:
    untouched: dict[ModeLabel, int] = {}
    photons: list[ModeLabel] = []
    denom = 1.0
    for mode, n in basis.occupations:
        if element.acts_on(mode):
            photons.extend([mode] * n)
            denom *= math.factorial(n)
            if mode not in images:
                images[mode] = element.mode_map(mode, grid)
        else:
            untouched[mode] = n
    if not photons:
        yield basis, 1.0
        return

    monomials: dict[tuple[ModeLabel, ...], complex] = defaultdict(complex)
    for choice in product(*(images[m] for m in photons)):
        coeff = 1 + 0j
        for _, c in choice:
            coeff *= c
        monomials[tuple(sorted(m for m, _ in choice))] += coeff

    for modes, coeff in monomials.items():
        if coeff == 0:
            continue
        counts = dict(untouched)
        for m in modes:
            counts[m] = counts.get(m, 0) + 1
        # a†^k |u> picks up sqrt((k+u)!/u!) on modes shared with untouched photons
        factor = 1.0
        for m, k in counts.items():
            factor *= math.factorial(k) / math.factorial(untouched.get(m, 0))
        yield FockBasisState.from_counts(counts), coeff * math.sqrt(factor / denom)


def single_photon_matrix(
    element: Element, input_modes: Sequence[ModeLabel], grid: TimeGrid = DEFAULT_GRID
) -> tuple[np.ndarray, list[ModeLabel]]:
    """Matrix of the element's single-photon map; columns follow ``input_modes``."""
    columns = [dict(element.mode_map(m, grid)) if element.acts_on(m) else {m: 1.0} for m in input_modes]
    rows = sorted({m for col in columns for m in col} | set(input_modes))
    index = {m: i for i, m in enumerate(rows)}
    mat = np.zeros((len(rows), len(input_modes)), dtype=complex)
    for j, col in enumerate(columns):
        for m, c in col.items():
            mat[index[m], j] += c
    return mat, rows


def mode_map_unitarity_check(
    element: Element, grid: TimeGrid = DEFAULT_GRID, pols: Sequence[Pol] = (Pol.H, Pol.V)
) -> float:
    """Max entry of |U^dagger U - I| over every on-grid input mode of the element's ports."""
    if not element.unitary:
        raise ValueError(f"{type(element).__name__} is not a unitary element")
    inputs = []
    for port in element.ports:
        for b in range(grid.n_bins):
            for pol in pols:
                mode = ModeLabel(port, b, pol)
                try:
                    element.mode_map(mode, grid) if element.acts_on(mode) else None
                except OffGridError:
                    continue
                inputs.append(mode)
    mat, _ = single_photon_matrix(element, inputs, grid)
    return float(np.max(np.abs(mat.conj().T @ mat - np.eye(len(inputs)))))
