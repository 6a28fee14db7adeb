"""Idealized two-photon absorption: the channel that punches photon holes."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .fock import FockBasisState, StateVector


@dataclass(frozen=True)
class TpaChannel:
    """Two-photon absorber between ``port_a`` and ``port_b``.

    ``strength`` 1 deletes every absorbable term outright. ``window_bins`` is the
    half-width of the simultaneity window; 0 means same-bin only.
    """

    port_a: int = 0
    port_b: int = 1
    strength: float = 1.0
    window_bins: int = 0

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"strength must lie in [0, 1], got {self.strength}")
        if self.window_bins < 0:
            raise ValueError("window_bins must be non-negative")
        if self.port_a == self.port_b:
            raise ValueError("TPA couples two distinct ports")


def missing_pairs(basis: FockBasisState, channel: TpaChannel) -> int:
    """Number of absorbable pairs: sum of min(n_a(t), n_b(t')) over |t - t'| <= window."""
    by_bin_a: dict[int, int] = defaultdict(int)
    by_bin_b: dict[int, int] = defaultdict(int)
    for mode, n in basis.occupations:
        if mode.port == channel.port_a:
            by_bin_a[mode.bin] += n
        elif mode.port == channel.port_b:
            by_bin_b[mode.bin] += n
    w = channel.window_bins
    return sum(
        min(na, by_bin_b[tb])
        for ta, na in by_bin_a.items()
        for tb in range(ta - w, ta + w + 1)
        if tb in by_bin_b
    )


def apply_tpa(state: StateVector, channel: TpaChannel) -> StateVector:
    """Attenuate each term by (1 - strength)**p, p = missing_pairs; no renormalization."""
    if channel.strength == 0:
        return state
    keep = 1.0 - channel.strength
    out = {}
    for basis, amp in state.terms.items():
        p = missing_pairs(basis, channel)
        if p == 0:
            out[basis] = amp
        elif keep > 0:
            out[basis] = amp * keep**p
    return state.like(out)


def is_projector_fixed_point(state: StateVector, channel: TpaChannel, atol: float = 1e-12) -> bool:
    if channel.strength != 1:
        raise ValueError("fixed-point check is defined for strength 1 only")
    punched = apply_tpa(state, channel)
    keys = set(state.terms) | set(punched.terms)
    return all(abs(state.amplitude(k) - punched.amplitude(k)) <= atol for k in keys)
