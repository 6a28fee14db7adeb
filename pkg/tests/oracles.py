"""Brute-force references that share no code with the simulator's expansion path."""

import math
from itertools import permutations

import numpy as np


def permanent(mat: np.ndarray) -> complex:
    n = mat.shape[0]
    if n == 0:
        return 1.0
    return sum(np.prod([mat[i, p[i]] for i in range(n)]) for p in permutations(range(n)))


def fock_transition(unitary: np.ndarray, n_in: tuple[int, ...], n_out: tuple[int, ...]) -> complex:
    """<n_out| U |n_in> for bosons, via the permanent of the repeated submatrix.

    ``unitary[j, i]`` is the amplitude for a photon in mode ``i`` to end in mode ``j``.
    """
    if sum(n_in) != sum(n_out):
        return 0.0
    cols = [i for i, n in enumerate(n_in) for _ in range(n)]
    rows = [j for j, n in enumerate(n_out) for _ in range(n)]
    sub = unitary[np.ix_(rows, cols)]
    norm = math.prod(math.factorial(n) for n in n_in) * math.prod(math.factorial(n) for n in n_out)
    return permanent(sub) / math.sqrt(norm)


def occupations(n_modes: int, total: int):
    """All occupation tuples over ``n_modes`` with exactly ``total`` photons."""
    if n_modes == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in occupations(n_modes - 1, total - first):
            yield (first, *rest)


def bs_symmetric(theta=math.pi / 4):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]])


def bs_real(theta=math.pi / 4):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def jones_waveplate(retardance, angle):
    c, s = math.cos(angle), math.sin(angle)
    e = np.exp(1j * retardance)
    return np.array(
        [
            [c * c + e * s * s, (1 - e) * c * s],
            [(1 - e) * c * s, s * s + e * c * c],
        ]
    )
