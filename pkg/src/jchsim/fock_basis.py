"""Fixed-total-excitation Hilbert sector for N spins with local bosons.

A basis state is a spin bitmask (bit i set = ion i+1 up) plus a phonon
occupation per ion; the sector keeps exactly the states whose spin-up
count plus total phonon number equals M.  States are packed into a
single integer -- occupation bytes for ions 1..N from the least
significant byte up, then the spin mask above them -- and ordered by
spin mask ascending, then phonon occupations in colexicographic order
(equivalently: numeric order of the packed encoding).
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

DEFAULT_DIMENSION_CAP = 300_000


class SectorCapError(ValueError):
    """Sector dimension exceeds the configured cap."""

    def __init__(self, dimension, cap):
        super().__init__(
            f"sector dimension {dimension} exceeds the cap {cap}; "
            "reduce N or M or raise the cap"
        )
        self.dimension = dimension
        self.cap = cap


class SectorMismatchError(ValueError):
    """State does not belong to the sector."""


@dataclass(frozen=True)
class BasisState:
    spins: int
    phonons: tuple

    def __post_init__(self):
        object.__setattr__(self, "phonons", tuple(int(n) for n in self.phonons))
        if self.spins < 0 or any(n < 0 for n in self.phonons):
            raise ValueError("spins and phonon occupations must be non-negative")

    @property
    def n_ions(self):
        return len(self.phonons)

    def excitations(self):
        return bin(self.spins).count("1") + sum(self.phonons)


def sector_dimension(n_ions, excitations):
    """Exact dimension of the fixed-excitation sector (big integer).

    Sum over the spin-up count k of C(N, k) * C(N + M - k - 1, N - 1):
    choose which spins are up, then distribute the remaining M - k
    excitations as phonons over N sites.
    """
    if n_ions < 1 or excitations < 0:
        raise ValueError("need n_ions >= 1 and excitations >= 0")
    n, m = n_ions, excitations
    return sum(
        comb(n, k) * comb(n + m - k - 1, n - 1) for k in range(min(n, m) + 1)
    )


@lru_cache(maxsize=None)
def _compositions_colex(total, parts):
    """All compositions of total into parts parts, colex ascending."""
    if parts == 1:
        return ((total,),)
    out = []
    for last in range(total + 1):
        for head in _compositions_colex(total - last, parts - 1):
            out.append(head + (last,))
    return tuple(out)


def pack_state(spins, phonons):
    """Packed integer encoding: occupation bytes then spin mask on top."""
    n = len(phonons)
    packed = spins << (8 * n)
    for i, occ in enumerate(phonons):
        if occ > 255:
            raise ValueError("phonon occupation exceeds one byte")
        packed |= occ << (8 * i)
    return packed


def unpack_state(packed, n_ions):
    spins = packed >> (8 * n_ions)
    phonons = tuple((packed >> (8 * i)) & 0xFF for i in range(n_ions))
    return BasisState(spins=spins, phonons=phonons)


class SectorBasis:
    """Immutable enumeration of a fixed-excitation sector.

    states are stored as packed integers; index lookup is a dict on the
    packed encoding.  Observable helper arrays (spin signs, phonon
    totals) are built lazily and cached.
    """

    def __init__(self, n_ions, excitations, packed_states):
        self.n_ions = n_ions
        self.excitations = excitations
        self._packed = packed_states
        self._index = {p: j for j, p in enumerate(packed_states)}
        self._spin_signs = None
        self._phonon_totals = None

    def __len__(self):
        return len(self._packed)

    @property
    def dimension(self):
        return len(self._packed)

    @property
    def packed_states(self):
        return self._packed

    def state_at(self, j):
        return unpack_state(self._packed[j], self.n_ions)

    def index_of(self, state):
        if isinstance(state, BasisState):
            if state.n_ions != self.n_ions:
                raise SectorMismatchError(
                    f"state has {state.n_ions} ions, basis has {self.n_ions}"
                )
            packed = pack_state(state.spins, state.phonons)
        else:
            packed = state
        try:
            return self._index[packed]
        except KeyError:
            raise SectorMismatchError(
                f"state not in the (N={self.n_ions}, M={self.excitations}) sector"
            ) from None

    def index_of_packed(self, packed):
        return self._index[packed]

    def spin_signs(self):
        """(D, N) array of +/-1 spin eigenvalues per state and ion."""
        if self._spin_signs is None:
            n = self.n_ions
            signs = np.empty((len(self._packed), n), dtype=np.int8)
            for j, p in enumerate(self._packed):
                mask = p >> (8 * n)
                for i in range(n):
                    signs[j, i] = 1 if (mask >> i) & 1 else -1
            self._spin_signs = signs
        return self._spin_signs

    def phonon_totals(self):
        """(D,) array of total phonon number per state."""
        if self._phonon_totals is None:
            n = self.n_ions
            tot = np.empty(len(self._packed), dtype=np.int32)
            for j, p in enumerate(self._packed):
                tot[j] = sum((p >> (8 * i)) & 0xFF for i in range(n))
            self._phonon_totals = tot
        return self._phonon_totals

    def to_csv(self, path):
        """Debug dump: index, spin string (ion 1 first), occupations."""
        lines = ["index,spins,phonons"]
        n = self.n_ions
        for j, p in enumerate(self._packed):
            mask = p >> (8 * n)
            spin_str = "".join("u" if (mask >> i) & 1 else "d" for i in range(n))
            occ = " ".join(str((p >> (8 * i)) & 0xFF) for i in range(n))
            lines.append(f"{j},{spin_str},{occ}")
        tmp = f"{path}.tmp"
        import os

        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)


def enumerate_sector(n_ions, excitations, dimension_cap=DEFAULT_DIMENSION_CAP):
    """Enumerate all states with popcount(spins) + sum(phonons) = M.

    Ordering: spin bitmask ascending, then phonon occupations in colex
    order, which coincides with numeric order of the packed encoding.
    """
    dim = sector_dimension(n_ions, excitations)
    if dim > dimension_cap:
        raise SectorCapError(dim, dimension_cap)
    if excitations > 255:
        raise ValueError("excitations > 255 not representable in packed bytes")

    n, m = n_ions, excitations
    # Masks with popcount <= M, generated per spin-up count so that large
    # N with small M stays cheap, then sorted into ascending order.
    from itertools import combinations

    masks = []
    for k in range(min(n, m) + 1):
        for ups in combinations(range(n), k):
            mask = 0
            for i in ups:
                mask |= 1 << i
            masks.append(mask)
    masks.sort()

    packed = []
    for mask in masks:
        k = bin(mask).count("1")
        base = mask << (8 * n)
        for occ in _compositions_colex(m - k, n):
            p = base
            for i, o in enumerate(occ):
                p |= o << (8 * i)
            packed.append(p)
    assert len(packed) == dim
    return SectorBasis(n_ions, excitations, packed)
