"""Sparse linear array geometries, subarray partitions and coarray statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "SensorSet",
    "SubarrayLayout",
    "CoarrayProfile",
    "generate_naq2",
    "generate_mra",
    "generate_snaq2",
    "split_type1",
    "build_type2",
    "difference_coarray",
    "theorem1_bound",
    "max_identifiable_sources",
    "MRA_TABLE",
    "SNAQ2_TABLE",
]


class GeometryError(ValueError):
    """Invalid or unsupported array geometry."""


@dataclass(frozen=True)
class SensorSet:
    """Sensor positions as integer multiples of the minimum spacing."""

    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if len(pos) == 0:
            raise GeometryError("sensor set must be non-empty")
        if any(p < 0 for p in pos):
            raise GeometryError("sensor positions must be non-negative")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise GeometryError("sensor positions must be strictly ascending")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    @property
    def aperture(self) -> int:
        return self.positions[-1] - self.positions[0]

    @property
    def is_canonical(self) -> bool:
        return self.positions[0] == 0

    def canonical(self) -> "SensorSet":
        """Shift so the first sensor sits at 0."""
        base = self.positions[0]
        if base == 0:
            return self
        return SensorSet(tuple(p - base for p in self.positions))

    def translated(self, offset: int) -> "SensorSet":
        return SensorSet(tuple(p + offset for p in self.positions))


@dataclass(frozen=True)
class SubarrayLayout:
    """Partition of a sparse array into ordered, disjoint subarrays.

    Subarray positions are absolute (shared) coordinates.  ``mu`` is the
    intersubarray spacing and is only meaningful for type-II layouts.
    """

    subarrays: tuple[SensorSet, ...]
    kind: str = "custom"
    mu: int | None = None

    def __post_init__(self):
        subs = tuple(self.subarrays)
        if len(subs) == 0:
            raise GeometryError("layout needs at least one subarray")
        for a, b in zip(subs, subs[1:]):
            if a.positions[-1] >= b.positions[0]:
                raise GeometryError("subarrays must be ordered and disjoint")
        object.__setattr__(self, "subarrays", subs)

    @property
    def num_subarrays(self) -> int:
        return len(self.subarrays)

    @property
    def full_array(self) -> SensorSet:
        pos: list[int] = []
        for sub in self.subarrays:
            pos.extend(sub.positions)
        return SensorSet(tuple(pos))

    @property
    def num_sensors(self) -> int:
        return sum(len(s) for s in self.subarrays)


@dataclass(frozen=True)
class CoarrayProfile:
    """Difference set, central contiguous set and weight function of an array."""

    diff_set: tuple[int, ...]
    central_set: tuple[int, ...]
    weight: dict[int, int] = field(repr=False)
    dof: int
    udof: int

    def weight_at(self, lag: int) -> int:
        return self.weight.get(lag, 0)


def difference_coarray(array: SensorSet) -> CoarrayProfile:
    """Compute the difference set, its central contiguous part and lag weights."""
    weight: dict[int, int] = {}
    for n1 in array.positions:
        for n2 in array.positions:
            m = n1 - n2
            weight[m] = weight.get(m, 0) + 1
    diff_set = tuple(sorted(weight))
    m_star = 0
    while (m_star + 1) in weight:
        m_star += 1
    central = tuple(range(-m_star, m_star + 1))
    return CoarrayProfile(
        diff_set=diff_set,
        central_set=central,
        weight=weight,
        dof=len(diff_set),
        udof=len(central),
    )


def generate_naq2(n1: int, n2: int) -> SensorSet:
    """Two-level nested array: a dense run of ``n1`` sensors plus ``n2``
    sensors at multiples of ``n1 + 1`` (offset by one)."""
    if n1 < 1 or n2 < 1:
        raise GeometryError("nested array levels must each have at least one sensor")
    dense = set(range(n1))
    sparse = {n * (n1 + 1) - 1 for n in range(1, n2 + 1)}
    return SensorSet(tuple(sorted(dense | sparse)))


# Restricted (hole-free coarray) minimum-redundancy arrays, N = 2..10.
MRA_TABLE: dict[int, tuple[int, ...]] = {
    2: (0, 1),
    3: (0, 1, 3),
    4: (0, 1, 4, 6),
    5: (0, 1, 4, 7, 9),
    6: (0, 1, 6, 9, 11, 13),
    7: (0, 1, 4, 10, 12, 15, 17),
    8: (0, 1, 4, 10, 16, 18, 21, 23),
    9: (0, 1, 4, 10, 16, 22, 24, 27, 29),
    10: (0, 1, 3, 6, 13, 20, 27, 31, 35, 36),
}

# Second-order super nested arrays (reduced mutual coupling, same filled
# coarray as the two-level nested array of equal size).
SNAQ2_TABLE: dict[int, tuple[int, ...]] = {
    7: (0, 2, 3, 6, 9, 13, 14),
}


def generate_mra(n: int) -> SensorSet:
    """Minimum-redundancy array from the built-in table (N = 2..10)."""
    if n not in MRA_TABLE:
        raise GeometryError(f"no MRA table entry for N={n} (supported: 2..10)")
    return SensorSet(MRA_TABLE[n])


def generate_snaq2(n: int) -> SensorSet:
    """Second-order super nested array from the built-in table."""
    if n not in SNAQ2_TABLE:
        raise GeometryError(f"no SNAQ2 table entry for N={n}")
    return SensorSet(SNAQ2_TABLE[n])


def split_type1(array: SensorSet, sizes: tuple[int, ...] | list[int]) -> SubarrayLayout:
    """Partition an existing array into consecutive runs of the given sizes."""
    sizes = tuple(int(s) for s in sizes)
    if any(s < 1 for s in sizes):
        raise GeometryError("subarray sizes must be positive")
    if sum(sizes) != len(array):
        raise GeometryError(
            f"sizes sum to {sum(sizes)} but the array has {len(array)} sensors"
        )
    subs = []
    start = 0
    for s in sizes:
        subs.append(SensorSet(array.positions[start : start + s]))
        start += s
    return SubarrayLayout(subarrays=tuple(subs), kind="type-I", mu=None)


def build_type2(reference: SensorSet, l: int, mu: int) -> SubarrayLayout:
    """Union of ``l`` translated copies of a reference geometry, each shifted
    by mu plus the reference aperture relative to its predecessor."""
    if not reference.is_canonical:
        raise GeometryError("type-II reference must start at position 0")
    if l < 1:
        raise GeometryError("need at least one subarray")
    if mu < 1:
        raise GeometryError("intersubarray spacing must be at least 1")
    delta = mu + reference.aperture
    subs = tuple(reference.translated(i * delta) for i in range(l))
    return SubarrayLayout(subarrays=subs, kind="type-II", mu=mu)


def theorem1_bound(sdof: int, l: int, mu: int, kappa: int) -> tuple[int, str]:
    """Upper bound on the DoF of a type-II array built from equal-aperture
    subarrays with ``sdof`` coarray degrees of freedom each.

    Returns ``(bound, regime)`` with regime ``"overlapping"`` when the
    per-subarray coarrays overlap (mu <= kappa) and ``"disjoint"`` otherwise.
    The bound is attained with equality for hole-free subarray coarrays.
    """
    if sdof < 1 or sdof % 2 == 0:
        raise GeometryError("subarray DoF must be a positive odd integer")
    if mu < 1:
        raise GeometryError("intersubarray spacing must be at least 1")
    if l < 1:
        raise GeometryError("need at least one subarray")
    if mu <= kappa:
        return l * (sdof - 1) + 2 * (l - 1) * mu + 1, "overlapping"
    return (2 * l - 1) * sdof, "disjoint"


def max_identifiable_sources(layout: SubarrayLayout) -> int:
    """Largest source count resolvable from the best subarray's central
    contiguous coarray."""
    best = 0
    for sub in layout.subarrays:
        udof = difference_coarray(sub).udof
        if udof < 3:
            raise GeometryError(
                "degenerate geometry: every subarray needs a central coarray "
                "segment of at least 3 lags"
            )
        best = max(best, (udof - 1) // 2)
    return best
