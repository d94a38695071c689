"""Electrode layouts: channel order, hemisphere split, quadrant groups.

The canonical 14-channel consumer-headset layout lists the left-hemisphere
electrodes front-to-back followed by the right-hemisphere electrodes
back-to-front, i.e. the rows already trace the scalp anti-clockwise from
the nasion. Spatial kernels in the model rely on this ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

DREAMER_CHANNELS: tuple[str, ...] = (
    "AF3", "F7", "F3", "FC5", "T7", "P7", "O1",
    "O2", "P8", "T8", "FC6", "F4", "F8", "AF4",
)


def hemisphere_of(name: str) -> str:
    """Classify an electrode label by the 10-20 parity rule.

    Odd trailing digit -> "left", even -> "right", no digit -> "midline".
    """
    if name and name[-1].isdigit():
        return "left" if int(name[-1]) % 2 else "right"
    return "midline"


def quadrant_geometry(n_channels: int) -> tuple[int, int, int]:
    """Return (group_height, pad_rows_per_hemisphere, padded_height).

    Four equal channel groups of height q with step q require each
    hemisphere block to hold 2q rows; an odd-sized hemisphere gets one
    trailing zero row so the groups align with front/back scalp areas.
    """
    if n_channels < 4 or n_channels % 2:
        raise ValueError(f"quadrant groups need an even channel count >= 4, got {n_channels}")
    half = n_channels // 2
    pad = half % 2
    q = (half + pad) // 2
    return q, pad, n_channels + 2 * pad


@dataclass(frozen=True)
class ChannelLayout:
    """Ordered electrode names plus hemisphere/quadrant group boundaries.

    ``quadrant_boundaries`` holds four half-open index ranges over the
    *unpadded* rows (front-left, back-left, back-right, front-right); it is
    None for layouts too small or odd-sized to split into quadrants.
    """

    names: tuple[str, ...]
    hemisphere_split: int
    quadrant_boundaries: tuple[tuple[int, int], ...] | None

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError("electrode names must be unique")
        n = len(self.names)
        if self.hemisphere_split != n // 2:
            raise ValueError(f"hemisphere_split must be {n // 2} for {n} channels")
        if self.quadrant_boundaries is not None:
            bounds = self.quadrant_boundaries
            if len(bounds) != 4:
                raise ValueError("expected exactly 4 quadrant ranges")
            cursor = 0
            for start, stop in bounds:
                if start != cursor or stop < start:
                    raise ValueError("quadrant ranges must be ordered, disjoint and contiguous")
                cursor = stop
            if cursor != n:
                raise ValueError("quadrant ranges must cover every channel index")

    @property
    def n_channels(self) -> int:
        return len(self.names)

    @classmethod
    def from_names(cls, names) -> "ChannelLayout":
        """Build a layout from an ordered name list, deriving the groups."""
        names = tuple(str(n) for n in names)
        n = len(names)
        bounds = None
        if n >= 4 and n % 2 == 0:
            q, _, _ = quadrant_geometry(n)
            half = n // 2
            bounds = ((0, q), (q, half), (half, half + q), (half + q, n))
        return cls(names=names, hemisphere_split=n // 2, quadrant_boundaries=bounds)

    @classmethod
    def dreamer(cls) -> "ChannelLayout":
        """The canonical 14-channel layout."""
        return cls.from_names(DREAMER_CHANNELS)
