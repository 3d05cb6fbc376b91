"""Genuine and impostor pair generation.

Genuine: every unordered pair of impressions of the same finger.
Impostor: for impression index k in 0..sets-1, every unordered pair of fingers
compared at impression k.
"""

from dataclasses import dataclass
from typing import List, Tuple

from ..config import DEFAULT_IMPOSTOR_SETS
from ..errors import ProtocolError

Sample = Tuple[int, int]
Pair = Tuple[Sample, Sample]


@dataclass(frozen=True)
class PairProtocol:
    fingers: int
    impressions_per_finger: int
    impostor_impression_sets: int = DEFAULT_IMPOSTOR_SETS

    def __post_init__(self):
        if self.fingers < 2:
            raise ProtocolError(f"protocol needs at least 2 fingers, got {self.fingers}")
        if self.impressions_per_finger < 2:
            raise ProtocolError(f"protocol needs at least 2 impressions per finger, got {self.impressions_per_finger}")
        if not 1 <= self.impostor_impression_sets <= self.impressions_per_finger:
            raise ProtocolError(
                f"impostor impression sets must be in [1, {self.impressions_per_finger}], "
                f"got {self.impostor_impression_sets}"
            )

    @property
    def genuine_count(self) -> int:
        i = self.impressions_per_finger
        return self.fingers * i * (i - 1) // 2

    @property
    def impostor_count(self) -> int:
        return self.impostor_impression_sets * self.fingers * (self.fingers - 1) // 2


def generate_pairs(protocol: PairProtocol) -> Tuple[List[Pair], List[Pair]]:
    """Return (genuine, impostor) pairs of (finger, impression) samples in a fixed order."""
    genuine = [
        ((finger, a), (finger, b))
        for finger in range(protocol.fingers)
        for a in range(protocol.impressions_per_finger)
        for b in range(a + 1, protocol.impressions_per_finger)
    ]
    impostor = [
        ((f, k), (g, k))
        for k in range(protocol.impostor_impression_sets)
        for f in range(protocol.fingers)
        for g in range(f + 1, protocol.fingers)
    ]
    return genuine, impostor
