"""Tests for pair tables and rotation-invariant minutiae matching."""

import math
from typing import List, Tuple

import numpy as np
import pytest

from contactless_fingerprint.core.matcher import build_pair_table, correspondence_votes, match_minutiae
from contactless_fingerprint.core.models import MatcherTolerances, Minutia, MinutiaeSet, MinutiaKind

SHAPE = (400, 400)


def random_minutiae(seed: int, count: int = 10, box: int = 80, spacing: float = 20.0) -> List[Minutia]:
    """Well separated minutiae inside a ``box`` square at the frame centre."""
    rng = np.random.default_rng(seed)
    low = SHAPE[0] // 2 - box // 2
    placed: List[Minutia] = []
    while len(placed) < count:
        x, y = (int(v) for v in rng.integers(low, low + box + 1, size=2))
        if all(math.hypot(x - m.x, y - m.y) >= spacing for m in placed):
            kind = MinutiaKind.TERMINATION if rng.random() < 0.5 else MinutiaKind.BIFURCATION
            placed.append(Minutia(x=x, y=y, theta=float(rng.uniform(0.0, 360.0)), kind=kind))
    return placed


def as_set(minutiae: List[Minutia]) -> MinutiaeSet:
    return MinutiaeSet.from_unsorted(SHAPE, minutiae)


def rigid(minutiae: List[Minutia], degrees: float, dx: int, dy: int) -> List[Minutia]:
    """Rotate counter-clockwise about the centroid, then translate (rows grow downward)."""
    cx = sum(m.x for m in minutiae) / len(minutiae)
    cy = sum(m.y for m in minutiae) / len(minutiae)
    a = math.radians(degrees)
    moved = []
    for m in minutiae:
        u, v = m.x - cx, cy - m.y
        x = cx + math.cos(a) * u - math.sin(a) * v + dx
        y = cy - (math.sin(a) * u + math.cos(a) * v) + dy
        theta = (m.theta + degrees) % 360.0
        moved.append(Minutia(x=int(round(x)), y=int(round(y)), theta=theta, kind=m.kind))
    return moved


def brute_force_pairs(minutiae: MinutiaeSet) -> List[Tuple[int, int, float, float, float]]:
    points = list(minutiae)
    rows = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            a, b = points[i], points[j]
            phi = math.degrees(math.atan2(a.y - b.y, b.x - a.x))
            rows.append((i, j, math.hypot(b.x - a.x, b.y - a.y), (a.theta - phi) % 360.0, (b.theta - phi) % 360.0))
    return sorted(rows, key=lambda row: (row[2], row[0], row[1]))


def circular_close(a: float, b: float, tol: float = 1e-9) -> bool:
    diff = abs(a - b) % 360.0
    return min(diff, 360.0 - diff) <= tol


def maximum_matching(allowed: np.ndarray) -> int:
    """Largest injective row -> column assignment by exhaustive search."""
    rows = allowed.shape[0]
    best = 0

    def extend(row: int, used: frozenset, size: int) -> None:
        nonlocal best
        if size + rows - row <= best:
            return
        if row == rows:
            best = size
            return
        for col in np.nonzero(allowed[row])[0]:
            if int(col) not in used:
                extend(row + 1, used | {int(col)}, size + 1)
        extend(row + 1, used, size)

    extend(0, frozenset(), 0)
    return best


def window_oracle(probe: MinutiaeSet, ref: MinutiaeSet, tol: MatcherTolerances) -> int:
    """Best exhaustive matching over every rotation window seeded by a voted correspondence."""
    votes = correspondence_votes(probe, ref, tol)
    rotation = np.mod(
        np.array([m.theta for m in ref])[None, :] - np.array([m.theta for m in probe])[:, None], 360.0
    )
    best = 0
    for p, r in zip(*np.nonzero(votes)):
        allowed = (votes > 0) & (np.mod(rotation - rotation[p, r], 360.0) <= 2.0 * tol.angle_tolerance)
        best = max(best, maximum_matching(allowed))
    return best


class TestPairTable:
    """Tests for build_pair_table."""

    def test_single_minutia(self):
        assert build_pair_table(as_set(random_minutiae(0, count=1))) == []

    def test_collinear_pair(self):
        """(0,0) and (30,0) both at 0 degrees."""
        pair = MinutiaeSet.from_unsorted(
            (50, 50),
            [
                Minutia(x=0, y=0, theta=0.0, kind=MinutiaKind.TERMINATION),
                Minutia(x=30, y=0, theta=0.0, kind=MinutiaKind.TERMINATION),
            ],
        )
        [entry] = build_pair_table(pair)
        assert (entry.i, entry.j) == (0, 1)
        assert entry.d == 30.0
        assert entry.beta1 == 0.0
        assert entry.beta2 == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force(self, seed):
        """Five random minutiae give ten entries matching a direct recomputation."""
        minutiae = as_set(random_minutiae(seed, count=5, box=200, spacing=5.0))
        table = build_pair_table(minutiae, max_distance=math.inf)
        expected = brute_force_pairs(minutiae)
        assert len(table) == 10
        for entry, (i, j, d, beta1, beta2) in zip(table, expected):
            assert (entry.i, entry.j) == (i, j)
            assert entry.d == pytest.approx(d)
            assert circular_close(entry.beta1, beta1)
            assert circular_close(entry.beta2, beta2)
            assert 0.0 <= entry.beta1 < 360.0 and 0.0 <= entry.beta2 < 360.0

    def test_max_distance_filters(self):
        minutiae = as_set(random_minutiae(3, count=8, box=200, spacing=5.0))
        full = build_pair_table(minutiae, max_distance=math.inf)
        near = build_pair_table(minutiae, max_distance=60.0)
        assert [e for e in full if e.d <= 60.0] == near


class TestMatchMinutiae:
    """Tests for match_minutiae."""

    @pytest.mark.parametrize("seed", range(5))
    def test_self_match_scores_every_minutia(self, seed):
        minutiae = as_set(random_minutiae(seed))
        result = match_minutiae(minutiae, minutiae)
        assert result.value == len(minutiae)

    def test_self_match_is_identity(self):
        """A hand-placed set with distinct geometry maps onto itself."""
        minutiae = as_set(
            [
                Minutia(x=150, y=160, theta=10.0, kind=MinutiaKind.TERMINATION),
                Minutia(x=210, y=150, theta=95.0, kind=MinutiaKind.BIFURCATION),
                Minutia(x=180, y=220, theta=200.0, kind=MinutiaKind.TERMINATION),
                Minutia(x=240, y=230, theta=300.0, kind=MinutiaKind.TERMINATION),
                Minutia(x=160, y=250, theta=45.0, kind=MinutiaKind.BIFURCATION),
            ]
        )
        result = match_minutiae(minutiae, minutiae)
        assert result.value == 5
        assert result.correspondences == tuple((k, k) for k in range(5))

    def test_empty_probe(self):
        ref = as_set(random_minutiae(1))
        result = match_minutiae(MinutiaeSet(source_dims=SHAPE), ref)
        assert result.value == 0
        assert result.correspondences == ()

    def test_empty_reference(self):
        assert match_minutiae(as_set(random_minutiae(1)), MinutiaeSet(source_dims=SHAPE)).value == 0

    def test_rotated_and_translated(self):
        """15 degrees about the centroid plus (12, -7) keeps at least nine of ten."""
        original = random_minutiae(7)
        result = match_minutiae(as_set(original), as_set(rigid(original, 15.0, 12, -7)))
        assert result.value >= 9

    @pytest.mark.parametrize("seed", range(8))
    def test_rigid_invariance(self, seed):
        """Rotations up to 30 degrees keep at least 90% of the minutiae."""
        rng = np.random.default_rng(100 + seed)
        original = random_minutiae(seed, count=8 + seed % 4)
        degrees = float(rng.uniform(-30.0, 30.0))
        dx, dy = (int(v) for v in rng.integers(-20, 21, size=2))
        result = match_minutiae(as_set(original), as_set(rigid(original, degrees, dx, dy)))
        assert result.value >= math.ceil(0.9 * len(original))

    def test_impostors_score_lower(self):
        """Unrelated sets score well below a self-match."""
        scores = [
            match_minutiae(as_set(random_minutiae(seed)), as_set(random_minutiae(seed + 500))).value
            for seed in range(10)
        ]
        assert np.mean(scores) <= 5

    def test_fifty_seeded_trials(self):
        """Rigid copies keep 90% in at least 45 of 50 trials and beat unrelated sets in 48."""
        rng = np.random.default_rng(7)
        retained = beaten = 0
        for seed in range(50):
            original = random_minutiae(1000 + seed)
            degrees = float(rng.uniform(-30.0, 30.0))
            dx, dy = (int(v) for v in rng.integers(-20, 21, size=2))
            genuine = match_minutiae(as_set(original), as_set(rigid(original, degrees, dx, dy))).value
            impostor = match_minutiae(as_set(original), as_set(random_minutiae(2000 + seed))).value
            retained += genuine >= 9
            beaten += impostor < genuine
        assert retained >= 45
        assert beaten >= 48

    @pytest.mark.parametrize("seed", range(6))
    def test_symmetric(self, seed):
        a = as_set(random_minutiae(seed, count=12, box=120, spacing=12.0))
        b = as_set(random_minutiae(seed + 50, count=12, box=120, spacing=12.0))
        assert match_minutiae(a, b).value == match_minutiae(b, a).value

    def test_symmetric_on_transformed_pair(self):
        original = random_minutiae(21)
        a, b = as_set(original), as_set(rigid(original, -20.0, 5, 9))
        assert match_minutiae(a, b).value == match_minutiae(b, a).value

    @pytest.mark.parametrize("seed", range(4))
    def test_deleting_probe_minutia_never_increases_score(self, seed):
        original = random_minutiae(seed)
        ref = as_set(rigid(original, 10.0, 3, 4))
        full = match_minutiae(as_set(original), ref).value
        for k in range(len(original)):
            reduced = original[:k] + original[k + 1 :]
            assert match_minutiae(as_set(reduced), ref).value <= full

    def test_correspondences_are_injective(self):
        a = as_set(random_minutiae(30, count=12))
        b = as_set(random_minutiae(31, count=12) + rigid(random_minutiae(30, count=4), 5.0, -120, 0))
        result = match_minutiae(a, b)
        probes = [p for p, _ in result.correspondences]
        refs = [r for _, r in result.correspondences]
        assert len(set(probes)) == len(probes) == result.value
        assert len(set(refs)) == len(refs)

    @pytest.mark.parametrize("seed", range(6))
    def test_score_is_exact_window_maximum(self, seed):
        """Loose tolerances create competing votes; the score still equals the exhaustive maximum."""
        tol = MatcherTolerances(distance_tolerance=15.0, angle_tolerance=30.0)
        rng = np.random.default_rng(seed)
        original = random_minutiae(100 + seed, count=6, spacing=15.0)
        moved = rigid(original, float(rng.uniform(-20.0, 20.0)), 4, -3)
        a = as_set(original)
        b = as_set(moved[:4] + random_minutiae(200 + seed, count=3, spacing=15.0))
        assert match_minutiae(a, b, tol).value == window_oracle(a, b, tol)

    def test_deterministic(self):
        a = as_set(random_minutiae(40))
        b = as_set(rigid(random_minutiae(40), 12.0, -6, 2))
        first = match_minutiae(a, b)
        assert all(match_minutiae(a, b) == first for _ in range(3))

    def test_tolerances_control_votes(self):
        """A uniform 8 degree theta offset needs a non-zero angle tolerance."""
        original = random_minutiae(9)
        shifted = [Minutia(x=m.x, y=m.y, theta=(m.theta + 8.0) % 360.0, kind=m.kind) for m in original]
        strict = MatcherTolerances(angle_tolerance=0.0)
        assert not correspondence_votes(as_set(original), as_set(shifted), strict).any()
        assert match_minutiae(as_set(original), as_set(shifted)).value == len(original)
