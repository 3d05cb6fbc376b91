"""Rotation- and translation-invariant minutiae matching (Bozorth-style pair tables).

Each minutiae set is described by a table of pairwise distances and the angles
of both minutiae relative to the connecting line. Compatible pair entries vote
for minutia correspondences, and the raw score S_m is the size of the largest
injective correspondence set agreeing on one global rotation.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .models import MatcherTolerances, MinutiaeSet, MinutiaMatchScore, PairTableEntry

logger = logging.getLogger(__name__)


def _angle_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Absolute circular difference in degrees, in [0, 180]."""
    diff = np.mod(np.asarray(a) - np.asarray(b), 360.0)
    return np.minimum(diff, 360.0 - diff)


def _pair_arrays(minutiae: MinutiaeSet, max_distance: float) -> Tuple[np.ndarray, ...]:
    n = len(minutiae)
    if n < 2:
        empty_f = np.zeros(0, dtype=np.float64)
        empty_i = np.zeros(0, dtype=np.int64)
        return empty_i, empty_i, empty_f, empty_f, empty_f
    xs = np.array([m.x for m in minutiae], dtype=np.float64)
    ys = np.array([m.y for m in minutiae], dtype=np.float64)
    thetas = np.array([m.theta for m in minutiae], dtype=np.float64)
    i_idx, j_idx = np.triu_indices(n, k=1)
    dx = xs[j_idx] - xs[i_idx]
    dy_up = ys[i_idx] - ys[j_idx]
    d = np.hypot(dx, dy_up)
    keep = d <= max_distance
    i_idx, j_idx, dx, dy_up, d = i_idx[keep], j_idx[keep], dx[keep], dy_up[keep], d[keep]
    phi = np.degrees(np.arctan2(dy_up, dx))
    beta1 = np.mod(thetas[i_idx] - phi, 360.0)
    beta2 = np.mod(thetas[j_idx] - phi, 360.0)
    order = np.lexsort((j_idx, i_idx, d))
    return i_idx[order], j_idx[order], d[order], beta1[order], beta2[order]


def build_pair_table(
    minutiae: MinutiaeSet, max_distance: float = MatcherTolerances().max_distance
) -> List[PairTableEntry]:
    """One entry per unordered pair within ``max_distance``, sorted by (d, i, j)."""
    i_idx, j_idx, d, beta1, beta2 = _pair_arrays(minutiae, max_distance)
    return [
        PairTableEntry(i=int(i), j=int(j), d=float(dd), beta1=float(b1), beta2=float(b2))
        for i, j, dd, b1, b2 in zip(i_idx, j_idx, d, beta1, beta2)
    ]


def correspondence_votes(probe: MinutiaeSet, ref: MinutiaeSet, tol: MatcherTolerances) -> np.ndarray:
    """Vote matrix (probe x ref) from compatible pair-table entries.

    Entries are compatible when distances agree within the tolerance slack and
    both relative angles agree, either directly (i->k, j->l) or with the
    reference pair read in reverse (i->l, j->k).
    """
    votes = np.zeros((len(probe), len(ref)), dtype=np.int64)
    pi, pj, pd, pb1, pb2 = _pair_arrays(probe, tol.max_distance)
    ri, rj, rd, rb1, rb2 = _pair_arrays(ref, tol.max_distance)
    if pd.size == 0 or rd.size == 0:
        return votes

    slack = np.maximum(tol.distance_tolerance, tol.distance_ratio * np.maximum(pd[:, None], rd[None, :]))
    distance_ok = np.abs(pd[:, None] - rd[None, :]) <= slack
    direct = (
        distance_ok
        & (_angle_diff(pb1[:, None], rb1[None, :]) <= tol.angle_tolerance)
        & (_angle_diff(pb2[:, None], rb2[None, :]) <= tol.angle_tolerance)
    )
    swapped = (
        distance_ok
        & (_angle_diff(pb1[:, None], rb2[None, :] - 180.0) <= tol.angle_tolerance)
        & (_angle_diff(pb2[:, None], rb1[None, :] - 180.0) <= tol.angle_tolerance)
    )

    a, b = np.nonzero(direct)
    np.add.at(votes, (pi[a], ri[b]), 1)
    np.add.at(votes, (pj[a], rj[b]), 1)
    a, b = np.nonzero(swapped)
    np.add.at(votes, (pi[a], rj[b]), 1)
    np.add.at(votes, (pj[a], ri[b]), 1)
    return votes


def _best_assignment(allowed: np.ndarray, votes: np.ndarray) -> List[Tuple[int, int]]:
    """Maximum-cardinality injective assignment, preferring higher vote totals."""
    bonus = int(votes.sum()) + 1
    weights = np.where(allowed, bonus + votes, 0)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if allowed[r, c]]


def match_minutiae(
    probe: MinutiaeSet, ref: MinutiaeSet, tol: Optional[MatcherTolerances] = None
) -> MinutiaMatchScore:
    """Raw minutiae similarity S_m between two sets.

    Every voted correspondence (p, r) implies a rotation theta_r - theta_p.
    Candidate rotation windows of width 2 * angle_tolerance start at each voted
    rotation; inside a window the largest injective correspondence set is found
    by assignment. Windows are tried in order of their size bound, then by the
    seed's (-votes, probe index, ref index), and the first largest set wins.

    The set size is an exact maximum over each window, not the result of a
    greedy highest-vote pass: it is never smaller than any greedy selection
    of consistent correspondences in the same window. Within a window, ties
    between equally large sets go to the higher vote total.
    """
    tol = tol or MatcherTolerances()
    if len(probe) == 0 or len(ref) == 0:
        return MinutiaMatchScore(value=0)

    votes = correspondence_votes(probe, ref, tol)
    seeds_p, seeds_r = np.nonzero(votes)
    if seeds_p.size == 0:
        return MinutiaMatchScore(value=0)

    probe_theta = np.array([m.theta for m in probe], dtype=np.float64)
    ref_theta = np.array([m.theta for m in ref], dtype=np.float64)
    rotation = np.mod(ref_theta[None, :] - probe_theta[:, None], 360.0)
    seed_rot = rotation[seeds_p, seeds_r]
    seed_votes = votes[seeds_p, seeds_r]

    width = 2.0 * tol.angle_tolerance
    in_window = np.mod(seed_rot[None, :] - seed_rot[:, None], 360.0) <= width
    bound = in_window.sum(axis=1)
    order = np.lexsort((seeds_r, seeds_p, -seed_votes, -bound))

    best: List[Tuple[int, int]] = []
    for k in order:
        if bound[k] <= len(best):
            break
        allowed = (votes > 0) & (np.mod(rotation - seed_rot[k], 360.0) <= width)
        distinct_bound = min(int(allowed.any(axis=1).sum()), int(allowed.any(axis=0).sum()))
        if distinct_bound <= len(best):
            continue
        assignment = _best_assignment(allowed, votes)
        if len(assignment) > len(best):
            best = assignment

    correspondences = tuple(sorted(best))
    logger.debug(f"Matched {len(correspondences)} of {len(probe)}x{len(ref)} minutiae")
    return MinutiaMatchScore(value=len(correspondences), correspondences=correspondences)
