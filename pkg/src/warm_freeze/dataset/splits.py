"""Leak-free split assignment by snippet id."""

import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from warm_freeze.attacks.models import AttackedSnippet
from warm_freeze.dataset.models import ExampleRecord, Label, Split, SplitAssignment
from warm_freeze.exceptions import SplitError
from warm_freeze.simulation.generator import NormalSnippet

logger = logging.getLogger(__name__)


def _floor_share(n: int, ratio: float) -> int:
    # ratios are decimal literals in practice; recover them exactly
    return int(n * Fraction(ratio).limit_denominator(1_000_000))


def split_sizes(n: int, ratios: Tuple[float, float, float]) -> Tuple[int, int, int]:
    """Floor sizes for val and test, remainder to train."""
    n_val = _floor_share(n, ratios[1])
    n_test = _floor_share(n, ratios[2])
    return n - n_val - n_test, n_val, n_test


def assign_splits(
    ids: Sequence[int],
    ratios: Tuple[float, float, float] = (0.70, 0.15, 0.15),
    split_seed: int = 42,
) -> SplitAssignment:
    """Shuffle ids deterministically and partition them by ratio.

    Args:
        ids: Distinct snippet ids
        ratios: (train, val, test) fractions summing to one
        split_seed: Shuffle seed

    Returns:
        SplitAssignment covering every id exactly once

    Raises:
        SplitError: On empty or duplicate ids, or invalid ratios
    """
    if len(ids) == 0:
        raise SplitError("Cannot assign splits to an empty id list")
    ordered = sorted(int(i) for i in ids)
    if len(set(ordered)) != len(ordered):
        raise SplitError("Snippet ids must be distinct")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"Split ratios must be three non-negative values summing to 1: {ratios}")

    n_train, n_val, _ = split_sizes(len(ordered), ratios)
    order = np.random.default_rng(split_seed).permutation(len(ordered))
    id_to_split: Dict[int, Split] = {}
    for position, index in enumerate(order):
        if position < n_train:
            split = Split.TRAIN
        elif position < n_train + n_val:
            split = Split.VAL
        else:
            split = Split.TEST
        id_to_split[ordered[int(index)]] = split

    assignment = SplitAssignment(
        id_to_split=id_to_split,
        ratios=(float(ratios[0]), float(ratios[1]), float(ratios[2])),
        split_seed=split_seed,
    )
    logger.info("Split %d ids: %s", len(ordered), assignment.counts())
    return assignment


def build_records(
    pairs: Iterable[Tuple[NormalSnippet, AttackedSnippet]],
    assignment: SplitAssignment,
) -> List[ExampleRecord]:
    """Turn pairs into labelled records; both twins inherit the id's split.

    Records are ordered by id, the normal twin first.

    Raises:
        SplitError: If a pair is mismatched or its id has no split
    """
    records: List[ExampleRecord] = []
    for normal, attacked in sorted(pairs, key=lambda pair: pair[0].id):
        if normal.id != attacked.id:
            raise SplitError(f"Pair ids differ: {normal.id} vs {attacked.id}")
        try:
            split = assignment.id_to_split[normal.id]
        except KeyError as e:
            raise SplitError(f"Snippet id {normal.id} has no split assignment") from e
        records.append(ExampleRecord(normal.id, Label.NORMAL, normal.samples, split))
        records.append(ExampleRecord(attacked.id, Label.ATTACKED, attacked.samples, split))
    return records
