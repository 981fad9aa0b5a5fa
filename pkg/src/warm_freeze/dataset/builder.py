"""End-to-end assembly of a normalized paired dataset for one attack kind."""

import logging
from typing import List, Optional, Tuple

from warm_freeze.attacks.injector import make_pairs
from warm_freeze.config.models import AttackKind, RunConfig
from warm_freeze.dataset.models import DatasetManifest, ExampleRecord, Label
from warm_freeze.dataset.splits import assign_splits, build_records
from warm_freeze.dataset.store import normalize
from warm_freeze.simulation.diode import DiodeParams
from warm_freeze.simulation.generator import generate_corpus

logger = logging.getLogger(__name__)


def build_dataset(
    config: RunConfig, kind: Optional[AttackKind] = None
) -> Tuple[List[ExampleRecord], DatasetManifest]:
    """Simulate, inject, split and normalize a corpus.

    Args:
        config: Run configuration (seed, simulator, attacks, dataset sections)
        kind: Attack family; defaults to ``config.attack_kind``

    Returns:
        Normalized records (ordered by id, normal twin first) and their manifest
    """
    kind = AttackKind(kind or config.attack_kind)
    params = DiodeParams.from_config(config.simulator.diode)
    corpus = generate_corpus(
        config.seed,
        config.dataset.corpus_size,
        params,
        config.simulator,
        workers=config.dataset.workers,
    )
    pairs = make_pairs(corpus, kind, config.seed, config.attacks)
    assignment = assign_splits(
        [s.id for s in corpus], config.dataset.ratios, config.dataset.split_seed
    )
    records = build_records(pairs, assignment)
    manifest = DatasetManifest(
        attack_kind=kind.value,
        global_seed=config.seed,
        split_seed=config.dataset.split_seed,
        corpus_size=config.dataset.corpus_size,
        counts=assignment.counts(),
        easy=config.attacks.easy,
    )
    records, manifest = normalize(records, manifest)

    for split, count in manifest.counts.items():
        split_records = [r for r in records if r.split.tag == split]
        attacked = sum(1 for r in split_records if r.label == Label.ATTACKED)
        logger.info(
            "%s split: %d pairs, %d normal / %d attacked",
            split,
            count,
            len(split_records) - attacked,
            attacked,
        )
    return records, manifest
