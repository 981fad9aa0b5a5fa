"""End-to-end runs through every command, on a tiny corpus and at desk scale."""

import json
import logging
from pathlib import Path
from typing import Tuple

import pytest

from warm_freeze.commands import (
    cmd_eval,
    cmd_gen_data,
    cmd_pretrain,
    cmd_report,
    cmd_run_cdwf,
    cmd_run_lora,
    cmd_sweep_warm,
    cmd_train_ref,
    paths_for,
)
from warm_freeze.config.models import AttackKind, RunConfig
from warm_freeze.exceptions import ArtifactError
from warm_freeze.metrics import retention
from warm_freeze.reporting import MethodResult

logger = logging.getLogger(__name__)


def test_tiny_run(tiny_run_config: RunConfig) -> None:
    """Test bias pretraining, spike transfer, baselines, evaluation and reports."""
    config = tiny_run_config
    paths = paths_for(config)

    bias_manifest = cmd_gen_data(config, AttackKind.BIAS)
    spike_manifest = cmd_gen_data(config)
    assert bias_manifest.attack_kind == "bias" and spike_manifest.attack_kind == "spike"
    assert spike_manifest.counts == {"train": 28, "val": 6, "test": 6}
    assert paths.dataset("spike").exists() and paths.manifest("spike").exists()

    pretrained = cmd_pretrain(config)
    assert 0.0 <= pretrained.auc <= 1.0
    full = cmd_train_ref(config)
    assert full.p_train == full.p_total
    assert [h["phase"] for h in full.history] == ["full", "full"]

    cdwf_rows = cmd_run_cdwf(config)
    assert [r.method for r in cdwf_rows] == ["cdwf@0.05", "cdwf@0.2"]
    for row in cdwf_rows:
        plan = json.loads(paths.plan("spike", row.method).read_text())
        assert plan["trainable_fraction"] <= plan["f_max"]
        assert plan["p_train"] == row.p_train
        assert len(plan["importances"]) == 8
        assert [h["phase"] for h in row.history] == ["warm", "ft"]

    (lora,) = cmd_run_lora(config, ranks=[1])
    assert lora.method == "lora-r1"
    assert lora.p_train < full.p_train

    evaluated = cmd_eval(config, "cdwf@0.05")
    assert (evaluated.accuracy, evaluated.auc) == (cdwf_rows[0].test_acc, cdwf_rows[0].test_auc)

    report_paths = cmd_report(config)
    assert all(p.exists() for p in report_paths.values())
    rows = json.loads(report_paths["json"].read_text())["rows"]
    assert [r["method"] for r in rows] == ["full-ft", "cdwf@0.05", "cdwf@0.2", "lora-r1"]
    assert rows[0]["retention"] == 100.0
    assert rows[1]["retention"] == retention(cdwf_rows[0].test_auc, full.test_auc)
    assert "wall_time" not in rows[0]

    sweep_paths = cmd_sweep_warm(config)
    sweep_rows = json.loads(sweep_paths["json"].read_text())["rows"]
    assert [r["method"] for r in sweep_rows] == ["full-ft", "cdwf@0.05-w1"]
    assert "wall_time" in sweep_rows[0]


def test_rerun_is_byte_identical(tiny_run_config: RunConfig) -> None:
    """Test that repeating data generation and the search reproduces every artifact."""
    config = tiny_run_config
    paths = paths_for(config)
    cmd_gen_data(config, AttackKind.BIAS)
    cmd_gen_data(config)
    cmd_pretrain(config)
    cmd_train_ref(config)
    cmd_run_cdwf(config, budgets=[0.05])

    watched = [
        paths.dataset("spike"),
        paths.pretrained(),
        paths.plan("spike", "cdwf@0.05"),
        paths.checkpoint("spike", "cdwf@0.05"),
    ]
    first = [p.read_bytes() for p in watched]

    cmd_gen_data(config)
    cmd_run_cdwf(config, budgets=[0.05])

    assert [p.read_bytes() for p in watched] == first


def test_missing_reference(tiny_run_config: RunConfig) -> None:
    """Test that the search refuses to run before the reference exists."""
    cmd_gen_data(tiny_run_config, AttackKind.BIAS)
    cmd_gen_data(tiny_run_config)
    cmd_pretrain(tiny_run_config)
    with pytest.raises(ArtifactError, match="not found"):
        cmd_run_cdwf(tiny_run_config)


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory: pytest.TempPathFactory) -> Tuple[RunConfig, MethodResult]:
    """Default desk-scale config at seed 42, transferred from bias to spike."""
    config = desk_config(tmp_path_factory.mktemp("desk"), 42)
    return config, desk_transfer(config)


def desk_config(root: Path, seed: int) -> RunConfig:
    return RunConfig.model_validate({"seed": seed, "output_dir": str(root / f"seed-{seed}")})


def desk_transfer(config: RunConfig) -> MethodResult:
    """Both corpora, bias pretraining and the full fine-tuning reference on spike."""
    cmd_gen_data(config, AttackKind.BIAS)
    cmd_gen_data(config)
    cmd_pretrain(config)
    return cmd_train_ref(config)


def matched_lora_aucs(config: RunConfig) -> Tuple[float, float]:
    """(CDWF, uniform LoRA r=1) test AUCs, with the CDWF budget set to the LoRA fraction."""
    (lora,) = cmd_run_lora(config, ranks=[1])
    (cdwf,) = cmd_run_cdwf(config, budgets=[lora.p_train / lora.p_total])
    assert cdwf.p_train <= lora.p_train
    logger.info(
        "seed %d: cdwf %s auc=%.4f, lora-r1 auc=%.4f",
        config.seed,
        cdwf.architecture,
        cdwf.test_auc,
        lora.test_auc,
    )
    return cdwf.test_auc, lora.test_auc


@pytest.mark.slow
def test_desk_scale_budgets(desk_run: Tuple[RunConfig, MethodResult]) -> None:
    """Test the default budget sweep: plans stay feasible, k grows with f_max, 5% retains 95%."""
    config, full = desk_run
    paths = paths_for(config)
    rows = cmd_run_cdwf(config)
    report_paths = cmd_report(config)

    assert full.test_auc >= 0.95
    assert [r.budget for r in rows] == [0.02, 0.05, 0.10]
    for row in rows:
        plan = json.loads(paths.plan("spike", row.method).read_text())
        logger.info(
            "%s: %s a_warm=%.4f a_ref=%.4f g_max=%.4f predicted=%.4f",
            row.method,
            row.architecture,
            plan["a_warm"],
            plan["a_ref"],
            plan["g_max"],
            plan["predicted_accuracy"],
        )
        assert plan["trainable_fraction"] <= plan["f_max"]
        assert row.p_train / row.p_total <= row.budget

    ks = [r.chosen_k for r in rows]
    assert ks == sorted(ks)

    at_five = {r.method: r for r in rows}["cdwf@0.05"]
    assert retention(at_five.test_auc, full.test_auc) >= 95.0
    assert at_five.p_train / at_five.p_total < 0.10
    assert report_paths["table"].exists()


@pytest.mark.slow
def test_desk_scale_matched_lora(
    desk_run: Tuple[RunConfig, MethodResult], tmp_path: Path
) -> None:
    """Test that CDWF at the LoRA-r1 parameter count matches or beats it in 2 of 3 seeds."""
    config, _ = desk_run
    results = [matched_lora_aucs(config)]
    for seed in (43, 44):
        seeded = desk_config(tmp_path, seed)
        desk_transfer(seeded)
        results.append(matched_lora_aucs(seeded))

    wins = sum(cdwf >= lora for cdwf, lora in results)
    assert wins >= 2, results
