"""Bias, drift and spike attack injection."""

from .injector import (
    inject_bias,
    inject_drift,
    inject_spike,
    make_pair,
    make_pairs,
    sample_window,
)
from .models import AttackedSnippet, AttackSpec, AttackWindow, SpikeEvent

__all__ = [
    "AttackSpec",
    "AttackWindow",
    "AttackedSnippet",
    "SpikeEvent",
    "inject_bias",
    "inject_drift",
    "inject_spike",
    "make_pair",
    "make_pairs",
    "sample_window",
]
