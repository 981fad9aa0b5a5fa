"""PV attack-detection transfer learning under trainable-parameter budgets."""

__version__ = "0.1.0"
