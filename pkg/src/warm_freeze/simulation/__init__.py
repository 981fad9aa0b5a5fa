"""Single-diode PV voltage snippet simulator."""

from .conditions import ConditionSummary, OperatingCondition, WeatherRegime
from .diode import DiodeParams, module_current, solve_mpp, solve_mpp_array
from .generator import SNIPPET_LENGTH, NormalSnippet, generate_corpus, generate_snippet
from .rng import seed_path, substream

__all__ = [
    "SNIPPET_LENGTH",
    "ConditionSummary",
    "DiodeParams",
    "NormalSnippet",
    "OperatingCondition",
    "WeatherRegime",
    "generate_corpus",
    "generate_snippet",
    "module_current",
    "seed_path",
    "solve_mpp",
    "solve_mpp_array",
    "substream",
]
