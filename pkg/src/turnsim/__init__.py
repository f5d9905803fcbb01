"""turnsim: deterministic left-turn intersection simulator with three vehicle policies."""

from .config import ScenarioConfig, config_from_dict, config_to_dict, default_config, load_config, save_config
from .controllers import make_controller
from .experiments import compare, run_single, run_suite
from .world import World

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig",
    "World",
    "compare",
    "config_from_dict",
    "config_to_dict",
    "default_config",
    "load_config",
    "make_controller",
    "run_single",
    "run_suite",
    "save_config",
    "__version__",
]
