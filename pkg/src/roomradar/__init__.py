"""Single-channel chirp-sequence radar simulator and indoor localization."""

__version__ = "0.1.0"

from .config import ConfigError, ScenarioConfig, load_config, validate_config, with_overrides
from .runner import RunError, RunResult, replay_detections, run_scenario

__all__ = [
    "ConfigError",
    "RunError",
    "RunResult",
    "ScenarioConfig",
    "__version__",
    "load_config",
    "replay_detections",
    "run_scenario",
    "validate_config",
    "with_overrides",
]
