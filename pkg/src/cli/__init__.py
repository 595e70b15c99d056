from .config import RunConfig, parse_config, load_config, dump_config
from .outputs import RunArtifacts, emit_outputs
from .main import EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERDICT, build_parser, main, run_study

__all__ = [
    "RunConfig", "parse_config", "load_config", "dump_config", "RunArtifacts", "emit_outputs",
    "EXIT_OK", "EXIT_USAGE", "EXIT_NUMERICAL", "EXIT_VERDICT", "build_parser", "main", "run_study",
]
