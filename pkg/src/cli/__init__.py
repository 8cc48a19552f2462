from .commands import EXIT_CONFIG, EXIT_DIVERGED, EXIT_INVARIANT, EXIT_OK, build_parser, main
from .config import config_values, keys_help, load_config, parse_config, serialize_config
from .manifest import RunManifest, load_manifest, verify_manifest

__all__ = [
    "EXIT_CONFIG",
    "EXIT_DIVERGED",
    "EXIT_INVARIANT",
    "EXIT_OK",
    "build_parser",
    "main",
    "config_values",
    "keys_help",
    "load_config",
    "parse_config",
    "serialize_config",
    "RunManifest",
    "load_manifest",
    "verify_manifest",
]
