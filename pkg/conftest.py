# makes the repository root (example_configs, fl_emph) importable from tests/
