import sys

from fl_emph.cli import run

sys.exit(run())
