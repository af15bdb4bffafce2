import sys

from qgrf.bench.cli import main

sys.exit(main())
