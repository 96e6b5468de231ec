import sys

from moledit.cli import main

sys.exit(main())
