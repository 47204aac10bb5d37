import sys

from pyspps.cli import main

sys.exit(main())
