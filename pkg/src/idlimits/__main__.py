import sys

from idlimits.cli import main

sys.exit(main())
