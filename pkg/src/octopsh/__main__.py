import sys

from octopsh.cli import main

sys.exit(main())
