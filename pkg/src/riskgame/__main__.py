import sys

from riskgame.cli import main

sys.exit(main())
