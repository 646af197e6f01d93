import sys

from irs_isac.cli import main

sys.exit(main())
