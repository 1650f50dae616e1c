import sys

from laycrit.cli import main

sys.exit(main())
