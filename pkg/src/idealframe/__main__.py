import sys

from idealframe.cli import main

sys.exit(main())
