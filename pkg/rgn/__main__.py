import sys

from rgn.cli import main

sys.exit(main())
