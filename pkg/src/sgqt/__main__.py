import sys

from sgqt.cli import main

sys.exit(main())
