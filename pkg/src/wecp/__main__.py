import sys

from wecp.cli import main

sys.exit(main())
