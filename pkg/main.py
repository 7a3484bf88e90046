# bloch-hhg entry point

import sys

from bloch_hhg.cli import main

if __name__ == "__main__":
    sys.exit(main())
