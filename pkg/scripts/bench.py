"""NAND gates per second for m = 1..4 (thin wrapper over ``tfhe-bku bench``)."""

import sys

from tfhe_bku.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench", *sys.argv[1:]]))
