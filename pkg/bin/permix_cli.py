#!/usr/bin/env python3
import sys

from permix.cli import run


def main() -> None :
    sys.exit(run(sys.argv[1:]))


def verify_all() -> None :
    sys.exit(run(['verify-all'] + sys.argv[1:]))


if __name__ == '__main__':
    main()
