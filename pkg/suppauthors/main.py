#!/usr/bin/env python

# Entry point

import sys

import docopt

from suppauthors import __version__
from suppauthors import cli


def main(argv=None):
    args = docopt.docopt(cli.usage_string(), argv=argv, version=__version__)
    cli.setup_logging(args)
    return cli.run(args)


if __name__ == '__main__':
    sys.exit(main())
