import sys

from fl_emph.cli import make_argparser, main

parser = make_argparser()


if __name__ == "__main__":
    args = parser.parse_args()
    sys.exit(main(args))
