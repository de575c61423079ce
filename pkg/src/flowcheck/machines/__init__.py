"""Ghost-instrumented step machines for the modeled concurrent structures."""

from . import base, bptree, giveup, harris, seqspec, sortedlist  # noqa: F401
