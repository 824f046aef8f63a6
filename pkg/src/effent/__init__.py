"""effent: effective entanglement of bipartite states under restricted measurements."""
try:
    from effent._version import __version__  # noqa: F401
except ImportError:  # pragma: no cover
    __version__ = '0.0.0.dev0'
