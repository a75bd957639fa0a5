"""Reference server for the graph-classifier wire protocol.

Newline-delimited JSON over stdio (default) or TCP. The server speaks
first with a hello frame, then answers each classify request exactly once,
in arrival order, echoing request ids. A model is any callable taking a
graph dict ({"num_nodes": n, "edges": [[u, v], ...], ...}) and returning a
list of class probabilities.

The package is dependency-free; it never loads a deep-learning framework
unless the user's model module does.
"""

__version__ = "0.1.0"

from .models import ba2motifs_conformance, conformance_model
from .server import serve_stdio, serve_tcp

__all__ = ["conformance_model", "ba2motifs_conformance", "serve_stdio",
           "serve_tcp"]
