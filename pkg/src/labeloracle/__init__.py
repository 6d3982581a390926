"""Approximate vertex-label distance oracle for undirected planar graphs."""
from .graph_core import INF, LabeledPlanarGraph, load_graph, make_graph
from .oracle import VertexLabelOracle, build_oracle
from .serialize import deserialize_oracle, serialize_oracle

__all__ = ["INF", "LabeledPlanarGraph", "VertexLabelOracle", "build_oracle", "deserialize_oracle",
           "load_graph", "make_graph", "serialize_oracle"]
__version__ = "0.1.0"
