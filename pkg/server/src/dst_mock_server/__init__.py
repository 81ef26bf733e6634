"""Reference HTTP backend: a deterministic mock dialogue state predictor."""

from .app import create_app
from .mockdst import MockDst
from .ontology import Ontology, load_ontology

__all__ = ["MockDst", "Ontology", "create_app", "load_ontology"]
