"""Knowledge-graph-enhanced RAG engine for course tutoring."""

__version__ = "0.1.0"
