"""FICA terms, saturating automata over a data forest, and the compiler between them."""

__version__ = "0.1.0"
