"""Static analysis of lexical states in JavaCC grammars."""
from .analysis import analyze, ci_analyze, cs_analyze, cs_build_out_states, find_useless_productions
from .frontend import parse_grammar
from .model import ERROR, CoreGrammar, Diagnostic, load_grammar, normalize

__all__ = [
    "ERROR", "CoreGrammar", "Diagnostic", "analyze", "ci_analyze", "cs_analyze",
    "cs_build_out_states", "find_useless_productions", "load_grammar", "normalize", "parse_grammar",
]
__version__ = "0.1.0"
