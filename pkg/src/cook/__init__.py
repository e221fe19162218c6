"""Sub-Turing island analysis for the Carib language.

Parses Carib programs, reifies potential divergence as a taint value through
a source-to-source rewrite, and runs an interprocedural dependence analysis
to classify every method as a sub-Turing island (termination is decidable
for it) or part of the swamp, with cause attribution, loop summarization,
safe-list configuration, and a fuel-bounded reference interpreter serving as
the testing oracle.
"""

from .analysis import AnalysisResult, analyze_program
from .generator import GenParams, generate_program
from .lang import ast, check, load, parse, pretty
from .pipeline import ProgramModel
from .report import Report, ReportConfig, analyze_sources
from .rewrite import rewrite_program

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "GenParams",
    "ProgramModel",
    "Report",
    "ReportConfig",
    "analyze_program",
    "analyze_sources",
    "ast",
    "check",
    "generate_program",
    "load",
    "parse",
    "pretty",
    "rewrite_program",
    "__version__",
]
