# Report assembly, comparison and rendering
from .analysis import analyze, analyze_text, compare
from .render import OutputFormat, render, render_scores
from .schemas import SCHEMA_VERSION, AnalysisReport, ComparisonReport, CountDelta
