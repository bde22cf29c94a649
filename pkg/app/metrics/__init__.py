# The four gadget-quality metrics
from .distribution import distribution
from .quality import grade_gadget, grade_useful, metric4_summary, track_sps
from .setup import metric2_env_setup, metric3_useful, preserves_rd
