"""
Static figures for workbench reports.
"""

from .charts import ChartManager

__all__ = ["ChartManager"]
