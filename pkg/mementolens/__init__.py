"""
mementolens - replayability analysis and metadata scraping for archived
Instagram account pages.
"""

__version__ = "0.3.0"
