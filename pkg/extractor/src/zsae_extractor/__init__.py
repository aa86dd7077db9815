"""Encode real videos and description texts into zsae manifests."""

from .extract import extract
from .job import ExtractionJob, JobError, VideoEntry, load_job

__version__ = "0.1.0"

__all__ = ["ExtractionJob", "JobError", "VideoEntry", "extract", "load_job"]
