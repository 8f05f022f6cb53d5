"""
Utility modules for the deautoconvolution CLI.

This package holds the file formats, the JSON report envelope and the
progress throttle shared by the services and commands.
"""

from .io import read_signal_file, write_json, write_trace_csv, write_vector_csv
from .progress import ProgressThrottle
from .response import ReportEnvelope, error_response, exception_response, success_response

__all__ = [
    'read_signal_file',
    'write_json',
    'write_trace_csv',
    'write_vector_csv',
    'ProgressThrottle',
    'ReportEnvelope',
    'error_response',
    'exception_response',
    'success_response',
]
