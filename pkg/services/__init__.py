# services/__init__.py
from .experiment_service import ExperimentService
from .fit_service import FitService

__all__ = ['ExperimentService', 'FitService']
