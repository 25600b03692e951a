__version__ = '0.1.0'

from loopcool.cli import main
__all__ = ['main', '__version__']
