"""Physics and numerics of the coherent feedback loop."""
from loopcool.core.params import SystemParams
from loopcool.core.reduced import CoolingResult, phonon_number

__all__ = ['SystemParams', 'CoolingResult', 'phonon_number']
