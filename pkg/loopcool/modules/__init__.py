from loopcool.modules.base import BaseCommand
from loopcool.modules.calibrate import Calibrate
from loopcool.modules.compare_mf import CompareMf
from loopcool.modules.cooling import Cooling
from loopcool.modules.limits import Limits
from loopcool.modules.optimize import Optimize
from loopcool.modules.regimes import Regimes
from loopcool.modules.spectrum import Spectrum
from loopcool.modules.sweep import Sweep

__all__ = [
    'BaseCommand',
    'Calibrate',
    'CompareMf',
    'Cooling',
    'Limits',
    'Optimize',
    'Regimes',
    'Spectrum',
    'Sweep',
]
