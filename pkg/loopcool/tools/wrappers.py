"""
Model backends. Each backend names the commands it serves; commands pick
the backend chosen with ``--model`` by scanning this module.
"""
import inspect
import sys
from typing import Callable, List, Optional

import numpy as np

from loopcool.core import engine, fullmodel, reduced
from loopcool.core.errors import ParameterError
from loopcool.core.params import SystemParams
from loopcool.core.reduced import CoolingResult
from loopcool.core.spectrum import Spectrum


class BaseModel:
    """Base class for model backends"""

    name = None
    commands = []

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    @classmethod
    def observables(cls) -> List[str]:
        return []

    def spectrum(self, params: SystemParams, observable: str, grid: np.ndarray) -> Spectrum:
        raise NotImplementedError

    def cooling(self, params: SystemParams) -> CoolingResult:
        return engine.evaluate_point(params, self.name)

    def sweep(
        self,
        spec: engine.SweepSpec,
        on_point: Optional[Callable[[engine.SweepRow], None]] = None,
    ) -> List[engine.SweepRow]:
        if spec.model != self.name:
            raise ParameterError(f"sweep spec asks for model '{spec.model}', backend is '{self.name}'")
        return engine.sweep(spec, workers=self.workers, on_point=on_point)


class ReducedModel(BaseModel):
    """Cavity modes eliminated: Lorentzian mechanics with closed-form rates"""

    name = "reduced"
    commands = [
        'spectrum', 'cooling', 'sweep', 'optimize', 'regimes', 'limits', 'comparemf', 'calibrate',
    ]

    @classmethod
    def observables(cls) -> List[str]:
        return ["X_m"]

    def spectrum(self, params: SystemParams, observable: str, grid: np.ndarray) -> Spectrum:
        if observable != "X_m":
            raise ParameterError(
                f"the reduced model only provides X_m, not '{observable}'; use --model full"
            )
        return reduced.lorentzian_spectrum(params, grid)


class FullModel(BaseModel):
    """Exact six-variable frequency-domain solution"""

    name = "full"
    commands = ['spectrum', 'cooling', 'sweep']

    @classmethod
    def observables(cls) -> List[str]:
        return list(fullmodel.OBSERVABLES) + [fullmodel.SYMMETRIZED_X]

    def spectrum(self, params: SystemParams, observable: str, grid: np.ndarray) -> Spectrum:
        return fullmodel.observable_spectrum(params, observable, grid, workers=self.workers)


def available_backends() -> dict:
    return {
        obj.name: obj
        for _, obj in inspect.getmembers(sys.modules[__name__], inspect.isclass)
        if issubclass(obj, BaseModel) and obj.name is not None
    }


def get_backend(name: str, workers: int = 1) -> BaseModel:
    backends = available_backends()
    if name not in backends:
        raise ParameterError(f"Unknown model '{name}'. Available: {', '.join(sorted(backends))}")
    return backends[name](workers=workers)
