"""
Domain models of the simulator.
"""
from .grid import BiphotonGrid
from .manifest import RunManifest
from .measurement import CountRecord, MeasurementSetting, ScanPoint, SearchSpec
from .phase_mask import LinearRamp, PhaseMask
from .physical_config import PhysicalConfig
from .quantum import DensityMatrix, Ket, Operator
from .sectors import SectorCoherence, SectorConfig
from .tomography import TomoProtocol, TomoResult

__all__ = [
    'BiphotonGrid',
    'RunManifest',
    'CountRecord',
    'MeasurementSetting',
    'ScanPoint',
    'SearchSpec',
    'LinearRamp',
    'PhaseMask',
    'PhysicalConfig',
    'DensityMatrix',
    'Ket',
    'Operator',
    'SectorCoherence',
    'SectorConfig',
    'TomoProtocol',
    'TomoResult',
]
