"""Joint communication and sensing in cell-free massive MIMO.

Power allocation that maximizes the sensing SNR under per-UE SINR and per-AP
power constraints, a MAP ratio test detector for multi-static sensing, and
a Monte Carlo harness for detection-probability studies.
"""

__version__ = "0.1.0"

from .scenario import AngleSet, Scenario, ScenarioConfig, compute_angles, generate_scenario, select_receivers
from .channel import ChannelSet, array_response, build_channel_set
from .precoding import PrecoderSet, build_precoders
from .power import (PowerSolution, SensingSnrMatrix, SinrCoefficients, baseline_allocate,
                    build_sensing_matrix, build_sinr_coefficients, ccp_allocate, evaluate_sinr)
from .detector import DetectorContext
from .montecarlo import ExperimentPlan, ResultRow, run_setup, sweep_power, sweep_rcs, sweep_ue
