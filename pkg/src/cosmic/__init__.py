"""Zone-orthogonal, data-carrying MIMO radar waveforms and their simulation chain."""
from .waveforms import (BasisFamily, PartitionStrategy, ZoneMode, CrossCorrelationMatrix, MasterBasis,
                        SubBasis, WaveformSet, build_crosscorr_matrix, crosscorr, build_master_basis,
                        partition_subbases, zone_lags, zone_residual, max_pair_residual)
from .modulation import Constellation, SymbolFrame, map_bits_to_symbols, demap_symbols
from .encoder import (CosmicConfig, InfeasibleError, assemble_constraints, null_space,
                      generate_cosmic_set, feasibility_check)
from .baselines import Allocation, generate_ofdm_set, generate_zero_shift_set, ofdm_plan
from .channel import (RadarGeometry, SceneModel, RasterScene, CommChannel, pathloss_gain,
                      comm_receive, imaging_receive, noise_variance_for_snr)
from .receivers import (DecodeError, DecodeInfeasibleError, comm_project, comm_decode, ofdm_decode,
                        decode_report, range_compress, backproject)
from .metrics import islr, image_snr, spectral_efficiency, MetricsReport
from .studies import symbol_capacity_vs_n

__version__ = "0.1.0"
