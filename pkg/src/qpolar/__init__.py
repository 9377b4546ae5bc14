"""Polar source and channel coding over GF(q) with successive-cancellation decoding."""
from .gfq import FieldSpec, make_field
from .transform import polar_encode, polar_decode_transform
from .sc_decoder import FrozenPolicy, SCResult, sc_decode
from .construction import (Criterion, DmcChannel, PolarCode, ZEstimate, error_bound, estimate_z_mc,
                           exact_z, select_info_set, symmetric_channel)
from .source_codec import CompressedBlock, JointSource, compress, decompress
from .channel_codec import FrozenStream, channel_decode, channel_encode
from .modem_awgn import (AwgnSampler, Constellation, NoiseModel, init_llr, load_circular, make_pam,
                         make_rect_qam, transmit)

__version__ = "0.1.0"
