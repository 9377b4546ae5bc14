"""Channel coding over AWGN: 5-PAM, 64-QAM as two 8-PAM codes, and the 67-point circular packing.

    python demos/05_channel_coding_awgn.py
"""
import math

from qpolar.construction import Criterion, estimate_z_mc, select_info_set
from qpolar.gfq import make_field
from qpolar.modem_awgn import AwgnSampler, NoiseModel, load_circular, make_pam, make_rect_qam, mutual_information
from qpolar.simulation import simulate_channel

N = 256


def run(name, const, nm, frames=64, independent=False, axes=1):
    f = make_field(const.q)
    z = estimate_z_mc(f, AwgnSampler(const, nm), N, 500, seed=1, mode="posterior")
    code = select_info_set(f, z, Criterion("per-index", 1e-3))
    c = simulate_channel(code, const, nm, frames, seed=2, independent_axes=independent)
    print(f"{name}: R_c={code.rate:.3f}, R={axes * code.rate * math.log2(const.q):.2f} bits, "
          f"SER {c.ser:.2e}, WER {c.wer:.3f}")


pam = make_pam(5)
nm = NoiseModel.from_snr_db(14.0, es=pam.es)
print(f"5-PAM at 14 dB: I(X;Y) = {mutual_information(pam, nm, 50_000):.2f} bits")
run("5-PAM 14 dB", pam, nm)

# 64-QAM coded per axis: each 8-PAM axis carries Es/2 against real noise
qam = make_rect_qam(8)
axis = make_pam(8)
axis.points = axis.points * math.sqrt(qam.es / 2 / axis.es)
run("64-QAM as 2 x 8-PAM, 20 dB", axis, NoiseModel.from_snr_db(20.0, es=qam.es / 2, real=True),
    independent=True, axes=2)

circ = load_circular()
nm = NoiseModel.from_snr_db(20.0)
print(f"67-circle: min distance {circ.min_distance():.3f}, I(X;Y) at 20 dB = "
      f"{mutual_information(circ, nm, 50_000):.2f} bits")
run("67-circle 20 dB", circ, nm, frames=16)
