"""Model builders shared by several test modules."""
import numpy as np

from qdarwin.channels import MeasurePrepareChannel, QuantumChannel
from qdarwin.states import DensityMatrix, Povm


def noisy_record(k, p):
    """Classical record of bit ``k`` flipped with probability ``p``."""
    return DensityMatrix(np.diag([1 - p, p] if k == 0 else [p, 1 - p]))


def noisy_records_channel(n, p):
    """Computational measurement followed by ``n`` independently noisy copies."""
    ks = []
    for k in range(2):
        rec = noisy_record(k, p).mat
        joint = rec
        for _ in range(n - 1):
            joint = np.kron(joint, rec)
        w, v = np.linalg.eigh(joint)
        for a in range(len(w)):
            if w[a] > 0:
                op = np.zeros((2**n, 2), dtype=complex)
                op[:, k] = np.sqrt(w[a]) * v[:, a]
                ks.append(op)
    return QuantumChannel.from_kraus(ks, (2,) * n)


def noisy_agreement_inputs(t, p):
    """Fragment approximations and joint conditional states for ``t`` noisy observers."""
    povm = Povm.computational(2)
    mps = [MeasurePrepareChannel(povm, (noisy_record(0, p), noisy_record(1, p))) for _ in range(t)]
    joint = []
    for k in range(2):
        m = noisy_record(k, p).mat
        for _ in range(t - 1):
            m = np.kron(m, noisy_record(k, p).mat)
        joint.append(DensityMatrix(m, (2,) * t))
    return mps, joint
