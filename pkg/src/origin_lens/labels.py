"""The three-class origin target."""

from enum import IntEnum


class OriginLabel(IntEnum):
    """Origin of a digital image."""

    NPI = 0  # natural photographic image (camera sensor)
    CGG = 1  # computer-generated graphic (rendering software)
    DGI = 2  # deep-network-generated image (GAN/VAE)

    @classmethod
    def from_name(cls, name):
        return cls[name.strip().upper()]


CLASS_DIRS = {OriginLabel.NPI: "npi", OriginLabel.CGG: "cgg", OriginLabel.DGI: "dgi"}
N_CLASSES = 3
