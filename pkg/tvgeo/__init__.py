"""tvgeo: total-variation denoising, dual certificates and level-set geometry."""

__version__ = '0.1.0'
