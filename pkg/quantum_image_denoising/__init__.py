"""
Quantum Image Denoising Lab

A desk-scale laboratory that encodes grayscale images as quantum states,
corrupts them with a depolarizing channel or classical Gaussian and
salt-and-pepper noise, trains a small convolutional network to tell clean
from corrupted images, and restores images with a confidence-threshold
denoiser scored by MSE, PSNR and SSIM.
"""

__version__ = "0.1.0"
__author__ = "Quantum Image Denoising Team"
