"""
Test suite for the quantum image denoising lab.
"""
