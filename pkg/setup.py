"""
Setup configuration for the quantum image denoising lab.
"""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("#")]

runtime_requirements = [r for r in requirements if r.split(">=")[0] in ("numpy", "cryptography", "pydantic")]

setup(
    name="quantum-image-denoising",
    version="0.1.0",
    author="Quantum Image Denoising Team",
    description="Simulated quantum image corruption and classifier-guided denoising",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "tests.*")),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Image Processing",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
    install_requires=runtime_requirements,
    extras_require={
        "dev": [r for r in requirements if r not in runtime_requirements],
    },
    entry_points={
        "console_scripts": [
            "quantum-image-denoising=quantum_image_denoising.cli:main",
        ],
    },
)
