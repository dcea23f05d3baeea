#!/usr/bin/env python3
"""Setup script for MMSOUND."""

from setuptools import setup, find_packages
from pathlib import Path

# Read README for long description
readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text(encoding="utf-8") if readme_file.exists() else ""

# Read requirements
requirements_file = Path(__file__).parent / "requirements.txt"
requirements = []
if requirements_file.exists():
    requirements = [
        line.strip() for line in requirements_file.read_text().splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]

setup(
    name="mmsound",
    version="1.0.0",
    description="Millimeter-wave channel sounder toolkit - delay processing, path-loss and delay-spread modeling",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="MMSOUND Development Team",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=requirements,
    extras_require={
        "dev": ["pytest>=7.4.0", "hypothesis>=6.90.0"],
    },
    entry_points={
        "console_scripts": [
            "mmsound=mmsound.app:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    keywords="mmwave channel-sounding path-loss delay-spread multipath papr",
    python_requires=">=3.9",
    include_package_data=True,
    zip_safe=False,
)
