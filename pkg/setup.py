from setuptools import setup, find_packages

setup(
    name="gridcon",
    version="0.1.0",
    description="Curative congestion management test system for low-voltage grids: "
                "power flow, state estimation, OPF-based control and a register-level asset bus",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=['cli'],
    package_data={
        "config": ["*.yaml"],
        "visualization": ["templates/*.j2"],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
    ],
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "networkx",
        "pyyaml",
        "tqdm",
        "jinja2",
        "matplotlib",
        "seaborn",
    ],
    extras_require={
        "test": [
            "pytest",
        ],
    },
    entry_points={
        "console_scripts": [
            "gridcon=cli:main",
        ],
    },
    python_requires=">=3.9",
)
